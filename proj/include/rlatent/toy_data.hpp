#pragma once

// 32x32 binary images of filled disks and rings, and a shape checker used to
// score decoded samples.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "rlatent/matrix.hpp"

namespace rlatent {

inline constexpr std::size_t kImageSide = 32;
inline constexpr std::size_t kImagePixels = kImageSide * kImageSide;

enum class Shape { kDisk, kRing };

const char* shape_name(Shape s);
Shape parse_shape(std::string_view name);

struct DiskRingImage {
  /// pixels[y * 32 + x], values 0 or 1.
  std::array<std::uint8_t, kImagePixels> pixels{};
  Shape label = Shape::kDisk;
  int center_x = 16;
  int center_y = 16;
  double outer_radius = 0.0;
  /// Equal to outer_radius for disks.
  double thickness = 0.0;

  void validate() const;

  friend bool operator==(const DiskRingImage&, const DiskRingImage&) = default;
};

/// Rasterizes a shape: pixel (x, y) is set iff its distance to the centre lies
/// in [outer - thickness, outer] (ring) or is at most outer (disk).
DiskRingImage render_shape(Shape label, int center_x, int center_y, double outer_radius,
                           double thickness);

/// Alternating disk / ring; centre jitter in [-2, 2]^2, outer radius
/// U[5, 13], ring thickness U[2, r - 2]. Image i depends only on (seed, i).
std::vector<DiskRingImage> generate_toy_dataset(std::size_t n, std::uint64_t seed);

/// One image per row, pixel values as 0.0 / 1.0.
Matrix to_matrix(const std::vector<DiskRingImage>& images);

enum class Verdict { kValidDisk, kValidRing, kInvalid };

const char* verdict_name(Verdict v);

struct ValidityResult {
  Verdict verdict = Verdict::kInvalid;
  int center_x = 0;
  int center_y = 0;
  /// 0 for a disk fit.
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  /// Fraction of foreground pixels inside the fitted shape.
  double precision = 0.0;
  /// Fraction of fitted-shape pixels that are foreground.
  double recall = 0.0;
};

/// Thresholds at 0.5 and fits the best disk/annulus (max IoU) over centres
/// within 2 px of the foreground centroid and radii up to 15. Valid iff
/// precision >= 0.9 and recall >= 0.8.
ValidityResult validity_check(std::span<const double> image);

}  // namespace rlatent
