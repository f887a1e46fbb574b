#include "rlatent/toy_data.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rlatent/error.hpp"
#include "rlatent/random.hpp"

namespace rlatent {

const char* shape_name(Shape s) { return s == Shape::kDisk ? "disk" : "ring"; }

Shape parse_shape(std::string_view name) {
  if (name == "disk") return Shape::kDisk;
  if (name == "ring") return Shape::kRing;
  throw ValidationError("unknown shape label '" + std::string(name) + "'");
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kValidDisk: return "valid-disk";
    case Verdict::kValidRing: return "valid-ring";
    case Verdict::kInvalid: break;
  }
  return "invalid";
}

void DiskRingImage::validate() const {
  for (auto p : pixels) require(p <= 1, "DiskRingImage: pixels must be 0 or 1");
  require(outer_radius > 0.0 && thickness > 0.0, "DiskRingImage: radii must be positive");
  if (label == Shape::kRing) {
    require(thickness < outer_radius, "DiskRingImage: ring thickness must be below its radius");
  }
}

DiskRingImage render_shape(Shape label, int center_x, int center_y, double outer_radius,
                           double thickness) {
  DiskRingImage img;
  img.label = label;
  img.center_x = center_x;
  img.center_y = center_y;
  img.outer_radius = outer_radius;
  img.thickness = label == Shape::kDisk ? outer_radius : thickness;
  const double inner = outer_radius - img.thickness;
  for (std::size_t y = 0; y < kImageSide; ++y) {
    for (std::size_t x = 0; x < kImageSide; ++x) {
      const double dist = std::hypot(double(x) - center_x, double(y) - center_y);
      const bool on = label == Shape::kDisk ? dist <= outer_radius
                                            : (dist >= inner && dist <= outer_radius);
      img.pixels[y * kImageSide + x] = on ? 1 : 0;
    }
  }
  return img;
}

std::vector<DiskRingImage> generate_toy_dataset(std::size_t n, std::uint64_t seed) {
  require(n >= 1, "generate_toy_dataset: n must be >= 1");
  std::vector<DiskRingImage> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = derive_stream(seed, i);
    std::uniform_int_distribution<int> jitter(-2, 2);
    const int cx = int(kImageSide / 2) + jitter(rng);
    const int cy = int(kImageSide / 2) + jitter(rng);
    const double r = std::uniform_real_distribution<double>(5.0, 13.0)(rng);
    const Shape label = i % 2 == 0 ? Shape::kDisk : Shape::kRing;
    const double t =
        label == Shape::kRing ? std::uniform_real_distribution<double>(2.0, r - 2.0)(rng) : r;
    out.push_back(render_shape(label, cx, cy, r, t));
  }
  return out;
}

Matrix to_matrix(const std::vector<DiskRingImage>& images) {
  Matrix m(images.size(), kImagePixels);
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t p = 0; p < kImagePixels; ++p) m(i, p) = images[i].pixels[p];
  }
  return m;
}

namespace {

constexpr int kMaxRadiusSq = 15 * 15;

}  // namespace

ValidityResult validity_check(std::span<const double> image) {
  require(image.size() == kImagePixels, "validity_check: expected a 32x32 image");
  ValidityResult best;

  std::array<bool, kImagePixels> fg{};
  int fg_count = 0;
  double sx = 0.0, sy = 0.0;
  for (std::size_t p = 0; p < kImagePixels; ++p) {
    fg[p] = image[p] >= 0.5;
    if (fg[p]) {
      ++fg_count;
      sx += double(p % kImageSide);
      sy += double(p / kImageSide);
    }
  }
  if (fg_count == 0) return best;

  const int mx = int(std::lround(sx / fg_count));
  const int my = int(std::lround(sy / fg_count));
  double best_iou = -1.0;
  int best_inter = 0, best_area = 0;

  // Annulus {inner_sq <= dx^2 + dy^2 <= outer_sq}; prefix sums over squared distance.
  std::array<int, kMaxRadiusSq + 2> all_prefix{};
  std::array<int, kMaxRadiusSq + 2> fg_prefix{};
  std::vector<int> radii_sq;
  for (int cy = std::max(0, my - 2); cy <= std::min<int>(kImageSide - 1, my + 2); ++cy) {
    for (int cx = std::max(0, mx - 2); cx <= std::min<int>(kImageSide - 1, mx + 2); ++cx) {
      std::array<int, kMaxRadiusSq + 1> all_count{};
      std::array<int, kMaxRadiusSq + 1> fg_hist{};
      for (std::size_t p = 0; p < kImagePixels; ++p) {
        const int dx = int(p % kImageSide) - cx;
        const int dy = int(p / kImageSide) - cy;
        const int sq = dx * dx + dy * dy;
        if (sq > kMaxRadiusSq) continue;
        ++all_count[sq];
        if (fg[p]) ++fg_hist[sq];
      }
      radii_sq.clear();
      for (int s = 0; s <= kMaxRadiusSq; ++s) {
        all_prefix[s + 1] = all_prefix[s] + all_count[s];
        fg_prefix[s + 1] = fg_prefix[s] + fg_hist[s];
        if (all_count[s] > 0) radii_sq.push_back(s);
      }
      for (std::size_t a = 0; a < radii_sq.size(); ++a) {
        for (std::size_t b = a; b < radii_sq.size(); ++b) {
          const int lo = radii_sq[a];
          const int hi = radii_sq[b];
          const int area = all_prefix[hi + 1] - all_prefix[lo];
          const int inter = fg_prefix[hi + 1] - fg_prefix[lo];
          const double iou = double(inter) / double(fg_count + area - inter);
          if (iou > best_iou) {
            best_iou = iou;
            best_inter = inter;
            best_area = area;
            best.center_x = cx;
            best.center_y = cy;
            best.inner_radius = lo == 0 ? 0.0 : std::sqrt(double(lo));
            best.outer_radius = std::sqrt(double(hi));
          }
        }
      }
    }
  }

  best.precision = double(best_inter) / double(fg_count);
  best.recall = best_area == 0 ? 0.0 : double(best_inter) / double(best_area);
  if (best.precision >= 0.9 && best.recall >= 0.8) {
    best.verdict = best.inner_radius == 0.0 ? Verdict::kValidDisk : Verdict::kValidRing;
  }
  return best;
}

}  // namespace rlatent
