#pragma once

// On-disk formats. Every structured artifact is UTF-8 JSON with reals written
// at 17 significant digits (exact double round trip); density grids are CSV;
// images are 32x32 binary PGM.
//
// Readers validate every invariant of the type they produce and throw
// ValidationError on malformed or inconsistent content, IoError when the file
// cannot be opened, read or written.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rlatent/centroids.hpp"
#include "rlatent/geometry.hpp"
#include "rlatent/hmc.hpp"
#include "rlatent/paths.hpp"
#include "rlatent/toy_data.hpp"
#include "rlatent/vae.hpp"

namespace rlatent {

using Json = nlohmann::json;
namespace fs = std::filesystem;

/// Serializes with 17 significant digits per real; rejects NaN and infinity.
std::string dump_json(const Json& value);
Json parse_json(std::string_view text);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, std::string_view contents);

// --- embeddings ------------------------------------------------------------
Json embeddings_to_json(const EmbeddingSet& set);
EmbeddingSet embeddings_from_json(const Json& j);
void write_embeddings(const fs::path& path, const EmbeddingSet& set);
EmbeddingSet read_embeddings(const fs::path& path);

// --- metric field ----------------------------------------------------------
Json metric_to_json(const MetricField& field);
MetricField metric_from_json(const Json& j);
void write_metric(const fs::path& path, const MetricField& field);
MetricField read_metric(const fs::path& path);

// --- model checkpoint ------------------------------------------------------
struct Checkpoint {
  VaeModel model;
  TrainConfig config;
  Vec loss_history;
};

Json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const Json& j);
void write_checkpoint(const fs::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const fs::path& path);

// --- HMC samples -----------------------------------------------------------
/// The thread count is not stored: it never changes the samples.
Json samples_to_json(const SampleBatch& batch);
SampleBatch samples_from_json(const Json& j);
void write_samples(const fs::path& path, const SampleBatch& batch);
SampleBatch read_samples(const fs::path& path);

// --- interpolation paths ---------------------------------------------------
struct PathRecord {
  /// "affine", "potential" or "geodesic"
  std::string kind;
  Vec from;
  Vec to;
  PathConfig config;
  LatentPath path;
  Vec energies;
  std::size_t iterations = 0;
  bool converged = false;
  /// Named scalar diagnostics (path energies, lengths, mean potential).
  std::map<std::string, double> summary;

  friend bool operator==(const PathRecord&, const PathRecord&) = default;
};

Json paths_to_json(const std::vector<PathRecord>& paths);
std::vector<PathRecord> paths_from_json(const Json& j);
void write_paths(const fs::path& path, const std::vector<PathRecord>& paths);
std::vector<PathRecord> read_paths(const fs::path& path);

// --- toy dataset -----------------------------------------------------------
Json dataset_to_json(const std::vector<DiskRingImage>& images);
std::vector<DiskRingImage> dataset_from_json(const Json& j);
void write_dataset(const fs::path& path, const std::vector<DiskRingImage>& images);
std::vector<DiskRingImage> read_dataset(const fs::path& path);

// --- density grid (CSV) ----------------------------------------------------
struct GridRow {
  double x = 0.0;
  double y = 0.0;
  double sqrt_det_g = 0.0;
  double mass = 0.0;
};

/// Header `x,y,sqrt_det_g,mass`, then one row per cell with x varying fastest.
std::string density_to_csv(const GridDensity& grid);
std::vector<GridRow> density_from_csv(std::string_view text);
void write_density_csv(const fs::path& path, const GridDensity& grid);
std::vector<GridRow> read_density_csv(const fs::path& path);

// --- images (PGM) ----------------------------------------------------------
using ImageBytes = std::array<std::uint8_t, kImagePixels>;

inline constexpr std::string_view kPgmHeader = "P5\n32 32\n255\n";

/// 0 -> 0, 1 -> 255
ImageBytes image_bytes(const DiskRingImage& image);
/// round(255 * p), ties to even.
ImageBytes probability_bytes(std::span<const double> probs);

std::string pgm_encode(const ImageBytes& bytes);
ImageBytes pgm_decode(std::string_view data);
void write_pgm(const fs::path& path, const ImageBytes& bytes);
ImageBytes read_pgm(const fs::path& path);

}  // namespace rlatent
