#pragma once

// Metric construction from encoder posteriors: k-medoids centroid selection,
// the bandwidth rule for rho, and assembly of the MetricField.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rlatent/geometry.hpp"

namespace rlatent {

struct EmbeddingRecord {
  std::string id;
  Vec mu;
  /// Elementwise log of the posterior covariance diagonal.
  Vec log_var;

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

struct EmbeddingSet {
  std::size_t dim = 0;
  std::vector<EmbeddingRecord> records;

  void validate() const;
  std::vector<Vec> means() const;

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;
};

struct MedoidResult {
  /// Indices into the input, in selection order.
  std::vector<std::size_t> medoids;
  /// Sum over points of the Euclidean distance to the nearest medoid.
  double cost = 0.0;
  /// Cost after BUILD, then after every applied swap.
  std::vector<double> cost_history;
  std::size_t swaps = 0;
};

/// PAM: greedy BUILD, then the best improving (medoid, non-medoid) swap until
/// none remains. The seed only breaks ties (candidate scan order).
/// Cost is O(k n^2) for BUILD and O(n^2) per swap round.
MedoidResult k_medoids(std::span<const Vec> points, std::size_t k, std::uint64_t seed);

/// Total distance from every point to its nearest listed medoid.
double medoid_cost(std::span<const Vec> points, std::span<const std::size_t> medoids);

/// max_i min_{j != i} |c_i - c_j|_2
double compute_rho(std::span<const Vec> centroids);

/// Selects min(k, n) centroids among the embedding means, takes their inverse
/// covariances exp(-log_var), and sets rho by compute_rho (1.0 with a warning
/// when only one centroid remains).
MetricField build_metric_field(const EmbeddingSet& embeddings, std::size_t k, double lambda = 1e-2,
                               double tau = 0.0, std::uint64_t seed = 0);

}  // namespace rlatent
