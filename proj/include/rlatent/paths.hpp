#pragma once

// Interpolation curves between two latent points: affine, potential
// minimizing (V(z) = 1 / sqrt(det G(z))), and discrete geodesics.

#include <cstddef>
#include <span>
#include <vector>

#include "rlatent/geometry.hpp"

namespace rlatent {

/// Ordered latent points; the first and last are the fixed endpoints.
struct LatentPath {
  std::vector<Vec> points;

  std::size_t size() const { return points.size(); }
  std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }
  void validate() const;

  friend bool operator==(const LatentPath&, const LatentPath&) = default;
};

struct PathConfig {
  std::size_t n_points = 50;
  std::size_t max_iters = 2000;
  double init_step = 1e-2;
  /// Weight of the elastic spacing term in the potential objective.
  double smoothness = 1.0;
  /// Stop once an accepted step lowers the objective by less than this
  /// fraction of its current value.
  double tolerance = 1e-8;

  void validate() const;

  friend bool operator==(const PathConfig&, const PathConfig&) = default;
};

struct OptimizedPath {
  LatentPath path;
  /// Objective value at initialization followed by every accepted step.
  std::vector<double> energies;
  std::size_t iterations = 0;
  bool converged = false;
};

LatentPath affine_interpolation(std::span<const double> z1, std::span<const double> z2,
                                std::size_t n_points);

/// 1 / sqrt(det G(z))
double potential(const MetricField& field, std::span<const double> z);

/// Trapezoidal integral of V over t in [0, 1] with uniform spacing.
double path_potential_energy(const MetricField& field, const LatentPath& path);

/// Elastic spacing penalty alpha * (T - 1) * sum_t |x_{t+1} - x_t|^2.
double elastic_energy(const LatentPath& path, double alpha);

/// path_potential_energy + elastic_energy. When grad is non-null it receives
/// the gradient with respect to every point (endpoint rows included).
double potential_objective(const MetricField& field, const LatentPath& path, double alpha,
                           std::vector<Vec>* grad = nullptr);

/// (T - 1) * sum_t dx_t^T G(midpoint_t) dx_t, optionally with its gradient.
double geodesic_energy(const MetricField& field, const LatentPath& path,
                       std::vector<Vec>* grad = nullptr);

/// sum_t sqrt(dx_t^T G(midpoint_t) dx_t)
double riemannian_path_length(const MetricField& field, const LatentPath& path);

OptimizedPath minimize_potential_path(const MetricField& field, std::span<const double> z1,
                                      std::span<const double> z2, const PathConfig& config);

OptimizedPath geodesic_path(const MetricField& field, std::span<const double> z1,
                            std::span<const double> z2, const PathConfig& config);

/// Mean of V over the path points; the quantity used to compare how much of a
/// curve runs through low-volume regions.
double mean_potential(const MetricField& field, const LatentPath& path);

}  // namespace rlatent
