#include "rlatent/paths.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "rlatent/error.hpp"

namespace rlatent {

namespace {

using Objective = std::function<double(const LatentPath&, std::vector<Vec>*)>;

void check_endpoints(std::span<const double> z1, std::span<const double> z2, std::size_t dim) {
  require(z1.size() == dim && z2.size() == dim, "path endpoints: dimension mismatch");
  for (std::size_t j = 0; j < dim; ++j) {
    require(std::isfinite(z1[j]) && std::isfinite(z2[j]), "path endpoints must be finite");
  }
}

/// Gradient descent on the interior points with step halving whenever a
/// trial step fails to lower the objective. Endpoints never move.
OptimizedPath descend(const Objective& objective, LatentPath path, const PathConfig& config) {
  const std::size_t n = path.size();
  const std::size_t d = path.dim();
  std::vector<Vec> grad(n, Vec(d, 0.0));

  OptimizedPath out;
  double energy = objective(path, &grad);
  require(std::isfinite(energy), "path optimization: objective is not finite at initialization");
  out.energies.push_back(energy);

  double step = config.init_step;
  const double min_step = config.init_step * 1e-30;
  LatentPath trial = path;
  while (out.iterations < config.max_iters) {
    ++out.iterations;
    for (std::size_t t = 1; t + 1 < n; ++t) {
      for (std::size_t j = 0; j < d; ++j) trial.points[t][j] = path.points[t][j] - step * grad[t][j];
    }
    const double trial_energy = objective(trial, nullptr);
    if (!(trial_energy <= energy)) {
      step *= 0.5;
      if (step < min_step) {
        out.converged = true;
        break;
      }
      continue;
    }
    const double decrease = energy - trial_energy;
    std::swap(path, trial);
    energy = objective(path, &grad);
    out.energies.push_back(energy);
    if (decrease <= config.tolerance * std::abs(energy)) {
      out.converged = true;
      break;
    }
  }
  out.path = std::move(path);
  return out;
}

}  // namespace

void LatentPath::validate() const {
  require(points.size() >= 2, "LatentPath: needs at least 2 points");
  const std::size_t d = points.front().size();
  require(d >= 1, "LatentPath: points must have dimension >= 1");
  for (const Vec& p : points) {
    require(p.size() == d, "LatentPath: all points must share one dimension");
    for (double x : p) require(std::isfinite(x), "LatentPath: points must be finite");
  }
}

void PathConfig::validate() const {
  require(n_points >= 3, "PathConfig: n_points must be >= 3");
  require(std::isfinite(init_step) && init_step > 0.0, "PathConfig: init_step must be > 0");
  require(std::isfinite(smoothness) && smoothness >= 0.0, "PathConfig: smoothness must be >= 0");
  require(std::isfinite(tolerance) && tolerance >= 0.0, "PathConfig: tolerance must be >= 0");
}

LatentPath affine_interpolation(std::span<const double> z1, std::span<const double> z2,
                                std::size_t n_points) {
  require(n_points >= 2, "affine_interpolation: needs at least 2 points");
  require(z1.size() == z2.size(), "affine_interpolation: dimension mismatch");
  LatentPath path;
  path.points.reserve(n_points);
  const double last = double(n_points - 1);
  for (std::size_t t = 0; t < n_points; ++t) {
    const double s = double(t) / last;
    Vec p(z1.size());
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = z1[j] + s * (z2[j] - z1[j]);
    path.points.push_back(std::move(p));
  }
  // exact endpoints regardless of rounding in the interpolation formula
  path.points.front().assign(z1.begin(), z1.end());
  path.points.back().assign(z2.begin(), z2.end());
  return path;
}

double potential(const MetricField& field, std::span<const double> z) {
  return std::exp(-0.5 * log_det_metric(field, z));
}

double path_potential_energy(const MetricField& field, const LatentPath& path) {
  path.validate();
  const std::size_t n = path.size();
  const double dt = 1.0 / double(n - 1);
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double weight = (t == 0 || t + 1 == n) ? 0.5 : 1.0;
    sum += weight * potential(field, path.points[t]);
  }
  return sum * dt;
}

double elastic_energy(const LatentPath& path, double alpha) {
  const std::size_t n = path.size();
  double sum = 0.0;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    for (std::size_t j = 0; j < path.dim(); ++j) {
      const double r = path.points[t + 1][j] - path.points[t][j];
      sum += r * r;
    }
  }
  return alpha * double(n - 1) * sum;
}

double potential_objective(const MetricField& field, const LatentPath& path, double alpha,
                           std::vector<Vec>* grad) {
  path.validate();
  require(path.dim() == field.dim(), "potential_objective: dimension mismatch");
  const std::size_t n = path.size();
  const std::size_t d = path.dim();
  const double dt = 1.0 / double(n - 1);
  const double stiffness = 2.0 * alpha * double(n - 1);

  if (grad != nullptr) grad->assign(n, Vec(d, 0.0));
  Vec g_log_det(d);
  double pe = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double weight = ((t == 0 || t + 1 == n) ? 0.5 : 1.0) * dt;
    if (grad == nullptr) {
      pe += weight * potential(field, path.points[t]);
      continue;
    }
    const double v = std::exp(-0.5 * log_det_with_grad(field, path.points[t], g_log_det));
    pe += weight * v;
    // grad V = -1/2 V grad log det G
    for (std::size_t j = 0; j < d; ++j) (*grad)[t][j] += weight * (-0.5 * v * g_log_det[j]);
  }
  if (grad != nullptr) {
    for (std::size_t t = 0; t + 1 < n; ++t) {
      for (std::size_t j = 0; j < d; ++j) {
        const double r = path.points[t + 1][j] - path.points[t][j];
        (*grad)[t + 1][j] += stiffness * r;
        (*grad)[t][j] -= stiffness * r;
      }
    }
  }
  return pe + elastic_energy(path, alpha);
}

double geodesic_energy(const MetricField& field, const LatentPath& path, std::vector<Vec>* grad) {
  path.validate();
  require(path.dim() == field.dim(), "geodesic_energy: dimension mismatch");
  const std::size_t n = path.size();
  const std::size_t d = path.dim();
  const double scale = double(n - 1);
  if (grad != nullptr) grad->assign(n, Vec(d, 0.0));

  Vec delta(d), mid(d), sq(d);
  double energy = 0.0;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      delta[j] = path.points[t + 1][j] - path.points[t][j];
      mid[j] = 0.5 * (path.points[t + 1][j] + path.points[t][j]);
      sq[j] = delta[j] * delta[j];
    }
    const DiagSPD g = metric_at(field, mid);
    for (std::size_t j = 0; j < d; ++j) energy += g[j] * sq[j];
    if (grad == nullptr) continue;
    // d/dmid of sum_j delta_j^2 G_j(mid); each endpoint of the segment moves mid by 1/2
    const Vec g_mid = grad_weighted_trace(field, mid, sq);
    for (std::size_t j = 0; j < d; ++j) {
      const double stretch = 2.0 * g[j] * delta[j];
      (*grad)[t + 1][j] += scale * (stretch + 0.5 * g_mid[j]);
      (*grad)[t][j] += scale * (-stretch + 0.5 * g_mid[j]);
    }
  }
  return scale * energy;
}

double riemannian_path_length(const MetricField& field, const LatentPath& path) {
  path.validate();
  require(path.dim() == field.dim(), "riemannian_path_length: dimension mismatch");
  const std::size_t d = path.dim();
  Vec delta(d), mid(d);
  double length = 0.0;
  for (std::size_t t = 0; t + 1 < path.size(); ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      delta[j] = path.points[t + 1][j] - path.points[t][j];
      mid[j] = 0.5 * (path.points[t + 1][j] + path.points[t][j]);
    }
    const DiagSPD g = metric_at(field, mid);
    double q = 0.0;
    for (std::size_t j = 0; j < d; ++j) q += g[j] * delta[j] * delta[j];
    length += std::sqrt(q);
  }
  return length;
}

OptimizedPath minimize_potential_path(const MetricField& field, std::span<const double> z1,
                                      std::span<const double> z2, const PathConfig& config) {
  config.validate();
  check_endpoints(z1, z2, field.dim());
  const double alpha = config.smoothness;
  return descend(
      [&](const LatentPath& p, std::vector<Vec>* g) { return potential_objective(field, p, alpha, g); },
      affine_interpolation(z1, z2, config.n_points), config);
}

OptimizedPath geodesic_path(const MetricField& field, std::span<const double> z1,
                            std::span<const double> z2, const PathConfig& config) {
  config.validate();
  check_endpoints(z1, z2, field.dim());
  return descend(
      [&](const LatentPath& p, std::vector<Vec>* g) { return geodesic_energy(field, p, g); },
      affine_interpolation(z1, z2, config.n_points), config);
}

double mean_potential(const MetricField& field, const LatentPath& path) {
  path.validate();
  double sum = 0.0;
  for (const Vec& p : path.points) sum += potential(field, p);
  return sum / double(path.size());
}

}  // namespace rlatent
