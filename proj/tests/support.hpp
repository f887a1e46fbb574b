#pragma once

// Independent oracles and random-instance generators shared by the suites.
// Nothing here calls into the library's numerical code paths.

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rlatent/geometry.hpp"
#include "rlatent/random.hpp"

namespace rlatent::testing {

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec random_point(Rng& rng, std::size_t d, double lo, double hi) {
  Vec z(d);
  for (double& x : z) x = uniform(rng, lo, hi);
  return z;
}

/// k centroids in [-2, 2]^d with inverse covariances in [0.5, 3].
inline MetricField random_field(Rng& rng, std::size_t k, std::size_t d, double lambda = 1e-2,
                                double tau = 0.0, double rho = -1.0) {
  std::vector<Centroid> cs;
  for (std::size_t i = 0; i < k; ++i) {
    cs.push_back({random_point(rng, d, -2.0, 2.0), DiagSPD(random_point(rng, d, 0.5, 3.0))});
  }
  if (rho <= 0.0) rho = uniform(rng, 0.5, 2.0);
  return MetricField(std::move(cs), lambda, tau, rho, d);
}

/// Diagonal of G(z) straight from the defining formula.
inline Vec oracle_metric(const MetricField& f, const Vec& z) {
  const std::size_t d = f.dim();
  double zz = 0.0;
  for (double x : z) zz += x * x;
  Vec g(d, f.lambda() * std::exp(-f.tau() * zz));
  for (const Centroid& c : f.centroids()) {
    double q = 0.0;
    for (std::size_t j = 0; j < d; ++j) q += (z[j] - c.mu[j]) * c.inv_cov[j] * (z[j] - c.mu[j]);
    const double w = std::exp(-q / (f.rho() * f.rho()));
    for (std::size_t j = 0; j < d; ++j) g[j] += c.inv_cov[j] * w;
  }
  return g;
}

/// log det G - d log(lambda), written as sum_j [-tau |z|^2 + log1p(S_j / b)]
/// with b the identity term and S_j the centroid sum. Dropping the constant and
/// using log1p keeps finite-difference noise far below the gradient even where
/// S_j / b is tiny (far from every centroid).
inline double oracle_log_det_shifted(const MetricField& f, const Vec& z) {
  const std::size_t d = f.dim();
  double zz = 0.0;
  for (double x : z) zz += x * x;
  const double inv_b = std::exp(f.tau() * zz) / f.lambda();
  Vec s(d, 0.0);
  for (const Centroid& c : f.centroids()) {
    double q = 0.0;
    for (std::size_t j = 0; j < d; ++j) q += (z[j] - c.mu[j]) * c.inv_cov[j] * (z[j] - c.mu[j]);
    const double w = std::exp(-q / (f.rho() * f.rho()));
    for (std::size_t j = 0; j < d; ++j) s[j] += c.inv_cov[j] * w;
  }
  double total = -double(d) * f.tau() * zz;
  for (std::size_t j = 0; j < d; ++j) total += std::log1p(s[j] * inv_b);
  return total;
}

inline double oracle_log_det(const MetricField& f, const Vec& z) {
  return oracle_log_det_shifted(f, z) + double(f.dim()) * std::log(f.lambda());
}

/// Central differences of a scalar function of a vector.
inline Vec central_gradient(const std::function<double(const Vec&)>& fn, Vec x, double h) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = fn(x);
    x[i] = x0 - h;
    const double down = fn(x);
    x[i] = x0;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(|b|_inf, floor)
inline double relative_error(const Vec& a, const Vec& b, double floor = 1e-8) {
  double num = 0.0, scale = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return num / scale;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("rlatent-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace rlatent::testing
