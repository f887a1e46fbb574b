#include "rlatent/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rlatent/error.hpp"
#include "rlatent/simd/kernels.hpp"

namespace rlatent {

namespace {

void check_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw ValidationError(std::string(what) + ": dimension mismatch (expected " +
                          std::to_string(expected) + ", got " + std::to_string(got) + ")");
  }
}

struct Scratch {
  Vec q;
  Vec w;
  Vec s;
};

Scratch& scratch(std::size_t k) {
  thread_local Scratch sc;
  sc.q.assign(k, 0.0);
  sc.w.resize(k);
  sc.s.resize(k);
  return sc;
}

double squared_norm(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return s;
}

/// Fills sc.w with the interpolant weights and g with the metric diagonal.
/// Returns the isotropic regularization term lambda * exp(-tau |z|^2).
double evaluate(const MetricField& field, std::span<const double> z, Scratch& sc, double* g) {
  const auto& kern = simd::active();
  const std::size_t k = field.size();
  const std::size_t d = field.dim();
  for (std::size_t j = 0; j < d; ++j) {
    kern.weighted_sq_accumulate(sc.q.data(), field.inv_cov_row(j).data(),
                                field.mu_row(j).data(), z[j], k);
  }
  const double inv_rho2 = 1.0 / (field.rho() * field.rho());
  for (std::size_t i = 0; i < k; ++i) sc.w[i] = std::exp(-sc.q[i] * inv_rho2);
  const double reg =
      field.tau() == 0.0 ? field.lambda() : field.lambda() * std::exp(-field.tau() * squared_norm(z));
  for (std::size_t j = 0; j < d; ++j) {
    g[j] = (k == 0 ? 0.0 : kern.dot(field.inv_cov_row(j).data(), sc.w.data(), k)) + reg;
  }
  return reg;
}

}  // namespace

DiagSPD::DiagSPD(Vec entries) : entries_(std::move(entries)) {
  require(!entries_.empty(), "DiagSPD: dimension must be >= 1");
  for (double e : entries_) {
    if (!std::isfinite(e) || !(e > 0.0)) {
      throw ValidationError("DiagSPD: entries must be finite and strictly positive (got " +
                            std::to_string(e) + ")");
    }
  }
}

DiagSPD DiagSPD::identity(std::size_t dim, double scale) { return DiagSPD(Vec(dim, scale)); }

double DiagSPD::log_det() const {
  double s = 0.0;
  for (double e : entries_) s += std::log(e);
  return s;
}

double DiagSPD::det() const { return std::exp(log_det()); }

MetricField::MetricField(std::vector<Centroid> centroids, double lambda, double tau, double rho,
                         std::size_t dim)
    : centroids_(std::move(centroids)), lambda_(lambda), tau_(tau), rho_(rho), dim_(dim) {
  require(dim_ >= 1, "MetricField: dim must be >= 1");
  require(std::isfinite(lambda_) && lambda_ > 0.0, "MetricField: lambda must be > 0");
  require(std::isfinite(tau_) && tau_ >= 0.0, "MetricField: tau must be >= 0");
  require(std::isfinite(rho_) && rho_ > 0.0, "MetricField: rho must be > 0");
  const std::size_t k = centroids_.size();
  mu_t_.resize(k * dim_);
  inv_t_.resize(k * dim_);
  for (std::size_t i = 0; i < k; ++i) {
    const Centroid& c = centroids_[i];
    check_dim(dim_, c.mu.size(), "MetricField centroid mu");
    check_dim(dim_, c.inv_cov.dim(), "MetricField centroid inv_cov");
    for (std::size_t j = 0; j < dim_; ++j) {
      require(std::isfinite(c.mu[j]), "MetricField: centroid mu must be finite");
      mu_t_[j * k + i] = c.mu[j];
      inv_t_[j * k + i] = c.inv_cov[j];
    }
  }
}

MetricField MetricField::constant(std::size_t dim, double lambda) {
  return MetricField({}, lambda, 0.0, 1.0, dim);
}

std::span<const double> MetricField::mu_row(std::size_t axis) const {
  return std::span<const double>(mu_t_).subspan(axis * size(), size());
}

std::span<const double> MetricField::inv_cov_row(std::size_t axis) const {
  return std::span<const double>(inv_t_).subspan(axis * size(), size());
}

double weight_omega(const Centroid& c, std::span<const double> z, double rho) {
  check_dim(c.mu.size(), z.size(), "weight_omega");
  require(rho > 0.0, "weight_omega: rho must be > 0");
  double q = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double r = z[j] - c.mu[j];
    q += c.inv_cov[j] * r * r;
  }
  return std::exp(-q / (rho * rho));
}

DiagSPD metric_at(const MetricField& field, std::span<const double> z) {
  check_dim(field.dim(), z.size(), "metric_at");
  Scratch& sc = scratch(field.size());
  Vec g(field.dim());
  evaluate(field, z, sc, g.data());
  return DiagSPD(std::move(g));
}

double log_det_metric(const MetricField& field, std::span<const double> z) {
  check_dim(field.dim(), z.size(), "log_det_metric");
  Scratch& sc = scratch(field.size());
  thread_local Vec g;
  g.resize(field.dim());
  evaluate(field, z, sc, g.data());
  double s = 0.0;
  for (double v : g) s += std::log(v);
  return s;
}

namespace {

/// Gradient of sum_j a_j G_jj(z), given sc and reg from a prior evaluate() at z.
void trace_gradient(const MetricField& field, std::span<const double> z, Scratch& sc, double reg,
                    std::span<const double> coeffs, std::span<double> grad) {
  const std::size_t d = field.dim();
  const std::size_t k = field.size();
  const auto& kern = simd::active();

  // s_i = sum_j a_j inv_ij, then c_i = w_i s_i
  std::fill(sc.s.begin(), sc.s.end(), 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    kern.axpy(coeffs[j], field.inv_cov_row(j).data(), sc.s.data(), k);
  }
  for (std::size_t i = 0; i < k; ++i) sc.s[i] *= sc.w[i];

  double coeff_sum = 0.0;
  for (double a : coeffs) coeff_sum += a;
  const double kernel_scale = -2.0 / (field.rho() * field.rho());
  const double reg_scale = -2.0 * field.tau() * reg * coeff_sum;

  for (std::size_t m = 0; m < d; ++m) {
    const double centroid_part =
        k == 0 ? 0.0
               : kern.weighted_residual_dot(sc.s.data(), field.inv_cov_row(m).data(),
                                            field.mu_row(m).data(), z[m], k);
    grad[m] = kernel_scale * centroid_part + reg_scale * z[m];
  }
}

}  // namespace

Vec grad_weighted_trace(const MetricField& field, std::span<const double> z,
                        std::span<const double> coeffs) {
  check_dim(field.dim(), z.size(), "grad_weighted_trace");
  check_dim(field.dim(), coeffs.size(), "grad_weighted_trace coefficients");
  Scratch& sc = scratch(field.size());
  Vec g(field.dim());
  const double reg = evaluate(field, z, sc, g.data());
  Vec grad(field.dim());
  trace_gradient(field, z, sc, reg, coeffs, grad);
  return grad;
}

double log_det_with_grad(const MetricField& field, std::span<const double> z,
                         std::span<double> grad) {
  check_dim(field.dim(), z.size(), "log_det_with_grad");
  check_dim(field.dim(), grad.size(), "log_det_with_grad gradient");
  Scratch& sc = scratch(field.size());
  thread_local Vec g;
  g.resize(field.dim());
  const double reg = evaluate(field, z, sc, g.data());
  double log_det = 0.0;
  for (double& v : g) {
    log_det += std::log(v);
    v = 1.0 / v;
  }
  trace_gradient(field, z, sc, reg, g, grad);
  return log_det;
}

Vec grad_log_det(const MetricField& field, std::span<const double> z) {
  Vec grad(field.dim());
  log_det_with_grad(field, z, grad);
  return grad;
}

double volume_element(const MetricField& field, std::span<const double> z) {
  return std::exp(0.5 * log_det_metric(field, z));
}

double mahalanobis_distance(std::span<const double> z1, std::span<const double> z2,
                            const DiagSPD& s) {
  check_dim(s.dim(), z1.size(), "mahalanobis_distance");
  check_dim(s.dim(), z2.size(), "mahalanobis_distance");
  double q = 0.0;
  for (std::size_t j = 0; j < z1.size(); ++j) {
    const double r = z2[j] - z1[j];
    q += s[j] * r * r;
  }
  return std::sqrt(q);
}

double riemannian_gaussian_logpdf(std::span<const double> mu, const DiagSPD& s, double sigma,
                                  std::span<const double> z, bool normalized) {
  require(std::isfinite(sigma) && sigma > 0.0, "riemannian_gaussian_logpdf: sigma must be > 0");
  const double dist = mahalanobis_distance(z, mu, s);
  const double unnormalized = -dist * dist / (2.0 * sigma);
  if (!normalized) return unnormalized;
  const double d = double(s.dim());
  return unnormalized - 0.5 * d * std::log(2.0 * std::numbers::pi * sigma) + 0.5 * s.log_det();
}

Box2 default_box(const MetricField& field) {
  require(field.dim() == 2, "default_box: field must be 2-D");
  const double pad = 3.0 * field.rho();
  if (field.size() == 0) return Box2{-pad, pad, -pad, pad};
  Box2 b{field.centroids()[0].mu[0], field.centroids()[0].mu[0], field.centroids()[0].mu[1],
         field.centroids()[0].mu[1]};
  for (const Centroid& c : field.centroids()) {
    b.x_lo = std::min(b.x_lo, c.mu[0]);
    b.x_hi = std::max(b.x_hi, c.mu[0]);
    b.y_lo = std::min(b.y_lo, c.mu[1]);
    b.y_hi = std::max(b.y_hi, c.mu[1]);
  }
  b.x_lo -= pad;
  b.x_hi += pad;
  b.y_lo -= pad;
  b.y_hi += pad;
  return b;
}

double GridDensity::cell_center_x(std::size_t ix) const {
  return bounds.x_lo + (double(ix) + 0.5) * cell_width();
}

double GridDensity::cell_center_y(std::size_t iy) const {
  return bounds.y_lo + (double(iy) + 0.5) * cell_height();
}

Vec GridDensity::masses() const {
  Vec m(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m[i] = mass(i);
  return m;
}

long GridDensity::cell_index(double x, double y) const {
  if (!(x >= bounds.x_lo && x < bounds.x_hi && y >= bounds.y_lo && y < bounds.y_hi)) return -1;
  auto ix = std::size_t((x - bounds.x_lo) / cell_width());
  auto iy = std::size_t((y - bounds.y_lo) / cell_height());
  ix = std::min(ix, resolution - 1);
  iy = std::min(iy, resolution - 1);
  return long(iy * resolution + ix);
}

GridDensity density_grid(const MetricField& field, const Box2& bounds, std::size_t resolution) {
  require(field.dim() == 2, "density_grid: only 2-D fields are supported");
  require(resolution >= 2, "density_grid: resolution must be >= 2");
  require(std::isfinite(bounds.x_lo) && std::isfinite(bounds.x_hi) && std::isfinite(bounds.y_lo) &&
              std::isfinite(bounds.y_hi),
          "density_grid: bounds must be finite");
  require(bounds.x_hi > bounds.x_lo && bounds.y_hi > bounds.y_lo,
          "density_grid: degenerate box");

  GridDensity grid;
  grid.bounds = bounds;
  grid.resolution = resolution;
  grid.values.resize(resolution * resolution);
  double total = 0.0;
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      const double z[2] = {grid.cell_center_x(ix), grid.cell_center_y(iy)};
      const double v = volume_element(field, z);
      grid.values[iy * resolution + ix] = v;
      total += v;
    }
  }
  grid.normalizer = total * grid.cell_area();
  require(std::isfinite(grid.normalizer) && grid.normalizer > 0.0,
          "density_grid: normalizer is not a positive finite number");
  return grid;
}

}  // namespace rlatent
