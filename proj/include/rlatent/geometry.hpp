#pragma once

// Riemannian metric field on a VAE latent space.
//
//   G(z) = sum_i inv_cov_i * w_i(z) + lambda * exp(-tau * |z|^2) * I
//   w_i(z) = exp(-(z - mu_i)^T inv_cov_i (z - mu_i) / rho^2)
//
// Covariances are diagonal, so G(z) is diagonal and every quantity below is
// O(k * d) per evaluation.

#include <cstddef>
#include <span>
#include <vector>

namespace rlatent {

using Vec = std::vector<double>;

/// Diagonal symmetric positive definite matrix, stored as its diagonal.
class DiagSPD {
 public:
  /// Throws ValidationError unless entries is nonempty, finite and strictly positive.
  explicit DiagSPD(Vec entries);

  static DiagSPD identity(std::size_t dim, double scale = 1.0);

  std::size_t dim() const { return entries_.size(); }
  std::span<const double> entries() const { return entries_; }
  double operator[](std::size_t i) const { return entries_[i]; }

  /// Product of entries, computed as exp(sum of logs).
  double det() const;
  double log_det() const;

  friend bool operator==(const DiagSPD&, const DiagSPD&) = default;

 private:
  Vec entries_;
};

struct Centroid {
  Vec mu;
  DiagSPD inv_cov;

  friend bool operator==(const Centroid&, const Centroid&) = default;
};

/// Immutable metric field. Centroids are also kept transposed (one contiguous
/// row of k values per latent axis) for the vectorized kernels.
class MetricField {
 public:
  MetricField(std::vector<Centroid> centroids, double lambda, double tau, double rho,
              std::size_t dim);

  /// G(z) = lambda * I everywhere (no centroids, tau = 0).
  static MetricField constant(std::size_t dim, double lambda);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return centroids_.size(); }
  double lambda() const { return lambda_; }
  double tau() const { return tau_; }
  double rho() const { return rho_; }
  const std::vector<Centroid>& centroids() const { return centroids_; }

  /// mu_i[axis] for all i, contiguous.
  std::span<const double> mu_row(std::size_t axis) const;
  /// inv_cov_i[axis] for all i, contiguous.
  std::span<const double> inv_cov_row(std::size_t axis) const;

  friend bool operator==(const MetricField& a, const MetricField& b) {
    return a.dim_ == b.dim_ && a.lambda_ == b.lambda_ && a.tau_ == b.tau_ && a.rho_ == b.rho_ &&
           a.centroids_ == b.centroids_;
  }

 private:
  std::vector<Centroid> centroids_;
  double lambda_;
  double tau_;
  double rho_;
  std::size_t dim_;
  Vec mu_t_;
  Vec inv_t_;
};

double weight_omega(const Centroid& c, std::span<const double> z, double rho);

DiagSPD metric_at(const MetricField& field, std::span<const double> z);

/// sum_j log G_jj(z)
double log_det_metric(const MetricField& field, std::span<const double> z);

/// Gradient of log det G(z).
Vec grad_log_det(const MetricField& field, std::span<const double> z);

/// Gradient of sum_j a_j * G_jj(z) for fixed coefficients a. With a_j =
/// 1 / G_jj(z) this is the trace formula tr(G^-1 dG/dz_m) used by grad_log_det.
Vec grad_weighted_trace(const MetricField& field, std::span<const double> z,
                        std::span<const double> coeffs);

/// log det G(z), writing its gradient into grad; one metric evaluation.
double log_det_with_grad(const MetricField& field, std::span<const double> z,
                         std::span<double> grad);

/// sqrt(det G(z))
double volume_element(const MetricField& field, std::span<const double> z);

double mahalanobis_distance(std::span<const double> z1, std::span<const double> z2,
                            const DiagSPD& s);

/// Unnormalized: -dist_S(z, mu)^2 / (2 sigma). Normalized: log density of
/// N(mu, sigma * S^-1), which is the Riemannian Gaussian for a constant metric.
double riemannian_gaussian_logpdf(std::span<const double> mu, const DiagSPD& s, double sigma,
                                  std::span<const double> z, bool normalized);

struct Box2 {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double y_lo = 0.0;
  double y_hi = 0.0;

  friend bool operator==(const Box2&, const Box2&) = default;
};

/// Bounding box of the centroid means expanded by 3 rho per side. For a field
/// without centroids, [-3 rho, 3 rho]^2.
Box2 default_box(const MetricField& field);

/// Riemannian uniform density sqrt(det G) tabulated at cell centres of a
/// 2-D box and normalized by midpoint quadrature.
struct GridDensity {
  Box2 bounds;
  std::size_t resolution = 0;
  /// values[iy * resolution + ix]
  Vec values;
  double normalizer = 0.0;

  double cell_width() const { return (bounds.x_hi - bounds.x_lo) / double(resolution); }
  double cell_height() const { return (bounds.y_hi - bounds.y_lo) / double(resolution); }
  double cell_area() const { return cell_width() * cell_height(); }
  double cell_center_x(std::size_t ix) const;
  double cell_center_y(std::size_t iy) const;
  double mass(std::size_t cell) const { return values[cell] * cell_area() / normalizer; }
  Vec masses() const;
  /// Cell containing (x, y), or -1 when outside the box.
  long cell_index(double x, double y) const;
};

GridDensity density_grid(const MetricField& field, const Box2& bounds, std::size_t resolution);

}  // namespace rlatent
