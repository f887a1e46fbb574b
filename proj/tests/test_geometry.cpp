#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "rlatent/error.hpp"
#include "rlatent/geometry.hpp"
#include "support.hpp"

namespace rlatent {
namespace {

MetricField one_centroid_41() {
  return MetricField({{{0.0, 0.0}, DiagSPD({4.0, 1.0})}}, 0.01, 0.0, 1.0, 2);
}

TEST(DiagSPD, RejectsNonPositiveAndNonFinite) {
  EXPECT_THROW(DiagSPD({1.0, 0.0}), ValidationError);
  EXPECT_THROW(DiagSPD({-1.0}), ValidationError);
  EXPECT_THROW(DiagSPD({NAN}), ValidationError);
  EXPECT_THROW(DiagSPD(Vec{}), ValidationError);
  EXPECT_NEAR(DiagSPD({4.01, 1.01}).log_det(), std::log(4.01) + std::log(1.01), 1e-15);
}

TEST(MetricField, ConstructorChecksInvariants) {
  const Centroid c{{0.0, 0.0}, DiagSPD({1.0, 1.0})};
  EXPECT_THROW(MetricField({c}, 0.0, 0.0, 1.0, 2), ValidationError);
  EXPECT_THROW(MetricField({c}, 1.0, -1.0, 1.0, 2), ValidationError);
  EXPECT_THROW(MetricField({c}, 1.0, 0.0, 0.0, 2), ValidationError);
  EXPECT_THROW(MetricField({c}, 1.0, 0.0, 1.0, 3), ValidationError);
}

TEST(WeightOmega, Examples) {
  const Centroid c{{0.0, 0.0}, DiagSPD({1.0, 1.0})};
  EXPECT_EQ(weight_omega(c, Vec{0.0, 0.0}, 1.0), 1.0);
  EXPECT_NEAR(weight_omega(c, Vec{1.0, 0.0}, 1.0), 0.3678794412, 1e-10);
  double prev = 0.0;
  for (double rho : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double w = weight_omega(c, Vec{1.0, 0.5}, rho);
    EXPECT_GT(w, prev);
    EXPECT_LE(w, 1.0);
    prev = w;
  }
  EXPECT_THROW(weight_omega(c, Vec{1.0}, 1.0), ValidationError);
}

TEST(MetricAt, Examples) {
  const MetricField flat = MetricField::constant(2, 1.0);
  const DiagSPD g0 = metric_at(flat, Vec{3.0, -7.0});
  EXPECT_EQ(g0[0], 1.0);
  EXPECT_EQ(g0[1], 1.0);

  const MetricField f = one_centroid_41();
  const DiagSPD at_mu = metric_at(f, Vec{0.0, 0.0});
  EXPECT_NEAR(at_mu[0], 4.01, 1e-14);
  EXPECT_NEAR(at_mu[1], 1.01, 1e-14);
  const DiagSPD off = metric_at(f, Vec{1.0, 0.0});
  EXPECT_NEAR(off[0], 0.0832626, 1e-7);
  EXPECT_NEAR(off[1], 0.0283156, 1e-7);
  EXPECT_THROW(metric_at(f, Vec{1.0}), ValidationError);
}

TEST(LogDet, Examples) {
  EXPECT_EQ(log_det_metric(MetricField::constant(2, 1.0), Vec{0.3, 0.4}), 0.0);
  EXPECT_NEAR(log_det_metric(one_centroid_41(), Vec{0.0, 0.0}), 1.39874, 5e-6);
  EXPECT_NEAR(log_det_metric(MetricField::constant(2, std::numbers::e), Vec{1.0, 1.0}), 2.0, 1e-15);
}

TEST(LogDet, StaysFiniteWhereTheProductWouldUnderflow) {
  // 64 entries of 1e-10: the product is 1e-640, below the smallest double.
  const MetricField f = MetricField::constant(64, 1e-10);
  EXPECT_NEAR(log_det_metric(f, Vec(64, 0.0)), 64.0 * std::log(1e-10), 1e-9);
}

TEST(GradLogDet, Examples) {
  const Vec zero = grad_log_det(MetricField::constant(3, 2.0), Vec{1.0, 2.0, 3.0});
  for (double g : zero) EXPECT_EQ(g, 0.0);
  const Vec at_mu = grad_log_det(one_centroid_41(), Vec{0.0, 0.0});
  for (double g : at_mu) EXPECT_EQ(g, 0.0);
}

TEST(GradLogDet, MatchesCentralDifferencesOnRandomFields) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + trial % 4;
    const double tau = trial % 3 == 0 ? 0.0 : 0.05;
    const MetricField f = testing::random_field(rng, 5, d, 1e-2, tau);
    const Vec z = testing::random_point(rng, d, -3.0, 3.0);
    const Vec fd = testing::central_gradient(
        [&](const Vec& x) { return testing::oracle_log_det_shifted(f, x); }, z, 1e-5);
    EXPECT_LT(testing::relative_error(grad_log_det(f, z), fd), 1e-6) << "trial " << trial;
  }
}

TEST(GradLogDet, LogDetWithGradAgrees) {
  Rng rng(7);
  const MetricField f = testing::random_field(rng, 9, 3, 1e-2, 0.1);
  Vec g(3);
  for (int i = 0; i < 20; ++i) {
    const Vec z = testing::random_point(rng, 3, -2, 2);
    const double ld = log_det_with_grad(f, z, g);
    EXPECT_NEAR(ld, testing::oracle_log_det(f, z), 1e-12 * (1 + std::abs(ld)));
    EXPECT_LE(testing::relative_error(g, grad_log_det(f, z), 1e-12), 1e-13);
  }
}

TEST(GradWeightedTrace, MatchesCentralDifferences) {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const MetricField f = testing::random_field(rng, 4, 2, 1e-2, 0.02);
    const Vec z = testing::random_point(rng, 2, -2, 2);
    const Vec a = testing::random_point(rng, 2, 0.1, 3);
    const Vec fd = testing::central_gradient(
        [&](const Vec& x) {
          const Vec g = testing::oracle_metric(f, x);
          return a[0] * g[0] + a[1] * g[1];
        },
        z, 1e-5);
    EXPECT_LT(testing::relative_error(grad_weighted_trace(f, z, a), fd), 1e-6);
  }
}

TEST(VolumeElement, Examples) {
  EXPECT_EQ(volume_element(MetricField::constant(2, 1.0), Vec{5.0, 5.0}), 1.0);
  EXPECT_NEAR(volume_element(one_centroid_41(), Vec{0.0, 0.0}), 2.01249, 5e-6);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const MetricField f = testing::random_field(rng, 3, 2);
    const Vec z = testing::random_point(rng, 2, -3, 3);
    const Vec g = testing::oracle_metric(f, z);
    const double v = volume_element(f, z);
    EXPECT_NEAR(v * v / (g[0] * g[1]), 1.0, 1e-12);
  }
}

TEST(Mahalanobis, Examples) {
  const Vec a{0.0, 0.0}, b{1.0, 1.0};
  EXPECT_NEAR(mahalanobis_distance(a, b, DiagSPD::identity(2)), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(mahalanobis_distance(b, b, DiagSPD({4.0, 1.0})), 0.0);
  EXPECT_NEAR(mahalanobis_distance(a, b, DiagSPD({4.0, 1.0})), 2.2360680, 1e-7);
  EXPECT_EQ(mahalanobis_distance(a, b, DiagSPD({4.0, 1.0})),
            mahalanobis_distance(b, a, DiagSPD({4.0, 1.0})));
  EXPECT_THROW(mahalanobis_distance(a, Vec{1.0}, DiagSPD::identity(2)), ValidationError);
}

TEST(RiemannianGaussian, Examples) {
  const Vec mu{0.0, 0.0};
  EXPECT_NEAR(riemannian_gaussian_logpdf(mu, DiagSPD::identity(2), 1.0, mu, true),
              -std::log(2.0 * std::numbers::pi), 1e-15);
  EXPECT_EQ(riemannian_gaussian_logpdf(mu, DiagSPD::identity(2), 1.0, mu, false), 0.0);
  EXPECT_NEAR(riemannian_gaussian_logpdf(mu, DiagSPD({4.0, 1.0}), 1.0, Vec{0.5, 0.0}, false), -0.5,
              1e-15);
  EXPECT_THROW(riemannian_gaussian_logpdf(mu, DiagSPD::identity(2), 0.0, mu, false), ValidationError);
}

TEST(RiemannianGaussian, NormalizedFormIntegratesToOne) {
  // Midpoint quadrature of exp(logpdf) for S = diag(4, 1), sigma = 0.7.
  const Vec mu{0.3, -0.2};
  const DiagSPD s({4.0, 1.0});
  const int n = 400;
  const double lo = -6.0, hi = 6.0, h = (hi - lo) / n;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec z{lo + (i + 0.5) * h, lo + (j + 0.5) * h};
      total += std::exp(riemannian_gaussian_logpdf(mu, s, 0.7, z, true)) * h * h;
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(DensityGrid, ConstantFieldIsUniform) {
  const GridDensity g = density_grid(MetricField::constant(2, 1.0), Box2{-1, 1, -1, 1}, 10);
  for (double m : g.masses()) EXPECT_NEAR(m, 0.01, 1e-15);
}

TEST(DensityGrid, MassesSumToOneAndArgmaxSitsOnTheCentroid) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const MetricField f = testing::random_field(rng, 4, 2, 1e-2, 0.01);
    const GridDensity g = density_grid(f, default_box(f), 37);
    EXPECT_GT(g.normalizer, 0.0);
    const Vec m = g.masses();
    EXPECT_NEAR(std::accumulate(m.begin(), m.end(), 0.0), 1.0, 1e-10);
    for (double v : g.values) EXPECT_GE(v, 0.0);
  }
  const MetricField single({{{0.43, -0.27}, DiagSPD({2.0, 3.0})}}, 1e-4, 0.0, 1.0, 2);
  const GridDensity g = density_grid(single, Box2{-2, 2, -2, 2}, 40);
  const auto best = std::max_element(g.values.begin(), g.values.end()) - g.values.begin();
  EXPECT_EQ(best, g.cell_index(0.43, -0.27));
}

TEST(DensityGrid, RejectsBadInput) {
  EXPECT_THROW(density_grid(MetricField::constant(3, 1.0), Box2{-1, 1, -1, 1}, 10), ValidationError);
  EXPECT_THROW(density_grid(MetricField::constant(2, 1.0), Box2{1, 1, -1, 1}, 10), ValidationError);
  EXPECT_THROW(density_grid(MetricField::constant(2, 1.0), Box2{-1, 1, -1, 1}, 1), ValidationError);
}

TEST(MetricProperties, PositiveDefiniteEverywhere) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const double lambda = std::pow(10.0, testing::uniform(rng, -8, 1));
    const MetricField f = testing::random_field(rng, 6, 3, lambda, 0.0);
    const DiagSPD g = metric_at(f, testing::random_point(rng, 3, -50, 50));
    for (double v : g.entries()) EXPECT_GT(v, 0.0);
  }
}

TEST(MetricProperties, PermutationInvariant) {
  Rng rng(4);
  const MetricField f = testing::random_field(rng, 8, 2, 1e-2, 0.01);
  std::vector<Centroid> cs = f.centroids();
  std::shuffle(cs.begin(), cs.end(), rng);
  const MetricField p(cs, f.lambda(), f.tau(), f.rho(), 2);
  for (int i = 0; i < 30; ++i) {
    const Vec z = testing::random_point(rng, 2, -3, 3);
    const DiagSPD a = metric_at(f, z), b = metric_at(p, z);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(a[j], b[j], 1e-14 * a[j]);
  }
}

TEST(MetricProperties, TaylorConsistencyForIsolatedCentroids) {
  const double rho = 0.5;
  std::vector<Centroid> cs;
  Rng rng(8);
  for (int i = 0; i < 4; ++i) {
    cs.push_back({{6.0 * rho * i, -6.0 * rho * (i % 2)}, DiagSPD(testing::random_point(rng, 2, 0.5, 2.0))});
  }
  const MetricField f(cs, 1e-6, 0.0, rho, 2);
  for (const Centroid& c : cs) {
    const DiagSPD g = metric_at(f, c.mu);
    double dev = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      dev = std::max(dev, std::abs(g[j] - c.inv_cov[j]));
      norm = std::max(norm, c.inv_cov[j]);
    }
    EXPECT_LE(dev / norm, 1e-3);
  }
}

TEST(MetricProperties, LogDetDecaysAlongRaysFromASingleCentroid) {
  Rng rng(21);
  const MetricField f({{{0.5, -1.0}, DiagSPD({3.0, 0.7})}}, 1e-2, 0.0, 0.8, 2);
  for (int ray = 0; ray < 16; ++ray) {
    const double angle = testing::uniform(rng, 0, 2 * std::numbers::pi);
    double prev = log_det_metric(f, Vec{0.5, -1.0});
    for (int s = 1; s <= 60; ++s) {
      const double r = 0.05 * s;
      const double cur = log_det_metric(f, Vec{0.5 + r * std::cos(angle), -1.0 + r * std::sin(angle)});
      EXPECT_LE(cur, prev);
      prev = cur;
    }
  }
}

}  // namespace
}  // namespace rlatent
