#include "rlatent/centroids.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rlatent/error.hpp"
#include "rlatent/random.hpp"

namespace rlatent {

namespace {

double distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double r = a[j] - b[j];
    s += r * r;
  }
  return std::sqrt(s);
}

/// Nearest and second-nearest medoid distance per point.
struct Assignment {
  std::vector<std::size_t> nearest;  // slot in the medoid list
  Vec d1;
  Vec d2;

  void compute(std::span<const Vec> points, const std::vector<std::size_t>& medoids) {
    const std::size_t n = points.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    nearest.assign(n, 0);
    d1.assign(n, inf);
    d2.assign(n, inf);
    for (std::size_t o = 0; o < n; ++o) {
      for (std::size_t m = 0; m < medoids.size(); ++m) {
        const double dist = distance(points[o], points[medoids[m]]);
        if (dist < d1[o]) {
          d2[o] = d1[o];
          d1[o] = dist;
          nearest[o] = m;
        } else if (dist < d2[o]) {
          d2[o] = dist;
        }
      }
    }
  }

  double cost() const { return std::accumulate(d1.begin(), d1.end(), 0.0); }
};

}  // namespace

void EmbeddingSet::validate() const {
  require(dim >= 1, "EmbeddingSet: dim must be >= 1");
  for (const auto& r : records) {
    require(r.mu.size() == dim && r.log_var.size() == dim,
            "EmbeddingSet: record '" + r.id + "' does not match dim " + std::to_string(dim));
    for (std::size_t j = 0; j < dim; ++j) {
      require(std::isfinite(r.mu[j]) && std::isfinite(r.log_var[j]),
              "EmbeddingSet: record '" + r.id + "' has non-finite values");
    }
  }
}

std::vector<Vec> EmbeddingSet::means() const {
  std::vector<Vec> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.mu);
  return out;
}

double medoid_cost(std::span<const Vec> points, std::span<const std::size_t> medoids) {
  double cost = 0.0;
  for (const Vec& p : points) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : medoids) best = std::min(best, distance(p, points[m]));
    cost += best;
  }
  return cost;
}

MedoidResult k_medoids(std::span<const Vec> points, std::size_t k, std::uint64_t seed) {
  const std::size_t n = points.size();
  require(n > 0, "k_medoids: empty input");
  require(k >= 1 && k <= n, "k_medoids: k must be in [1, n]");
  const std::size_t dim = points[0].size();
  for (const Vec& p : points) require(p.size() == dim, "k_medoids: inconsistent point dimension");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = derive_stream(seed, 0);
  std::shuffle(order.begin(), order.end(), rng);

  MedoidResult result;
  std::vector<bool> is_medoid(n, false);
  Vec nearest(n, std::numeric_limits<double>::infinity());

  // BUILD
  for (std::size_t added = 0; added < k; ++added) {
    double best_gain = -1.0;
    std::size_t best = n;
    for (std::size_t c : order) {
      if (is_medoid[c]) continue;
      double gain = 0.0;
      if (added == 0) {
        for (std::size_t o = 0; o < n; ++o) gain -= distance(points[o], points[c]);
      } else {
        for (std::size_t o = 0; o < n; ++o) {
          gain += std::max(0.0, nearest[o] - distance(points[o], points[c]));
        }
      }
      if (best == n || gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    is_medoid[best] = true;
    result.medoids.push_back(best);
    for (std::size_t o = 0; o < n; ++o) {
      nearest[o] = std::min(nearest[o], distance(points[o], points[best]));
    }
  }

  Assignment assign;
  assign.compute(points, result.medoids);
  double cost = assign.cost();
  result.cost_history.push_back(cost);

  // SWAP: delta(m, c) = shared(c) + per_medoid[m], evaluated for all m in one pass over points.
  Vec per_medoid(k);
  while (true) {
    double best_delta = 0.0;
    std::size_t best_slot = k;
    std::size_t best_candidate = n;
    for (std::size_t c : order) {
      if (is_medoid[c]) continue;
      std::fill(per_medoid.begin(), per_medoid.end(), 0.0);
      double shared = 0.0;
      for (std::size_t o = 0; o < n; ++o) {
        const double d_oc = distance(points[o], points[c]);
        if (d_oc < assign.d1[o]) {
          shared += d_oc - assign.d1[o];
        } else {
          per_medoid[assign.nearest[o]] += std::min(d_oc, assign.d2[o]) - assign.d1[o];
        }
      }
      for (std::size_t m = 0; m < k; ++m) {
        const double delta = shared + per_medoid[m];
        if (delta < best_delta) {
          best_delta = delta;
          best_slot = m;
          best_candidate = c;
        }
      }
    }
    if (best_slot == k || best_delta > -1e-12 * std::max(1.0, cost)) break;
    is_medoid[result.medoids[best_slot]] = false;
    is_medoid[best_candidate] = true;
    result.medoids[best_slot] = best_candidate;
    assign.compute(points, result.medoids);
    cost = assign.cost();
    result.cost_history.push_back(cost);
    ++result.swaps;
  }
  result.cost = cost;
  return result;
}

double compute_rho(std::span<const Vec> centroids) {
  require(centroids.size() >= 2, "compute_rho: needs at least 2 centroids");
  double rho = 0.0;
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.size(); ++j) {
      if (j != i) closest = std::min(closest, distance(centroids[i], centroids[j]));
    }
    rho = std::max(rho, closest);
  }
  return rho;
}

MetricField build_metric_field(const EmbeddingSet& embeddings, std::size_t k, double lambda,
                               double tau, std::uint64_t seed) {
  embeddings.validate();
  require(!embeddings.records.empty(), "build_metric_field: no embeddings");
  require(k >= 1, "build_metric_field: k must be >= 1");
  const std::size_t n = embeddings.records.size();

  std::vector<std::size_t> selected;
  if (k >= n) {
    selected.resize(n);
    std::iota(selected.begin(), selected.end(), 0);
  } else {
    const std::vector<Vec> means = embeddings.means();
    selected = k_medoids(means, k, seed).medoids;
  }

  std::vector<Centroid> centroids;
  std::vector<Vec> positions;
  centroids.reserve(selected.size());
  for (std::size_t idx : selected) {
    const auto& r = embeddings.records[idx];
    Vec inv(r.log_var.size());
    for (std::size_t j = 0; j < inv.size(); ++j) inv[j] = std::exp(-r.log_var[j]);
    centroids.push_back({r.mu, DiagSPD(std::move(inv))});
    positions.push_back(r.mu);
  }

  double rho = 1.0;
  if (positions.size() >= 2) {
    rho = compute_rho(positions);
    require(rho > 0.0, "build_metric_field: all selected centroids coincide, rho would be 0");
  } else {
    log_warning("build_metric_field: a single centroid leaves rho undefined; using rho = 1");
  }
  return MetricField(std::move(centroids), lambda, tau, rho, embeddings.dim);
}

}  // namespace rlatent
