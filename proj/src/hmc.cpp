#include "rlatent/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "rlatent/error.hpp"
#include "rlatent/random.hpp"

namespace rlatent {

namespace {

double half_squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return 0.5 * s;
}

/// Position, log det G and the force 1/2 grad log det G at that position.
struct State {
  Vec z;
  Vec force;
  double log_det = 0.0;

  void evaluate(const MetricField& field) {
    log_det = log_det_with_grad(field, z, force);
    for (double& f : force) f *= 0.5;
  }
};

/// Integrates in place. Returns false as soon as a non-finite value appears.
bool integrate(const MetricField& field, State& s, Vec& v, double eps, std::size_t n_steps) {
  const std::size_t d = s.z.size();
  const double half = 0.5 * eps;
  for (std::size_t step = 0; step < n_steps; ++step) {
    for (std::size_t j = 0; j < d; ++j) v[j] += half * s.force[j];
    for (std::size_t j = 0; j < d; ++j) s.z[j] += eps * v[j];
    s.evaluate(field);
    for (std::size_t j = 0; j < d; ++j) v[j] += half * s.force[j];
    if (!std::isfinite(s.log_det)) return false;
  }
  return true;
}

class Chain {
 public:
  Chain(const MetricField& field, const HmcConfig& config, std::size_t index)
      : field_(field), config_(config), index_(index), rng_(derive_stream(config.seed, index)) {
    state_.force.resize(field.dim());
    if (const auto* given = std::get_if<GivenPointInit>(&config.init)) {
      state_.z = given->point;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, field.size() - 1);
      state_.z = field.centroids()[pick(rng_)].mu;
    }
    state_.evaluate(field_);
    trial_.force.resize(field.dim());
    v_.resize(field.dim());
  }

  void step(std::vector<ProposalRecord>* log) {
    for (double& x : v_) x = standard_normal(rng_);
    const double h_start = -0.5 * state_.log_det + half_squared_norm(v_);

    trial_.z = state_.z;
    trial_.force = state_.force;
    trial_.log_det = state_.log_det;
    const bool finite =
        integrate(field_, trial_, v_, config_.step_size, config_.n_leapfrog);
    const double h_end = -0.5 * trial_.log_det + half_squared_norm(v_);
    const double u = uniform01(rng_);

    const bool ok = finite && std::isfinite(h_end);
    const bool accepted = ok && u < std::exp(h_start - h_end);
    ++stats_.proposals;
    if (ok) {
      stats_.sum_abs_delta_h += std::abs(h_end - h_start);
      ++stats_.finite_proposals;
    }
    if (accepted) {
      ++stats_.accepted;
      std::swap(state_, trial_);
    }
    if (log != nullptr) {
      const double logged_end = ok ? h_end : std::numeric_limits<double>::infinity();
      log->push_back({index_, h_start, logged_end, u, accepted});
    }
  }

  const Vec& position() const { return state_.z; }
  const ChainStats& stats() const { return stats_; }

 private:
  const MetricField& field_;
  const HmcConfig& config_;
  std::size_t index_;
  Rng rng_;
  State state_;
  State trial_;
  Vec v_;
  ChainStats stats_;
};

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, unsigned(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
}

void check_init(const MetricField& field, const HmcConfig& config) {
  config.validate();
  if (const auto* given = std::get_if<GivenPointInit>(&config.init)) {
    require(given->point.size() == field.dim(),
            "hmc: initial point dimension does not match the metric field");
  } else {
    require(field.size() > 0, "hmc: random-centroid initialization needs at least one centroid");
  }
}

double overall_rate(const std::vector<ChainStats>& chains) {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  for (const auto& c : chains) {
    proposals += c.proposals;
    accepted += c.accepted;
  }
  return proposals == 0 ? 0.0 : double(accepted) / double(proposals);
}

}  // namespace

void HmcConfig::validate() const {
  require(n_samples >= 1, "hmc: n_samples must be >= 1");
  require(chain_length >= 1, "hmc: chain_length must be >= 1");
  require(n_leapfrog >= 1, "hmc: n_leapfrog must be >= 1");
  require(std::isfinite(step_size) && step_size >= 0.0, "hmc: step_size must be >= 0");
  if (const auto* given = std::get_if<GivenPointInit>(&init)) {
    for (double x : given->point) require(std::isfinite(x), "hmc: initial point must be finite");
  }
}

double hamiltonian(const MetricField& field, std::span<const double> z,
                   std::span<const double> v) {
  require(v.size() == field.dim(), "hamiltonian: velocity dimension mismatch");
  return -0.5 * log_det_metric(field, z) + half_squared_norm(v);
}

PhasePoint leapfrog(const MetricField& field, std::span<const double> z, std::span<const double> v,
                    double eps, std::size_t n_steps) {
  require(z.size() == field.dim() && v.size() == field.dim(), "leapfrog: dimension mismatch");
  require(eps >= 0.0, "leapfrog: eps must be >= 0");
  State s;
  s.z.assign(z.begin(), z.end());
  s.force.resize(field.dim());
  s.evaluate(field);
  Vec vel(v.begin(), v.end());
  integrate(field, s, vel, eps, n_steps);
  return {std::move(s.z), std::move(vel)};
}

SampleBatch hmc_sample(const MetricField& field, const HmcConfig& config) {
  check_init(field, config);
  const std::size_t n = config.n_samples;
  SampleBatch batch;
  batch.config = config;
  batch.samples.resize(n);
  batch.chain_index.resize(n);
  batch.chains.resize(n);
  std::vector<std::vector<ProposalRecord>> logs(config.record_proposals ? n : 0);

  parallel_for(n, config.threads, [&](std::size_t c) {
    Chain chain(field, config, c);
    std::vector<ProposalRecord>* log = nullptr;
    if (config.record_proposals) {
      logs[c].reserve(config.chain_length);
      log = &logs[c];
    }
    for (std::size_t i = 0; i < config.chain_length; ++i) chain.step(log);
    batch.samples[c] = chain.position();
    batch.chain_index[c] = c;
    batch.chains[c] = chain.stats();
  });

  for (auto& log : logs) batch.proposals.insert(batch.proposals.end(), log.begin(), log.end());
  batch.acceptance_rate = overall_rate(batch.chains);
  return batch;
}

SampleBatch hmc_single_chain(const MetricField& field, const HmcConfig& config,
                             std::size_t burn_in, std::size_t thin) {
  check_init(field, config);
  require(thin >= 1, "hmc_single_chain: thin must be >= 1");
  SampleBatch batch;
  batch.config = config;
  std::vector<ProposalRecord>* log = config.record_proposals ? &batch.proposals : nullptr;
  Chain chain(field, config, 0);
  for (std::size_t i = 0; i < burn_in; ++i) chain.step(log);
  while (batch.samples.size() < config.n_samples) {
    for (std::size_t i = 0; i < thin; ++i) chain.step(log);
    batch.samples.push_back(chain.position());
    batch.chain_index.push_back(0);
  }
  batch.chains.push_back(chain.stats());
  batch.acceptance_rate = overall_rate(batch.chains);
  return batch;
}

AcceptanceReport acceptance_diagnostics(const SampleBatch& batch) {
  require(!batch.chains.empty(), "acceptance_diagnostics: empty batch");
  AcceptanceReport report;
  double sum_abs = 0.0;
  std::size_t finite = 0;
  for (const auto& c : batch.chains) {
    report.per_chain_rate.push_back(c.proposals == 0 ? 0.0
                                                     : double(c.accepted) / double(c.proposals));
    report.proposals += c.proposals;
    sum_abs += c.sum_abs_delta_h;
    finite += c.finite_proposals;
  }
  report.acceptance_rate = overall_rate(batch.chains);
  report.mean_abs_delta_h = finite == 0 ? 0.0 : sum_abs / double(finite);
  return report;
}

}  // namespace rlatent
