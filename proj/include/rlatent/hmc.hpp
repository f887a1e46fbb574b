#pragma once

// Hamiltonian Monte Carlo on the Riemannian uniform density
// p(z) ∝ sqrt(det G(z)), with Euclidean kinetic energy K(v) = v^T v / 2.

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "rlatent/geometry.hpp"

namespace rlatent {

struct RandomCentroidInit {
  friend bool operator==(const RandomCentroidInit&, const RandomCentroidInit&) = default;
};

struct GivenPointInit {
  Vec point;
  friend bool operator==(const GivenPointInit&, const GivenPointInit&) = default;
};

using ChainInit = std::variant<RandomCentroidInit, GivenPointInit>;

struct HmcConfig {
  std::size_t n_samples = 1;
  std::size_t chain_length = 100;
  std::size_t n_leapfrog = 10;
  double step_size = 0.01;
  std::uint64_t seed = 0;
  ChainInit init = RandomCentroidInit{};
  /// Keep one ProposalRecord per Metropolis step (memory: n_samples * chain_length).
  bool record_proposals = false;
  /// Worker threads for independent chains. Output does not depend on it.
  unsigned threads = 1;

  void validate() const;

  friend bool operator==(const HmcConfig&, const HmcConfig&) = default;
};

struct ProposalRecord {
  std::size_t chain = 0;
  double h_start = 0.0;
  /// +infinity when the trajectory left the finite range (always rejected).
  double h_end = 0.0;
  double uniform = 0.0;
  bool accepted = false;

  friend bool operator==(const ProposalRecord&, const ProposalRecord&) = default;
};

struct ChainStats {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  /// Sum of |H_end - H_start| over proposals with finite energies.
  double sum_abs_delta_h = 0.0;
  std::size_t finite_proposals = 0;

  friend bool operator==(const ChainStats&, const ChainStats&) = default;
};

struct SampleBatch {
  std::vector<Vec> samples;
  /// Chain that produced samples[i].
  std::vector<std::size_t> chain_index;
  std::vector<ChainStats> chains;
  double acceptance_rate = 0.0;
  HmcConfig config;
  /// Empty unless config.record_proposals.
  std::vector<ProposalRecord> proposals;

  friend bool operator==(const SampleBatch&, const SampleBatch&) = default;
};

struct AcceptanceReport {
  double acceptance_rate = 0.0;
  Vec per_chain_rate;
  double mean_abs_delta_h = 0.0;
  std::size_t proposals = 0;
};

struct PhasePoint {
  Vec z;
  Vec v;
};

/// -1/2 log det G(z) + 1/2 v^T v (normalizing constant omitted).
double hamiltonian(const MetricField& field, std::span<const double> z, std::span<const double> v);

/// n_steps of half-kick / drift / half-kick with force 1/2 grad log det G.
PhasePoint leapfrog(const MetricField& field, std::span<const double> z, std::span<const double> v,
                    double eps, std::size_t n_steps);

/// One independent chain of config.chain_length Metropolis-corrected leapfrog
/// proposals per requested sample; each sample is its chain's final state.
SampleBatch hmc_sample(const MetricField& field, const HmcConfig& config);

/// Diagnostic mode: one long chain, discarding burn_in states and keeping
/// every thin-th state afterwards until config.n_samples are collected.
SampleBatch hmc_single_chain(const MetricField& field, const HmcConfig& config,
                             std::size_t burn_in = 50, std::size_t thin = 1);

AcceptanceReport acceptance_diagnostics(const SampleBatch& batch);

}  // namespace rlatent
