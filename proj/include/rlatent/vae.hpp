#pragma once

// Two-layer MLP variational autoencoder with tanh hidden units, a Bernoulli
// (logistic) decoder and hand-written reverse-mode gradients.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rlatent/centroids.hpp"
#include "rlatent/matrix.hpp"
#include "rlatent/random.hpp"

namespace rlatent {

/// Affine layer y = W x + b with W stored row-major (out x in).
struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  Vec weight;
  Vec bias;

  Dense() = default;
  Dense(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weight(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

  friend bool operator==(const Dense&, const Dense&) = default;
};

struct VaeModel {
  std::size_t input_dim = 1024;
  std::size_t hidden = 400;
  std::size_t latent = 2;
  Dense enc_hidden;
  Dense enc_mu;
  Dense enc_log_var;
  Dense dec_hidden;
  Dense dec_out;
  std::uint64_t seed = 0;

  /// All-zero weights with consistent shapes.
  static VaeModel zeros(std::size_t input_dim, std::size_t hidden, std::size_t latent);
  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static VaeModel glorot(std::size_t input_dim, std::size_t hidden, std::size_t latent,
                         std::uint64_t seed);

  void validate() const;

  /// Weight and bias vectors of every layer, in a fixed order.
  std::array<Vec*, 10> blocks();
  std::array<const Vec*, 10> blocks() const;

  friend bool operator==(const VaeModel&, const VaeModel&) = default;
};

/// Gradients share the model's layout.
using VaeGradients = VaeModel;

struct Encoding {
  Vec mu;
  Vec log_var;
};

Encoding encode(const VaeModel& model, std::span<const double> x);

/// Pixel probabilities, strictly inside (0, 1) for finite input.
Vec decode(const VaeModel& model, std::span<const double> z);

/// z = mu + exp(log_var / 2) * eps, eps ~ N(0, I) drawn from rng.
Vec reparam_sample(std::span<const double> mu, std::span<const double> log_var, Rng& rng);
Vec reparam_with_noise(std::span<const double> mu, std::span<const double> log_var,
                       std::span<const double> eps);

struct ElboTerms {
  double loss = 0.0;
  double rec = 0.0;
  double kl = 0.0;
};

inline constexpr double kProbClamp = 1e-7;

/// Binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
double bernoulli_reconstruction(std::span<const double> x, std::span<const double> p);

/// KL(N(mu, diag exp(log_var)) || N(0, I)).
double gaussian_kl(std::span<const double> mu, std::span<const double> log_var);

/// rec = BCE(x, decode(z)), kl from encode(x); loss = rec + beta * kl.
ElboTerms elbo_terms(const VaeModel& model, std::span<const double> x, std::span<const double> z,
                     double beta);

/// Mean per-example terms over a batch with fixed reparametrization noise
/// (one row of `noise` per example).
ElboTerms batch_loss(const VaeModel& model, const Matrix& batch, double beta, const Matrix& noise);

/// Gradient of batch_loss(...).loss. Where the logistic output is clamped the
/// reconstruction gradient is taken as p - x, the unclamped value.
VaeGradients backprop_grads(const VaeModel& model, const Matrix& batch, double beta,
                            const Matrix& noise, ElboTerms* loss = nullptr);

/// Same, drawing one noise vector per example from rng.
VaeGradients backprop_grads(const VaeModel& model, const Matrix& batch, double beta, Rng& rng,
                            ElboTerms* loss = nullptr);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  double beta = 1.0;
  std::uint64_t seed = 0;
  std::size_t hidden = 400;
  std::size_t latent = 2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

struct TrainResult {
  VaeModel model;
  /// Mean training loss of each epoch.
  Vec loss_history;
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Adam on shuffled mini-batches. Throws ValidationError if the loss becomes
/// non-finite.
TrainResult train(const Matrix& data, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// One record per row, ids "img-000000", "img-000001", ...
EmbeddingSet embed_dataset(const VaeModel& model, const Matrix& data);

using LatentMap = std::function<Vec(std::span<const double>)>;

/// Central-difference Jacobian (rows: outputs, cols: latent axes).
Matrix decoder_jacobian(const LatentMap& decoder, std::span<const double> z, double h = 1e-5);
Matrix decoder_jacobian(const VaeModel& model, std::span<const double> z, double h = 1e-5);

/// J^T J
Matrix pullback_metric(const Matrix& jacobian);
Matrix pullback_metric(const VaeModel& model, std::span<const double> z, double h = 1e-5);

}  // namespace rlatent
