#include "rlatent/vae.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "rlatent/error.hpp"
#include "rlatent/simd/kernels.hpp"

namespace rlatent {

namespace {

/// Y = X W^T + b, one output row per input row.
void forward_layer(const Matrix& x, const Dense& layer, Matrix& y) {
  const auto& kern = simd::active();
  y = Matrix(x.rows, layer.out);
  const std::size_t in = layer.in;
  double tmp[4];
  std::size_t o = 0;
  for (; o + 4 <= layer.out; o += 4) {
    const double* w = layer.weight.data() + o * in;
    for (std::size_t b = 0; b < x.rows; ++b) {
      kern.dot4(w, in, x.row(b).data(), in, tmp);
      double* out = y.row(b).data() + o;
      for (int r = 0; r < 4; ++r) out[r] = tmp[r] + layer.bias[o + r];
    }
  }
  for (; o < layer.out; ++o) {
    const double* w = layer.weight.data() + o * in;
    for (std::size_t b = 0; b < x.rows; ++b) {
      y(b, o) = kern.dot(w, x.row(b).data(), in) + layer.bias[o];
    }
  }
}

/// grad.W += dY^T X, grad.b += column sums of dY.
void accumulate_weight_grad(const Matrix& dy, const Matrix& x, Dense& grad) {
  const auto& kern = simd::active();
  for (std::size_t o = 0; o < grad.out; ++o) {
    double* gw = grad.weight.data() + o * grad.in;
    double gb = 0.0;
    for (std::size_t b = 0; b < dy.rows; ++b) {
      const double c = dy(b, o);
      if (c == 0.0) continue;
      kern.axpy(c, x.row(b).data(), gw, grad.in);
      gb += c;
    }
    grad.bias[o] += gb;
  }
}

/// dX = dY W
void backprop_input(const Matrix& dy, const Dense& layer, Matrix& dx) {
  const auto& kern = simd::active();
  dx = Matrix(dy.rows, layer.in);
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double* w = layer.weight.data() + o * layer.in;
    for (std::size_t b = 0; b < dy.rows; ++b) {
      const double c = dy(b, o);
      if (c != 0.0) kern.axpy(c, w, dx.row(b).data(), layer.in);
    }
  }
}

void apply_tanh(Matrix& m) {
  for (double& v : m.data) v = std::tanh(v);
}

double logistic(double l) { return 1.0 / (1.0 + std::exp(-l)); }

Matrix row_matrix(std::span<const double> v) {
  Matrix m(1, v.size());
  std::copy(v.begin(), v.end(), m.data.begin());
  return m;
}

struct Forward {
  Matrix h1, mu, log_var, z, h2, prob;
};

void run_forward(const VaeModel& model, const Matrix& batch, const Matrix& noise, Forward& f) {
  forward_layer(batch, model.enc_hidden, f.h1);
  apply_tanh(f.h1);
  forward_layer(f.h1, model.enc_mu, f.mu);
  forward_layer(f.h1, model.enc_log_var, f.log_var);
  f.z = Matrix(batch.rows, model.latent);
  for (std::size_t i = 0; i < f.z.data.size(); ++i) {
    f.z.data[i] = f.mu.data[i] + std::exp(0.5 * f.log_var.data[i]) * noise.data[i];
  }
  forward_layer(f.z, model.dec_hidden, f.h2);
  apply_tanh(f.h2);
  forward_layer(f.h2, model.dec_out, f.prob);
  for (double& v : f.prob.data) v = logistic(v);
}

void check_batch(const VaeModel& model, const Matrix& batch, const Matrix& noise) {
  require(batch.rows > 0, "vae: empty batch");
  require(batch.cols == model.input_dim, "vae: batch width does not match the model input");
  require(noise.rows == batch.rows && noise.cols == model.latent,
          "vae: noise must have one latent-sized row per example");
}

ElboTerms batch_terms(const Forward& f, const Matrix& batch, double beta) {
  ElboTerms t;
  for (std::size_t b = 0; b < batch.rows; ++b) {
    t.rec += bernoulli_reconstruction(batch.row(b), f.prob.row(b));
    t.kl += gaussian_kl(f.mu.row(b), f.log_var.row(b));
  }
  t.rec /= double(batch.rows);
  t.kl /= double(batch.rows);
  t.loss = t.rec + beta * t.kl;
  return t;
}

Dense glorot_layer(std::size_t in, std::size_t out, Rng& rng) {
  Dense layer(in, out);
  const double limit = std::sqrt(6.0 / double(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& w : layer.weight) w = dist(rng);
  return layer;
}

void check_layer(const Dense& layer, std::size_t in, std::size_t out, const char* name) {
  require(layer.in == in && layer.out == out && layer.weight.size() == in * out &&
              layer.bias.size() == out,
          std::string("VaeModel: layer ") + name + " has inconsistent shape");
  for (double w : layer.weight) require(std::isfinite(w), std::string("VaeModel: non-finite weight in ") + name);
  for (double w : layer.bias) require(std::isfinite(w), std::string("VaeModel: non-finite bias in ") + name);
}

}  // namespace

VaeModel VaeModel::zeros(std::size_t input_dim, std::size_t hidden, std::size_t latent) {
  require(input_dim >= 1 && hidden >= 1 && latent >= 1, "VaeModel: dimensions must be >= 1");
  VaeModel m;
  m.input_dim = input_dim;
  m.hidden = hidden;
  m.latent = latent;
  m.enc_hidden = Dense(input_dim, hidden);
  m.enc_mu = Dense(hidden, latent);
  m.enc_log_var = Dense(hidden, latent);
  m.dec_hidden = Dense(latent, hidden);
  m.dec_out = Dense(hidden, input_dim);
  return m;
}

VaeModel VaeModel::glorot(std::size_t input_dim, std::size_t hidden, std::size_t latent,
                          std::uint64_t seed) {
  VaeModel m = zeros(input_dim, hidden, latent);
  m.seed = seed;
  Rng rng = derive_stream(seed, 0x1417);
  m.enc_hidden = glorot_layer(input_dim, hidden, rng);
  m.enc_mu = glorot_layer(hidden, latent, rng);
  m.enc_log_var = glorot_layer(hidden, latent, rng);
  m.dec_hidden = glorot_layer(latent, hidden, rng);
  m.dec_out = glorot_layer(hidden, input_dim, rng);
  return m;
}

void VaeModel::validate() const {
  require(input_dim >= 1 && hidden >= 1 && latent >= 1, "VaeModel: dimensions must be >= 1");
  check_layer(enc_hidden, input_dim, hidden, "enc_hidden");
  check_layer(enc_mu, hidden, latent, "enc_mu");
  check_layer(enc_log_var, hidden, latent, "enc_log_var");
  check_layer(dec_hidden, latent, hidden, "dec_hidden");
  check_layer(dec_out, hidden, input_dim, "dec_out");
}

std::array<Vec*, 10> VaeModel::blocks() {
  return {&enc_hidden.weight, &enc_hidden.bias, &enc_mu.weight,     &enc_mu.bias,
          &enc_log_var.weight, &enc_log_var.bias, &dec_hidden.weight, &dec_hidden.bias,
          &dec_out.weight,    &dec_out.bias};
}

std::array<const Vec*, 10> VaeModel::blocks() const {
  return {&enc_hidden.weight, &enc_hidden.bias, &enc_mu.weight,     &enc_mu.bias,
          &enc_log_var.weight, &enc_log_var.bias, &dec_hidden.weight, &dec_hidden.bias,
          &dec_out.weight,    &dec_out.bias};
}

Encoding encode(const VaeModel& model, std::span<const double> x) {
  require(x.size() == model.input_dim, "encode: input size does not match the model");
  Matrix h1, mu, log_var;
  forward_layer(row_matrix(x), model.enc_hidden, h1);
  apply_tanh(h1);
  forward_layer(h1, model.enc_mu, mu);
  forward_layer(h1, model.enc_log_var, log_var);
  return {std::move(mu.data), std::move(log_var.data)};
}

Vec decode(const VaeModel& model, std::span<const double> z) {
  require(z.size() == model.latent, "decode: latent size does not match the model");
  Matrix h2, out;
  forward_layer(row_matrix(z), model.dec_hidden, h2);
  apply_tanh(h2);
  forward_layer(h2, model.dec_out, out);
  for (double& v : out.data) v = logistic(v);
  return std::move(out.data);
}

Vec reparam_with_noise(std::span<const double> mu, std::span<const double> log_var,
                       std::span<const double> eps) {
  require(mu.size() == log_var.size() && mu.size() == eps.size(),
          "reparam: mu, log_var and noise must share a dimension");
  Vec z(mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = mu[i] + std::exp(0.5 * log_var[i]) * eps[i];
  return z;
}

Vec reparam_sample(std::span<const double> mu, std::span<const double> log_var, Rng& rng) {
  Vec eps(mu.size());
  for (double& e : eps) e = standard_normal(rng);
  return reparam_with_noise(mu, log_var, eps);
}

double bernoulli_reconstruction(std::span<const double> x, std::span<const double> p) {
  require(x.size() == p.size(), "bernoulli_reconstruction: size mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double q = std::clamp(p[j], kProbClamp, 1.0 - kProbClamp);
    s -= x[j] * std::log(q) + (1.0 - x[j]) * std::log(1.0 - q);
  }
  return s;
}

double gaussian_kl(std::span<const double> mu, std::span<const double> log_var) {
  require(mu.size() == log_var.size(), "gaussian_kl: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    s += mu[i] * mu[i] + std::exp(log_var[i]) - 1.0 - log_var[i];
  }
  return 0.5 * s;
}

ElboTerms elbo_terms(const VaeModel& model, std::span<const double> x, std::span<const double> z,
                     double beta) {
  require(beta >= 0.0, "elbo_terms: beta must be >= 0");
  const Encoding enc = encode(model, x);
  ElboTerms t;
  t.rec = bernoulli_reconstruction(x, decode(model, z));
  t.kl = gaussian_kl(enc.mu, enc.log_var);
  t.loss = t.rec + beta * t.kl;
  return t;
}

ElboTerms batch_loss(const VaeModel& model, const Matrix& batch, double beta, const Matrix& noise) {
  check_batch(model, batch, noise);
  Forward f;
  run_forward(model, batch, noise, f);
  return batch_terms(f, batch, beta);
}

VaeGradients backprop_grads(const VaeModel& model, const Matrix& batch, double beta,
                            const Matrix& noise, ElboTerms* loss) {
  check_batch(model, batch, noise);
  require(beta >= 0.0, "backprop_grads: beta must be >= 0");
  Forward f;
  run_forward(model, batch, noise, f);
  if (loss != nullptr) *loss = batch_terms(f, batch, beta);

  const double scale = 1.0 / double(batch.rows);
  VaeGradients g = VaeModel::zeros(model.input_dim, model.hidden, model.latent);

  // d loss / d logits = (p - x) / B
  Matrix d_logits(batch.rows, model.input_dim);
  for (std::size_t i = 0; i < d_logits.data.size(); ++i) {
    d_logits.data[i] = (f.prob.data[i] - batch.data[i]) * scale;
  }
  accumulate_weight_grad(d_logits, f.h2, g.dec_out);
  Matrix d_h2;
  backprop_input(d_logits, model.dec_out, d_h2);
  for (std::size_t i = 0; i < d_h2.data.size(); ++i) {
    d_h2.data[i] *= 1.0 - f.h2.data[i] * f.h2.data[i];
  }
  accumulate_weight_grad(d_h2, f.z, g.dec_hidden);
  Matrix d_z;
  backprop_input(d_h2, model.dec_hidden, d_z);

  Matrix d_mu(batch.rows, model.latent);
  Matrix d_log_var(batch.rows, model.latent);
  for (std::size_t i = 0; i < d_mu.data.size(); ++i) {
    const double lv = f.log_var.data[i];
    const double sigma = std::exp(0.5 * lv);
    d_mu.data[i] = d_z.data[i] + beta * f.mu.data[i] * scale;
    d_log_var.data[i] =
        d_z.data[i] * noise.data[i] * 0.5 * sigma + beta * 0.5 * (sigma * sigma - 1.0) * scale;
  }
  accumulate_weight_grad(d_mu, f.h1, g.enc_mu);
  accumulate_weight_grad(d_log_var, f.h1, g.enc_log_var);
  Matrix d_h1, d_h1_lv;
  backprop_input(d_mu, model.enc_mu, d_h1);
  backprop_input(d_log_var, model.enc_log_var, d_h1_lv);
  for (std::size_t i = 0; i < d_h1.data.size(); ++i) {
    d_h1.data[i] = (d_h1.data[i] + d_h1_lv.data[i]) * (1.0 - f.h1.data[i] * f.h1.data[i]);
  }
  accumulate_weight_grad(d_h1, batch, g.enc_hidden);
  return g;
}

VaeGradients backprop_grads(const VaeModel& model, const Matrix& batch, double beta, Rng& rng,
                            ElboTerms* loss) {
  Matrix noise(batch.rows, model.latent);
  for (double& e : noise.data) e = standard_normal(rng);
  return backprop_grads(model, batch, beta, noise, loss);
}

void TrainConfig::validate() const {
  require(epochs >= 1, "TrainConfig: epochs must be >= 1");
  require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
  require(std::isfinite(learning_rate) && learning_rate > 0.0,
          "TrainConfig: learning_rate must be > 0");
  require(std::isfinite(beta) && beta >= 0.0, "TrainConfig: beta must be >= 0");
  require(hidden >= 1 && latent >= 1, "TrainConfig: hidden and latent must be >= 1");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 &&
              adam_eps > 0.0,
          "TrainConfig: invalid Adam constants");
}

TrainResult train(const Matrix& data, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  require(data.rows > 0, "train: empty dataset");
  TrainResult result;
  result.model = VaeModel::glorot(data.cols, config.hidden, config.latent, config.seed);
  VaeModel& model = result.model;

  VaeModel first_moment = VaeModel::zeros(data.cols, config.hidden, config.latent);
  VaeModel second_moment = first_moment;
  auto params = model.blocks();
  auto m_blocks = first_moment.blocks();
  auto v_blocks = second_moment.blocks();

  Rng rng = derive_stream(config.seed, 0x7a11);
  std::vector<std::size_t> order(data.rows);
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  Matrix batch;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < data.rows; start += config.batch_size) {
      const std::size_t rows = std::min(config.batch_size, data.rows - start);
      batch = Matrix(rows, data.cols);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto src = data.row(order[start + r]);
        std::copy(src.begin(), src.end(), batch.row(r).begin());
      }
      ElboTerms terms;
      VaeGradients grad = backprop_grads(model, batch, config.beta, rng, &terms);
      if (!std::isfinite(terms.loss)) {
        throw ValidationError("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                              ", batch starting at " + std::to_string(start));
      }
      loss_sum += terms.loss * double(rows);
      seen += rows;

      ++step;
      const double bias1 = 1.0 - std::pow(config.adam_beta1, double(step));
      const double bias2 = 1.0 - std::pow(config.adam_beta2, double(step));
      auto g_blocks = grad.blocks();
      for (std::size_t blk = 0; blk < params.size(); ++blk) {
        Vec& p = *params[blk];
        Vec& m = *m_blocks[blk];
        Vec& v = *v_blocks[blk];
        const Vec& g = *g_blocks[blk];
        for (std::size_t i = 0; i < p.size(); ++i) {
          m[i] = config.adam_beta1 * m[i] + (1.0 - config.adam_beta1) * g[i];
          v[i] = config.adam_beta2 * v[i] + (1.0 - config.adam_beta2) * g[i] * g[i];
          const double m_hat = m[i] / bias1;
          const double v_hat = v[i] / bias2;
          p[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
        }
      }
    }
    const double mean_loss = loss_sum / double(seen);
    result.loss_history.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch + 1, mean_loss);
  }
  return result;
}

EmbeddingSet embed_dataset(const VaeModel& model, const Matrix& data) {
  require(data.cols == model.input_dim, "embed_dataset: data width does not match the model");
  EmbeddingSet set;
  set.dim = model.latent;
  set.records.reserve(data.rows);
  char id[32];
  for (std::size_t i = 0; i < data.rows; ++i) {
    Encoding enc = encode(model, data.row(i));
    std::snprintf(id, sizeof(id), "img-%06zu", i);
    set.records.push_back({id, std::move(enc.mu), std::move(enc.log_var)});
  }
  return set;
}

Matrix decoder_jacobian(const LatentMap& decoder, std::span<const double> z, double h) {
  require(std::isfinite(h) && h > 0.0, "decoder_jacobian: h must be > 0");
  Vec zp(z.begin(), z.end());
  Vec zm(z.begin(), z.end());
  Matrix jac;
  for (std::size_t j = 0; j < z.size(); ++j) {
    zp[j] = z[j] + h;
    zm[j] = z[j] - h;
    const Vec up = decoder(zp);
    const Vec down = decoder(zm);
    zp[j] = z[j];
    zm[j] = z[j];
    if (j == 0) jac = Matrix(up.size(), z.size());
    require(up.size() == jac.rows && down.size() == jac.rows,
            "decoder_jacobian: decoder output size changed");
    for (std::size_t r = 0; r < jac.rows; ++r) jac(r, j) = (up[r] - down[r]) / (2.0 * h);
  }
  return jac;
}

Matrix decoder_jacobian(const VaeModel& model, std::span<const double> z, double h) {
  return decoder_jacobian([&](std::span<const double> p) { return decode(model, p); }, z, h);
}

Matrix pullback_metric(const Matrix& jacobian) {
  const std::size_t d = jacobian.cols;
  Matrix g(d, d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      double s = 0.0;
      for (std::size_t r = 0; r < jacobian.rows; ++r) s += jacobian(r, a) * jacobian(r, b);
      g(a, b) = s;
      g(b, a) = s;
    }
  }
  return g;
}

Matrix pullback_metric(const VaeModel& model, std::span<const double> z, double h) {
  return pullback_metric(decoder_jacobian(model, z, h));
}

}  // namespace rlatent
