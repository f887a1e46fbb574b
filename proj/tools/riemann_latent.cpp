// riemann-latent: command-line front end for the whole pipeline.
//
// Machine-readable output goes only to files named by flags; progress and
// diagnostics go to stderr. Exit codes: 0 success, 1 validation or usage
// error, 2 I/O error.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rlatent/centroids.hpp"
#include "rlatent/error.hpp"
#include "rlatent/geometry.hpp"
#include "rlatent/hmc.hpp"
#include "rlatent/paths.hpp"
#include "rlatent/persistence.hpp"
#include "rlatent/toy_data.hpp"
#include "rlatent/vae.hpp"

namespace fs = std::filesystem;
using namespace rlatent;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool quiet = false;
};

void progress(const Globals& g, const std::string& message) {
  if (!g.quiet) std::cerr << message << '\n';
}

double parse_real(std::string_view text, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ValidationError(std::string(what) + ": cannot parse '" + std::string(text) + "' as a real");
  }
  return v;
}

/// "a,b,c" -> {a, b, c}
Vec parse_reals(std::string_view text, const char* what) {
  Vec out;
  while (true) {
    const std::size_t comma = text.find(',');
    out.push_back(parse_real(text.substr(0, comma), what));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%0*zu.pgm", prefix, width, i);
  return buf;
}

void write_decoded(const VaeModel& model, const std::vector<Vec>& points, const fs::path& dir,
                   const char* prefix, int width) {
  require(model.latent == points.front().size(), "decoder latent dimension does not match the points");
  ensure_directory(dir);
  for (std::size_t i = 0; i < points.size(); ++i) {
    write_pgm(dir / numbered(prefix, i, width), probability_bytes(decode(model, points[i])));
  }
}

// --- gen-data --------------------------------------------------------------

struct GenDataArgs {
  std::size_t n = 5000;
  std::string out;
  std::string images_out;
};

void cmd_gen_data(const Globals& g, const GenDataArgs& a) {
  require(a.n >= 1, "gen-data: --n must be >= 1");
  const auto images = generate_toy_dataset(a.n, g.seed);
  write_dataset(a.out, images);
  if (!a.images_out.empty()) {
    ensure_directory(a.images_out);
    for (std::size_t i = 0; i < images.size(); ++i) {
      write_pgm(fs::path(a.images_out) / numbered("image", i, 6), image_bytes(images[i]));
    }
  }
  progress(g, "gen-data: wrote " + std::to_string(images.size()) + " images to " + a.out);
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  TrainConfig config;
};

void cmd_train(const Globals& g, TrainArgs a) {
  a.config.seed = g.seed;
  a.config.validate();
  const Matrix data = to_matrix(read_dataset(a.data));
  progress(g, "train: " + std::to_string(data.rows) + " images, " + std::to_string(a.config.epochs) +
                  " epochs");
  TrainResult result = train(data, a.config, [&](std::size_t epoch, double loss) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "train: epoch %zu/%zu loss %.6f", epoch, a.config.epochs, loss);
    progress(g, buf);
  });
  write_checkpoint(a.out, Checkpoint{std::move(result.model), a.config, std::move(result.loss_history)});
}

// --- embed -----------------------------------------------------------------

struct EmbedArgs {
  std::string model;
  std::string data;
  std::string out;
};

void cmd_embed(const Globals& g, const EmbedArgs& a) {
  const Checkpoint ckpt = read_checkpoint(a.model);
  const Matrix data = to_matrix(read_dataset(a.data));
  require(data.cols == ckpt.model.input_dim, "embed: image size does not match the model input");
  write_embeddings(a.out, embed_dataset(ckpt.model, data));
  progress(g, "embed: wrote " + std::to_string(data.rows) + " embeddings to " + a.out);
}

// --- build-metric ----------------------------------------------------------

struct BuildMetricArgs {
  std::string embeddings;
  std::size_t k = 100;
  double lambda = 1e-2;
  double tau = 0.0;
  std::string out;
};

void cmd_build_metric(const Globals& g, const BuildMetricArgs& a) {
  const EmbeddingSet set = read_embeddings(a.embeddings);
  const MetricField field = build_metric_field(set, a.k, a.lambda, a.tau, g.seed);
  write_metric(a.out, field);
  progress(g, "build-metric: " + std::to_string(field.centroids().size()) + " centroids, rho " +
                  std::to_string(field.rho()));
}

// --- sample ----------------------------------------------------------------

struct SampleArgs {
  std::string metric;
  HmcConfig config;
  std::string init = "random-centroid";
  bool record_proposals = false;
  std::string out;
  std::string decode_with;
  std::string images_out;
};

void cmd_sample(const Globals& g, SampleArgs a) {
  const MetricField field = read_metric(a.metric);
  a.config.seed = g.seed;
  a.config.threads = std::max(1u, g.threads);
  a.config.record_proposals = a.record_proposals;
  if (a.init == "random-centroid") {
    a.config.init = RandomCentroidInit{};
  } else {
    a.config.init = GivenPointInit{parse_reals(a.init, "--init")};
  }
  require(a.images_out.empty() || !a.decode_with.empty(), "sample: --images-out requires --decode-with");
  std::optional<Checkpoint> ckpt;
  if (!a.decode_with.empty()) ckpt = read_checkpoint(a.decode_with);

  const SampleBatch batch = hmc_sample(field, a.config);
  write_samples(a.out, batch);
  progress(g, "sample: " + std::to_string(batch.samples.size()) + " samples, acceptance rate " +
                  std::to_string(batch.acceptance_rate));
  if (ckpt && !a.images_out.empty()) write_decoded(ckpt->model, batch.samples, a.images_out, "sample", 5);
}

// --- interpolate / geodesic ------------------------------------------------

struct PathArgs {
  std::string metric;
  std::string from;
  std::string to;
  PathConfig config;
  std::string out;
  std::string decode_with;
  std::string images_out;
};

PathRecord make_record(const MetricField& field, std::string kind, const Vec& from, const Vec& to,
                       const PathConfig& config, OptimizedPath opt) {
  PathRecord r;
  r.kind = std::move(kind);
  r.from = from;
  r.to = to;
  r.config = config;
  r.path = std::move(opt.path);
  r.energies = std::move(opt.energies);
  r.iterations = opt.iterations;
  r.converged = opt.converged;
  r.summary["potential_energy"] = path_potential_energy(field, r.path);
  r.summary["mean_potential"] = mean_potential(field, r.path);
  r.summary["riemannian_length"] = riemannian_path_length(field, r.path);
  r.summary["geodesic_energy"] = geodesic_energy(field, r.path);
  return r;
}

void cmd_path(const Globals& g, const PathArgs& a, bool geodesic) {
  const MetricField field = read_metric(a.metric);
  const Vec from = parse_reals(a.from, "--from");
  const Vec to = parse_reals(a.to, "--to");
  require(from.size() == field.dim() && to.size() == field.dim(),
          "endpoints must match the metric dimension");
  require(a.images_out.empty() || !a.decode_with.empty(), "--images-out requires --decode-with");
  a.config.validate();
  std::optional<Checkpoint> ckpt;
  if (!a.decode_with.empty()) ckpt = read_checkpoint(a.decode_with);

  OptimizedPath affine;
  affine.path = affine_interpolation(from, to, a.config.n_points);
  affine.converged = true;
  OptimizedPath optimized = geodesic ? geodesic_path(field, from, to, a.config)
                                     : minimize_potential_path(field, from, to, a.config);
  const char* kind = geodesic ? "geodesic" : "potential";
  progress(g, std::string(kind) + ": " + std::to_string(optimized.iterations) + " iterations, " +
                  (optimized.converged ? "converged" : "not converged"));

  std::vector<PathRecord> records;
  records.push_back(make_record(field, "affine", from, to, a.config, std::move(affine)));
  records.push_back(make_record(field, kind, from, to, a.config, std::move(optimized)));
  write_paths(a.out, records);
  if (ckpt && !a.images_out.empty()) {
    write_decoded(ckpt->model, records.back().path.points, a.images_out, "point", 3);
  }
}

// --- density-grid ----------------------------------------------------------

struct DensityArgs {
  std::string metric;
  std::string bounds;
  std::size_t resolution = 50;
  std::string out;
};

void cmd_density(const Globals& g, const DensityArgs& a) {
  const MetricField field = read_metric(a.metric);
  require(field.dim() == 2, "density-grid: requires a 2-D metric");
  Box2 box = default_box(field);
  if (!a.bounds.empty()) {
    const Vec b = parse_reals(a.bounds, "--bounds");
    require(b.size() == 4, "--bounds expects x_lo,x_hi,y_lo,y_hi");
    box = Box2{b[0], b[1], b[2], b[3]};
  }
  write_density_csv(a.out, density_grid(field, box, a.resolution));
  progress(g, "density-grid: " + std::to_string(a.resolution * a.resolution) + " cells");
}

// --- diagnose-pullback -----------------------------------------------------

struct PullbackArgs {
  std::string model;
  std::string embeddings;
  std::string metric;
  double beta = 1.0;
  double h = 1e-5;
  std::size_t limit = 0;
  std::string out;
};

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

void cmd_pullback(const Globals& g, const PullbackArgs& a) {
  require(std::isfinite(a.beta) && a.beta > 0.0, "diagnose-pullback: --beta must be > 0");
  require(std::isfinite(a.h) && a.h > 0.0, "diagnose-pullback: --fd-step must be > 0");
  const Checkpoint ckpt = read_checkpoint(a.model);
  const EmbeddingSet set = read_embeddings(a.embeddings);
  require(set.dim == ckpt.model.latent, "diagnose-pullback: embedding dimension does not match the model");
  std::optional<MetricField> field;
  if (!a.metric.empty()) {
    field = read_metric(a.metric);
    require(field->dim() == set.dim, "diagnose-pullback: metric dimension does not match the embeddings");
  }
  const std::size_t n = a.limit == 0 ? set.records.size() : std::min(a.limit, set.records.size());
  const std::size_t d = set.dim;

  Json records = Json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const EmbeddingRecord& rec = set.records[i];
    const Matrix jtj = pullback_metric(ckpt.model, rec.mu, a.h);
    Matrix plus_identity = jtj;
    for (std::size_t j = 0; j < d; ++j) plus_identity(j, j) += 1.0;
    Matrix scaled = plus_identity;
    for (double& v : scaled.data) v *= a.beta;
    Vec inv_cov(d);
    for (std::size_t j = 0; j < d; ++j) inv_cov[j] = std::exp(-rec.log_var[j]);
    Json entry{{"id", rec.id},
               {"mu", rec.mu},
               {"posterior_inv_cov_diag", inv_cov},
               {"pullback", matrix_json(jtj)},
               {"pullback_plus_identity", matrix_json(plus_identity)},
               {"beta_scaled", matrix_json(scaled)}};
    if (field) {
      const DiagSPD gm = metric_at(*field, rec.mu);
      entry["metric_diag"] = Vec(gm.entries().begin(), gm.entries().end());
    }
    records.push_back(std::move(entry));
  }
  write_text_file(a.out, dump_json(Json{{"beta", a.beta}, {"h", a.h}, {"records", std::move(records)}}));
  progress(g, "diagnose-pullback: " + std::to_string(n) + " records");
}

int run(int argc, char** argv) {
  CLI::App app{"Riemannian latent-space geometry for VAEs: training, metric construction, sampling "
               "and interpolation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults; explicit flags win");
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for independent HMC chains")
      ->envname("RIEMANN_LATENT_THREADS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--quiet", g.quiet, "Suppress progress messages");

  GenDataArgs gen;
  auto* c_gen = app.add_subcommand("gen-data", "Generate the disks-and-rings image dataset");
  c_gen->add_option("--n", gen.n, "Number of images")->capture_default_str();
  c_gen->add_option("--out", gen.out, "Dataset JSON")->required();
  c_gen->add_option("--images-out", gen.images_out, "Directory for one PGM per image");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train the VAE on a dataset");
  c_train->add_option("--data", tr.data, "Dataset JSON")->required();
  c_train->add_option("--epochs", tr.config.epochs)->capture_default_str();
  c_train->add_option("--beta", tr.config.beta, "Weight of the KL term")->capture_default_str();
  c_train->add_option("--latent-dim", tr.config.latent)->capture_default_str();
  c_train->add_option("--hidden", tr.config.hidden)->capture_default_str();
  c_train->add_option("--batch-size", tr.config.batch_size)->capture_default_str();
  c_train->add_option("--lr", tr.config.learning_rate)->capture_default_str();
  c_train->add_option("--out", tr.out, "Checkpoint JSON")->required();

  EmbedArgs em;
  auto* c_embed = app.add_subcommand("embed", "Encode a dataset into posterior means and log-variances");
  c_embed->add_option("--model", em.model, "Checkpoint JSON")->required();
  c_embed->add_option("--data", em.data, "Dataset JSON")->required();
  c_embed->add_option("--out", em.out, "Embeddings JSON")->required();

  BuildMetricArgs bm;
  auto* c_build = app.add_subcommand("build-metric", "Select centroids and write the metric field");
  c_build->add_option("--embeddings", bm.embeddings, "Embeddings JSON")->required();
  c_build->add_option("--k", bm.k, "Number of centroids (all points when k >= count)")
      ->capture_default_str();
  c_build->add_option("--lambda", bm.lambda)->capture_default_str();
  c_build->add_option("--tau", bm.tau)->capture_default_str();
  c_build->add_option("--out", bm.out, "Metric JSON")->required();

  SampleArgs sa;
  auto* c_sample = app.add_subcommand("sample", "Draw HMC samples from the Riemannian uniform density");
  c_sample->add_option("--metric", sa.metric, "Metric JSON")->required();
  c_sample->add_option("--n", sa.config.n_samples, "Number of samples (one chain each)")
      ->capture_default_str();
  c_sample->add_option("--chain-length", sa.config.chain_length)->capture_default_str();
  c_sample->add_option("--n-leapfrog", sa.config.n_leapfrog)->capture_default_str();
  c_sample->add_option("--step-size", sa.config.step_size)->capture_default_str();
  c_sample->add_option("--init", sa.init, "'random-centroid' or a point 'z1,z2,...'")
      ->capture_default_str();
  c_sample->add_flag("--record-proposals", sa.record_proposals, "Store every Metropolis decision");
  c_sample->add_option("--out", sa.out, "Samples JSON")->required();
  c_sample->add_option("--decode-with", sa.decode_with, "Checkpoint used to decode samples");
  c_sample->add_option("--images-out", sa.images_out, "Directory for one PGM per decoded sample");

  auto add_path_options = [](CLI::App* c, PathArgs& p) {
    c->add_option("--metric", p.metric, "Metric JSON")->required();
    c->add_option("--from", p.from, "Start point 'z1,z2,...'")->required();
    c->add_option("--to", p.to, "End point 'z1,z2,...'")->required();
    c->add_option("--points", p.config.n_points, "Points on the curve, endpoints included")
        ->capture_default_str();
    c->add_option("--alpha", p.config.smoothness, "Weight of the elastic spacing term")
        ->capture_default_str();
    c->add_option("--max-iters", p.config.max_iters)->capture_default_str();
    c->add_option("--init-step", p.config.init_step)->capture_default_str();
    c->add_option("--tolerance", p.config.tolerance)->capture_default_str();
    c->add_option("--out", p.out, "Paths JSON")->required();
    c->add_option("--decode-with", p.decode_with, "Checkpoint used to decode the optimized path");
    c->add_option("--images-out", p.images_out, "Directory for one PGM per path point");
  };
  PathArgs ip;
  auto* c_interp = app.add_subcommand("interpolate", "Potential-minimizing interpolation");
  add_path_options(c_interp, ip);
  PathArgs gp;
  auto* c_geo = app.add_subcommand("geodesic", "Discrete geodesic between two points");
  add_path_options(c_geo, gp);

  DensityArgs dg;
  auto* c_density = app.add_subcommand("density-grid", "Tabulate sqrt(det G) on a 2-D grid");
  c_density->add_option("--metric", dg.metric, "Metric JSON")->required();
  c_density->add_option("--bounds", dg.bounds, "x_lo,x_hi,y_lo,y_hi (default: centroid box +- 3 rho)");
  c_density->add_option("--resolution", dg.resolution, "Cells per axis")->capture_default_str();
  c_density->add_option("--out", dg.out, "Density CSV")->required();

  PullbackArgs pb;
  auto* c_pull = app.add_subcommand("diagnose-pullback",
                                    "Report decoder pull-back metrics at embedding means");
  c_pull->add_option("--model", pb.model, "Checkpoint JSON")->required();
  c_pull->add_option("--embeddings", pb.embeddings, "Embeddings JSON")->required();
  c_pull->add_option("--metric", pb.metric, "Optional metric JSON to report G(mu) alongside");
  c_pull->add_option("--beta", pb.beta)->capture_default_str();
  c_pull->add_option("--fd-step", pb.h, "Finite-difference step")->capture_default_str();
  c_pull->add_option("--limit", pb.limit, "Report only the first N records (0: all)")
      ->capture_default_str();
  c_pull->add_option("--out", pb.out, "Report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (c_gen->parsed()) cmd_gen_data(g, gen);
    if (c_train->parsed()) cmd_train(g, tr);
    if (c_embed->parsed()) cmd_embed(g, em);
    if (c_build->parsed()) cmd_build_metric(g, bm);
    if (c_sample->parsed()) cmd_sample(g, sa);
    if (c_interp->parsed()) cmd_path(g, ip, false);
    if (c_geo->parsed()) cmd_path(g, gp, true);
    if (c_density->parsed()) cmd_density(g, dg);
    if (c_pull->parsed()) cmd_pullback(g, pb);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
