#include "rlatent/persistence.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rlatent/error.hpp"

namespace rlatent {

namespace {

void append_real(std::string& out, double v) {
  if (!std::isfinite(v)) throw ValidationError("cannot serialize a non-finite real");
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

bool is_scalar(const Json& j) { return !j.is_array() && !j.is_object(); }

void emit(std::string& out, const Json& j, int depth) {
  const std::string pad(std::size_t(depth + 1) * 2, ' ');
  const std::string close_pad(std::size_t(depth) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::number_float:
      append_real(out, j.get<double>());
      return;
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return is_scalar(e); });
      out += '[';
      bool first = true;
      for (const Json& e : j) {
        if (!first) out += flat ? ", " : ",";
        if (!flat) out += "\n" + pad;
        emit(out, e, depth + 1);
        first = false;
      }
      if (!flat) out += "\n" + close_pad;
      out += ']';
      return;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        out += "\n" + pad + Json(it.key()).dump() + ": ";
        emit(out, it.value(), depth + 1);
        first = false;
      }
      out += "\n" + close_pad + '}';
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw ValidationError("expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'");
  return *it;
}

double real_value(const Json& j, const char* what) {
  if (!j.is_number()) throw ValidationError(std::string(what) + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": non-finite number");
  return v;
}

double real(const Json& j, const char* key) { return real_value(field(j, key), key); }

std::uint64_t unsigned_int(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ValidationError(std::string(key) + ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool boolean(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_boolean()) throw ValidationError(std::string(key) + ": expected a boolean");
  return v.get<bool>();
}

std::string string_value(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) throw ValidationError(std::string(key) + ": expected a string");
  return v.get<std::string>();
}

Vec real_array(const Json& j, const char* what) {
  if (!j.is_array()) throw ValidationError(std::string(what) + ": expected an array");
  Vec out;
  out.reserve(j.size());
  for (const Json& e : j) out.push_back(real_value(e, what));
  return out;
}

Vec reals(const Json& j, const char* key) { return real_array(field(j, key), key); }

Json real_json(const Vec& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

std::vector<Vec> point_list(const Json& j, const char* key, std::size_t dim) {
  const Json& arr = field(j, key);
  if (!arr.is_array()) throw ValidationError(std::string(key) + ": expected an array");
  std::vector<Vec> out;
  out.reserve(arr.size());
  for (const Json& p : arr) {
    Vec v = real_array(p, key);
    if (v.size() != dim) throw ValidationError(std::string(key) + ": point dimension mismatch");
    out.push_back(std::move(v));
  }
  return out;
}

template <class Fn>
auto guarded(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed JSON content: ") + e.what());
  }
}

Json dense_to_json(const Dense& d) {
  Json w = Json::array();
  for (std::size_t o = 0; o < d.out; ++o) {
    Json row = Json::array();
    for (std::size_t i = 0; i < d.in; ++i) row.push_back(d.weight[o * d.in + i]);
    w.push_back(std::move(row));
  }
  return Json{{"weight", std::move(w)}, {"bias", real_json(d.bias)}};
}

Dense dense_from_json(const Json& j, std::size_t in, std::size_t out, const char* name) {
  Dense d(in, out);
  const Json& w = field(j, "weight");
  if (!w.is_array() || w.size() != out) {
    throw ValidationError(std::string("layer ") + name + ": weight must have " +
                          std::to_string(out) + " rows");
  }
  for (std::size_t o = 0; o < out; ++o) {
    const Vec row = real_array(w[o], name);
    if (row.size() != in) {
      throw ValidationError(std::string("layer ") + name + ": weight rows must have " +
                            std::to_string(in) + " columns");
    }
    std::copy(row.begin(), row.end(), d.weight.begin() + std::ptrdiff_t(o * in));
  }
  d.bias = reals(j, "bias");
  if (d.bias.size() != out) throw ValidationError(std::string("layer ") + name + ": bias size mismatch");
  return d;
}

Json path_config_to_json(const PathConfig& c) {
  return Json{{"n_points", c.n_points},   {"max_iters", c.max_iters}, {"init_step", c.init_step},
              {"smoothness", c.smoothness}, {"tolerance", c.tolerance}};
}

PathConfig path_config_from_json(const Json& j) {
  PathConfig c;
  c.n_points = unsigned_int(j, "n_points");
  c.max_iters = unsigned_int(j, "max_iters");
  c.init_step = real(j, "init_step");
  c.smoothness = real(j, "smoothness");
  c.tolerance = real(j, "tolerance");
  c.validate();
  return c;
}

}  // namespace

std::string dump_json(const Json& value) {
  std::string out;
  emit(out, value, 0);
  out += '\n';
  return out;
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), std::streamsize(contents.size()));
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// --- embeddings ------------------------------------------------------------

Json embeddings_to_json(const EmbeddingSet& set) {
  set.validate();
  Json records = Json::array();
  for (const auto& r : set.records) {
    records.push_back(Json{{"id", r.id}, {"mu", real_json(r.mu)}, {"log_var", real_json(r.log_var)}});
  }
  return Json{{"dim", set.dim}, {"records", std::move(records)}};
}

EmbeddingSet embeddings_from_json(const Json& j) {
  return guarded([&] {
    EmbeddingSet set;
    set.dim = unsigned_int(j, "dim");
    const Json& records = field(j, "records");
    if (!records.is_array()) throw ValidationError("records: expected an array");
    for (const Json& r : records) {
      set.records.push_back({string_value(r, "id"), reals(r, "mu"), reals(r, "log_var")});
    }
    set.validate();
    return set;
  });
}

void write_embeddings(const fs::path& path, const EmbeddingSet& set) {
  write_text_file(path, dump_json(embeddings_to_json(set)));
}

EmbeddingSet read_embeddings(const fs::path& path) {
  return embeddings_from_json(parse_json(read_text_file(path)));
}

// --- metric field ----------------------------------------------------------

Json metric_to_json(const MetricField& f) {
  Json centroids = Json::array();
  for (const auto& c : f.centroids()) {
    centroids.push_back(Json{{"mu", real_json(c.mu)},
                             {"inv_cov_diag", real_json(Vec(c.inv_cov.entries().begin(),
                                                            c.inv_cov.entries().end()))}});
  }
  return Json{{"dim", f.dim()},   {"lambda", f.lambda()}, {"tau", f.tau()},
              {"rho", f.rho()},   {"centroids", std::move(centroids)}};
}

MetricField metric_from_json(const Json& j) {
  return guarded([&] {
    const std::size_t dim = unsigned_int(j, "dim");
    const Json& arr = field(j, "centroids");
    if (!arr.is_array()) throw ValidationError("centroids: expected an array");
    std::vector<Centroid> centroids;
    for (const Json& c : arr) {
      Vec inv = reals(c, "inv_cov_diag");
      for (double v : inv) {
        if (!(v > 0.0)) {
          throw ValidationError("metric: inv_cov_diag entries must be > 0 (positive definiteness)");
        }
      }
      centroids.push_back({reals(c, "mu"), DiagSPD(std::move(inv))});
    }
    return MetricField(std::move(centroids), real(j, "lambda"), real(j, "tau"), real(j, "rho"), dim);
  });
}

void write_metric(const fs::path& path, const MetricField& field) {
  write_text_file(path, dump_json(metric_to_json(field)));
}

MetricField read_metric(const fs::path& path) {
  return metric_from_json(parse_json(read_text_file(path)));
}

// --- checkpoint ------------------------------------------------------------

Json checkpoint_to_json(const Checkpoint& ckpt) {
  const VaeModel& m = ckpt.model;
  m.validate();
  const TrainConfig& c = ckpt.config;
  return Json{
      {"format", "riemann-latent-vae/1"},
      {"input_dim", m.input_dim},
      {"hidden", m.hidden},
      {"latent", m.latent},
      {"activation", "tanh"},
      {"output", "logistic"},
      {"seed", m.seed},
      {"train",
       Json{{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"beta", c.beta},
            {"seed", c.seed},
            {"adam_beta1", c.adam_beta1},
            {"adam_beta2", c.adam_beta2},
            {"adam_eps", c.adam_eps}}},
      {"loss_history", real_json(ckpt.loss_history)},
      {"layers",
       Json{{"enc_hidden", dense_to_json(m.enc_hidden)},
            {"enc_mu", dense_to_json(m.enc_mu)},
            {"enc_log_var", dense_to_json(m.enc_log_var)},
            {"dec_hidden", dense_to_json(m.dec_hidden)},
            {"dec_out", dense_to_json(m.dec_out)}}},
  };
}

Checkpoint checkpoint_from_json(const Json& j) {
  return guarded([&] {
    if (string_value(j, "format") != "riemann-latent-vae/1") {
      throw ValidationError("checkpoint: unsupported format tag");
    }
    if (string_value(j, "activation") != "tanh" || string_value(j, "output") != "logistic") {
      throw ValidationError("checkpoint: unsupported activation");
    }
    Checkpoint ckpt;
    VaeModel& m = ckpt.model;
    m.input_dim = unsigned_int(j, "input_dim");
    m.hidden = unsigned_int(j, "hidden");
    m.latent = unsigned_int(j, "latent");
    m.seed = unsigned_int(j, "seed");
    const Json& layers = field(j, "layers");
    m.enc_hidden = dense_from_json(field(layers, "enc_hidden"), m.input_dim, m.hidden, "enc_hidden");
    m.enc_mu = dense_from_json(field(layers, "enc_mu"), m.hidden, m.latent, "enc_mu");
    m.enc_log_var = dense_from_json(field(layers, "enc_log_var"), m.hidden, m.latent, "enc_log_var");
    m.dec_hidden = dense_from_json(field(layers, "dec_hidden"), m.latent, m.hidden, "dec_hidden");
    m.dec_out = dense_from_json(field(layers, "dec_out"), m.hidden, m.input_dim, "dec_out");
    m.validate();

    const Json& t = field(j, "train");
    TrainConfig& c = ckpt.config;
    c.epochs = unsigned_int(t, "epochs");
    c.batch_size = unsigned_int(t, "batch_size");
    c.learning_rate = real(t, "learning_rate");
    c.beta = real(t, "beta");
    c.seed = unsigned_int(t, "seed");
    c.adam_beta1 = real(t, "adam_beta1");
    c.adam_beta2 = real(t, "adam_beta2");
    c.adam_eps = real(t, "adam_eps");
    c.hidden = m.hidden;
    c.latent = m.latent;
    c.validate();
    ckpt.loss_history = reals(j, "loss_history");
    return ckpt;
  });
}

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  write_text_file(path, dump_json(checkpoint_to_json(ckpt)));
}

Checkpoint read_checkpoint(const fs::path& path) {
  return checkpoint_from_json(parse_json(read_text_file(path)));
}

// --- samples ---------------------------------------------------------------

Json samples_to_json(const SampleBatch& b) {
  const HmcConfig& c = b.config;
  Json init = std::holds_alternative<GivenPointInit>(c.init)
                  ? Json{{"kind", "given-point"},
                         {"point", real_json(std::get<GivenPointInit>(c.init).point)}}
                  : Json{{"kind", "random-centroid"}};
  Json samples = Json::array();
  for (const Vec& s : b.samples) samples.push_back(real_json(s));
  Json chains = Json::array();
  for (const auto& s : b.chains) {
    chains.push_back(Json{{"proposals", s.proposals},
                          {"accepted", s.accepted},
                          {"sum_abs_delta_h", s.sum_abs_delta_h},
                          {"finite_proposals", s.finite_proposals}});
  }
  Json proposals = Json::array();
  for (const auto& p : b.proposals) {
    // h_end is infinite for rejected non-finite trajectories; stored as null
    Json h_end = std::isfinite(p.h_end) ? Json(p.h_end) : Json(nullptr);
    proposals.push_back(Json{{"chain", p.chain},
                             {"h_start", p.h_start},
                             {"h_end", std::move(h_end)},
                             {"uniform", p.uniform},
                             {"accepted", p.accepted}});
  }
  return Json{{"config",
               Json{{"n_samples", c.n_samples},
                    {"chain_length", c.chain_length},
                    {"n_leapfrog", c.n_leapfrog},
                    {"step_size", c.step_size},
                    {"seed", c.seed},
                    {"init", std::move(init)},
                    {"record_proposals", c.record_proposals}}},
              {"dim", b.samples.empty() ? 0 : b.samples.front().size()},
              {"samples", std::move(samples)},
              {"chain_index", b.chain_index},
              {"acceptance_rate", b.acceptance_rate},
              {"chains", std::move(chains)},
              {"proposals", std::move(proposals)}};
}

SampleBatch samples_from_json(const Json& j) {
  return guarded([&] {
    SampleBatch b;
    const Json& c = field(j, "config");
    b.config.n_samples = unsigned_int(c, "n_samples");
    b.config.chain_length = unsigned_int(c, "chain_length");
    b.config.n_leapfrog = unsigned_int(c, "n_leapfrog");
    b.config.step_size = real(c, "step_size");
    b.config.seed = unsigned_int(c, "seed");
    b.config.record_proposals = boolean(c, "record_proposals");
    const Json& init = field(c, "init");
    const std::string kind = string_value(init, "kind");
    if (kind == "given-point") {
      b.config.init = GivenPointInit{reals(init, "point")};
    } else if (kind == "random-centroid") {
      b.config.init = RandomCentroidInit{};
    } else {
      throw ValidationError("samples: unknown init kind '" + kind + "'");
    }
    b.config.validate();

    const std::size_t dim = unsigned_int(j, "dim");
    b.samples = point_list(j, "samples", dim);
    const Json& idx = field(j, "chain_index");
    if (!idx.is_array()) throw ValidationError("chain_index: expected an array");
    for (const Json& i : idx) b.chain_index.push_back(i.get<std::size_t>());
    b.acceptance_rate = real(j, "acceptance_rate");
    const Json& chains = field(j, "chains");
    if (!chains.is_array()) throw ValidationError("chains: expected an array");
    std::size_t proposals = 0, accepted = 0;
    for (const Json& s : chains) {
      ChainStats st;
      st.proposals = unsigned_int(s, "proposals");
      st.accepted = unsigned_int(s, "accepted");
      st.sum_abs_delta_h = real(s, "sum_abs_delta_h");
      st.finite_proposals = unsigned_int(s, "finite_proposals");
      if (st.accepted > st.proposals) throw ValidationError("chains: accepted exceeds proposals");
      proposals += st.proposals;
      accepted += st.accepted;
      b.chains.push_back(st);
    }
    for (const Json& p : field(j, "proposals")) {
      ProposalRecord r;
      r.chain = unsigned_int(p, "chain");
      r.h_start = real(p, "h_start");
      const Json& h_end = field(p, "h_end");
      r.h_end = h_end.is_null() ? std::numeric_limits<double>::infinity() : real_value(h_end, "h_end");
      r.uniform = real(p, "uniform");
      r.accepted = boolean(p, "accepted");
      b.proposals.push_back(r);
    }
    if (b.samples.size() != b.config.n_samples || b.chain_index.size() != b.samples.size()) {
      throw ValidationError("samples: sample count does not match n_samples");
    }
    const double rate = proposals == 0 ? 0.0 : double(accepted) / double(proposals);
    if (rate != b.acceptance_rate) {
      throw ValidationError("samples: acceptance_rate inconsistent with chain statistics");
    }
    return b;
  });
}

void write_samples(const fs::path& path, const SampleBatch& batch) {
  write_text_file(path, dump_json(samples_to_json(batch)));
}

SampleBatch read_samples(const fs::path& path) {
  return samples_from_json(parse_json(read_text_file(path)));
}

// --- paths -----------------------------------------------------------------

Json paths_to_json(const std::vector<PathRecord>& paths) {
  Json arr = Json::array();
  for (const auto& p : paths) {
    p.path.validate();
    Json points = Json::array();
    for (const Vec& q : p.path.points) points.push_back(real_json(q));
    Json summary = Json::object();
    for (const auto& [k, v] : p.summary) summary[k] = v;
    arr.push_back(Json{{"kind", p.kind},
                       {"from", real_json(p.from)},
                       {"to", real_json(p.to)},
                       {"n_points", p.path.size()},
                       {"config", path_config_to_json(p.config)},
                       {"points", std::move(points)},
                       {"energies", real_json(p.energies)},
                       {"iterations", p.iterations},
                       {"converged", p.converged},
                       {"summary", std::move(summary)}});
  }
  return Json{{"paths", std::move(arr)}};
}

std::vector<PathRecord> paths_from_json(const Json& j) {
  return guarded([&] {
    std::vector<PathRecord> out;
    const Json& arr = field(j, "paths");
    if (!arr.is_array()) throw ValidationError("paths: expected an array");
    for (const Json& e : arr) {
      PathRecord p;
      p.kind = string_value(e, "kind");
      if (p.kind != "affine" && p.kind != "potential" && p.kind != "geodesic") {
        throw ValidationError("paths: unknown kind '" + p.kind + "'");
      }
      p.from = reals(e, "from");
      p.to = reals(e, "to");
      p.config = path_config_from_json(field(e, "config"));
      p.path.points = point_list(e, "points", p.from.size());
      p.path.validate();
      if (p.path.size() != unsigned_int(e, "n_points")) {
        throw ValidationError("paths: n_points does not match the point list");
      }
      if (p.path.points.front() != p.from || p.path.points.back() != p.to) {
        throw ValidationError("paths: endpoints do not match from/to");
      }
      p.energies = reals(e, "energies");
      p.iterations = unsigned_int(e, "iterations");
      p.converged = boolean(e, "converged");
      const Json& summary = field(e, "summary");
      if (!summary.is_object()) throw ValidationError("paths: summary must be an object");
      for (auto it = summary.begin(); it != summary.end(); ++it) {
        p.summary[it.key()] = real_value(it.value(), "summary");
      }
      out.push_back(std::move(p));
    }
    return out;
  });
}

void write_paths(const fs::path& path, const std::vector<PathRecord>& paths) {
  write_text_file(path, dump_json(paths_to_json(paths)));
}

std::vector<PathRecord> read_paths(const fs::path& path) {
  return paths_from_json(parse_json(read_text_file(path)));
}

// --- dataset ---------------------------------------------------------------

Json dataset_to_json(const std::vector<DiskRingImage>& images) {
  Json arr = Json::array();
  for (const auto& img : images) {
    img.validate();
    std::string pixels(kImagePixels, '0');
    for (std::size_t p = 0; p < kImagePixels; ++p) pixels[p] = img.pixels[p] ? '1' : '0';
    arr.push_back(Json{{"label", shape_name(img.label)},
                       {"center", Json::array({img.center_x, img.center_y})},
                       {"outer_radius", img.outer_radius},
                       {"thickness", img.thickness},
                       {"pixels", std::move(pixels)}});
  }
  return Json{{"width", kImageSide}, {"height", kImageSide}, {"images", std::move(arr)}};
}

std::vector<DiskRingImage> dataset_from_json(const Json& j) {
  return guarded([&] {
    if (unsigned_int(j, "width") != kImageSide || unsigned_int(j, "height") != kImageSide) {
      throw ValidationError("dataset: only 32x32 images are supported");
    }
    std::vector<DiskRingImage> out;
    for (const Json& e : field(j, "images")) {
      DiskRingImage img;
      img.label = parse_shape(string_value(e, "label"));
      const Json& center = field(e, "center");
      if (!center.is_array() || center.size() != 2) throw ValidationError("dataset: bad center");
      img.center_x = center[0].get<int>();
      img.center_y = center[1].get<int>();
      img.outer_radius = real(e, "outer_radius");
      img.thickness = real(e, "thickness");
      const std::string pixels = string_value(e, "pixels");
      if (pixels.size() != kImagePixels) throw ValidationError("dataset: pixel string must have 1024 chars");
      for (std::size_t p = 0; p < kImagePixels; ++p) {
        if (pixels[p] != '0' && pixels[p] != '1') throw ValidationError("dataset: pixels must be 0/1");
        img.pixels[p] = pixels[p] == '1' ? 1 : 0;
      }
      img.validate();
      out.push_back(img);
    }
    return out;
  });
}

void write_dataset(const fs::path& path, const std::vector<DiskRingImage>& images) {
  write_text_file(path, dump_json(dataset_to_json(images)));
}

std::vector<DiskRingImage> read_dataset(const fs::path& path) {
  return dataset_from_json(parse_json(read_text_file(path)));
}

// --- density CSV -----------------------------------------------------------

std::string density_to_csv(const GridDensity& grid) {
  std::string out = "x,y,sqrt_det_g,mass\n";
  for (std::size_t iy = 0; iy < grid.resolution; ++iy) {
    for (std::size_t ix = 0; ix < grid.resolution; ++ix) {
      const std::size_t cell = iy * grid.resolution + ix;
      append_real(out, grid.cell_center_x(ix));
      out += ',';
      append_real(out, grid.cell_center_y(iy));
      out += ',';
      append_real(out, grid.values[cell]);
      out += ',';
      append_real(out, grid.mass(cell));
      out += '\n';
    }
  }
  return out;
}

std::vector<GridRow> density_from_csv(std::string_view text) {
  const std::string_view header = "x,y,sqrt_det_g,mass\n";
  if (text.substr(0, header.size()) != header) throw ValidationError("density CSV: bad header");
  text.remove_prefix(header.size());
  std::vector<GridRow> rows;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    if (eol == std::string_view::npos) throw ValidationError("density CSV: missing final newline");
    std::string_view line = text.substr(0, eol);
    text.remove_prefix(eol + 1);
    double vals[4];
    for (int c = 0; c < 4; ++c) {
      const std::size_t comma = c < 3 ? line.find(',') : line.size();
      if (comma == std::string_view::npos) throw ValidationError("density CSV: expected 4 columns");
      const std::string_view cell = line.substr(0, comma);
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), vals[c]);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(vals[c])) {
        throw ValidationError("density CSV: bad number '" + std::string(cell) + "'");
      }
      line.remove_prefix(std::min(line.size(), comma + 1));
    }
    if (vals[2] < 0.0 || vals[3] < 0.0) throw ValidationError("density CSV: negative density");
    rows.push_back({vals[0], vals[1], vals[2], vals[3]});
  }
  return rows;
}

void write_density_csv(const fs::path& path, const GridDensity& grid) {
  write_text_file(path, density_to_csv(grid));
}

std::vector<GridRow> read_density_csv(const fs::path& path) {
  return density_from_csv(read_text_file(path));
}

// --- PGM -------------------------------------------------------------------

ImageBytes image_bytes(const DiskRingImage& image) {
  ImageBytes out{};
  for (std::size_t p = 0; p < kImagePixels; ++p) out[p] = image.pixels[p] ? 255 : 0;
  return out;
}

ImageBytes probability_bytes(std::span<const double> probs) {
  require(probs.size() == kImagePixels, "probability_bytes: expected 1024 values");
  ImageBytes out{};
  for (std::size_t p = 0; p < kImagePixels; ++p) {
    require(std::isfinite(probs[p]), "probability_bytes: non-finite probability");
    // nearbyint honours the default round-to-nearest-even mode
    out[p] = std::uint8_t(std::nearbyint(std::clamp(probs[p], 0.0, 1.0) * 255.0));
  }
  return out;
}

std::string pgm_encode(const ImageBytes& bytes) {
  std::string out(kPgmHeader);
  out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  return out;
}

ImageBytes pgm_decode(std::string_view data) {
  if (data.substr(0, kPgmHeader.size()) != kPgmHeader) {
    throw ValidationError("PGM: header must be exactly 'P5\\n32 32\\n255\\n'");
  }
  data.remove_prefix(kPgmHeader.size());
  if (data.size() != kImagePixels) {
    throw ValidationError("PGM: payload must be exactly 1024 bytes, got " +
                          std::to_string(data.size()));
  }
  ImageBytes out{};
  std::copy(data.begin(), data.end(), reinterpret_cast<char*>(out.data()));
  return out;
}

void write_pgm(const fs::path& path, const ImageBytes& bytes) {
  write_text_file(path, pgm_encode(bytes));
}

ImageBytes read_pgm(const fs::path& path) { return pgm_decode(read_text_file(path)); }

}  // namespace rlatent
