#include <gtest/gtest.h>

#include <clocale>
#include <cmath>
#include <fstream>
#include <limits>

#include "rlatent/error.hpp"
#include "rlatent/persistence.hpp"
#include "support.hpp"

namespace rlatent {
namespace {

const fs::path kGolden = RLATENT_GOLDEN_DIR;

/// Reals spanning many magnitudes, including ones that need all 17 digits.
double awkward_real(Rng& rng) {
  switch (rng() % 5) {
    case 0: return testing::uniform(rng, -1, 1);
    case 1: return std::ldexp(testing::uniform(rng, -1, 1), int(rng() % 600) - 300);
    case 2: return 0.1 * double(rng() % 1000);
    case 3: return std::nextafter(1.0, 2.0) * testing::uniform(rng, -1e6, 1e6);
    default: return std::numeric_limits<double>::denorm_min() * double(1 + rng() % 7);
  }
}

Vec awkward_vec(Rng& rng, std::size_t n) {
  Vec v(n);
  for (double& x : v) x = awkward_real(rng);
  return v;
}

Vec positive_vec(Rng& rng, std::size_t n) {
  Vec v(n);
  for (double& x : v) x = std::abs(awkward_real(rng)) + std::numeric_limits<double>::denorm_min();
  return v;
}

EmbeddingSet random_embeddings(Rng& rng) {
  EmbeddingSet set;
  set.dim = 1 + rng() % 4;
  for (std::size_t i = 0, n = rng() % 8; i < n; ++i) {
    set.records.push_back({"rec \"" + std::to_string(i) + "\" \xc3\xa9", awkward_vec(rng, set.dim),
                           awkward_vec(rng, set.dim)});
  }
  return set;
}

MetricField random_metric(Rng& rng) {
  const std::size_t d = 1 + rng() % 3;
  std::vector<Centroid> cs;
  for (std::size_t i = 0, k = rng() % 5; i < k; ++i) cs.push_back({awkward_vec(rng, d), DiagSPD(positive_vec(rng, d))});
  return MetricField(std::move(cs), testing::uniform(rng, 1e-4, 1), testing::uniform(rng, 0, 1),
                     testing::uniform(rng, 0.1, 5), d);
}

SampleBatch random_samples(Rng& rng) {
  SampleBatch b;
  b.config.n_samples = 1 + rng() % 4;
  b.config.chain_length = 1 + rng() % 5;
  b.config.n_leapfrog = 1 + rng() % 20;
  b.config.step_size = testing::uniform(rng, 0, 0.1);
  b.config.seed = rng();
  b.config.record_proposals = rng() % 2;
  if (rng() % 2) b.config.init = GivenPointInit{awkward_vec(rng, 2)};
  std::size_t accepted_total = 0;
  for (std::size_t c = 0; c < b.config.n_samples; ++c) {
    b.samples.push_back(awkward_vec(rng, 2));
    b.chain_index.push_back(c);
    ChainStats s;
    s.proposals = b.config.chain_length;
    for (std::size_t t = 0; t < s.proposals; ++t) {
      ProposalRecord p;
      p.chain = c;
      p.h_start = awkward_real(rng);
      p.h_end = rng() % 4 == 0 ? std::numeric_limits<double>::infinity() : awkward_real(rng);
      p.uniform = testing::uniform(rng, 0, 1);
      p.accepted = std::isfinite(p.h_end) && rng() % 2;
      s.accepted += p.accepted;
      if (std::isfinite(p.h_end)) {
        ++s.finite_proposals;
        s.sum_abs_delta_h += std::abs(p.h_end - p.h_start);
      }
      if (b.config.record_proposals) b.proposals.push_back(p);
    }
    accepted_total += s.accepted;
    b.chains.push_back(s);
  }
  b.acceptance_rate = double(accepted_total) / double(b.config.n_samples * b.config.chain_length);
  return b;
}

std::vector<PathRecord> random_paths(Rng& rng) {
  static const char* kinds[] = {"affine", "potential", "geodesic"};
  std::vector<PathRecord> out;
  for (std::size_t i = 0, n = 1 + rng() % 3; i < n; ++i) {
    PathRecord r;
    r.kind = kinds[rng() % 3];
    r.config.n_points = 3 + rng() % 6;
    r.config.max_iters = rng() % 100;
    r.config.init_step = testing::uniform(rng, 1e-4, 1);
    r.config.smoothness = testing::uniform(rng, 0, 3);
    r.config.tolerance = testing::uniform(rng, 0, 1e-3);
    for (std::size_t t = 0; t < r.config.n_points; ++t) r.path.points.push_back(awkward_vec(rng, 2));
    r.from = r.path.points.front();
    r.to = r.path.points.back();
    r.energies = positive_vec(rng, 1 + rng() % 4);
    r.iterations = rng() % 50;
    r.converged = rng() % 2;
    r.summary = {{"mean_potential", awkward_real(rng)}, {"riemannian_length", awkward_real(rng)}};
    out.push_back(r);
  }
  return out;
}

Checkpoint random_checkpoint(Rng& rng) {
  Checkpoint c;
  c.model = VaeModel::glorot(1 + rng() % 6, 1 + rng() % 5, 1 + rng() % 3, rng());
  for (Vec* block : c.model.blocks()) {
    for (double& v : *block) v = awkward_real(rng);
  }
  c.config.epochs = 1 + rng() % 10;
  c.config.batch_size = 1 + rng() % 100;
  c.config.learning_rate = testing::uniform(rng, 1e-5, 1e-1);
  c.config.beta = testing::uniform(rng, 0, 2);
  c.config.seed = c.model.seed;
  c.config.hidden = c.model.hidden;
  c.config.latent = c.model.latent;
  c.loss_history = positive_vec(rng, c.config.epochs);
  return c;
}

bool same_metric(const MetricField& a, const MetricField& b) { return a == b; }

TEST(Json, RealsRoundTripBitExactly) {
  Rng rng(1);
  for (int i = 0; i < 5000; ++i) {
    const double x = awkward_real(rng);
    const double back = parse_json(dump_json(Json(x))).get<double>();
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back), std::bit_cast<std::uint64_t>(x)) << x;
  }
  EXPECT_THROW(dump_json(Json(std::nan(""))), ValidationError);
  EXPECT_THROW(dump_json(Json::array({1.0, std::numeric_limits<double>::infinity()})), ValidationError);
  EXPECT_THROW(parse_json("{\"a\": "), ValidationError);
}

TEST(Json, LocaleIndependent) {
  const char* old = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = old ? old : "C";
  if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8") == nullptr) {
    std::setlocale(LC_NUMERIC, "C");
  }
  EXPECT_EQ(dump_json(Json(0.5)), "0.5\n");
  EXPECT_EQ(parse_json("0.25").get<double>(), 0.25);
  std::setlocale(LC_NUMERIC, saved.c_str());
}

TEST(RoundTrip, Embeddings) {
  Rng rng(2);
  testing::TempDir tmp("emb");
  for (int i = 0; i < 50; ++i) {
    const EmbeddingSet set = random_embeddings(rng);
    write_embeddings(tmp / "e.json", set);
    EXPECT_EQ(read_embeddings(tmp / "e.json"), set);
  }
}

TEST(RoundTrip, Metric) {
  Rng rng(3);
  testing::TempDir tmp("metric");
  for (int i = 0; i < 50; ++i) {
    const MetricField f = random_metric(rng);
    write_metric(tmp / "m.json", f);
    EXPECT_TRUE(same_metric(read_metric(tmp / "m.json"), f));
  }
}

TEST(RoundTrip, Checkpoint) {
  Rng rng(4);
  testing::TempDir tmp("ckpt");
  for (int i = 0; i < 30; ++i) {
    const Checkpoint c = random_checkpoint(rng);
    write_checkpoint(tmp / "c.json", c);
    const Checkpoint back = read_checkpoint(tmp / "c.json");
    EXPECT_EQ(back.model, c.model);
    EXPECT_EQ(back.config.epochs, c.config.epochs);
    EXPECT_EQ(back.config.learning_rate, c.config.learning_rate);
    EXPECT_EQ(back.config.beta, c.config.beta);
    EXPECT_EQ(back.config.seed, c.config.seed);
    EXPECT_EQ(back.loss_history, c.loss_history);
  }
}

TEST(RoundTrip, Samples) {
  Rng rng(5);
  testing::TempDir tmp("samples");
  for (int i = 0; i < 50; ++i) {
    const SampleBatch b = random_samples(rng);
    write_samples(tmp / "s.json", b);
    SampleBatch back = read_samples(tmp / "s.json");
    back.config.threads = b.config.threads;
    EXPECT_EQ(back, b);
  }
}

TEST(RoundTrip, Paths) {
  Rng rng(6);
  testing::TempDir tmp("paths");
  for (int i = 0; i < 50; ++i) {
    const auto paths = random_paths(rng);
    write_paths(tmp / "p.json", paths);
    EXPECT_EQ(read_paths(tmp / "p.json"), paths);
  }
}

TEST(RoundTrip, Dataset) {
  testing::TempDir tmp("data");
  const auto images = generate_toy_dataset(25, 8);
  write_dataset(tmp / "d.json", images);
  EXPECT_EQ(read_dataset(tmp / "d.json"), images);
}

TEST(RoundTrip, DensityCsv) {
  Rng rng(9);
  testing::TempDir tmp("grid");
  for (int i = 0; i < 10; ++i) {
    const MetricField f = testing::random_field(rng, 3, 2);
    const GridDensity g = density_grid(f, Box2{-3, 2.5, -1, 4}, 2 + rng() % 12);
    write_density_csv(tmp / "g.csv", g);
    const auto rows = read_density_csv(tmp / "g.csv");
    ASSERT_EQ(rows.size(), g.values.size());
    for (std::size_t iy = 0, c = 0; iy < g.resolution; ++iy) {
      for (std::size_t ix = 0; ix < g.resolution; ++ix, ++c) {
        EXPECT_EQ(rows[c].x, g.cell_center_x(ix));
        EXPECT_EQ(rows[c].y, g.cell_center_y(iy));
        EXPECT_EQ(rows[c].sqrt_det_g, g.values[c]);
        EXPECT_EQ(rows[c].mass, g.mass(c));
      }
    }
  }
}

TEST(RoundTrip, Pgm) {
  Rng rng(10);
  testing::TempDir tmp("pgm");
  for (int i = 0; i < 20; ++i) {
    ImageBytes bytes;
    for (auto& b : bytes) b = std::uint8_t(rng() % 256);
    write_pgm(tmp / "x.pgm", bytes);
    EXPECT_EQ(read_pgm(tmp / "x.pgm"), bytes);
  }
}

TEST(Pgm, AllZeroImageGoldenBytes) {
  ImageBytes zero{};
  const std::string encoded = pgm_encode(zero);
  std::string expect = "P5\n32 32\n255\n";
  expect.append(1024, '\0');
  EXPECT_EQ(encoded, expect);
  EXPECT_EQ(encoded, read_text_file(kGolden / "blank.pgm"));
}

TEST(Pgm, ByteMappings) {
  const DiskRingImage disk = render_shape(Shape::kDisk, 16, 16, 6.0, 6.0);
  const ImageBytes b = image_bytes(disk);
  for (std::size_t p = 0; p < kImagePixels; ++p) EXPECT_EQ(b[p], disk.pixels[p] ? 255 : 0);

  Vec probs(kImagePixels, 0.0);
  probs[0] = 1.0;
  probs[1] = 0.5;                 // 127.5 -> 128 (even)
  probs[2] = 0.5 / 255.0 * 5.0;   // 2.5 -> 2 (even)
  probs[3] = 1.5;                 // clamped
  probs[4] = -0.2;                // clamped
  probs[5] = 100.0 / 255.0;
  const ImageBytes q = probability_bytes(probs);
  EXPECT_EQ(q[0], 255);
  EXPECT_EQ(q[1], 128);
  EXPECT_EQ(q[2], 2);
  EXPECT_EQ(q[3], 255);
  EXPECT_EQ(q[4], 0);
  EXPECT_EQ(q[5], 100);
}

TEST(Pgm, RejectsMalformed) {
  std::string good = pgm_encode(ImageBytes{});
  EXPECT_THROW(pgm_decode(good.substr(0, good.size() - 1)), ValidationError);
  EXPECT_THROW(pgm_decode(good + "x"), ValidationError);
  std::string p2 = good;
  p2[1] = '2';
  EXPECT_THROW(pgm_decode(p2), ValidationError);
  std::string wide = good;
  wide.replace(3, 5, "33 32");
  EXPECT_THROW(pgm_decode(wide), ValidationError);
  EXPECT_THROW(probability_bytes(Vec(10, 0.0)), ValidationError);
}

TEST(Validation, MetricRejectsNonPositiveInverseCovariance) {
  Json j = parse_json(read_text_file(kGolden / "metric.json"));
  j["centroids"][0]["inv_cov_diag"][1] = 0.0;
  try {
    metric_from_json(j);
    FAIL() << "accepted a zero inverse covariance";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("positive definite"), std::string::npos) << e.what();
  }
  j["centroids"][0]["inv_cov_diag"][1] = -1.0;
  EXPECT_THROW(metric_from_json(j), ValidationError);
}

TEST(Validation, RejectsInconsistentContent) {
  Json emb = parse_json(read_text_file(kGolden / "embeddings.json"));
  Json bad = emb;
  bad["records"][0]["mu"].push_back(1.0);
  EXPECT_THROW(embeddings_from_json(bad), ValidationError);
  bad = emb;
  bad["dim"] = "two";
  EXPECT_THROW(embeddings_from_json(bad), ValidationError);
  bad = emb;
  bad.erase("records");
  EXPECT_THROW(embeddings_from_json(bad), ValidationError);

  Json metric = parse_json(read_text_file(kGolden / "metric.json"));
  bad = metric;
  bad["rho"] = -1.0;
  EXPECT_THROW(metric_from_json(bad), ValidationError);
  bad = metric;
  bad["centroids"][0]["mu"] = Json::array({1.0});
  EXPECT_THROW(metric_from_json(bad), ValidationError);

  Rng rng(11);
  SampleBatch b = random_samples(rng);
  Json s = samples_to_json(b);
  s["acceptance_rate"] = 2.0;
  EXPECT_THROW(samples_from_json(s), ValidationError);
  s = samples_to_json(b);
  s["chain_index"].push_back(0);
  EXPECT_THROW(samples_from_json(s), ValidationError);

  Json p = paths_to_json(random_paths(rng));
  p["paths"][0]["from"][0] = 1e300;
  EXPECT_THROW(paths_from_json(p), ValidationError);

  EXPECT_THROW(density_from_csv("x,y,mass\n"), ValidationError);
  EXPECT_THROW(density_from_csv("x,y,sqrt_det_g,mass\n1,2,3\n"), ValidationError);
  EXPECT_THROW(density_from_csv("x,y,sqrt_det_g,mass\n1,2,-3,0.5\n"), ValidationError);
  EXPECT_THROW(density_from_csv("x,y,sqrt_det_g,mass\n1,2,3,0,5\n"), ValidationError);
}

TEST(Validation, MissingFilesAreIoErrors) {
  testing::TempDir tmp("missing");
  EXPECT_THROW(read_metric(tmp / "nope.json"), IoError);
  EXPECT_THROW(read_pgm(tmp / "nope.pgm"), IoError);
  EXPECT_THROW(write_metric(tmp / "no" / "dir" / "m.json", MetricField::constant(2, 1.0)), IoError);
}

// Files committed under tests/golden were written by an earlier build with
// default settings; reading and rewriting them must reproduce the same bytes.
TEST(Golden, FilesRewriteIdentically) {
  testing::TempDir tmp("golden");
  const std::string emb = read_text_file(kGolden / "embeddings.json");
  write_embeddings(tmp / "e.json", read_embeddings(kGolden / "embeddings.json"));
  EXPECT_EQ(read_text_file(tmp / "e.json"), emb);

  const std::string metric = read_text_file(kGolden / "metric.json");
  write_metric(tmp / "m.json", read_metric(kGolden / "metric.json"));
  EXPECT_EQ(read_text_file(tmp / "m.json"), metric);

  const std::string paths = read_text_file(kGolden / "paths.json");
  write_paths(tmp / "p.json", read_paths(kGolden / "paths.json"));
  EXPECT_EQ(read_text_file(tmp / "p.json"), paths);

  const std::string samples = read_text_file(kGolden / "samples.json");
  write_samples(tmp / "s.json", read_samples(kGolden / "samples.json"));
  EXPECT_EQ(read_text_file(tmp / "s.json"), samples);
}

TEST(Golden, ValuesMatchTheirSource) {
  const EmbeddingSet set = read_embeddings(kGolden / "embeddings.json");
  ASSERT_EQ(set.records.size(), 2u);
  EXPECT_EQ(set.records[0].id, "img-000000");
  EXPECT_EQ(set.records[0].mu, (Vec{0.1, -2.5}));
  EXPECT_EQ(set.records[1].log_var, (Vec{-1e-300, 3.0}));

  const MetricField f = read_metric(kGolden / "metric.json");
  EXPECT_EQ(f.lambda(), 0.01);
  EXPECT_EQ(f.rho(), 1.5);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f.centroids()[1].inv_cov[0], 0.30000000000000004);

  const auto rows = read_density_csv(kGolden / "grid.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[1].x, 0.5);
  EXPECT_EQ(rows[1].y, -0.5);
  EXPECT_EQ(rows[3].mass, 0.25);
}

}  // namespace
}  // namespace rlatent
