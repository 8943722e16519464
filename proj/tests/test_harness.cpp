#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "oracles.hpp"
#include "vmreg/csv.hpp"
#include "vmreg/model_io.hpp"
#include "vmreg/train.hpp"

using namespace vmreg;

namespace {

SyntheticSpec unimodal_spec(double kappa, std::uint64_t seed) {
  SyntheticSpec s;
  s.kind = SyntheticKind::kUnimodal;
  s.feature_dim = 8;
  s.family_seed = seed;
  s.constant_kappa = kappa;
  return s;
}

std::string tmp_path(const std::string& name) { return "/tmp/vmreg_test_" + name; }

}  // namespace

TEST_CASE("generate is deterministic in (spec, seed)") {
  SyntheticTask task(unimodal_spec(5.0, 11));
  Dataset a = task.generate(200, 3);
  Dataset b = task.generate(200, 3);
  CHECK(a.x.v == b.x.v);
  REQUIRE(a.phi.size() == b.phi.size());
  for (std::size_t i = 0; i < a.phi.size(); ++i) CHECK(a.phi[i] == b.phi[i]);
  Dataset c = task.generate(200, 4);
  CHECK(a.x.v != c.x.v);
}

TEST_CASE("constant-kappa unimodal residuals recover kappa") {
  SyntheticTask task(unimodal_spec(5.0, 13));
  Dataset d = task.generate(100000, 5);
  std::vector<Angle> residuals;
  residuals.reserve(d.phi.size());
  std::vector<double> row(8);
  for (int i = 0; i < d.size(); ++i) {
    for (int j = 0; j < 8; ++j) row[static_cast<std::size_t>(j)] = d.x.at(i, j);
    residuals.emplace_back(d.phi[static_cast<std::size_t>(i)].rad() - task.mu_of(row));
  }
  CircularSummary s = circular_summary(residuals);
  REQUIRE(s.mean.has_value());
  CHECK(aad(*s.mean, Angle(0.0)) < 0.02);
  CHECK(kappa_mle_from_resultant(s.resultant_length) == doctest::Approx(5.0).epsilon(0.03));
}

TEST_CASE("antipodal bimodal residuals cancel") {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::kBimodal;
  spec.feature_dim = 8;
  spec.family_seed = 17;
  spec.constant_kappa = 20.0;
  spec.bimodal_weights = {0.5, 0.5};
  SyntheticTask task(spec);
  Dataset d = task.generate(100000, 19);
  std::vector<double> row(8);
  double sc = 0.0, ss = 0.0;
  for (int i = 0; i < d.size(); ++i) {
    for (int j = 0; j < 8; ++j) row[static_cast<std::size_t>(j)] = d.x.at(i, j);
    double delta = d.phi[static_cast<std::size_t>(i)].rad() - task.mu_of(row);
    sc += std::cos(delta);
    ss += std::sin(delta);
  }
  double resultant = std::hypot(sc, ss) / d.size();
  CHECK(resultant < 0.02);
}

TEST_CASE("bayes_log_likelihood") {
  SUBCASE("uniform family evaluates to -log(2 pi) exactly") {
    SyntheticTask task(unimodal_spec(0.0, 23));
    Dataset d = task.generate(500, 3);
    CHECK(task.bayes_log_likelihood(d) == doctest::Approx(-kLogTwoPi).epsilon(1e-12));
  }

  SUBCASE("constant kappa matches kappa*A(kappa) - log(2 pi I0(kappa))") {
    SyntheticTask task(unimodal_spec(5.0, 29));
    Dataset d = task.generate(20000, 31);
    // Frozen from the extended-precision oracle at kappa = 5.
    double analytic = -0.67564315701145281;
    double quadrature = oracle::integrate_circle([&](double phi) {
      VonMises vm(Angle(1.0), 5.0);
      double lp = vm_log_pdf(vm, Angle(phi));
      return std::exp(lp) * lp;
    });
    CHECK(quadrature == doctest::Approx(analytic).epsilon(1e-9));
    double empirical = task.bayes_log_likelihood(d);
    CHECK(empirical == doctest::Approx(analytic).epsilon(0.02));
  }

  SUBCASE("scoring a foreign dataset scores lower on average") {
    SyntheticSpec sa = unimodal_spec(5.0, 37);
    SyntheticSpec sb = unimodal_spec(5.0, 41);
    SyntheticTask a(sa), b(sb);
    Dataset from_a = a.generate(5000, 43);
    CHECK(a.bayes_log_likelihood(from_a) > b.bayes_log_likelihood(from_a));
  }
}

TEST_CASE("train: descent, determinism, early-stop boundary") {
  SyntheticTask task(unimodal_spec(5.0, 47));
  Dataset train_d = task.generate(500, 1, "train");
  Dataset val_d = task.generate(200, 2, "val");

  TrainConfig cfg;
  cfg.head.tag = HeadKind::Tag::kSingleVonMises;
  cfg.hidden = {{16, Activation::kTanh}};
  cfg.batch_size = 64;
  cfg.max_epochs = 30;
  cfg.patience = 30;
  cfg.seed = 7;

  TrainedModel m1 = train(cfg, train_d, val_d);
  CHECK(m1.history.back().train_loss < m1.history.front().train_loss);

  TrainedModel m2 = train(cfg, train_d, val_d);
  REQUIRE(m1.history.size() == m2.history.size());
  for (std::size_t i = 0; i < m1.history.size(); ++i) {
    CHECK(m1.history[i].train_loss == m2.history[i].train_loss);
    CHECK(m1.history[i].val_loss == m2.history[i].val_loss);
  }
  for (std::size_t t = 0; t < m1.model.params.values.size(); ++t) {
    CHECK(m1.model.params.values[t].v == m2.model.params.values[t].v);
  }

  // Best epoch is the argmin of the validation history.
  double best = m1.history[static_cast<std::size_t>(m1.best_epoch)].val_loss;
  for (const EpochStats& e : m1.history) CHECK(best <= e.val_loss);

  TrainConfig one = cfg;
  one.patience = 0;
  TrainedModel m3 = train(one, train_d, val_d);
  CHECK(m3.history.size() == 1);

  TrainConfig bad = cfg;
  bad.patience = 99;  // > max_epochs
  CHECK_THROWS_AS(train(bad, train_d, val_d), ConfigMismatch);

  Dataset wrong = val_d;
  wrong.x = Tensor(200, 5);
  CHECK_THROWS_AS(train(cfg, train_d, wrong), ConfigMismatch);
}

TEST_CASE("train: fixed-kappa head fits its concentration on validation") {
  SyntheticTask task(unimodal_spec(4.0, 53));
  Dataset train_d = task.generate(800, 1);
  Dataset val_d = task.generate(400, 2);
  TrainConfig cfg;
  cfg.head.tag = HeadKind::Tag::kFixedKappa;  // no value: fit post training
  cfg.hidden = {{16, Activation::kTanh}};
  cfg.max_epochs = 40;
  cfg.patience = 40;
  cfg.seed = 11;
  TrainedModel m = train(cfg, train_d, val_d);
  // A trained mean with the right concentration scale: crude recovery bounds.
  CHECK(m.model.fitted_kappa > 0.5);
  CHECK(m.model.fitted_kappa < 50.0);

  TrainConfig given = cfg;
  given.head.fixed_kappa = 2.5;
  TrainedModel g = train(given, train_d, val_d);
  CHECK(g.model.fitted_kappa == 2.5);
}

TEST_CASE("random_search: nesting, bookkeeping, divergence flags") {
  SyntheticTask task(unimodal_spec(5.0, 59));
  Dataset train_d = task.generate(300, 1);
  Dataset val_d = task.generate(150, 2);

  HeadKind head;
  head.tag = HeadKind::Tag::kSingleVonMises;
  SearchSpace space;
  space.widths = {8, 16};
  space.depths = {1};
  space.max_epochs = 8;
  space.patience = 8;

  SearchResult two = random_search(head, space, 2, train_d, val_d, 71);
  SearchResult five = random_search(head, space, 5, train_d, val_d, 71);
  CHECK(two.leaderboard.size() + two.diverged.size() == 2);
  CHECK(five.leaderboard.size() + five.diverged.size() == 5);
  CHECK(five.leaderboard.front().val_loss <= two.leaderboard.front().val_loss);
  for (std::size_t i = 1; i < five.leaderboard.size(); ++i) {
    CHECK(five.leaderboard[i - 1].val_loss <= five.leaderboard[i].val_loss);
  }

  // A learning rate at the double-overflow edge diverges detectably.
  SearchSpace wild = space;
  wild.lr_lo = wild.lr_hi = 1e308;
  wild.max_epochs = 3;
  wild.patience = 3;
  CHECK_THROWS_AS(random_search(head, wild, 1, train_d, val_d, 73), NonFiniteLoss);
}

TEST_CASE("dataset CSV round trip is lossless") {
  SyntheticTask task(unimodal_spec(5.0, 61));
  Dataset d = task.generate(64, 9, "test");
  std::string path = tmp_path("roundtrip.csv");
  write_dataset_csv(d, path);
  Dataset back = read_dataset_csv(path);
  CHECK(back.x.v == d.x.v);
  REQUIRE(back.phi.size() == d.phi.size());
  for (std::size_t i = 0; i < d.phi.size(); ++i) CHECK(back.phi[i] == d.phi[i]);
  std::remove(path.c_str());
}

TEST_CASE("multi-angle CSV round trip") {
  std::array<SyntheticTask, 3> tasks{SyntheticTask(unimodal_spec(5.0, 63)),
                                     SyntheticTask(unimodal_spec(3.0, 64)),
                                     SyntheticTask(unimodal_spec(8.0, 65))};
  Dataset d = generate_multi(tasks, 32, 5);
  REQUIRE(d.multi());
  std::string path = tmp_path("multi.csv");
  write_dataset_csv(d, path);
  Dataset back = read_dataset_csv(path);
  REQUIRE(back.multi());
  CHECK(back.x.v == d.x.v);
  for (std::size_t i = 0; i < d.triples.size(); ++i) {
    for (int k = 0; k < 3; ++k) CHECK(back.triples[i][static_cast<std::size_t>(k)] ==
                                      d.triples[i][static_cast<std::size_t>(k)]);
  }
  std::remove(path.c_str());
}

TEST_CASE("corrupt CSV is rejected") {
  std::string path = tmp_path("bad.csv");
  {
    std::ofstream out(path);
    out << "f0,f1,phi\n0.5,0.25\n";  // ragged row
  }
  CHECK_THROWS_AS(read_dataset_csv(path), CorruptFile);
  std::remove(path.c_str());
}

TEST_CASE("model persistence: bit-exact round trip for every head") {
  SyntheticTask task(unimodal_spec(5.0, 67));
  Dataset train_d = task.generate(200, 1);
  Dataset val_d = task.generate(100, 2);

  std::vector<HeadKind> heads(5);
  heads[0].tag = HeadKind::Tag::kFixedKappa;
  heads[1].tag = HeadKind::Tag::kSingleVonMises;
  heads[2].tag = HeadKind::Tag::kFiniteMixture;
  heads[2].mixture_k = 3;
  heads[3].tag = HeadKind::Tag::kCvae;
  heads[3].latent_dim = 4;
  heads[3].s_train = 2;
  heads[3].s_eval = 8;
  heads[4].tag = HeadKind::Tag::kScvae;
  heads[4].latent_dim = 4;
  heads[4].s_train = 2;
  heads[4].s_eval = 8;

  Rng rng(71);
  for (std::size_t h = 0; h < heads.size(); ++h) {
    TrainConfig cfg;
    cfg.head = heads[h];
    cfg.hidden = {{10, Activation::kTanh}};
    cfg.max_epochs = 3;
    cfg.patience = 3;
    cfg.seed = 100 + h;
    TrainedModel m = train(cfg, train_d, val_d);
    std::string path = tmp_path("model_" + std::to_string(h) + ".json");
    save_model(m, path);
    TrainedModel back = load_model(path);
    CHECK(back.best_epoch == m.best_epoch);
    REQUIRE(back.history.size() == m.history.size());
    for (std::size_t i = 0; i < m.history.size(); ++i) {
      CHECK(back.history[i].val_loss == m.history[i].val_loss);
    }
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> x(8);
      for (double& e : x) e = rng.uniform(-1.0, 1.0);
      Angle phi(rng.uniform(0.0, kTwoPi));
      std::uint64_t s = 1000 + static_cast<std::uint64_t>(trial);
      double a = predictive_density(m.model, x, heads[h].s_eval, s).log_pdf(phi);
      double b = predictive_density(back.model, x, heads[h].s_eval, s).log_pdf(phi);
      CHECK(a == b);
    }
    std::remove(path.c_str());
  }
}

TEST_CASE("model persistence: corruption and version checks") {
  SyntheticTask task(unimodal_spec(5.0, 73));
  Dataset train_d = task.generate(100, 1);
  Dataset val_d = task.generate(50, 2);
  TrainConfig cfg;
  cfg.head.tag = HeadKind::Tag::kSingleVonMises;
  cfg.hidden = {{8, Activation::kTanh}};
  cfg.max_epochs = 2;
  cfg.patience = 2;
  TrainedModel m = train(cfg, train_d, val_d);
  std::string path = tmp_path("model_io.json");
  save_model(m, path);

  SUBCASE("truncated file") {
    std::ifstream in(path);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(path, std::ios::trunc);
    out << all.substr(0, all.size() / 2);
    out.close();
    CHECK_THROWS_AS(load_model(path), CorruptFile);
  }

  SUBCASE("flipped parameter byte") {
    std::ifstream in(path);
    nlohmann::json file;
    in >> file;
    in.close();
    file["payload"]["fitted_kappa"] = "0x1.8p+1";  // checksum now stale
    std::ofstream out(path, std::ios::trunc);
    out << file.dump();
    out.close();
    CHECK_THROWS_AS(load_model(path), CorruptFile);
  }

  SUBCASE("unsupported version") {
    std::ifstream in(path);
    nlohmann::json file;
    in >> file;
    in.close();
    file["payload"]["format_version"] = 2;
    // Re-stamp the checksum so only the version check can fire.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : file["payload"].dump()) {
      h ^= c;
      h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    file["checksum"] = buf;
    std::ofstream out(path, std::ios::trunc);
    out << file.dump();
    out.close();
    CHECK_THROWS_AS(load_model(path), UnsupportedVersion);
  }

  std::remove(path.c_str());
}
