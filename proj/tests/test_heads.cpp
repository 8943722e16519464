#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vmreg/heads.hpp"

using namespace vmreg;

namespace {

Batch random_batch(int n, int d, Rng& rng) {
  Batch b;
  b.x = Tensor(n, d);
  for (double& e : b.x.v) e = rng.uniform(-1.0, 1.0);
  b.target_bit = Tensor(n, 2);
  for (int i = 0; i < n; ++i) {
    Biternion t = angle_to_biternion(Angle(rng.uniform(0.0, kTwoPi)));
    b.target_bit.at(i, 0) = t.c;
    b.target_bit.at(i, 1) = t.s;
  }
  return b;
}

// Zeroes the decoder's first-layer columns that read the latent code.
void blind_decoder_to_z(PredictiveModel& m, int feature_dim) {
  Tensor& w0 = m.cvae.decoder_params.values[0];
  for (int i = 0; i < w0.rows; ++i)
    for (int j = feature_dim; j < w0.cols; ++j) w0.at(i, j) = 0.0;
}

// Makes q(z|x,phi) identical to p(z|x): encoder ignores the biternion columns
// and mirrors the prior's weights elsewhere.
void tie_encoder_to_prior(PredictiveModel& m, int feature_dim) {
  ParamSet& enc = m.cvae.encoder_params;
  const ParamSet& pri = m.cvae.prior_params;
  Tensor& ew0 = enc.values[0];
  const Tensor& pw0 = pri.values[0];
  for (int i = 0; i < ew0.rows; ++i) {
    for (int j = 0; j < feature_dim; ++j) ew0.at(i, j) = pw0.at(i, j);
    for (int j = feature_dim; j < ew0.cols; ++j) ew0.at(i, j) = 0.0;
  }
  for (std::size_t t = 1; t < enc.values.size(); ++t) enc.values[t] = pri.values[t];
}

}  // namespace

TEST_CASE("cosine_loss endpoints") {
  Biternion a = angle_to_biternion(Angle(1.1));
  CHECK(cosine_loss(a, a) == doctest::Approx(0.0).epsilon(1e-15));
  Biternion anti = angle_to_biternion(Angle(1.1 + kPi));
  CHECK(cosine_loss(a, anti) == doctest::Approx(2.0).epsilon(1e-12));
  Biternion orth = angle_to_biternion(Angle(1.1 + kPi / 2));
  CHECK(cosine_loss(a, orth) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("vm_nll values and limits") {
  CHECK(vm_nll(Angle(0.7), 1.0, Angle(0.7)) == doctest::Approx(1.07379142491652413).epsilon(1e-12));
  // kappa -> 0+ tends to log(2 pi) regardless of phi.
  CHECK(vm_nll(Angle(0.0), 1e-12, Angle(2.5)) == doctest::Approx(kLogTwoPi).epsilon(1e-9));
  CHECK_THROWS_AS(vm_nll(Angle(0.0), 0.0, Angle(1.0)), NegativeConcentration);
  CHECK_THROWS_AS(vm_nll(Angle(0.0), -2.0, Angle(1.0)), NegativeConcentration);
}

TEST_CASE("vm_nll minus cosine_loss is constant at kappa = 1") {
  Rng rng(3);
  double expected = kLogTwoPi + 0.235914358507178649 - 1.0;
  for (int i = 0; i < 500; ++i) {
    Angle mu(rng.uniform(0.0, kTwoPi));
    Angle phi(rng.uniform(0.0, kTwoPi));
    double diff = vm_nll(mu, 1.0, phi) - cosine_loss(angle_to_biternion(mu), angle_to_biternion(phi));
    CHECK(diff == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("mixture_nll reductions") {
  CHECK(mixture_nll({Angle(1.2)}, {3.0}, {1.0}, Angle(0.4)) ==
        doctest::Approx(vm_nll(Angle(1.2), 3.0, Angle(0.4))).epsilon(1e-13));
  CHECK(mixture_nll({Angle(0.0), Angle(3.0)}, {0.0, 0.0}, {0.25, 0.75}, Angle(1.0)) ==
        doctest::Approx(kLogTwoPi).epsilon(1e-13));
  double whole = mixture_nll({Angle(2.0), Angle(5.0)}, {4.0, 7.0}, {0.6, 0.4}, Angle(2.3));
  double split = mixture_nll({Angle(2.0), Angle(2.0), Angle(5.0)}, {4.0, 4.0, 7.0},
                             {0.3, 0.3, 0.4}, Angle(2.3));
  CHECK(whole == doctest::Approx(split).epsilon(1e-12));
  CHECK_THROWS_AS(mixture_nll({Angle(0.0)}, {1.0, 2.0}, {1.0}, Angle(0.0)), LengthMismatch);
}

TEST_CASE("gaussian_kl identities") {
  LatentGaussian q{{0.3, -0.7, 1.1}, {0.1, -0.4, 0.0}};
  CHECK(gaussian_kl(q, q) == 0.0);

  LatentGaussian mu_only{{0.5, -1.5}, {0.0, 0.0}};
  LatentGaussian std_normal{{0.0, 0.0}, {0.0, 0.0}};
  CHECK(gaussian_kl(mu_only, std_normal) ==
        doctest::Approx(0.5 * (0.25 + 2.25)).epsilon(1e-14));

  LatentGaussian p{{0.0, 0.2}, {0.7, -0.3}};
  LatentGaussian r{{1.0, 0.0}, {-0.2, 0.5}};
  CHECK(gaussian_kl(p, r) != gaussian_kl(r, p));
  CHECK(gaussian_kl(p, r) >= 0.0);
  CHECK(gaussian_kl(r, p) >= 0.0);

  CHECK_THROWS_AS(gaussian_kl(q, p), DimensionMismatch);
}

TEST_CASE("reparam_sample") {
  LatentGaussian g{{1.0, -2.0}, {0.4, -1.0}};
  auto at_mean = reparam_sample(g, {0.0, 0.0});
  CHECK(at_mean[0] == 1.0);
  CHECK(at_mean[1] == -2.0);

  std::vector<double> eps{0.3, -0.8};
  auto one = reparam_sample(g, eps);
  auto two = reparam_sample(g, {0.6, -1.6});
  for (int i = 0; i < 2; ++i) {
    double sigma_eps = std::exp(0.5 * g.log_var[static_cast<std::size_t>(i)]) *
                       eps[static_cast<std::size_t>(i)];
    CHECK(two[static_cast<std::size_t>(i)] - one[static_cast<std::size_t>(i)] ==
          doctest::Approx(sigma_eps).epsilon(1e-12));
  }

  // Log-variance at the clamp floor collapses to the mean.
  LatentGaussian tight{{0.5}, {-10.0}};
  auto z = reparam_sample(tight, {2.0});
  CHECK(std::fabs(z[0] - 0.5) < 0.05);

  CHECK_THROWS_AS(reparam_sample(g, {0.0}), DimensionMismatch);
}

TEST_CASE("cvae_elbo: z-blind decoder with tied networks gives the exact log-density") {
  const int d = 5;
  PredictiveModel m = make_model(HeadKind{HeadKind::Tag::kCvae, {}, 4, 4, 3, 20}, d,
                                 {{10, Activation::kTanh}}, 42);
  blind_decoder_to_z(m, d);
  tie_encoder_to_prior(m, d);

  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(d);
    for (double& e : x) e = rng.uniform(-1.0, 1.0);
    Angle phi(rng.uniform(0.0, kTwoPi));

    // KL term vanishes when q and p coincide.
    Tensor xr(1, d, x);
    HeadOutputs prior = forward(m.cvae.prior, m.cvae.prior_params, xr);
    Biternion tb = angle_to_biternion(phi);
    Tensor enc_in(1, d + 2);
    for (int j = 0; j < d; ++j) enc_in.at(0, j) = x[static_cast<std::size_t>(j)];
    enc_in.at(0, d) = tb.c;
    enc_in.at(0, d + 1) = tb.s;
    HeadOutputs enc = forward(m.cvae.encoder, m.cvae.encoder_params, enc_in);
    LatentGaussian q{enc.gauss_mean.v, enc.gauss_log_var.v};
    LatentGaussian p{prior.gauss_mean.v, prior.gauss_log_var.v};
    CHECK(gaussian_kl(q, p) == 0.0);

    // Decoder output depends on x alone; the ELBO integrand is constant in z.
    Tensor dec_in(1, d + m.cvae.latent_dim);
    for (int j = 0; j < d; ++j) dec_in.at(0, j) = x[static_cast<std::size_t>(j)];
    HeadOutputs dec = forward(m.cvae.decoder, m.cvae.decoder_params, dec_in);
    Angle mu = biternion_to_angle(Biternion{dec.biternion.at(0, 0), dec.biternion.at(0, 1)});
    double expected = vm_log_pdf(VonMises(mu, dec.kappa.at(0, 0)), phi);

    for (int s : {1, 3, 8}) {
      CHECK(cvae_elbo(m.cvae, x, phi, s, 1000 + trial) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("iwae: equal importance weights recover the exact log-density for any S") {
  const int d = 4;
  PredictiveModel m = make_model(HeadKind{HeadKind::Tag::kCvae, {}, 4, 3, 2, 20}, d,
                                 {{8, Activation::kTanh}}, 77);
  blind_decoder_to_z(m, d);
  tie_encoder_to_prior(m, d);

  Rng rng(9);
  std::vector<double> x(d);
  for (double& e : x) e = rng.uniform(-1.0, 1.0);
  Angle phi(2.2);

  Tensor dec_in(1, d + m.cvae.latent_dim);
  for (int j = 0; j < d; ++j) dec_in.at(0, j) = x[static_cast<std::size_t>(j)];
  HeadOutputs dec = forward(m.cvae.decoder, m.cvae.decoder_params, dec_in);
  Angle mu = biternion_to_angle(Biternion{dec.biternion.at(0, 0), dec.biternion.at(0, 1)});
  double expected = vm_log_pdf(VonMises(mu, dec.kappa.at(0, 0)), phi);

  for (int s : {1, 2, 10, 50}) {
    CHECK(iwae_log_lik(m.cvae, x, phi, s, 555) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("iwae bound dominates the ELBO on average") {
  const int d = 4;
  PredictiveModel m = make_model(HeadKind{HeadKind::Tag::kCvae, {}, 4, 4, 3, 20}, d,
                                 {{10, Activation::kTanh}}, 1234);
  Rng rng(11);
  double acc = 0.0, acc2 = 0.0;
  const int n = 60;
  for (int i = 0; i < n; ++i) {
    std::vector<double> x(d);
    for (double& e : x) e = rng.uniform(-1.0, 1.0);
    Angle phi(rng.uniform(0.0, kTwoPi));
    double elbo = cvae_elbo(m.cvae, x, phi, 5, 10 + i);
    double iwae = iwae_log_lik(m.cvae, x, phi, 1000, 20 + i);
    double diff = iwae - elbo;
    acc += diff;
    acc2 += diff * diff;
  }
  double mean = acc / n;
  double sem = std::sqrt((acc2 / n - mean * mean) / n);
  CHECK(mean >= -3.0 * sem);
}

TEST_CASE("scvae_loss: z-blind decoder equals the single-von-Mises NLL for any S") {
  const int d = 4;
  PredictiveModel m = make_model(HeadKind{HeadKind::Tag::kScvae, {}, 4, 3, 2, 20}, d,
                                 {{8, Activation::kTanh}}, 88);
  blind_decoder_to_z(m, d);

  Rng rng(13);
  std::vector<double> x(d);
  for (double& e : x) e = rng.uniform(-1.0, 1.0);
  Angle phi(0.9);

  Tensor dec_in(1, d + m.cvae.latent_dim);
  for (int j = 0; j < d; ++j) dec_in.at(0, j) = x[static_cast<std::size_t>(j)];
  HeadOutputs dec = forward(m.cvae.decoder, m.cvae.decoder_params, dec_in);
  Angle mu = biternion_to_angle(Biternion{dec.biternion.at(0, 0), dec.biternion.at(0, 1)});
  double expected = vm_nll(mu, dec.kappa.at(0, 0), phi);

  for (int s : {1, 2, 7, 33}) {
    CHECK(scvae_loss(m.cvae, x, phi, s, 99) == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK_THROWS_AS(scvae_loss(m.cvae, x, phi, 0, 1), ConfigMismatch);
}

TEST_CASE("scvae loss shrinks in expectation as S grows") {
  const int d = 4;
  PredictiveModel m = make_model(HeadKind{HeadKind::Tag::kScvae, {}, 4, 4, 1, 20}, d,
                                 {{10, Activation::kTanh}}, 321);
  Rng rng(15);
  std::vector<double> x(d);
  for (double& e : x) e = rng.uniform(-1.0, 1.0);
  Angle phi(4.0);
  double m1 = 0.0, m8 = 0.0, m64 = 0.0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    m1 += scvae_loss(m.cvae, x, phi, 1, 3000 + r);
    m8 += scvae_loss(m.cvae, x, phi, 8, 7000 + r);
    m64 += scvae_loss(m.cvae, x, phi, 64, 11000 + r);
  }
  m1 /= reps;
  m8 /= reps;
  m64 /= reps;
  CHECK(m8 <= m1 + 0.02);
  CHECK(m64 <= m8 + 0.02);
}

TEST_CASE("gradient checks pass for every head loss, noise frozen") {
  Rng brng(17);
  Batch batch = random_batch(5, 6, brng);
  std::vector<HeadKind> heads{
      HeadKind{HeadKind::Tag::kFixedKappa, 1.0, 4, 4, 3, 20},
      HeadKind{HeadKind::Tag::kSingleVonMises, {}, 4, 4, 3, 20},
      HeadKind{HeadKind::Tag::kFiniteMixture, {}, 3, 4, 3, 20},
      HeadKind{HeadKind::Tag::kCvae, {}, 4, 3, 2, 20},
      HeadKind{HeadKind::Tag::kScvae, {}, 4, 3, 2, 20},
  };
  for (std::size_t h = 0; h < heads.size(); ++h) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      PredictiveModel m = make_model(heads[h], 6, {{9, Activation::kTanh}}, 500 + 31 * h + seed);
      auto obj = make_objective(m);
      Rng nrng(900 + seed);
      std::vector<Tensor> noise = draw_noise(*obj, batch.size(), nrng);
      double err = finite_diff_check(*obj, batch, noise, 1e-5);
      INFO("head ", h, " seed ", seed, " err ", err);
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("cosine and kappa=1 NLL objectives produce identical gradients") {
  // The NLL at frozen kappa differs from the cosine loss by a constant, so
  // every parameter gradient must coincide.
  class FixedKappaNll final : public Objective {
   public:
    FixedKappaNll(const NetworkSpec& spec, ParamSet& params) : spec_(spec), params_(params) {}
    std::vector<ParamSet*> param_sets() override { return {&params_}; }
    Graph::Var build(Graph& g, const Batch& batch, const std::vector<Tensor>&) override {
      HeadVars hv = forward_graph(g, spec_, params_, g.input(batch.x));
      Graph::Var cosd = g.rowwise_dot(hv.biternion, g.input(batch.target_bit));
      double log_i0_1 = log_bessel_i0(1.0);
      return g.mean_all(g.neg(g.add_scalar(cosd, -kLogTwoPi - log_i0_1)));
    }
   private:
    const NetworkSpec& spec_;
    ParamSet& params_;
  };

  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    PredictiveModel m = make_model(HeadKind{HeadKind::Tag::kFixedKappa, 1.0, 4, 4, 3, 20}, 5,
                                   {{12, Activation::kTanh}, {8, Activation::kRelu}}, 600 + seed);
    PredictiveModel m2 = m;
    auto cos_obj = make_objective(m);
    FixedKappaNll nll_obj(m2.spec, m2.params);
    Rng brng(700 + seed);
    Batch batch = random_batch(7, 5, brng);
    loss_and_gradients(*cos_obj, batch, {});
    loss_and_gradients(nll_obj, batch, {});
    for (std::size_t t = 0; t < m.params.grads.size(); ++t) {
      for (std::size_t i = 0; i < m.params.grads[t].size(); ++i) {
        CHECK(std::fabs(m.params.grads[t].v[i] - m2.params.grads[t].v[i]) <= 1e-8);
      }
    }
  }
}

TEST_CASE("sCVAE with S=1 walks the single-von-Mises trajectory bit for bit") {
  const int d = 4, latent = 3, n = 8;
  PredictiveModel scvae = make_model(HeadKind{HeadKind::Tag::kScvae, {}, 4, latent, 1, 20}, d,
                                     {{8, Activation::kTanh}}, 4242);
  blind_decoder_to_z(scvae, d);

  PredictiveModel vm;
  vm.head.tag = HeadKind::Tag::kSingleVonMises;
  vm.input_dim = d + latent;
  vm.spec = scvae.cvae.decoder;
  vm.params = scvae.cvae.decoder_params;

  auto scvae_obj = make_objective(scvae);
  auto vm_obj = make_objective(vm);
  AdamState st_a(scvae.cvae.decoder_params, AdamConfig{});
  AdamState st_b(vm.params, AdamConfig{});

  Rng batch_rng_a(5151), batch_rng_b(5151);
  Rng noise_rng_a(6161), noise_rng_b(6161);
  for (int step = 0; step < 25; ++step) {
    Batch raw_a = random_batch(n, d, batch_rng_a);
    Batch raw_b = random_batch(n, d, batch_rng_b);
    std::vector<Tensor> noise = draw_noise(*scvae_obj, n, noise_rng_a);
    Tensor z(n, latent);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < latent; ++j) z.at(i, j) = noise_rng_b.normal();

    Batch aug;
    aug.x = Tensor(n, d + latent);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) aug.x.at(i, j) = raw_b.x.at(i, j);
      for (int j = 0; j < latent; ++j) aug.x.at(i, d + j) = z.at(i, j);
    }
    aug.target_bit = raw_b.target_bit;

    double la = loss_and_gradients(*scvae_obj, raw_a, noise);
    double lb = loss_and_gradients(*vm_obj, aug, {});
    CHECK(la == lb);
    adam_step(st_a, scvae.cvae.decoder_params);
    adam_step(st_b, vm.params);
    for (std::size_t t = 0; t < vm.params.values.size(); ++t) {
      CHECK(scvae.cvae.decoder_params.values[t].v == vm.params.values[t].v);
    }
  }
}

TEST_CASE("predictive densities") {
  const int d = 5;
  SUBCASE("fixed-kappa head carries its configured concentration") {
    PredictiveModel m = make_model(HeadKind{HeadKind::Tag::kFixedKappa, 3.3, 4, 4, 3, 20}, d,
                                   {{8, Activation::kTanh}}, 21);
    PredictiveDensity pd = predictive_density(m, {0.1, -0.2, 0.3, 0.4, -0.5}, 10, 1);
    CHECK(pd.form == DensityForm::kSingle);
    REQUIRE(pd.mixture.size() == 1);
    CHECK(pd.mixture.components()[0].kappa == 3.3);
  }

  SUBCASE("z-blind sCVAE collapses to coincident components") {
    PredictiveModel m = make_model(HeadKind{HeadKind::Tag::kScvae, {}, 4, 3, 1, 12}, d,
                                   {{8, Activation::kTanh}}, 22);
    blind_decoder_to_z(m, d);
    PredictiveDensity pd = predictive_density(m, {0.5, 0.5, -0.5, 0.0, 1.0}, 12, 33);
    CHECK(pd.form == DensityForm::kMonteCarloMixture);
    REQUIRE(pd.mixture.size() == 12);
    for (const VonMises& c : pd.mixture.components()) {
      CHECK(c.mu == pd.mixture.components()[0].mu);
      CHECK(c.kappa == pd.mixture.components()[0].kappa);
    }
  }

  SUBCASE("Monte Carlo mixtures normalize") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      PredictiveModel m = make_model(HeadKind{HeadKind::Tag::kCvae, {}, 4, 4, 3, 25}, d,
                                     {{10, Activation::kTanh}}, 3000 + seed);
      Rng rng(40 + seed);
      std::vector<double> x(d);
      for (double& e : x) e = rng.uniform(-1.0, 1.0);
      PredictiveDensity pd = predictive_density(m, x, 25, 50 + seed);
      double z = oracle::integrate_circle(
          [&](double phi) { return std::exp(pd.log_pdf(Angle(phi))); }, 1 << 15);
      CHECK(z == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("multi_angle_log_pdf") {
  const int d = 3;
  // Near-uniform models: a huge negative kappa bias drives the link to ~0.
  PredictiveModel u = make_model(HeadKind{HeadKind::Tag::kSingleVonMises, {}, 4, 4, 3, 20}, d, {},
                                 61);
  u.params.values[0].fill(0.0);
  u.params.values[1] = Tensor(1, 3, {1.0, 0.0, -60.0});
  std::array<const PredictiveModel*, 3> trio{&u, &u, &u};
  std::vector<double> x{0.2, -0.1, 0.4};
  std::array<Angle, 3> angles{Angle(0.3), Angle(2.0), Angle(5.1)};
  double total = multi_angle_log_pdf(trio, x, angles, 10, 7);
  CHECK(total == doctest::Approx(3.0 * -kLogTwoPi).epsilon(1e-10));

  // Additivity: swap one model for a concentrated one.
  PredictiveModel c = u;
  c.params.values[1] = Tensor(1, 3, {std::cos(2.0), std::sin(2.0), 3.0});
  HeadOutputs out = forward(c.spec, c.params, Tensor(1, d, x));
  Angle mu = biternion_to_angle(Biternion{out.biternion.at(0, 0), out.biternion.at(0, 1)});
  double own = vm_log_pdf(VonMises(mu, out.kappa.at(0, 0)), angles[1]);
  std::array<const PredictiveModel*, 3> mixed{&u, &c, &u};
  CHECK(multi_angle_log_pdf(mixed, x, angles, 10, 7) ==
        doctest::Approx(2.0 * -kLogTwoPi + own).epsilon(1e-9));

  // Identical models commute across angle slots.
  std::array<const PredictiveModel*, 3> again{&u, &u, &u};
  std::array<Angle, 3> permuted{angles[2], angles[0], angles[1]};
  CHECK(multi_angle_log_pdf(again, x, permuted, 10, 7) ==
        doctest::Approx(total).epsilon(1e-10));
}
