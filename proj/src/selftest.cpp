#include "vmreg/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "vmreg/decision.hpp"
#include "vmreg/model_io.hpp"
#include "vmreg/train.hpp"

namespace vmreg {

namespace {

struct Reporter {
  std::ostream& out;
  int failures = 0;

  void check(const std::string& name, bool ok, const std::string& detail = "") {
    out << (ok ? "PASS " : "FAIL ") << name;
    if (!ok && !detail.empty()) out << " (" << detail << ")";
    out << '\n';
    if (!ok) ++failures;
  }
};

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

double circle_quadrature(const std::function<double(double)>& f, int n) {
  double h = kTwoPi / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += f(i * h);
  return acc * h;
}

}  // namespace

int run_selftest(std::ostream& out) {
  Reporter r{out};

  {
    Rng rng(101);
    bool ok = true;
    for (int i = 0; i < 20000 && ok; ++i) {
      Angle phi(rng.uniform(0.0, kTwoPi));
      ok = aad(biternion_to_angle(angle_to_biternion(phi)), phi) < 1e-12;
    }
    r.check("biternion round trip", ok);
  }

  {
    Rng rng(102);
    bool ok = true;
    for (int i = 0; i < 20000 && ok; ++i) {
      Angle a(rng.uniform(0.0, kTwoPi)), b(rng.uniform(0.0, kTwoPi)), c(rng.uniform(0.0, kTwoPi));
      ok = aad(a, b) == aad(b, a) && aad(a, b) <= aad(a, c) + aad(c, b) + 1e-12 &&
           aad(a, a) == 0.0 && aad(a, b) <= kPi;
    }
    r.check("aad circle metric", ok);
  }

  {
    bool mono = true, cont = false;
    double prev = log_bessel_i0(0.0);
    for (int i = 1; i <= 2000; ++i) {
      double cur = log_bessel_i0(30.0 * i / 2000.0);
      if (cur < prev - 1e-13) mono = false;
      prev = cur;
    }
    cont = std::fabs(log_bessel_i0(15.0 * (1 - 1e-12)) - log_bessel_i0(15.0 * (1 + 1e-12))) < 1e-9;
    bool frozen = std::fabs(log_bessel_i0(1.0) - 0.235914358507178649) < 1e-12 &&
                  std::fabs(log_bessel_i0(100.0) - 96.7797326899425837) < 1e-9;
    r.check("log I0 monotone + branch continuity + reference values", mono && cont && frozen);
  }

  {
    bool ok = true;
    for (int i = 0; i <= 200 && ok; ++i) {
      double rr = 0.999 * i / 200.0;
      ok = std::fabs(bessel_i1_over_i0(kappa_mle_from_resultant(rr)) - rr) <= 1e-8;
    }
    r.check("kappa MLE inverts A(kappa)", ok);
  }

  {
    bool ok = true;
    for (double kappa : {0.0, 1.0, 10.0, 100.0}) {
      VonMises d(Angle(2.2), kappa);
      double z = circle_quadrature(
          [&](double phi) { return std::exp(vm_log_pdf(d, Angle(phi))); }, 1 << 15);
      if (std::fabs(z - 1.0) > 1e-6) ok = false;
    }
    r.check("von Mises density normalizes", ok);
  }

  {
    VonMises d(Angle(2.9), 2.0);
    const int grid_n = 1 << 14;
    std::vector<double> cum(grid_n + 1, 0.0);
    double h = kTwoPi / grid_n;
    auto f = [&](double t) { return std::exp(vm_log_pdf(d, Angle(d.mu.rad() - kPi + t))); };
    for (int i = 0; i < grid_n; ++i) {
      cum[i + 1] = cum[i] + h / 6.0 * (f(i * h) + 4.0 * f((i + 0.5) * h) + f((i + 1) * h));
    }
    const std::size_t n = 20000;
    auto samples = vm_sample(d, n, 31);
    std::vector<double> cdf(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = std::fmod(samples[i].rad() - d.mu.rad() + kPi, kTwoPi);
      if (s < 0) s += kTwoPi;
      double pos = s / h;
      int j = std::min(static_cast<int>(pos), grid_n - 1);
      cdf[i] = cum[j] + (pos - j) * (cum[j + 1] - cum[j]);
    }
    std::sort(cdf.begin(), cdf.end());
    double dmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dmax = std::max(dmax, std::max(static_cast<double>(i + 1) / n - cdf[i],
                                     cdf[i] - static_cast<double>(i) / n));
    }
    r.check("sampler matches numeric CDF (KS, alpha=0.01)", dmax < 1.6276 / std::sqrt(double(n)),
            "D=" + std::to_string(dmax));
  }

  {
    Rng rng(103);
    bool ok = true;
    for (int t = 0; t < 5 && ok; ++t) {
      std::vector<VonMises> comps;
      std::vector<double> w;
      double sum = 0.0;
      for (int j = 0; j < 3; ++j) {
        comps.emplace_back(Angle(rng.uniform(0.0, kTwoPi)), rng.uniform(0.0, 50.0));
        w.push_back(rng.uniform(0.1, 1.0));
        sum += w.back();
      }
      for (double& e : w) e /= sum;
      VonMisesMixture m(comps, w);
      double z = circle_quadrature(
          [&](double phi) { return std::exp(mix_log_pdf(m, Angle(phi))); }, 1 << 15);
      VonMisesMixture p({comps[2], comps[0], comps[1]}, {w[2], w[0], w[1]});
      ok = std::fabs(z - 1.0) < 1e-6 &&
           std::fabs(mix_log_pdf(m, Angle(1.0)) - mix_log_pdf(p, Angle(1.0))) < 1e-12;
    }
    r.check("mixture normalization + permutation invariance", ok);
  }

  {
    std::vector<HeadKind> heads(5);
    heads[0].tag = HeadKind::Tag::kFixedKappa;
    heads[0].fixed_kappa = 1.0;
    heads[1].tag = HeadKind::Tag::kSingleVonMises;
    heads[2].tag = HeadKind::Tag::kFiniteMixture;
    heads[2].mixture_k = 3;
    heads[3].tag = HeadKind::Tag::kCvae;
    heads[3].latent_dim = 3;
    heads[3].s_train = 2;
    heads[4].tag = HeadKind::Tag::kScvae;
    heads[4].latent_dim = 3;
    heads[4].s_train = 2;
    const char* names[5] = {"cosine", "vm-nll", "mixture-nll", "cvae-elbo", "scvae"};
    Rng brng(104);
    Batch batch = random_batch(5, 6, brng);
    for (int h = 0; h < 5; ++h) {
      double worst = 0.0;
      for (std::uint64_t seed = 0; seed < 2; ++seed) {
        PredictiveModel m = make_model(heads[static_cast<std::size_t>(h)], 6,
                                       {{9, Activation::kTanh}}, 7000 + 13 * h + seed);
        auto obj = make_objective(m);
        Rng nrng(500 + seed);
        std::vector<Tensor> noise = draw_noise(*obj, batch.size(), nrng);
        worst = std::max(worst, finite_diff_check(*obj, batch, noise, 1e-5));
      }
      r.check(std::string("gradient check: ") + names[h], worst < 1e-4,
              "max rel err " + std::to_string(worst));
    }
  }

  {
    // Cosine loss and kappa=1 NLL share gradients (likelihood equivalence).
    PredictiveModel m = make_model(HeadKind{HeadKind::Tag::kFixedKappa, 1.0, 4, 4, 3, 20}, 5,
                                   {{10, Activation::kTanh}}, 541);
    PredictiveModel m2 = m;
    auto cos_obj = make_objective(m);
    Rng brng(105);
    Batch batch = random_batch(6, 5, brng);
    loss_and_gradients(*cos_obj, batch, {});
    Graph g;
    HeadVars hv = forward_graph(g, m2.spec, m2.params, g.input(batch.x));
    Graph::Var cosd = g.rowwise_dot(hv.biternion, g.input(batch.target_bit));
    Graph::Var nll = g.mean_all(g.neg(g.add_scalar(cosd, -kLogTwoPi - log_bessel_i0(1.0))));
    m2.params.zero_grads();
    g.backward(nll);
    double worst = 0.0;
    for (std::size_t t = 0; t < m.params.grads.size(); ++t)
      for (std::size_t i = 0; i < m.params.grads[t].size(); ++i)
        worst = std::max(worst, std::fabs(m.params.grads[t].v[i] - m2.params.grads[t].v[i]));
    r.check("cosine / fixed-kappa likelihood gradient equivalence", worst <= 1e-8,
            "max gap " + std::to_string(worst));
  }

  {
    PredictiveDensity d{DensityForm::kSingle, VonMisesMixture({VonMises(Angle(2.0), 10.0)}, {1.0})};
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 20 && ok; ++seed) {
      ok = aad(point_estimate(d, 500, seed).angle, Angle(2.0)) < 0.08;
    }
    r.check("decision-rule point estimate localizes", ok);
  }

  {
    Rng rng(106);
    bool ok = true;
    for (int t = 0; t < 50 && ok; ++t) {
      auto rot = [&]() {
        return euler_to_rotmat(Angle(rng.uniform(0.0, kTwoPi)), Angle(rng.uniform(0.0, kTwoPi)),
                               Angle(rng.uniform(0.0, kTwoPi)));
      };
      RotationMatrix a = rot(), b = rot(), c = rot();
      ok = std::fabs(geodesic_distance(a, b) - geodesic_distance(b, a)) < 1e-12 &&
           geodesic_distance(a, b) <= geodesic_distance(a, c) + geodesic_distance(c, b) + 1e-9;
    }
    r.check("geodesic distance metric properties", ok);
  }

  {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::kUnimodal;
    spec.feature_dim = 4;
    spec.family_seed = 9;
    spec.constant_kappa = 5.0;
    SyntheticTask task(spec);
    Dataset train_d = task.generate(150, 1);
    Dataset val_d = task.generate(60, 2);
    TrainConfig cfg;
    cfg.head.tag = HeadKind::Tag::kSingleVonMises;
    cfg.hidden = {{8, Activation::kTanh}};
    cfg.max_epochs = 3;
    cfg.patience = 3;
    TrainedModel m = train(cfg, train_d, val_d);
    std::string path = "/tmp/vmreg_selftest_model.json";
    save_model(m, path);
    TrainedModel back = load_model(path);
    std::remove(path.c_str());
    Rng rng(107);
    bool ok = true;
    for (int i = 0; i < 20 && ok; ++i) {
      std::vector<double> x(4);
      for (double& e : x) e = rng.uniform(-1.0, 1.0);
      Angle phi(rng.uniform(0.0, kTwoPi));
      ok = predictive_density(m.model, x, 1, 5).log_pdf(phi) ==
           predictive_density(back.model, x, 1, 5).log_pdf(phi);
    }
    r.check("model persistence bit-exact round trip", ok);
  }

  {
    PredictiveModel m = make_model(HeadKind{HeadKind::Tag::kScvae, {}, 4, 4, 2, 30}, 4,
                                   {{8, Activation::kTanh}}, 733);
    PredictiveDensity d = predictive_density(m, {0.2, -0.4, 0.6, 0.1}, 30, 9);
    double z = circle_quadrature([&](double phi) { return std::exp(d.log_pdf(Angle(phi))); },
                                 1 << 15);
    r.check("Monte Carlo predictive density normalizes", std::fabs(z - 1.0) < 1e-6,
            "integral " + std::to_string(z));
  }

  out << (r.failures == 0 ? "selftest: all checks passed\n"
                          : "selftest: " + std::to_string(r.failures) + " check(s) failed\n");
  return r.failures;
}

}  // namespace vmreg
