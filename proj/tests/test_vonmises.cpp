#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "vmreg/vonmises.hpp"

using namespace vmreg;

TEST_CASE("construction caps and validates kappa") {
  CHECK_THROWS_AS(VonMises(Angle(0.0), -1.0), NegativeConcentration);
  CHECK(VonMises(Angle(0.0), 2 * kKappaMax).kappa == kKappaMax);
}

TEST_CASE("vm_log_pdf reference values") {
  VonMises uniform(Angle(1.0), 0.0);
  CHECK(vm_log_pdf(uniform, Angle(0.3)) == doctest::Approx(-kLogTwoPi).epsilon(1e-14));
  CHECK(vm_log_pdf(uniform, Angle(5.9)) == doctest::Approx(-kLogTwoPi).epsilon(1e-14));

  // Frozen: 1 - log(2 pi) - log I0(1) from the series oracle.
  VonMises d(Angle(0.7), 1.0);
  CHECK(vm_log_pdf(d, Angle(0.7)) == doctest::Approx(-1.07379142491652413).epsilon(1e-12));
}

TEST_CASE("vm_log_pdf symmetric about mu") {
  Rng rng(5);
  VonMises d(Angle(2.1), 3.7);
  for (int i = 0; i < 1000; ++i) {
    double delta = rng.uniform(0.0, kPi);
    double lo = vm_log_pdf(d, Angle(2.1 - delta));
    double hi = vm_log_pdf(d, Angle(2.1 + delta));
    CHECK(lo == doctest::Approx(hi).epsilon(1e-12));
  }
}

TEST_CASE("density normalizes across the kappa range") {
  for (double kappa : {0.0, 0.1, 1.0, 10.0, 100.0, 1000.0}) {
    VonMises d(Angle(1.8), kappa);
    double z = oracle::integrate_circle([&](double phi) { return std::exp(vm_log_pdf(d, Angle(phi))); });
    CHECK(z == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("mode sits at mu") {
  for (double kappa : {0.5, 4.0, 50.0}) {
    VonMises d(Angle(2.6), kappa);
    double best = -1e300, best_phi = 0.0;
    for (int i = 0; i < 8192; ++i) {
      double phi = kTwoPi * i / 8192;
      double lp = vm_log_pdf(d, Angle(phi));
      if (lp > best) {
        best = lp;
        best_phi = phi;
      }
    }
    CHECK(aad(Angle(best_phi), d.mu) < kTwoPi / 8192);
  }
}

TEST_CASE("sampler: uniform limit passes KS against the uniform CDF") {
  auto samples = vm_sample(VonMises(Angle(0.0), 0.0), 1000000, 42);
  std::vector<double> cdf(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) cdf[i] = samples[i].rad() / kTwoPi;
  std::sort(cdf.begin(), cdf.end());
  CHECK(oracle::ks_statistic(cdf) < 0.002);  // KS quantile at n=1e6, alpha=0.01
}

TEST_CASE("sampler: circular mean recovers mu") {
  auto samples = vm_sample(VonMises(Angle(1.0), 4.0), 1000000, 7);
  CircularSummary s = circular_summary(samples);
  REQUIRE(s.mean.has_value());
  CHECK(aad(*s.mean, Angle(1.0)) < 0.005);
}

TEST_CASE("sampler: concentration limit pins samples to mu") {
  auto samples = vm_sample(VonMises(Angle(4.2), kKappaMax), 100, 99);
  for (const Angle& a : samples) CHECK(aad(a, Angle(4.2)) < 0.05);
}

TEST_CASE("sampler matches the numeric CDF (KS at alpha=0.01)") {
  // Dense cumulative-Simpson CDF grid, linearly interpolated; agrees with the
  // pointwise adaptive quadrature to ~1e-9.
  for (double kappa : {0.5, 2.0, 10.0}) {
    VonMises d(Angle(2.9), kappa);
    const int grid_n = 1 << 15;
    std::vector<double> cum(grid_n + 1, 0.0);
    double h = kTwoPi / grid_n;
    auto f = [&](double t) { return std::exp(vm_log_pdf(d, Angle(d.mu.rad() - kPi + t))); };
    for (int i = 0; i < grid_n; ++i) {
      double a = i * h;
      cum[i + 1] = cum[i] + h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h));
    }
    const std::size_t n = 100000;
    auto samples = vm_sample(d, n, 1234 + static_cast<std::uint64_t>(kappa * 10));
    std::vector<double> cdf(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = std::fmod(samples[i].rad() - d.mu.rad() + kPi, kTwoPi);
      if (s < 0) s += kTwoPi;
      double pos = s / h;
      int j = std::min(static_cast<int>(pos), grid_n - 1);
      cdf[i] = cum[j] + (pos - j) * (cum[j + 1] - cum[j]);
    }
    std::sort(cdf.begin(), cdf.end());
    CHECK(oracle::ks_statistic(cdf) < oracle::ks_critical_001(n));
  }
}

TEST_CASE("vm_cdf_numeric") {
  VonMises d(Angle(1.2), 3.0);
  CHECK(vm_cdf_numeric(d, Angle(1.2 + kPi)) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(vm_cdf_numeric(d, Angle(1.2)) == doctest::Approx(0.5).epsilon(1e-8));
  // Uniform case: linear in arc length from mu - pi.
  VonMises u(Angle(0.5), 0.0);
  for (double t : {0.3, 1.0, 2.2, 3.0}) {
    CHECK(vm_cdf_numeric(u, Angle(0.5 - kPi + t)) == doctest::Approx(t / kTwoPi).epsilon(1e-8));
  }
  // Agrees with the dense-grid construction used elsewhere.
  VonMises s(Angle(2.9), 10.0);
  double q = vm_cdf_numeric(s, Angle(3.4));
  double ref = oracle::simpson([&](double t) { return std::exp(vm_log_pdf(s, Angle(t))); },
                               2.9 - kPi, 3.4, 1 << 14);
  CHECK(q == doctest::Approx(ref).epsilon(1e-7));
}

TEST_CASE("select_fixed_kappa") {
  std::vector<Angle> mus, phis;
  for (int i = 0; i < 50; ++i) {
    mus.emplace_back(0.13 * i);
    phis.emplace_back(0.13 * i);
  }
  CHECK(select_fixed_kappa(mus, phis) == kKappaMax);  // exact fit saturates

  // Residuals at +-pi/2 make the mean cosine zero.
  std::vector<Angle> mus0{Angle(0.0), Angle(0.0)};
  std::vector<Angle> phis0{Angle(kPi / 2), Angle(-kPi / 2)};
  CHECK(select_fixed_kappa(mus0, phis0) == 0.0);

  // Mean cosine residual 0.5: same inversion the oracle performs.
  double delta = std::acos(0.5);
  std::vector<Angle> mus5{Angle(1.0), Angle(2.0)};
  std::vector<Angle> phis5{Angle(1.0 + delta), Angle(2.0 - delta)};
  double k = select_fixed_kappa(mus5, phis5);
  CHECK(k == doctest::Approx(static_cast<double>(oracle::invert_a_ratio(0.5L))).epsilon(1e-7));

  CHECK_THROWS_AS(select_fixed_kappa({}, {}), EmptyInput);
  CHECK_THROWS_AS(select_fixed_kappa(mus, phis5), LengthMismatch);
}

TEST_CASE("select_fixed_kappa maximizes the summed log-likelihood") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Angle> mus, phis;
    VonMises noise(Angle(0.0), rng.uniform(0.5, 8.0));
    for (int i = 0; i < 200; ++i) {
      Angle mu(rng.uniform(0.0, kTwoPi));
      mus.push_back(mu);
      phis.push_back(Angle(mu.rad() + vm_sample_one(noise, rng).rad()));
    }
    double star = select_fixed_kappa(mus, phis);
    auto total = [&](double kappa) {
      double s = 0.0;
      for (std::size_t i = 0; i < mus.size(); ++i)
        s += vm_log_pdf(VonMises(mus[i], kappa), phis[i]);
      return s;
    };
    double at_star = total(star);
    CHECK(at_star >= total(star * 1.05) - 1e-9);
    CHECK(at_star >= total(star * 0.95) - 1e-9);
  }
}
