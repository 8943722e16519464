#include "vmreg/vonmises.hpp"

#include <cmath>

namespace vmreg {

namespace {

// Below this the rejection constants lose precision; the density is uniform
// to ~1e-10 anyway.
constexpr double kUniformKappa = 1e-10;

double vm_density(double kappa, double log_i0, double delta) {
  return std::exp(kappa * std::cos(delta) - kLogTwoPi - log_i0);
}

double adaptive_simpson(double kappa, double log_i0, double a, double fa, double b, double fb,
                        double m, double fm, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = vm_density(kappa, log_i0, lm);
  double frm = vm_density(kappa, log_i0, rm);
  double h = b - a;
  double left = h / 12.0 * (fa + 4.0 * flm + fm);
  double right = h / 12.0 * (fm + 4.0 * frm + fb);
  double err = left + right - whole;
  if (depth <= 0 || std::fabs(err) < 15.0 * tol) {
    return left + right + err / 15.0;
  }
  return adaptive_simpson(kappa, log_i0, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(kappa, log_i0, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

VonMises::VonMises(Angle mu_, double kappa_) : mu(mu_), kappa(kappa_) {
  if (kappa_ < 0.0) {
    throw NegativeConcentration("VonMises: kappa = " + std::to_string(kappa_));
  }
  if (kappa > kKappaMax) kappa = kKappaMax;
  log_i0 = log_bessel_i0(kappa);
}

double vm_log_pdf(const VonMises& d, Angle phi) {
  return d.kappa * std::cos(phi.rad() - d.mu.rad()) - kLogTwoPi - d.log_i0;
}

Angle vm_sample_one(const VonMises& d, Rng& rng) {
  if (d.kappa < kUniformKappa) {
    return Angle(rng.uniform(0.0, kTwoPi));
  }
  // Best & Fisher (1979) wrapped-Cauchy envelope rejection.
  double tau = 1.0 + std::sqrt(1.0 + 4.0 * d.kappa * d.kappa);
  double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * d.kappa);
  double r = (1.0 + rho * rho) / (2.0 * rho);
  for (;;) {
    double u1 = rng.uniform();
    double u2 = rng.uniform();
    double z = std::cos(kPi * u1);
    double f = (1.0 + r * z) / (r + z);
    double c = d.kappa * (r - f);
    bool accept = c * (2.0 - c) - u2 > 0.0;
    if (!accept && u2 > 0.0) accept = std::log(c / u2) + 1.0 - c >= 0.0;
    if (accept) {
      double u3 = rng.uniform();
      double dev = std::acos(f);
      return Angle(d.mu.rad() + (u3 < 0.5 ? -dev : dev));
    }
  }
}

std::vector<Angle> vm_sample(const VonMises& d, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Angle> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(vm_sample_one(d, rng));
  return out;
}

double vm_cdf_numeric(const VonMises& d, Angle phi) {
  // Unwrap phi to (mu - pi, mu + pi].
  double s = std::fmod(phi.rad() - d.mu.rad(), kTwoPi);
  if (s <= -kPi) s += kTwoPi;
  if (s > kPi) s -= kTwoPi;
  if (s == -kPi) return 0.0;
  double log_i0 = log_bessel_i0(d.kappa);
  double a = -kPi, b = s;
  double fa = vm_density(d.kappa, log_i0, a);
  double fb = vm_density(d.kappa, log_i0, b);
  double m = 0.5 * (a + b);
  double fm = vm_density(d.kappa, log_i0, m);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(d.kappa, log_i0, a, fa, b, fb, m, fm, whole, 1e-9, 60);
}

double select_fixed_kappa(const std::vector<Angle>& mus, const std::vector<Angle>& phis) {
  if (mus.empty() || phis.empty()) throw EmptyInput("select_fixed_kappa: empty inputs");
  if (mus.size() != phis.size()) {
    throw LengthMismatch("select_fixed_kappa: " + std::to_string(mus.size()) + " means vs " +
                         std::to_string(phis.size()) + " targets");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < mus.size(); ++i) {
    acc += std::cos(phis[i].rad() - mus[i].rad());
  }
  double mean_cos = acc / static_cast<double>(mus.size());
  if (mean_cos <= 0.0) return 0.0;  // A(kappa) >= 0: likelihood maximized at 0
  if (mean_cos >= 1.0 || mean_cos >= bessel_i1_over_i0(kKappaMax)) return kKappaMax;
  return kappa_mle_from_resultant(mean_cos);
}

}  // namespace vmreg
