#include "vmreg/circmath.hpp"

#include <cmath>

namespace vmreg {

namespace {

// Switch between the power series and the asymptotic expansion. Both branches
// agree to better than 1e-11 in log I0 at this point.
constexpr double kBesselSwitch = 15.0;

double series_log_i0(double kappa) {
  // I0(x) = 1 + sum_{k>=1} (x^2/4)^k / (k!)^2, summed as 1 + r with log1p.
  double q = 0.25 * kappa * kappa;
  double term = q;
  double rest = q;
  for (int k = 2; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * k);
    rest += term;
    if (term < rest * 1e-18) break;
  }
  return std::log1p(rest);
}

double asymptotic_log_i0(double kappa) {
  // I0(x) ~ e^x / sqrt(2 pi x) * (1 + 1/(8x) + 9/(128 x^2) + ...), with
  // term ratio (2k-1)^2 / (8 k x). Sixteen terms put the truncation floor
  // near 1e-12 at the switch point.
  double term = 1.0;
  double rest = 0.0;
  for (int k = 1; k <= 16; ++k) {
    double odd = 2.0 * k - 1.0;
    term *= odd * odd / (8.0 * k * kappa);
    rest += term;
  }
  return kappa - 0.5 * std::log(kTwoPi * kappa) + std::log1p(rest);
}

double series_i1_over_i0(double kappa) {
  double q = 0.25 * kappa * kappa;
  double t0 = 1.0, s0 = 1.0;  // I0 / 1
  double t1 = 1.0, s1 = 1.0;  // I1 / (kappa/2)
  for (int k = 1; k < 500; ++k) {
    t0 *= q / (static_cast<double>(k) * k);
    t1 *= q / (static_cast<double>(k) * (k + 1));
    s0 += t0;
    s1 += t1;
    if (t0 < s0 * 1e-18 && t1 < s1 * 1e-18) break;
  }
  return 0.5 * kappa * s1 / s0;
}

double asymptotic_i1_over_i0(double kappa) {
  // Ratio of the nu=1 and nu=0 asymptotic tails; the e^x/sqrt(2 pi x) factor
  // cancels. Term ratio for order nu: ((2k-1)^2 - 4 nu^2) / (8 k x).
  double t0 = 1.0, s0 = 1.0;
  double t1 = 1.0, s1 = 1.0;
  for (int k = 1; k <= 16; ++k) {
    double odd = 2.0 * k - 1.0;
    t0 *= odd * odd / (8.0 * k * kappa);
    t1 *= (odd * odd - 4.0) / (8.0 * k * kappa);
    s0 += t0;
    s1 += t1;
  }
  return s1 / s0;
}

}  // namespace

Angle::Angle(double radians) {
  double r = std::fmod(radians, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;  // fmod drift at the wrap point
  rad_ = r;
}

Biternion angle_to_biternion(Angle phi) {
  return Biternion{std::cos(phi.rad()), std::sin(phi.rad())};
}

Angle biternion_to_angle(const Biternion& b) {
  return Angle(std::atan2(b.s, b.c));
}

Biternion normalize2(double x, double y) {
  double n = std::hypot(x, y);
  if (!(n > kNormEps)) {
    throw DegenerateVector("normalize2: vector norm " + std::to_string(n) +
                           " at or below " + std::to_string(kNormEps));
  }
  return Biternion{x / n, y / n};
}

double aad(Angle a, Angle b) {
  double d = std::fabs(a.rad() - b.rad());
  return std::min(d, kTwoPi - d);
}

double log_bessel_i0(double kappa) {
  if (kappa < 0.0) {
    throw NegativeConcentration("log_bessel_i0: kappa = " + std::to_string(kappa));
  }
  return kappa <= kBesselSwitch ? series_log_i0(kappa) : asymptotic_log_i0(kappa);
}

double bessel_i1_over_i0(double kappa) {
  if (kappa < 0.0) {
    throw NegativeConcentration("bessel_i1_over_i0: kappa = " + std::to_string(kappa));
  }
  if (kappa == 0.0) return 0.0;
  return kappa <= kBesselSwitch ? series_i1_over_i0(kappa) : asymptotic_i1_over_i0(kappa);
}

CircularSummary circular_summary(const std::vector<Angle>& samples) {
  if (samples.empty()) throw EmptyInput("circular_summary: no samples");
  double sc = 0.0, ss = 0.0;
  for (const Angle& a : samples) {
    sc += std::cos(a.rad());
    ss += std::sin(a.rad());
  }
  CircularSummary out;
  out.count = samples.size();
  out.resultant_length = std::hypot(sc, ss) / static_cast<double>(samples.size());
  if (out.resultant_length > 1.0) out.resultant_length = 1.0;  // float drift
  if (out.resultant_length >= kResultantEps) out.mean = Angle(std::atan2(ss, sc));
  return out;
}

double kappa_mle_from_resultant(double r) {
  if (r < 0.0 || r >= 1.0) {
    throw ResultantOutOfRange("kappa_mle_from_resultant: r = " + std::to_string(r));
  }
  if (r == 0.0) return 0.0;
  if (r >= bessel_i1_over_i0(kKappaMax)) return kKappaMax;
  double lo = 0.0, hi = kKappaMax;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double a = bessel_i1_over_i0(mid);
    if (std::fabs(a - r) < 1e-13) return mid;
    (a < r ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace vmreg
