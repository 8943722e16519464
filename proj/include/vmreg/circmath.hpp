#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "vmreg/errors.hpp"

namespace vmreg {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.1415926535897932384626433832795;
inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

/// Hard cap on von Mises concentration. Unbounded kappa makes the likelihood
/// degenerate on exact-fit data, so every kappa in the library saturates here.
inline constexpr double kKappaMax = 1e4;

inline constexpr double kNormEps = 1e-12;
inline constexpr double kResultantEps = 1e-9;

/// An angle stored as its canonical representative in [0, 2*pi).
class Angle {
 public:
  Angle() = default;
  explicit Angle(double radians);
  double rad() const { return rad_; }
  friend bool operator==(Angle a, Angle b) { return a.rad_ == b.rad_; }

 private:
  double rad_ = 0.0;
};

/// Unit 2-vector (cos phi, sin phi). Only the factory functions below build
/// these, which keeps c^2 + s^2 = 1 to within 1e-12.
struct Biternion {
  double c = 1.0;
  double s = 0.0;
};

struct CircularSummary {
  std::optional<Angle> mean;  // absent when resultant_length < kResultantEps
  double resultant_length = 0.0;
  std::size_t count = 0;
};

Biternion angle_to_biternion(Angle phi);
Angle biternion_to_angle(const Biternion& b);

/// Projects a raw 2-vector onto the unit circle. Throws DegenerateVector when
/// the norm is at or below kNormEps.
Biternion normalize2(double x, double y);

/// Absolute angular deviation: min(|a-b|, 2*pi-|a-b|), in [0, pi].
double aad(Angle a, Angle b);

/// log I0(kappa), stable for the whole [0, kKappaMax] range (I0 itself
/// overflows doubles near kappa ~ 700). Power series below the switch point,
/// asymptotic expansion above.
double log_bessel_i0(double kappa);

/// Mean resultant function A(kappa) = I1(kappa)/I0(kappa), in [0, 1).
double bessel_i1_over_i0(double kappa);

CircularSummary circular_summary(const std::vector<Angle>& samples);

/// Numerically inverts A(kappa) = r. Result is capped at kKappaMax; r outside
/// [0, 1) throws ResultantOutOfRange.
double kappa_mle_from_resultant(double r);

}  // namespace vmreg
