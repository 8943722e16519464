#pragma once

#include <array>

#include "vmreg/heads.hpp"

namespace vmreg {

/// Decision-theoretic point prediction: the sample minimizing the empirical
/// expected absolute angular deviation over the sample set.
struct PointEstimate {
  Angle angle;
  double expected_loss = 0.0;  // mean AAD at the chosen candidate, <= pi
  int sample_count = 0;
};

/// Draws S samples from the density and returns the candidate with minimal
/// mean AAD to the whole set; exact ties resolve to the smallest index.
PointEstimate point_estimate(const PredictiveDensity& d, int s, std::uint64_t seed);

/// The deterministic core of point_estimate over an explicit sample set.
PointEstimate point_estimate_over(const std::vector<Angle>& samples);

struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;  // population standard deviation over sqrt(n)
  std::size_t n = 0;
};

/// Mean absolute angular deviation between paired angle lists.
MeanSem maad(const std::vector<Angle>& estimates, const std::vector<Angle>& truths);

/// Mean predictive log-density at the true angles: exact for closed-form
/// heads, importance-weighted (S = s_eval samples) for the latent heads.
MeanSem mean_log_likelihood(const PredictiveModel& model, const Tensor& x,
                            const std::vector<Angle>& phis, int s_eval, std::uint64_t seed);

/// Proper rotation matrix (orthonormal, det +1).
struct RotationMatrix {
  std::array<std::array<double, 3>, 3> m{};
};

/// Fixed convention: R = Rz(tilt) * Rx(elevation) * Rz(azimuth).
RotationMatrix euler_to_rotmat(Angle azimuth, Angle elevation, Angle tilt);

/// Riemannian distance on SO(3): arccos((trace(R1^T R2) - 1)/2), in [0, pi].
double geodesic_distance(const RotationMatrix& r1, const RotationMatrix& r2);

struct AccMedErr {
  double acc_pi6 = 0.0;      // fraction of geodesic errors below pi/6
  double med_err_deg = 0.0;  // median geodesic error, degrees
};

/// Viewpoint metrics over (azimuth, elevation, tilt) triples. The median of
/// an even count is the mean of the two central order statistics.
AccMedErr acc_med_err(const std::vector<std::array<Angle, 3>>& pred,
                      const std::vector<std::array<Angle, 3>>& truth);

/// Direction of the density's first circular moment,
/// arg(sum_j w_j A(kappa_j) e^{i mu_j}); 0 by convention for flat densities.
Angle predictive_circular_mean(const PredictiveDensity& d);

}  // namespace vmreg
