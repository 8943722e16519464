#include "vmreg/decision.hpp"

#include <algorithm>
#include <cmath>

namespace vmreg {

PointEstimate point_estimate(const PredictiveDensity& d, int s, std::uint64_t seed) {
  if (s < 1) throw ConfigMismatch("point_estimate: S < 1");
  return point_estimate_over(d.sample(static_cast<std::size_t>(s), seed));
}

PointEstimate point_estimate_over(const std::vector<Angle>& samples) {
  if (samples.empty()) throw EmptyInput("point_estimate_over: no samples");
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_j = 0;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) acc += aad(samples[j], samples[k]);
    double risk = acc / static_cast<double>(samples.size());
    if (risk < best) {  // strict: ties keep the smallest index
      best = risk;
      best_j = j;
    }
  }
  return PointEstimate{samples[best_j], best, static_cast<int>(samples.size())};
}

namespace {

MeanSem mean_sem(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  double mean = acc / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  double var = ss / static_cast<double>(xs.size());
  return MeanSem{mean, std::sqrt(var / static_cast<double>(xs.size())), xs.size()};
}

}  // namespace

MeanSem maad(const std::vector<Angle>& estimates, const std::vector<Angle>& truths) {
  if (estimates.empty()) throw EmptyInput("maad: empty inputs");
  if (estimates.size() != truths.size()) {
    throw LengthMismatch("maad: " + std::to_string(estimates.size()) + " estimates vs " +
                         std::to_string(truths.size()) + " truths");
  }
  std::vector<double> devs(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) devs[i] = aad(estimates[i], truths[i]);
  return mean_sem(devs);
}

MeanSem mean_log_likelihood(const PredictiveModel& model, const Tensor& x,
                            const std::vector<Angle>& phis, int s_eval, std::uint64_t seed) {
  if (phis.empty()) throw EmptyInput("mean_log_likelihood: empty dataset");
  if (x.rows != static_cast<int>(phis.size())) {
    throw LengthMismatch("mean_log_likelihood: feature/target row mismatch");
  }
  std::vector<double> ll(phis.size());
  if (model.head.is_cvae_family()) {
    Batch b;
    b.x = x;
    b.target_bit = Tensor(x.rows, 2);
    for (int i = 0; i < x.rows; ++i) {
      Biternion t = angle_to_biternion(phis[static_cast<std::size_t>(i)]);
      b.target_bit.at(i, 0) = t.c;
      b.target_bit.at(i, 1) = t.s;
    }
    ll = iwae_log_lik_batch(model, b, s_eval, seed);
  } else {
    for (std::size_t i = 0; i < phis.size(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(x.cols));
      for (int j = 0; j < x.cols; ++j) row[static_cast<std::size_t>(j)] = x.at(static_cast<int>(i), j);
      PredictiveDensity d = predictive_density(model, row, s_eval, Rng::derive(seed, i));
      ll[i] = d.log_pdf(phis[i]);
    }
  }
  return mean_sem(ll);
}

namespace {

RotationMatrix rot_z(double a) {
  RotationMatrix r;
  double c = std::cos(a), s = std::sin(a);
  r.m = {{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}};
  return r;
}

RotationMatrix rot_x(double a) {
  RotationMatrix r;
  double c = std::cos(a), s = std::sin(a);
  r.m = {{{1.0, 0.0, 0.0}, {0.0, c, -s}, {0.0, s, c}}};
  return r;
}

RotationMatrix matmul(const RotationMatrix& a, const RotationMatrix& b) {
  RotationMatrix r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += a.m[i][k] * b.m[k][j];
      r.m[i][j] = acc;
    }
  return r;
}

}  // namespace

RotationMatrix euler_to_rotmat(Angle azimuth, Angle elevation, Angle tilt) {
  return matmul(rot_z(tilt.rad()), matmul(rot_x(elevation.rad()), rot_z(azimuth.rad())));
}

double geodesic_distance(const RotationMatrix& r1, const RotationMatrix& r2) {
  // trace(R1^T R2) = sum_ij R1[i][j] * R2[i][j]
  double tr = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) tr += r1.m[i][j] * r2.m[i][j];
  double arg = 0.5 * (tr - 1.0);
  arg = std::clamp(arg, -1.0, 1.0);  // float drift near 0 and pi
  return std::acos(arg);
}

Angle predictive_circular_mean(const PredictiveDensity& d) {
  double c = 0.0, s = 0.0;
  for (std::size_t j = 0; j < d.mixture.size(); ++j) {
    double r = d.mixture.weights()[j] * bessel_i1_over_i0(d.mixture.components()[j].kappa);
    c += r * std::cos(d.mixture.components()[j].mu.rad());
    s += r * std::sin(d.mixture.components()[j].mu.rad());
  }
  if (std::hypot(c, s) < 1e-12) return Angle(0.0);
  return Angle(std::atan2(s, c));
}

AccMedErr acc_med_err(const std::vector<std::array<Angle, 3>>& pred,
                      const std::vector<std::array<Angle, 3>>& truth) {
  if (pred.empty()) throw EmptyInput("acc_med_err: empty inputs");
  if (pred.size() != truth.size()) throw LengthMismatch("acc_med_err: length mismatch");
  std::vector<double> errs(pred.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    RotationMatrix rp = euler_to_rotmat(pred[i][0], pred[i][1], pred[i][2]);
    RotationMatrix rt = euler_to_rotmat(truth[i][0], truth[i][1], truth[i][2]);
    errs[i] = geodesic_distance(rp, rt);
    if (errs[i] < kPi / 6.0) ++hits;
  }
  std::sort(errs.begin(), errs.end());
  std::size_t n = errs.size();
  double med = n % 2 ? errs[n / 2] : 0.5 * (errs[n / 2 - 1] + errs[n / 2]);
  return AccMedErr{static_cast<double>(hits) / static_cast<double>(n), med * 180.0 / kPi};
}

}  // namespace vmreg
