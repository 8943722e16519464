#pragma once

#include <array>
#include <optional>
#include <string>

#include "vmreg/mixture.hpp"
#include "vmreg/tensor.hpp"

namespace vmreg {

/// Feature/target pairs with a split tag. Either `phi` (single angle per row)
/// or `triples` (azimuth, elevation, tilt) is populated.
struct Dataset {
  Tensor x;
  std::vector<Angle> phi;
  std::vector<std::array<Angle, 3>> triples;
  std::string split = "train";

  bool multi() const { return !triples.empty(); }
  int size() const { return x.rows; }
  int dim() const { return x.cols; }
};

enum class SyntheticKind { kUnimodal, kHeteroscedastic, kBimodal };

/// A smooth synthetic regression family with a known conditional density:
///   x ~ U[-1,1]^d
///   mu(x)    = 2 * atan2(w2.x, w1.x)  (mod 2 pi)
///   kappa(x) = softplus(w3.x + 2.5) + 0.5, or a constant when configured
///   bimodal adds a second mode at mu(x) + pi with fixed weights.
/// The direction vectors are standard normal draws fixed by family_seed.
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kHeteroscedastic;
  int feature_dim = 8;
  std::uint64_t family_seed = 1;
  std::optional<double> constant_kappa;  // kUnimodal defaults to 5.0
  std::array<double, 2> bimodal_weights{0.6, 0.4};
};

/// The spec plus its drawn parameter functions: generates data and evaluates
/// the true conditional density (the oracle ceiling for every model).
class SyntheticTask {
 public:
  explicit SyntheticTask(const SyntheticSpec& spec);

  const SyntheticSpec& spec() const { return spec_; }

  /// True p(phi | x) as a one- or two-component mixture.
  VonMisesMixture conditional(const std::vector<double>& x) const;
  double true_log_pdf(const std::vector<double>& x, Angle phi) const;

  Dataset generate(int n, std::uint64_t data_seed, const std::string& split = "train") const;

  /// Mean true conditional log-density over the dataset rows: the expected
  /// log-likelihood no model can beat.
  double bayes_log_likelihood(const Dataset& data) const;

  double mu_of(const std::vector<double>& x) const;
  double kappa_of(const std::vector<double>& x) const;

 private:
  SyntheticSpec spec_;
  std::vector<double> w1_, w2_, w3_;
};

/// Shared-feature triple-angle dataset: one feature draw, each task supplies
/// one of (azimuth, elevation, tilt). Tasks must agree on feature_dim.
Dataset generate_multi(const std::array<SyntheticTask, 3>& tasks, int n, std::uint64_t data_seed,
                       const std::string& split = "train");

}  // namespace vmreg
