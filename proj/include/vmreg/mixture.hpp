#pragma once

#include <cstdint>
#include <vector>

#include "vmreg/vonmises.hpp"

namespace vmreg {

/// Finite mixture of von Mises components. Weights live on the simplex:
/// construction rejects |sum - 1| > 1e-6 and silently renormalizes drift in
/// (1e-9, 1e-6], which is what softmax outputs accumulate.
class VonMisesMixture {
 public:
  VonMisesMixture(std::vector<VonMises> components, std::vector<double> weights);

  const std::vector<VonMises>& components() const { return components_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return components_.size(); }

 private:
  std::vector<VonMises> components_;
  std::vector<double> weights_;
};

/// log sum_j w_j vm_j(phi), via log-sum-exp.
double mix_log_pdf(const VonMisesMixture& m, Angle phi);

/// Ancestral sampling: categorical over weights, then the component sampler.
Angle mix_sample_one(const VonMisesMixture& m, Rng& rng);
std::vector<Angle> mix_sample(const VonMisesMixture& m, std::size_t n, std::uint64_t seed);

/// Grid argmax of the log density; ties resolve to the smallest angle.
Angle mix_mode_grid(const VonMisesMixture& m, std::size_t grid_size);

}  // namespace vmreg
