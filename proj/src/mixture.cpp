#include "vmreg/mixture.hpp"

#include <cmath>
#include <limits>

namespace vmreg {

VonMisesMixture::VonMisesMixture(std::vector<VonMises> components, std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty()) throw EmptyInput("VonMisesMixture: no components");
  if (components_.size() != weights_.size()) {
    throw LengthMismatch("VonMisesMixture: " + std::to_string(components_.size()) +
                         " components vs " + std::to_string(weights_.size()) + " weights");
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (w < 0.0) throw InvalidMixtureWeights("VonMisesMixture: negative weight");
    sum += w;
  }
  double dev = std::fabs(sum - 1.0);
  if (dev > 1e-6) {
    throw InvalidMixtureWeights("VonMisesMixture: weights sum to " + std::to_string(sum));
  }
  if (dev > 1e-9) {
    for (double& w : weights_) w /= sum;
  }
}

double mix_log_pdf(const VonMisesMixture& m, Angle phi) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(m.size());
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (m.weights()[j] == 0.0) continue;
    double t = std::log(m.weights()[j]) + vm_log_pdf(m.components()[j], phi);
    terms.push_back(t);
    if (t > best) best = t;
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - best);
  return best + std::log(acc);
}

Angle mix_sample_one(const VonMisesMixture& m, Rng& rng) {
  double u = rng.uniform();
  double cum = 0.0;
  std::size_t pick = m.size() - 1;
  for (std::size_t j = 0; j < m.size(); ++j) {
    cum += m.weights()[j];
    if (u < cum) {
      pick = j;
      break;
    }
  }
  return vm_sample_one(m.components()[pick], rng);
}

std::vector<Angle> mix_sample(const VonMisesMixture& m, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Angle> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(mix_sample_one(m, rng));
  return out;
}

Angle mix_mode_grid(const VonMisesMixture& m, std::size_t grid_size) {
  if (grid_size < 16) throw std::invalid_argument("mix_mode_grid: grid_size < 16");
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < grid_size; ++i) {
    double lp = mix_log_pdf(m, Angle(kTwoPi * static_cast<double>(i) / grid_size));
    if (lp > best) {  // strict: ties keep the earlier, i.e. smaller, angle
      best = lp;
      best_i = i;
    }
  }
  return Angle(kTwoPi * static_cast<double>(best_i) / grid_size);
}

}  // namespace vmreg
