#include "vmreg/synthetic.hpp"

#include <cmath>

#include "vmreg/rng.hpp"

namespace vmreg {

namespace {

constexpr double kKappaLinkBias = 2.5;
constexpr double kKappaLinkFloor = 0.5;
constexpr double kKappaLinkScale = 0.75;  // std of the w3 entries
constexpr double kDefaultUnimodalKappa = 5.0;

double dot(const std::vector<double>& w, const std::vector<double>& x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * x[i];
  return acc;
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace

SyntheticTask::SyntheticTask(const SyntheticSpec& spec) : spec_(spec) {
  if (spec_.feature_dim < 1) throw ConfigMismatch("SyntheticTask: feature_dim < 1");
  double wsum = spec_.bimodal_weights[0] + spec_.bimodal_weights[1];
  if (spec_.bimodal_weights[0] < 0.0 || spec_.bimodal_weights[1] < 0.0 ||
      std::fabs(wsum - 1.0) > 1e-9) {
    throw ConfigMismatch("SyntheticTask: bimodal weights must lie on the simplex");
  }
  if (spec_.constant_kappa && (*spec_.constant_kappa < 0.0 || *spec_.constant_kappa > kKappaMax)) {
    throw ConfigMismatch("SyntheticTask: constant kappa outside [0, kappa_max]");
  }
  Rng rng(Rng::derive(spec_.family_seed, 17));
  w1_.resize(static_cast<std::size_t>(spec_.feature_dim));
  w2_.resize(static_cast<std::size_t>(spec_.feature_dim));
  w3_.resize(static_cast<std::size_t>(spec_.feature_dim));
  for (double& e : w1_) e = rng.normal();
  for (double& e : w2_) e = rng.normal();
  for (double& e : w3_) e = kKappaLinkScale * rng.normal();
}

double SyntheticTask::mu_of(const std::vector<double>& x) const {
  return Angle(2.0 * std::atan2(dot(w2_, x), dot(w1_, x))).rad();
}

double SyntheticTask::kappa_of(const std::vector<double>& x) const {
  if (spec_.constant_kappa) return *spec_.constant_kappa;
  if (spec_.kind == SyntheticKind::kUnimodal) return kDefaultUnimodalKappa;
  return softplus(dot(w3_, x) + kKappaLinkBias) + kKappaLinkFloor;
}

VonMisesMixture SyntheticTask::conditional(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != spec_.feature_dim) {
    throw ShapeMismatch("SyntheticTask: feature dimension mismatch");
  }
  Angle mu(mu_of(x));
  double kappa = kappa_of(x);
  if (spec_.kind == SyntheticKind::kBimodal) {
    return VonMisesMixture({VonMises(mu, kappa), VonMises(Angle(mu.rad() + kPi), kappa)},
                           {spec_.bimodal_weights[0], spec_.bimodal_weights[1]});
  }
  return VonMisesMixture({VonMises(mu, kappa)}, {1.0});
}

double SyntheticTask::true_log_pdf(const std::vector<double>& x, Angle phi) const {
  return mix_log_pdf(conditional(x), phi);
}

Dataset SyntheticTask::generate(int n, std::uint64_t data_seed, const std::string& split) const {
  if (n < 1) throw ConfigMismatch("SyntheticTask::generate: n < 1");
  Rng rng(Rng::derive(data_seed, 23));
  Dataset d;
  d.split = split;
  d.x = Tensor(n, spec_.feature_dim);
  d.phi.reserve(static_cast<std::size_t>(n));
  std::vector<double> row(static_cast<std::size_t>(spec_.feature_dim));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < spec_.feature_dim; ++j) {
      row[static_cast<std::size_t>(j)] = rng.uniform(-1.0, 1.0);
      d.x.at(i, j) = row[static_cast<std::size_t>(j)];
    }
    d.phi.push_back(mix_sample_one(conditional(row), rng));
  }
  return d;
}

double SyntheticTask::bayes_log_likelihood(const Dataset& data) const {
  if (data.size() < 1) throw EmptyInput("bayes_log_likelihood: empty dataset");
  if (data.multi()) throw ConfigMismatch("bayes_log_likelihood: expected single-angle data");
  double acc = 0.0;
  std::vector<double> row(static_cast<std::size_t>(data.dim()));
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.dim(); ++j) row[static_cast<std::size_t>(j)] = data.x.at(i, j);
    acc += true_log_pdf(row, data.phi[static_cast<std::size_t>(i)]);
  }
  return acc / static_cast<double>(data.size());
}

Dataset generate_multi(const std::array<SyntheticTask, 3>& tasks, int n, std::uint64_t data_seed,
                       const std::string& split) {
  int d = tasks[0].spec().feature_dim;
  for (const SyntheticTask& t : tasks) {
    if (t.spec().feature_dim != d) throw ConfigMismatch("generate_multi: feature dims disagree");
  }
  if (n < 1) throw ConfigMismatch("generate_multi: n < 1");
  Rng rng(Rng::derive(data_seed, 29));
  Dataset out;
  out.split = split;
  out.x = Tensor(n, d);
  out.triples.reserve(static_cast<std::size_t>(n));
  std::vector<double> row(static_cast<std::size_t>(d));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      row[static_cast<std::size_t>(j)] = rng.uniform(-1.0, 1.0);
      out.x.at(i, j) = row[static_cast<std::size_t>(j)];
    }
    std::array<Angle, 3> tri{};
    for (std::size_t k = 0; k < 3; ++k) tri[k] = mix_sample_one(tasks[k].conditional(row), rng);
    out.triples.push_back(tri);
  }
  return out;
}

}  // namespace vmreg
