#include "vmreg/heads.hpp"

#include <cmath>

namespace vmreg {

void HeadKind::validate() const {
  if (tag == Tag::kFixedKappa && fixed_kappa.has_value()) {
    if (!(*fixed_kappa > 0.0) || *fixed_kappa > kKappaMax) {
      throw ConfigMismatch("HeadKind: fixed kappa must lie in (0, kappa_max]");
    }
  }
  if (tag == Tag::kFiniteMixture && mixture_k < 1) throw ConfigMismatch("HeadKind: K < 1");
  if (is_cvae_family()) {
    if (latent_dim < 1) throw ConfigMismatch("HeadKind: latent_dim < 1");
    if (s_train < 1 || s_eval < 1) throw ConfigMismatch("HeadKind: sample counts must be >= 1");
  }
}

namespace {

// Decoders start nearly blind to z at fan-in scale, which stalls latent heads
// on unimodal plateaus; widening the latent input columns seeds enough
// z-sensitivity for the mixture structure to emerge.
constexpr double kLatentInitBoost = 4.0;

void boost_latent_columns(ParamSet& decoder_params, int feature_dim, int latent_dim) {
  Tensor& w0 = decoder_params.values[0];
  for (int i = 0; i < w0.rows; ++i) {
    for (int j = feature_dim; j < feature_dim + latent_dim; ++j) {
      w0.at(i, j) *= kLatentInitBoost;
    }
  }
}

}  // namespace

PredictiveModel make_model(HeadKind head, int input_dim, const std::vector<LayerSpec>& hidden,
                           std::uint64_t init_seed) {
  head.validate();
  PredictiveModel m;
  m.head = head;
  m.input_dim = input_dim;
  switch (head.tag) {
    case HeadKind::Tag::kFixedKappa: {
      m.spec = NetworkSpec{input_dim, hidden, OutputMap::kBiternion, 0, 0};
      Rng rng(Rng::derive(init_seed, 0));
      m.params = init_params(m.spec, rng);
      if (head.fixed_kappa) m.fitted_kappa = *head.fixed_kappa;
      break;
    }
    case HeadKind::Tag::kSingleVonMises: {
      m.spec = NetworkSpec{input_dim, hidden, OutputMap::kBiternionKappa, 0, 0};
      Rng rng(Rng::derive(init_seed, 0));
      m.params = init_params(m.spec, rng);
      break;
    }
    case HeadKind::Tag::kFiniteMixture: {
      m.spec = NetworkSpec{input_dim, hidden, OutputMap::kMixture, head.mixture_k, 0};
      Rng rng(Rng::derive(init_seed, 0));
      m.params = init_params(m.spec, rng);
      break;
    }
    case HeadKind::Tag::kCvae: {
      int l = head.latent_dim;
      m.cvae.latent_dim = l;
      m.cvae.encoder = NetworkSpec{input_dim + 2, hidden, OutputMap::kGaussianParams, 0, l};
      m.cvae.prior = NetworkSpec{input_dim, hidden, OutputMap::kGaussianParams, 0, l};
      m.cvae.decoder = NetworkSpec{input_dim + l, hidden, OutputMap::kBiternionKappa, 0, 0};
      Rng re(Rng::derive(init_seed, 1)), rp(Rng::derive(init_seed, 2)), rd(Rng::derive(init_seed, 3));
      m.cvae.encoder_params = init_params(m.cvae.encoder, re);
      m.cvae.prior_params = init_params(m.cvae.prior, rp);
      m.cvae.decoder_params = init_params(m.cvae.decoder, rd);
      boost_latent_columns(m.cvae.decoder_params, input_dim, l);
      break;
    }
    case HeadKind::Tag::kScvae: {
      int l = head.latent_dim;
      m.cvae.latent_dim = l;
      m.cvae.decoder = NetworkSpec{input_dim + l, hidden, OutputMap::kBiternionKappa, 0, 0};
      Rng rd(Rng::derive(init_seed, 3));
      m.cvae.decoder_params = init_params(m.cvae.decoder, rd);
      boost_latent_columns(m.cvae.decoder_params, input_dim, l);
      break;
    }
  }
  return m;
}

// ---- plain per-example losses ----

double cosine_loss(const Biternion& y_pred, const Biternion& y_true) {
  return 1.0 - (y_pred.c * y_true.c + y_pred.s * y_true.s);
}

double vm_nll(Angle mu, double kappa, Angle phi) {
  if (!(kappa > 0.0) || kappa > kKappaMax) {
    throw NegativeConcentration("vm_nll: kappa must lie in (0, kappa_max]");
  }
  return -(kappa * std::cos(phi.rad() - mu.rad()) - kLogTwoPi - log_bessel_i0(kappa));
}

double mixture_nll(const std::vector<Angle>& mus, const std::vector<double>& kappas,
                   const std::vector<double>& weights, Angle phi) {
  if (mus.size() != kappas.size() || mus.size() != weights.size()) {
    throw LengthMismatch("mixture_nll: parameter lists disagree");
  }
  std::vector<VonMises> comps;
  comps.reserve(mus.size());
  for (std::size_t j = 0; j < mus.size(); ++j) comps.emplace_back(mus[j], kappas[j]);
  return -mix_log_pdf(VonMisesMixture(std::move(comps), weights), phi);
}

double gaussian_kl(const LatentGaussian& q, const LatentGaussian& p) {
  if (q.mean.size() != q.log_var.size() || p.mean.size() != p.log_var.size() ||
      q.mean.size() != p.mean.size()) {
    throw DimensionMismatch("gaussian_kl: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < q.mean.size(); ++i) {
    double dv = q.log_var[i] - p.log_var[i];
    double dm = q.mean[i] - p.mean[i];
    acc += std::exp(dv) + dm * dm * std::exp(-p.log_var[i]) - 1.0 + p.log_var[i] - q.log_var[i];
  }
  return 0.5 * acc;
}

std::vector<double> reparam_sample(const LatentGaussian& g, const std::vector<double>& noise) {
  if (noise.size() != g.mean.size() || g.mean.size() != g.log_var.size()) {
    throw DimensionMismatch("reparam_sample: dimension mismatch");
  }
  std::vector<double> z(g.mean.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = g.mean[i] + std::exp(0.5 * g.log_var[i]) * noise[i];
  }
  return z;
}

// ---- graph fragments ----

Graph::Var vm_logp_graph(Graph& g, Graph::Var bit, Graph::Var kappa, Graph::Var target_bit) {
  Graph::Var cosd = g.rowwise_dot(bit, target_bit);
  return g.add_scalar(g.sub(g.mul(kappa, cosd), g.log_bessel_i0_elem(kappa)), -kLogTwoPi);
}

Graph::Var gaussian_kl_graph(Graph& g, Graph::Var mu_q, Graph::Var lv_q, Graph::Var mu_p,
                             Graph::Var lv_p) {
  Graph::Var dv = g.sub(lv_q, lv_p);
  Graph::Var ratio = g.exp_elem(dv);
  Graph::Var dmean2 = g.square(g.sub(mu_q, mu_p));
  Graph::Var scaled = g.mul(dmean2, g.exp_elem(g.neg(lv_p)));
  Graph::Var inner = g.add_scalar(g.sub(g.add(ratio, scaled), dv), -1.0);
  return g.scale(g.rowwise_sum(inner), 0.5);
}

Graph::Var gaussian_logp_graph(Graph& g, Graph::Var z, Graph::Var mu, Graph::Var lv) {
  int dim = g.value(z).cols;
  Graph::Var d2 = g.square(g.sub(z, mu));
  Graph::Var quad = g.mul(d2, g.exp_elem(g.neg(lv)));
  Graph::Var s = g.rowwise_sum(g.add(quad, lv));
  return g.add_scalar(g.scale(s, -0.5), -0.5 * dim * kLogTwoPi);
}

// ---- objectives ----

namespace {

class CosineObjective final : public Objective {
 public:
  CosineObjective(const NetworkSpec& spec, ParamSet& params) : spec_(spec), params_(params) {}
  std::vector<ParamSet*> param_sets() override { return {&params_}; }
  Graph::Var build(Graph& g, const Batch& batch, const std::vector<Tensor>&) override {
    HeadVars hv = forward_graph(g, spec_, params_, g.input(batch.x));
    Graph::Var dot = g.rowwise_dot(hv.biternion, g.input(batch.target_bit));
    return g.mean_all(g.add_scalar(g.neg(dot), 1.0));
  }

 private:
  const NetworkSpec& spec_;
  ParamSet& params_;
};

class VmNllObjective final : public Objective {
 public:
  VmNllObjective(const NetworkSpec& spec, ParamSet& params) : spec_(spec), params_(params) {}
  std::vector<ParamSet*> param_sets() override { return {&params_}; }
  Graph::Var build(Graph& g, const Batch& batch, const std::vector<Tensor>&) override {
    HeadVars hv = forward_graph(g, spec_, params_, g.input(batch.x));
    Graph::Var logp = vm_logp_graph(g, hv.biternion, hv.kappa, g.input(batch.target_bit));
    return g.mean_all(g.neg(logp));
  }

 private:
  const NetworkSpec& spec_;
  ParamSet& params_;
};

class MixtureNllObjective final : public Objective {
 public:
  MixtureNllObjective(const NetworkSpec& spec, ParamSet& params) : spec_(spec), params_(params) {}
  std::vector<ParamSet*> param_sets() override { return {&params_}; }
  Graph::Var build(Graph& g, const Batch& batch, const std::vector<Tensor>&) override {
    HeadVars hv = forward_graph(g, spec_, params_, g.input(batch.x));
    Graph::Var target = g.input(batch.target_bit);
    Graph::Var stacked = -1;
    for (std::size_t j = 0; j < hv.comp_biternion.size(); ++j) {
      Graph::Var lp = vm_logp_graph(g, hv.comp_biternion[j], hv.comp_kappa[j], target);
      stacked = j == 0 ? lp : g.concat_cols(stacked, lp);
    }
    Graph::Var joint = g.add(stacked, hv.log_weights);
    return g.mean_all(g.neg(g.logsumexp_rows(joint)));
  }

 private:
  const NetworkSpec& spec_;
  ParamSet& params_;
};

class CvaeObjective final : public Objective {
 public:
  CvaeObjective(CvaeNetworks& nets, int s_train) : nets_(nets), s_(s_train) {}
  std::vector<ParamSet*> param_sets() override {
    return {&nets_.encoder_params, &nets_.prior_params, &nets_.decoder_params};
  }
  std::vector<std::pair<int, int>> noise_shapes(int n) const override {
    return std::vector<std::pair<int, int>>(static_cast<std::size_t>(s_), {n, nets_.latent_dim});
  }
  Graph::Var build(Graph& g, const Batch& batch, const std::vector<Tensor>& noise) override {
    Graph::Var x = g.input(batch.x);
    Graph::Var target = g.input(batch.target_bit);
    HeadVars q = forward_graph(g, nets_.encoder, nets_.encoder_params, g.concat_cols(x, target));
    HeadVars p = forward_graph(g, nets_.prior, nets_.prior_params, x);
    Graph::Var sigma_q = g.exp_elem(g.scale(q.gauss_log_var, 0.5));
    Graph::Var rec = -1;
    for (int s = 0; s < s_; ++s) {
      Graph::Var z = g.add(q.gauss_mean, g.mul(sigma_q, g.input(noise[static_cast<std::size_t>(s)])));
      HeadVars dec = forward_graph(g, nets_.decoder, nets_.decoder_params, g.concat_cols(x, z));
      Graph::Var lp = vm_logp_graph(g, dec.biternion, dec.kappa, target);
      rec = s == 0 ? lp : g.add(rec, lp);
    }
    rec = g.scale(rec, 1.0 / static_cast<double>(s_));
    Graph::Var kl = gaussian_kl_graph(g, q.gauss_mean, q.gauss_log_var, p.gauss_mean, p.gauss_log_var);
    return g.mean_all(g.neg(g.sub(rec, kl)));
  }

 private:
  CvaeNetworks& nets_;
  int s_;
};

class ScvaeObjective final : public Objective {
 public:
  ScvaeObjective(CvaeNetworks& nets, int s_train) : nets_(nets), s_(s_train) {}
  std::vector<ParamSet*> param_sets() override { return {&nets_.decoder_params}; }
  std::vector<std::pair<int, int>> noise_shapes(int n) const override {
    return std::vector<std::pair<int, int>>(static_cast<std::size_t>(s_), {n, nets_.latent_dim});
  }
  Graph::Var build(Graph& g, const Batch& batch, const std::vector<Tensor>& noise) override {
    Graph::Var x = g.input(batch.x);
    Graph::Var target = g.input(batch.target_bit);
    Graph::Var stacked = -1;
    for (int s = 0; s < s_; ++s) {
      Graph::Var z = g.input(noise[static_cast<std::size_t>(s)]);
      HeadVars dec = forward_graph(g, nets_.decoder, nets_.decoder_params, g.concat_cols(x, z));
      Graph::Var lp = vm_logp_graph(g, dec.biternion, dec.kappa, target);
      stacked = s == 0 ? lp : g.concat_cols(stacked, lp);
    }
    Graph::Var rows = g.add_scalar(g.logsumexp_rows(stacked), -std::log(static_cast<double>(s_)));
    return g.mean_all(g.neg(rows));
  }

 private:
  CvaeNetworks& nets_;
  int s_;
};

}  // namespace

std::unique_ptr<Objective> make_objective(PredictiveModel& model) {
  switch (model.head.tag) {
    case HeadKind::Tag::kFixedKappa:
      return std::make_unique<CosineObjective>(model.spec, model.params);
    case HeadKind::Tag::kSingleVonMises:
      return std::make_unique<VmNllObjective>(model.spec, model.params);
    case HeadKind::Tag::kFiniteMixture:
      return std::make_unique<MixtureNllObjective>(model.spec, model.params);
    case HeadKind::Tag::kCvae:
      return std::make_unique<CvaeObjective>(model.cvae, model.head.s_train);
    case HeadKind::Tag::kScvae:
      return std::make_unique<ScvaeObjective>(model.cvae, model.head.s_train);
  }
  throw ConfigMismatch("make_objective: unknown head");
}

// ---- per-example latent bounds ----

namespace {

Batch single_example_batch(const std::vector<double>& x, Angle phi) {
  Batch b;
  b.x = Tensor(1, static_cast<int>(x.size()), x);
  Biternion t = angle_to_biternion(phi);
  b.target_bit = Tensor(1, 2, {t.c, t.s});
  return b;
}

std::vector<Tensor> normal_noise(int s, int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor> out;
  for (int i = 0; i < s; ++i) {
    Tensor t(rows, cols);
    for (double& e : t.v) e = rng.normal();
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

double cvae_elbo(const CvaeNetworks& nets, const std::vector<double>& x, Angle phi, int s,
                 std::uint64_t seed) {
  if (s < 1) throw ConfigMismatch("cvae_elbo: S < 1");
  if (nets.encoder_params.values.empty()) throw ConfigMismatch("cvae_elbo: encoder missing");
  Batch b = single_example_batch(x, phi);
  int l = nets.encoder.latent_dim;
  std::vector<Tensor> noise = normal_noise(s, 1, l, seed);

  Graph g;
  Graph::Var xv = g.input(b.x);
  Graph::Var target = g.input(b.target_bit);
  HeadVars q = forward_graph(g, nets.encoder, nets.encoder_params, g.concat_cols(xv, target));
  HeadVars p = forward_graph(g, nets.prior, nets.prior_params, xv);
  Graph::Var sigma_q = g.exp_elem(g.scale(q.gauss_log_var, 0.5));
  Graph::Var rec = -1;
  for (int i = 0; i < s; ++i) {
    Graph::Var z = g.add(q.gauss_mean, g.mul(sigma_q, g.input(noise[static_cast<std::size_t>(i)])));
    HeadVars dec = forward_graph(g, nets.decoder, nets.decoder_params, g.concat_cols(xv, z));
    Graph::Var lp = vm_logp_graph(g, dec.biternion, dec.kappa, target);
    rec = i == 0 ? lp : g.add(rec, lp);
  }
  rec = g.scale(rec, 1.0 / static_cast<double>(s));
  Graph::Var kl = gaussian_kl_graph(g, q.gauss_mean, q.gauss_log_var, p.gauss_mean, p.gauss_log_var);
  double elbo = g.value(g.sub(rec, kl)).v[0];
  if (!std::isfinite(elbo)) throw NonFiniteLoss("cvae_elbo: non-finite bound");
  return elbo;
}

namespace {

// Shared IWAE graph for one batch; handles both the full CVAE and the
// simplified variant (encoder absent -> q = p = N(0, I)).
std::vector<double> iwae_rows(const CvaeNetworks& nets, const Batch& batch, int s,
                              std::uint64_t seed) {
  bool simplified = nets.encoder_params.values.empty();
  std::vector<Tensor> noise = normal_noise(s, batch.size(), nets.latent_dim, seed);

  Graph g;
  Graph::Var xv = g.input(batch.x);
  Graph::Var target = g.input(batch.target_bit);
  Graph::Var stacked = -1;
  if (simplified) {
    for (int i = 0; i < s; ++i) {
      Graph::Var z = g.input(noise[static_cast<std::size_t>(i)]);
      HeadVars dec = forward_graph(g, nets.decoder, nets.decoder_params, g.concat_cols(xv, z));
      Graph::Var lp = vm_logp_graph(g, dec.biternion, dec.kappa, target);
      stacked = i == 0 ? lp : g.concat_cols(stacked, lp);
    }
  } else {
    HeadVars q = forward_graph(g, nets.encoder, nets.encoder_params, g.concat_cols(xv, target));
    HeadVars p = forward_graph(g, nets.prior, nets.prior_params, xv);
    Graph::Var sigma_q = g.exp_elem(g.scale(q.gauss_log_var, 0.5));
    for (int i = 0; i < s; ++i) {
      Graph::Var z = g.add(q.gauss_mean, g.mul(sigma_q, g.input(noise[static_cast<std::size_t>(i)])));
      HeadVars dec = forward_graph(g, nets.decoder, nets.decoder_params, g.concat_cols(xv, z));
      Graph::Var lp = vm_logp_graph(g, dec.biternion, dec.kappa, target);
      Graph::Var lw = g.add(lp, g.sub(gaussian_logp_graph(g, z, p.gauss_mean, p.gauss_log_var),
                                      gaussian_logp_graph(g, z, q.gauss_mean, q.gauss_log_var)));
      stacked = i == 0 ? lw : g.concat_cols(stacked, lw);
    }
  }
  Graph::Var rows = g.add_scalar(g.logsumexp_rows(stacked), -std::log(static_cast<double>(s)));
  return g.value(rows).v;
}

}  // namespace

double iwae_log_lik(const CvaeNetworks& nets, const std::vector<double>& x, Angle phi, int s,
                    std::uint64_t seed) {
  if (s < 1) throw ConfigMismatch("iwae_log_lik: S < 1");
  double v = iwae_rows(nets, single_example_batch(x, phi), s, seed)[0];
  if (!std::isfinite(v)) throw NonFiniteLoss("iwae_log_lik: non-finite bound");
  return v;
}

double scvae_loss(const CvaeNetworks& nets, const std::vector<double>& x, Angle phi, int s,
                  std::uint64_t seed) {
  if (s < 1) throw ConfigMismatch("scvae_loss: S < 1");
  if (!nets.encoder_params.values.empty()) {
    throw ConfigMismatch("scvae_loss: model carries an encoder; use cvae_elbo");
  }
  double v = -iwae_rows(nets, single_example_batch(x, phi), s, seed)[0];
  if (!std::isfinite(v)) throw NonFiniteLoss("scvae_loss: non-finite loss");
  return v;
}

std::vector<double> iwae_log_lik_batch(const PredictiveModel& model, const Batch& batch, int s,
                                       std::uint64_t seed) {
  if (!model.head.is_cvae_family()) {
    throw ConfigMismatch("iwae_log_lik_batch: not a latent-variable head");
  }
  return iwae_rows(model.cvae, batch, s, seed);
}

// ---- predictive densities ----

PredictiveDensity predictive_density(const PredictiveModel& model, const std::vector<double>& x,
                                     int s_eval, std::uint64_t seed) {
  Tensor xr(1, static_cast<int>(x.size()), x);
  switch (model.head.tag) {
    case HeadKind::Tag::kFixedKappa: {
      HeadOutputs out = forward(model.spec, model.params, xr);
      Angle mu = biternion_to_angle(Biternion{out.biternion.at(0, 0), out.biternion.at(0, 1)});
      return PredictiveDensity{DensityForm::kSingle,
                               VonMisesMixture({VonMises(mu, model.fitted_kappa)}, {1.0})};
    }
    case HeadKind::Tag::kSingleVonMises: {
      HeadOutputs out = forward(model.spec, model.params, xr);
      Angle mu = biternion_to_angle(Biternion{out.biternion.at(0, 0), out.biternion.at(0, 1)});
      return PredictiveDensity{DensityForm::kSingle,
                               VonMisesMixture({VonMises(mu, out.kappa.at(0, 0))}, {1.0})};
    }
    case HeadKind::Tag::kFiniteMixture: {
      HeadOutputs out = forward(model.spec, model.params, xr);
      std::vector<VonMises> comps;
      std::vector<double> w;
      for (std::size_t j = 0; j < out.comp_biternion.size(); ++j) {
        Angle mu = biternion_to_angle(
            Biternion{out.comp_biternion[j].at(0, 0), out.comp_biternion[j].at(0, 1)});
        comps.emplace_back(mu, out.comp_kappa[j].at(0, 0));
        w.push_back(out.weights.at(0, static_cast<int>(j)));
      }
      return PredictiveDensity{DensityForm::kFiniteMixture,
                               VonMisesMixture(std::move(comps), std::move(w))};
    }
    case HeadKind::Tag::kCvae:
    case HeadKind::Tag::kScvae: {
      if (s_eval < 1) throw ConfigMismatch("predictive_density: s_eval < 1");
      int d = static_cast<int>(x.size());
      int l = model.cvae.decoder.input_dim - d;
      Rng rng(seed);
      Tensor dec_in(s_eval, d + l);
      if (model.head.tag == HeadKind::Tag::kCvae) {
        HeadOutputs prior = forward(model.cvae.prior, model.cvae.prior_params, xr);
        for (int i = 0; i < s_eval; ++i) {
          for (int j = 0; j < d; ++j) dec_in.at(i, j) = x[static_cast<std::size_t>(j)];
          for (int j = 0; j < l; ++j) {
            double sigma = std::exp(0.5 * prior.gauss_log_var.at(0, j));
            dec_in.at(i, d + j) = prior.gauss_mean.at(0, j) + sigma * rng.normal();
          }
        }
      } else {
        for (int i = 0; i < s_eval; ++i) {
          for (int j = 0; j < d; ++j) dec_in.at(i, j) = x[static_cast<std::size_t>(j)];
          for (int j = 0; j < l; ++j) dec_in.at(i, d + j) = rng.normal();
        }
      }
      HeadOutputs dec = forward(model.cvae.decoder, model.cvae.decoder_params, dec_in);
      std::vector<VonMises> comps;
      for (int i = 0; i < s_eval; ++i) {
        Angle mu = biternion_to_angle(Biternion{dec.biternion.at(i, 0), dec.biternion.at(i, 1)});
        comps.emplace_back(mu, dec.kappa.at(i, 0));
      }
      std::vector<double> w(static_cast<std::size_t>(s_eval), 1.0 / s_eval);
      return PredictiveDensity{DensityForm::kMonteCarloMixture,
                               VonMisesMixture(std::move(comps), std::move(w))};
    }
  }
  throw ConfigMismatch("predictive_density: unknown head");
}

double multi_angle_log_pdf(const std::array<const PredictiveModel*, 3>& models,
                           const std::vector<double>& x, const std::array<Angle, 3>& angles,
                           int s_eval, std::uint64_t seed) {
  double acc = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    PredictiveDensity d = predictive_density(*models[i], x, s_eval, Rng::derive(seed, i));
    acc += d.log_pdf(angles[i]);
  }
  return acc;
}

}  // namespace vmreg
