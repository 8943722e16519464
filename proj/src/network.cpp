#include "vmreg/network.hpp"

#include <cmath>

#include "vmreg/circmath.hpp"

namespace vmreg {

int NetworkSpec::output_arity() const {
  switch (output) {
    case OutputMap::kBiternion:
      return 2;
    case OutputMap::kBiternionKappa:
      return 3;
    case OutputMap::kMixture:
      return 4 * mixture_k;
    case OutputMap::kGaussianParams:
      return 2 * latent_dim;
  }
  return 0;
}

void NetworkSpec::validate() const {
  if (input_dim < 1) throw ShapeMismatch("NetworkSpec: input_dim < 1");
  for (const LayerSpec& l : hidden) {
    if (l.width < 1) throw ShapeMismatch("NetworkSpec: hidden width < 1");
  }
  if (output == OutputMap::kMixture && mixture_k < 1) {
    throw ShapeMismatch("NetworkSpec: mixture head needs K >= 1");
  }
  if (output == OutputMap::kGaussianParams && latent_dim < 1) {
    throw ShapeMismatch("NetworkSpec: gaussian head needs latent_dim >= 1");
  }
}

void ParamSet::zero_grads() {
  for (Tensor& g : grads) g.fill(0.0);
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const Tensor& t : values) n += t.size();
  return n;
}

bool ParamSet::all_finite() const {
  for (const Tensor& t : values)
    if (!t.all_finite()) return false;
  return true;
}

ParamSet init_params(const NetworkSpec& spec, Rng& rng) {
  spec.validate();
  ParamSet p;
  int in = spec.input_dim;
  auto push_layer = [&](int out) {
    Tensor w(out, in);
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& e : w.v) e = rng.uniform(-bound, bound);
    p.values.push_back(std::move(w));
    p.values.emplace_back(1, out);  // zero bias
    in = out;
  };
  for (const LayerSpec& l : spec.hidden) push_layer(l.width);
  push_layer(spec.output_arity());
  for (const Tensor& t : p.values) p.grads.emplace_back(t.rows, t.cols);
  return p;
}

namespace {

Graph::Var apply_act(Graph& g, Graph::Var v, Activation act) {
  switch (act) {
    case Activation::kRelu:
      return g.relu(v);
    case Activation::kTanh:
      return g.tanh_act(v);
    case Activation::kIdentity:
      return v;
  }
  return v;
}

}  // namespace

HeadVars forward_graph(Graph& g, const NetworkSpec& spec, const ParamSet& params, Graph::Var x) {
  if (g.value(x).cols != spec.input_dim) {
    throw ShapeMismatch("forward: input has " + std::to_string(g.value(x).cols) +
                        " features, spec wants " + std::to_string(spec.input_dim));
  }
  std::size_t expect = 2 * (spec.hidden.size() + 1);
  if (params.values.size() != expect) throw ShapeMismatch("forward: parameter count mismatch");

  Graph::Var h = x;
  std::size_t pi = 0;
  for (const LayerSpec& l : spec.hidden) {
    Graph::Var w = g.param(&params.values[pi], const_cast<Tensor*>(&params.grads[pi]));
    Graph::Var b = g.param(&params.values[pi + 1], const_cast<Tensor*>(&params.grads[pi + 1]));
    pi += 2;
    h = apply_act(g, g.affine(h, w, b), l.act);
  }
  Graph::Var w = g.param(&params.values[pi], const_cast<Tensor*>(&params.grads[pi]));
  Graph::Var b = g.param(&params.values[pi + 1], const_cast<Tensor*>(&params.grads[pi + 1]));
  Graph::Var raw = g.affine(h, w, b);

  HeadVars out;
  switch (spec.output) {
    case OutputMap::kBiternion:
      out.biternion = g.normalize_rows(raw);
      break;
    case OutputMap::kBiternionKappa:
      out.biternion = g.normalize_rows(g.slice_cols(raw, 0, 2));
      out.kappa = g.softplus_kappa(g.slice_cols(raw, 2, 1));
      break;
    case OutputMap::kMixture: {
      int k = spec.mixture_k;
      for (int j = 0; j < k; ++j) {
        out.comp_biternion.push_back(g.normalize_rows(g.slice_cols(raw, 2 * j, 2)));
        out.comp_kappa.push_back(g.softplus_kappa(g.slice_cols(raw, 2 * k + j, 1)));
      }
      out.log_weights = g.log_softmax_rows(g.slice_cols(raw, 3 * k, k));
      break;
    }
    case OutputMap::kGaussianParams: {
      int l = spec.latent_dim;
      out.gauss_mean = g.slice_cols(raw, 0, l);
      out.gauss_log_var = g.clamp(g.slice_cols(raw, l, l), -10.0, 10.0);
      break;
    }
  }
  return out;
}

HeadOutputs forward(const NetworkSpec& spec, const ParamSet& params, const Tensor& x) {
  Graph g;
  HeadVars vars = forward_graph(g, spec, params, g.input(x));
  HeadOutputs out;
  if (vars.biternion >= 0) out.biternion = g.value(vars.biternion);
  if (vars.kappa >= 0) out.kappa = g.value(vars.kappa);
  for (Graph::Var v : vars.comp_biternion) out.comp_biternion.push_back(g.value(v));
  for (Graph::Var v : vars.comp_kappa) out.comp_kappa.push_back(g.value(v));
  if (vars.log_weights >= 0) {
    Tensor lw = g.value(vars.log_weights);
    out.weights = lw;
    for (double& e : out.weights.v) e = std::exp(e);
  }
  if (vars.gauss_mean >= 0) out.gauss_mean = g.value(vars.gauss_mean);
  if (vars.gauss_log_var >= 0) out.gauss_log_var = g.value(vars.gauss_log_var);
  return out;
}

std::vector<Tensor> draw_noise(const Objective& obj, int batch_n, Rng& rng) {
  std::vector<Tensor> noise;
  for (auto [r, c] : obj.noise_shapes(batch_n)) {
    Tensor t(r, c);
    for (double& e : t.v) e = rng.normal();
    noise.push_back(std::move(t));
  }
  return noise;
}

double objective_loss(Objective& obj, const Batch& batch, const std::vector<Tensor>& noise) {
  Graph g;
  double loss = g.scalar(obj.build(g, batch, noise));
  if (!std::isfinite(loss)) throw NonFiniteLoss("objective_loss: loss = " + std::to_string(loss));
  return loss;
}

double loss_and_gradients(Objective& obj, const Batch& batch, const std::vector<Tensor>& noise) {
  for (ParamSet* p : obj.param_sets()) p->zero_grads();
  Graph g;
  Graph::Var root = obj.build(g, batch, noise);
  double loss = g.scalar(root);
  if (!std::isfinite(loss)) throw NonFiniteLoss("loss_and_gradients: loss = " + std::to_string(loss));
  g.backward(root);
  return loss;
}

double finite_diff_check(Objective& obj, const Batch& batch, const std::vector<Tensor>& noise,
                         double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");
  loss_and_gradients(obj, batch, noise);
  std::vector<ParamSet*> sets = obj.param_sets();
  std::vector<std::vector<Tensor>> analytic;
  for (ParamSet* p : sets) analytic.push_back(p->grads);

  double worst = 0.0;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (std::size_t t = 0; t < sets[s]->values.size(); ++t) {
      for (std::size_t i = 0; i < sets[s]->values[t].size(); ++i) {
        double& p = sets[s]->values[t].v[i];
        double saved = p;
        p = saved + step;
        double up = objective_loss(obj, batch, noise);
        p = saved - step;
        double down = objective_loss(obj, batch, noise);
        p = saved;
        double fd = (up - down) / (2.0 * step);
        double ad = analytic[s][t].v[i];
        double denom = std::max({1.0, std::fabs(fd), std::fabs(ad)});
        worst = std::max(worst, std::fabs(fd - ad) / denom);
      }
    }
  }
  return worst;
}

}  // namespace vmreg
