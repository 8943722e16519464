#pragma once

#include <cmath>

#include "vmreg/network.hpp"

namespace vmreg {

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Per-parameter first and second moment accumulators plus the step counter.
struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  AdamState() = default;
  AdamState(const ParamSet& params, AdamConfig c) : cfg(c) {
    for (const Tensor& t : params.values) {
      m.emplace_back(t.rows, t.cols);
      v.emplace_back(t.rows, t.cols);
    }
  }
};

/// Standard bias-corrected Adam update from params.grads.
inline void adam_step(AdamState& st, ParamSet& params) {
  if (st.m.size() != params.values.size()) throw ShapeMismatch("adam_step: state mismatch");
  st.step += 1;
  double c1 = 1.0 - std::pow(st.cfg.beta1, static_cast<double>(st.step));
  double c2 = 1.0 - std::pow(st.cfg.beta2, static_cast<double>(st.step));
  for (std::size_t t = 0; t < params.values.size(); ++t) {
    if (!st.m[t].same_shape(params.grads[t])) throw ShapeMismatch("adam_step: grad shape mismatch");
    for (std::size_t i = 0; i < params.values[t].size(); ++i) {
      double g = params.grads[t].v[i];
      double& m = st.m[t].v[i];
      double& v = st.v[t].v[i];
      m = st.cfg.beta1 * m + (1.0 - st.cfg.beta1) * g;
      v = st.cfg.beta2 * v + (1.0 - st.cfg.beta2) * g * g;
      params.values[t].v[i] -= st.cfg.alpha * (m / c1) / (std::sqrt(v / c2) + st.cfg.eps);
    }
  }
}

}  // namespace vmreg
