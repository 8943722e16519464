#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vmreg/graph.hpp"
#include "vmreg/rng.hpp"

namespace vmreg {

enum class Activation { kRelu, kTanh, kIdentity };

/// Terminal map applied after the last dense layer:
///  - kBiternion:       2 raw units -> unit-normalized (cos, sin)
///  - kBiternionKappa:  3 raw units -> biternion + concentration link
///  - kMixture:         4K raw units -> K biternions, K concentrations,
///                      K softmax weights (layout: 2K | K | K)
///  - kGaussianParams:  2L raw units -> mean, clamped log-variance
enum class OutputMap { kBiternion, kBiternionKappa, kMixture, kGaussianParams };

struct LayerSpec {
  int width = 32;
  Activation act = Activation::kTanh;
};

struct NetworkSpec {
  int input_dim = 0;
  std::vector<LayerSpec> hidden;
  OutputMap output = OutputMap::kBiternion;
  int mixture_k = 0;   // kMixture only
  int latent_dim = 0;  // kGaussianParams only

  int output_arity() const;
  void validate() const;  // dims chain, arity matches the map
};

/// Flat parameter storage (W0, b0, W1, b1, ..., Wout, bout) with mirrored
/// gradient accumulators.
struct ParamSet {
  std::vector<Tensor> values;
  std::vector<Tensor> grads;

  void zero_grads();
  std::size_t scalar_count() const;
  bool all_finite() const;
};

/// Fan-in-scaled uniform weights, zero biases, fixed by the rng state.
ParamSet init_params(const NetworkSpec& spec, Rng& rng);

/// Head outputs as graph variables (only the members for the configured
/// output map are set; the rest stay -1).
struct HeadVars {
  Graph::Var biternion = -1;                // (n,2)
  Graph::Var kappa = -1;                    // (n,1)
  std::vector<Graph::Var> comp_biternion;   // K x (n,2)
  std::vector<Graph::Var> comp_kappa;       // K x (n,1)
  Graph::Var log_weights = -1;              // (n,K)
  Graph::Var gauss_mean = -1;               // (n,L)
  Graph::Var gauss_log_var = -1;            // (n,L)
};

/// Builds the trainable forward pass; params receive gradients on backward().
HeadVars forward_graph(Graph& g, const NetworkSpec& spec, const ParamSet& params, Graph::Var x);

/// Inference-time outputs (plain tensors).
struct HeadOutputs {
  Tensor biternion;
  Tensor kappa;
  std::vector<Tensor> comp_biternion;
  std::vector<Tensor> comp_kappa;
  Tensor weights;  // (n,K), simplex rows
  Tensor gauss_mean;
  Tensor gauss_log_var;
};

/// Runs the same graph construction and copies the results out. Pure in
/// (params, x): repeated calls are bit-identical.
HeadOutputs forward(const NetworkSpec& spec, const ParamSet& params, const Tensor& x);

/// A batch of supervised examples; targets carried as biternions.
struct Batch {
  Tensor x;           // (n,d)
  Tensor target_bit;  // (n,2)
  int size() const { return x.rows; }
};

/// A differentiable training objective (mean per-example loss over a batch).
/// Stochastic objectives declare the standard-normal noise tensors they
/// consume so callers can freeze or replay them.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::vector<ParamSet*> param_sets() = 0;
  virtual std::vector<std::pair<int, int>> noise_shapes(int batch_n) const {
    (void)batch_n;
    return {};
  }
  virtual Graph::Var build(Graph& g, const Batch& batch, const std::vector<Tensor>& noise) = 0;
};

std::vector<Tensor> draw_noise(const Objective& obj, int batch_n, Rng& rng);

/// Forward-only loss value. Throws NonFiniteLoss on a non-finite result.
double objective_loss(Objective& obj, const Batch& batch, const std::vector<Tensor>& noise);

/// Zeroes gradients, runs forward + backward, returns the loss.
double loss_and_gradients(Objective& obj, const Batch& batch, const std::vector<Tensor>& noise);

/// Central-difference check of every parameter gradient at the given step.
/// Returns the worst relative discrepancy, |ad - fd| / max(1, |ad|, |fd|).
double finite_diff_check(Objective& obj, const Batch& batch, const std::vector<Tensor>& noise,
                         double step);

}  // namespace vmreg
