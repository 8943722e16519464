#pragma once

#include <memory>
#include <optional>

#include "vmreg/adam.hpp"
#include "vmreg/mixture.hpp"
#include "vmreg/network.hpp"

namespace vmreg {

/// The probabilistic output heads. FixedKappa trains with the cosine loss and
/// gets its concentration either from configuration or from a post-training
/// likelihood fit; the others train by maximizing their own likelihoods or
/// bounds.
struct HeadKind {
  enum class Tag { kFixedKappa, kSingleVonMises, kFiniteMixture, kCvae, kScvae };

  Tag tag = Tag::kSingleVonMises;
  std::optional<double> fixed_kappa;  // kFixedKappa: set = use as-is, unset = fit after training
  int mixture_k = 4;
  int latent_dim = 8;
  int s_train = 5;
  int s_eval = 50;

  bool is_cvae_family() const { return tag == Tag::kCvae || tag == Tag::kScvae; }
  void validate() const;
};

/// Encoder q(z|x,phi), conditional prior p(z|x), decoder p(phi|x,z). The
/// simplified variant keeps only the decoder and fixes q = p = N(0, I).
struct CvaeNetworks {
  int latent_dim = 0;
  NetworkSpec encoder;
  NetworkSpec prior;
  NetworkSpec decoder;
  ParamSet encoder_params;
  ParamSet prior_params;
  ParamSet decoder_params;
};

/// A head with everything needed to evaluate its predictive density.
struct PredictiveModel {
  HeadKind head;
  int input_dim = 0;
  NetworkSpec spec;   // non-CVAE heads
  ParamSet params;    // non-CVAE heads
  CvaeNetworks cvae;  // CVAE/sCVAE heads
  double fitted_kappa = 1.0;  // FixedKappa only, resolved by training
};

/// Fresh model with seed-fixed initialization. `hidden` configures every
/// network the head owns.
PredictiveModel make_model(HeadKind head, int input_dim, const std::vector<LayerSpec>& hidden,
                           std::uint64_t init_seed);

// ---- plain per-example losses and latent helpers ----

struct LatentGaussian {
  std::vector<double> mean;
  std::vector<double> log_var;
};

/// 1 - dot(y_pred, y_true), in [0, 2].
double cosine_loss(const Biternion& y_pred, const Biternion& y_true);

/// Negative von Mises log-density, kappa in (0, kKappaMax].
double vm_nll(Angle mu, double kappa, Angle phi);

/// Negative log-density of the assembled mixture at phi.
double mixture_nll(const std::vector<Angle>& mus, const std::vector<double>& kappas,
                   const std::vector<double>& weights, Angle phi);

/// Closed-form KL between diagonal Gaussians, KL(q || p) >= 0.
double gaussian_kl(const LatentGaussian& q, const LatentGaussian& p);

/// mean + exp(log_var / 2) * noise.
std::vector<double> reparam_sample(const LatentGaussian& g, const std::vector<double>& noise);

// ---- per-example latent-variable bounds (n = 1 through the batched graphs) ----

/// Monte Carlo ELBO: (1/S) sum_s log p(phi|x,z_s) - KL(q || p), z_s ~ q.
double cvae_elbo(const CvaeNetworks& nets, const std::vector<double>& x, Angle phi, int s,
                 std::uint64_t seed);

/// Importance-weighted bound: log (1/S) sum_s p(phi|x,z_s) p(z_s|x) / q(z_s|x,phi).
double iwae_log_lik(const CvaeNetworks& nets, const std::vector<double>& x, Angle phi, int s,
                    std::uint64_t seed);

/// Simplified-CVAE loss: -log (1/S) sum_s p(phi|x,z_s), z_s ~ N(0, I).
double scvae_loss(const CvaeNetworks& nets, const std::vector<double>& x, Angle phi, int s,
                  std::uint64_t seed);

// ---- batched training objectives ----

std::unique_ptr<Objective> make_objective(PredictiveModel& model);

/// IWAE bound per example over a batch (column vector), S samples per row.
/// For sCVAE models q = p = N(0, I) and this reduces to the Monte Carlo
/// log-likelihood estimate.
std::vector<double> iwae_log_lik_batch(const PredictiveModel& model, const Batch& batch, int s,
                                       std::uint64_t seed);

// ---- predictive densities ----

enum class DensityForm { kSingle, kFiniteMixture, kMonteCarloMixture };

/// Evaluable predictive distribution over angles. Always carried as a
/// mixture: a single von Mises is K = 1, the latent heads yield an
/// equal-weight Monte Carlo mixture of decoded components.
struct PredictiveDensity {
  DensityForm form = DensityForm::kSingle;
  VonMisesMixture mixture;

  double log_pdf(Angle phi) const { return mix_log_pdf(mixture, phi); }
  std::vector<Angle> sample(std::size_t n, std::uint64_t seed) const {
    return mix_sample(mixture, n, seed);
  }
};

PredictiveDensity predictive_density(const PredictiveModel& model, const std::vector<double>& x,
                                     int s_eval, std::uint64_t seed);

/// Independent three-angle factorization: sum of per-angle predictive
/// log-densities at (azimuth, elevation, tilt).
double multi_angle_log_pdf(const std::array<const PredictiveModel*, 3>& models,
                           const std::vector<double>& x, const std::array<Angle, 3>& angles,
                           int s_eval, std::uint64_t seed);

// ---- shared graph fragments (exposed for tests and the training loop) ----

/// log vm(phi | biternion mean, kappa) rows: kappa * <b, t> - log 2pi - log I0(kappa).
Graph::Var vm_logp_graph(Graph& g, Graph::Var bit, Graph::Var kappa, Graph::Var target_bit);

/// Row-wise closed-form KL between diagonal Gaussians given as (mean, log-var) pairs.
Graph::Var gaussian_kl_graph(Graph& g, Graph::Var mu_q, Graph::Var lv_q, Graph::Var mu_p,
                             Graph::Var lv_p);

/// Row-wise log N(z; mu, exp(lv)).
Graph::Var gaussian_logp_graph(Graph& g, Graph::Var z, Graph::Var mu, Graph::Var lv);

}  // namespace vmreg
