#pragma once

#include <cstdint>
#include <vector>

#include "vmreg/circmath.hpp"
#include "vmreg/rng.hpp"

namespace vmreg {

/// Single von Mises distribution on the circle. kappa = 0 is the uniform
/// distribution; 1/kappa plays the role sigma^2 plays for a normal.
/// Immutable after construction; log I0(kappa) is cached for density work.
struct VonMises {
  Angle mu;
  double kappa = 0.0;
  double log_i0 = 0.0;

  VonMises() = default;
  VonMises(Angle mu_, double kappa_);  // throws NegativeConcentration; caps at kKappaMax
};

/// kappa*cos(phi - mu) - log(2*pi) - log I0(kappa).
double vm_log_pdf(const VonMises& d, Angle phi);

/// One draw via Best-Fisher rejection with a wrapped-Cauchy envelope.
Angle vm_sample_one(const VonMises& d, Rng& rng);

/// n i.i.d. draws, deterministic given the seed.
std::vector<Angle> vm_sample(const VonMises& d, std::size_t n, std::uint64_t seed);

/// P(angle in (mu - pi, phi]) with phi unwrapped into (mu - pi, mu + pi],
/// by adaptive Simpson quadrature to 1e-8 absolute error. Test oracle.
double vm_cdf_numeric(const VonMises& d, Angle phi);

/// Maximum-likelihood concentration for frozen per-example means: the kappa
/// maximizing sum_i log vm(mu_i, kappa; phi_i), i.e. A(kappa) = mean cosine
/// residual, clamped to [0, kKappaMax].
double select_fixed_kappa(const std::vector<Angle>& mus, const std::vector<Angle>& phis);

}  // namespace vmreg
