#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pifs/attractor.hpp"
#include "pifs/schedule.hpp"

namespace pifs {

// Exact-score DDIM chain under block-diagonal Gaussian data, reduced to
// per-eigendirection scalar multipliers. The multiplier is derived from the
// score of N(0, alpha_bar_t*Sigma + v_t*I) directly (expand_ratio +
// b_t*sqrt(v_t)/sigma_t^2), not by calling the contraction module; the two
// routes agreeing is the anti-drift oracle and is re-checked at construction.
struct LinearChain {
    Schedule schedule;
    std::vector<double> direction_variances;           // one mu per direction group
    std::vector<int> direction_multiplicities;         // n_k per group
    std::vector<std::vector<double>> multipliers;      // [direction][t-1]
};

struct ChainResult {
    std::vector<double> gains;              // total gain G(mu) per direction group
    std::vector<double> lyapunov;           // log(gain)/T
    std::vector<double> covariance_gains;   // G(mu)^2
    std::vector<double> output;             // coordinates after the full chain
    double fixed_point_residual = 0.0;      // ||Phi(0)||
};

LinearChain build_chain(const Schedule& s, const PatchSpectrum& spectrum);

// Runs the chain t = T..1 on per-direction coordinates (one per direction
// group); empty input runs from the origin.
ChainResult run_chain(const LinearChain& chain, const std::vector<double>& x_T = {});

// Variance gains G(mu)^2 of the pushforward of a standard Gaussian prior.
std::vector<double> generated_covariance(const LinearChain& chain);

// Monte Carlo check of the pushforward variances; seedable and deterministic.
std::vector<double> monte_carlo_covariance(const LinearChain& chain, std::size_t samples,
                                           std::uint64_t seed);

struct FlowMatchingChain {
    std::vector<double> kappas;  // per grid time t = 0, 1/T, ..., (T-1)/T
    double product = 0.0;
};

// Euler chain x <- x + v(x)/T for the linear field v(x) = -mu x/(1-t);
// throws naming the step when the per-step conditions fail.
FlowMatchingChain fm_chain(int T, double mu, double delta_tilde = 0.0);

// Dense per-patch mode: builds J_t = expand*I + b_t*sqrt(v_t)*(alpha_bar_t*Sigma + v_t*I)^{-1}
// for Sigma with the given eigenvalues in a seeded random orthogonal basis,
// multiplies the chain, and returns the singular values of the product
// (descending). Validates the block-diagonal factorization against the scalar
// path. n must be <= 64.
std::vector<double> dense_chain_singular_values(const Schedule& s, const std::vector<double>& eigenvalues,
                                                std::uint64_t seed);

// CSV "mu,gain,lyapunov", one row per direction group.
std::string gains_csv(const LinearChain& chain);

}  // namespace pifs
