#pragma once

#include <string>
#include <vector>

#include "pifs/schedule.hpp"

namespace pifs {

// Diagonal expansion factor along a data direction of variance lambda:
//   f_t(lambda) = expand_ratio - |b_t| * sqrt(v_t) / (lambda*alpha_bar_t + v_t).
// Strictly increasing in lambda; f_t(1) < 1 for every strictly decreasing
// schedule.
double f_t(const Schedule& s, int t, double lambda);
double f_t(const StepGeometry& g, double lambda);

// d f_t / d lambda, closed form |b_t| sqrt(v_t) alpha_bar_t / (lambda*alpha_bar_t + v_t)^2.
double f_t_dlambda(const StepGeometry& g, double lambda);

// Per-step patch expansion threshold, the unique lambda with f_t(lambda) = 1.
// Always > 1. At t = 1, v_prev = 0 exactly; no special-casing.
double lambda_star(const Schedule& s, int t);

struct EuclideanCertificate {
    int t = 0;
    double nu_min = 0.0;
    double delta = 0.0;
    double L_star = 0.0;
    bool c1_holds = false;   // nu_min > L* + delta
    bool c2_holds = false;   // |b_t| * nu_min <= expand_ratio
    double kappa = 0.0;      // 1 - |b_t|(nu_min - L* - delta); meaningful when both hold
};

// Pure evaluator: (nu, delta) are externally supplied bounds on the score
// Jacobian, the schedule provides everything else.
EuclideanCertificate euclidean_certificate(const Schedule& s, int t, double nu_min, double delta);

struct HighNoiseParams {
    double nu_star = 0.0;    // 1/sqrt(v_t)
    double delta_star = 0.0; // C * M^2 * alpha_bar_t / v_t^{3/2}
    double margin = 0.0;     // nu_star - delta_star - L_t*
};

HighNoiseParams high_noise_params(const Schedule& s, int t, double M_bound, double C);

struct BlockCertificate {
    int t = 0;
    double kappa_diag = 0.0;
    double delta_cross = 0.0;
    double kappa_pc = 0.0;   // kappa_diag + delta_cross
    bool satisfied = false;  // kappa_pc < 1 (strict)
};

BlockCertificate block_certificate(int t, double kappa_diag, double delta_cross);

// Cauchy-Schwarz coupling bound |b_t| * sqrt(sum of off-diagonal Frobenius^2) * sqrt(M).
double coupling_cs_bound(double frobenius_sq_sum, double b_t, int M);

// Attention-mediated cross-coupling bound
//   |b_t| * L_ff * (1 + ||p|| * max||grad A||) * ||W_V|| * offdiag_mass.
double attention_cross_bound(double offdiag_attention_mass, double wv_norm, double l_ff,
                             double p_norm, double grad_A_max, double b_t);

struct BridgeBound {
    double s_loc = 0.0;              // product of kappas
    std::vector<double> weights;     // c_t = prod_{k<t} kappa_k, c_1 = 1
    double bound = 0.0;
};

// ||x* - x_T|| <= (1/(1-s_loc)) sum c_t d_t, where d_t = ||Phi_t(x_T) - x_T||
// is the one-step displacement measured at the chain input (the anchoring the
// telescoping argument requires). Throws if any kappa is outside (0,1); the
// *_sentinel variant returns bound = +inf instead, for batch scans that must
// not abort.
BridgeBound collage_bridge(const std::vector<double>& kappas_pc, const std::vector<double>& displacements);
BridgeBound collage_bridge_sentinel(const std::vector<double>& kappas_pc,
                                    const std::vector<double>& displacements);

// W1(q(x_T), delta_{x*}) <= (sqrt(T)/(1-s_loc)) * (sum c_t^2 (R_t + B_t sqrt(L_t))^2)^{1/2}.
double w1_bridge(const std::vector<double>& kappas_pc, const std::vector<double>& R_norms,
                 const std::vector<double>& losses, const std::vector<double>& B);
double w1_bridge_sentinel(const std::vector<double>& kappas_pc, const std::vector<double>& R_norms,
                          const std::vector<double>& losses, const std::vector<double>& B);

struct FlowMatchingStep {
    double kappa = 0.0;          // (1 - mu_min/(T(1-t))) + delta/T
    bool cond_margin = false;    // mu_min > delta * (1-t)
    bool cond_euler = false;     // mu_max < T * (1-t)
};

// Euler-step contraction factor for a flow-matching field on [0,1).
FlowMatchingStep fm_kappa(int T, double t, double mu_min, double mu_max, double delta_tilde);

// Certificate reports as JSON text with explicit boolean condition fields.
std::string certificate_json(const EuclideanCertificate& c);
std::string certificate_json(const BlockCertificate& c);

// CSV "t,f_at_lambda,lambda_star,L_star" over all steps for a fixed lambda.
std::string expansion_csv(const Schedule& s, double lambda);

}  // namespace pifs
