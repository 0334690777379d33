#include "pifs/contraction.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pifs/numerics.hpp"

namespace pifs {

double f_t(const StepGeometry& g, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("f_t: lambda must be positive");
    return g.expand_ratio - (-g.b_t) * std::sqrt(g.v_t) / (lambda * g.alpha_bar_t + g.v_t);
}

double f_t(const Schedule& s, int t, double lambda) {
    return f_t(step_geometry(s, t), lambda);
}

double f_t_dlambda(const StepGeometry& g, double lambda) {
    double den = lambda * g.alpha_bar_t + g.v_t;
    return (-g.b_t) * std::sqrt(g.v_t) * g.alpha_bar_t / (den * den);
}

double lambda_star(const Schedule& s, int t) {
    const StepGeometry g = step_geometry(s, t);
    double num = std::sqrt(g.v_t) * (std::sqrt(g.v_t) - std::sqrt(g.v_prev));
    double den = (std::sqrt(g.alpha_bar_prev) - std::sqrt(g.alpha_bar_t)) * std::sqrt(g.alpha_bar_t);
    return num / den;
}

EuclideanCertificate euclidean_certificate(const Schedule& s, int t, double nu_min, double delta) {
    if (!(nu_min > 0.0)) throw std::invalid_argument("euclidean_certificate: nu_min must be positive");
    if (delta < 0.0) throw std::invalid_argument("euclidean_certificate: delta must be >= 0");
    const StepGeometry g = step_geometry(s, t);
    EuclideanCertificate c;
    c.t = t;
    c.nu_min = nu_min;
    c.delta = delta;
    c.L_star = g.L_star;
    c.c1_holds = nu_min > g.L_star + delta;
    c.c2_holds = (-g.b_t) * nu_min <= g.expand_ratio;
    c.kappa = 1.0 - (-g.b_t) * (nu_min - g.L_star - delta);
    // C1 gives kappa < 1 strictly; C2 gives kappa >= 0, reached exactly on
    // the C2 boundary with delta = 0 (slack covers the rounding there)
    if (c.c1_holds && c.c2_holds && !(c.kappa >= -1e-12 && c.kappa < 1.0))
        throw std::logic_error("euclidean_certificate: kappa outside [0,1) with C1,C2 satisfied");
    return c;
}

HighNoiseParams high_noise_params(const Schedule& s, int t, double M_bound, double C) {
    if (!(M_bound > 0.0 && C > 0.0))
        throw std::invalid_argument("high_noise_params: M and C must be positive");
    const StepGeometry g = step_geometry(s, t);
    HighNoiseParams p;
    p.nu_star = 1.0 / std::sqrt(g.v_t);
    p.delta_star = C * M_bound * M_bound * g.alpha_bar_t / std::pow(g.v_t, 1.5);
    p.margin = p.nu_star - p.delta_star - g.L_star;
    return p;
}

BlockCertificate block_certificate(int t, double kappa_diag, double delta_cross) {
    if (kappa_diag < 0.0 || delta_cross < 0.0)
        throw std::invalid_argument("block_certificate: inputs must be >= 0");
    BlockCertificate c;
    c.t = t;
    c.kappa_diag = kappa_diag;
    c.delta_cross = delta_cross;
    c.kappa_pc = kappa_diag + delta_cross;
    c.satisfied = c.kappa_pc < 1.0;
    return c;
}

double coupling_cs_bound(double frobenius_sq_sum, double b_t, int M) {
    if (frobenius_sq_sum < 0.0) throw std::invalid_argument("coupling_cs_bound: negative Frobenius mass");
    if (M < 1) throw std::invalid_argument("coupling_cs_bound: M must be >= 1");
    return std::abs(b_t) * std::sqrt(frobenius_sq_sum) * std::sqrt(static_cast<double>(M));
}

double attention_cross_bound(double offdiag_attention_mass, double wv_norm, double l_ff,
                             double p_norm, double grad_A_max, double b_t) {
    if (offdiag_attention_mass < 0.0 || offdiag_attention_mass > 1.0)
        throw std::invalid_argument("attention_cross_bound: off-diagonal mass outside [0,1]");
    if (wv_norm < 0.0 || l_ff < 0.0 || p_norm < 0.0 || grad_A_max < 0.0)
        throw std::invalid_argument("attention_cross_bound: inputs must be >= 0");
    return std::abs(b_t) * l_ff * (1.0 + p_norm * grad_A_max) * wv_norm * offdiag_attention_mass;
}

namespace {

BridgeBound collage_bridge_impl(const std::vector<double>& kappas, const std::vector<double>& d,
                                bool sentinel) {
    if (kappas.size() != d.size()) throw std::invalid_argument("collage_bridge: length mismatch");
    if (kappas.empty()) throw std::invalid_argument("collage_bridge: empty chain");
    BridgeBound out;
    out.weights.resize(kappas.size());
    double prod = 1.0;
    bool valid = true;
    for (std::size_t t = 0; t < kappas.size(); ++t) {
        out.weights[t] = prod;  // c_1 = 1
        if (!(kappas[t] > 0.0 && kappas[t] < 1.0)) valid = false;
        prod *= kappas[t];
    }
    out.s_loc = prod;
    if (!valid) {
        if (!sentinel) throw std::invalid_argument("collage_bridge: kappa outside (0,1), bound undefined");
        out.bound = std::numeric_limits<double>::infinity();
        return out;
    }
    CompensatedSum sum;
    for (std::size_t t = 0; t < d.size(); ++t) {
        if (d[t] < 0.0) throw std::invalid_argument("collage_bridge: negative displacement");
        sum.add(out.weights[t] * d[t]);
    }
    out.bound = sum.value() / (1.0 - out.s_loc);
    return out;
}

double w1_bridge_impl(const std::vector<double>& kappas, const std::vector<double>& R,
                      const std::vector<double>& L, const std::vector<double>& B, bool sentinel) {
    const std::size_t T = kappas.size();
    if (R.size() != T || L.size() != T || B.size() != T)
        throw std::invalid_argument("w1_bridge: length mismatch");
    if (T == 0) throw std::invalid_argument("w1_bridge: empty chain");
    double prod = 1.0;
    CompensatedSum sum;
    for (std::size_t t = 0; t < T; ++t) {
        if (!(kappas[t] > 0.0 && kappas[t] < 1.0)) {
            if (!sentinel) throw std::invalid_argument("w1_bridge: kappa outside (0,1), bound undefined");
            return std::numeric_limits<double>::infinity();
        }
        if (R[t] < 0.0 || L[t] < 0.0 || B[t] < 0.0)
            throw std::invalid_argument("w1_bridge: inputs must be >= 0");
        double c_t = prod;  // prod_{k<t} kappa_k
        double term = R[t] + B[t] * std::sqrt(L[t]);
        sum.add(c_t * c_t * term * term);
        prod *= kappas[t];
    }
    double s_loc = prod;
    return std::sqrt(static_cast<double>(T)) / (1.0 - s_loc) * std::sqrt(sum.value());
}

}  // namespace

BridgeBound collage_bridge(const std::vector<double>& kappas, const std::vector<double>& d) {
    return collage_bridge_impl(kappas, d, false);
}

BridgeBound collage_bridge_sentinel(const std::vector<double>& kappas, const std::vector<double>& d) {
    return collage_bridge_impl(kappas, d, true);
}

double w1_bridge(const std::vector<double>& kappas, const std::vector<double>& R,
                 const std::vector<double>& L, const std::vector<double>& B) {
    return w1_bridge_impl(kappas, R, L, B, false);
}

double w1_bridge_sentinel(const std::vector<double>& kappas, const std::vector<double>& R,
                          const std::vector<double>& L, const std::vector<double>& B) {
    return w1_bridge_impl(kappas, R, L, B, true);
}

FlowMatchingStep fm_kappa(int T, double t, double mu_min, double mu_max, double delta_tilde) {
    if (T < 1) throw std::invalid_argument("fm_kappa: T must be >= 1");
    if (!(t >= 0.0 && t < 1.0)) throw std::invalid_argument("fm_kappa: t outside [0,1)");
    if (!(mu_min > 0.0 && mu_min <= mu_max)) throw std::invalid_argument("fm_kappa: need 0 < mu_min <= mu_max");
    if (delta_tilde < 0.0) throw std::invalid_argument("fm_kappa: delta must be >= 0");
    FlowMatchingStep out;
    out.cond_margin = mu_min > delta_tilde * (1.0 - t);
    out.cond_euler = mu_max < T * (1.0 - t);
    out.kappa = (1.0 - mu_min / (T * (1.0 - t))) + delta_tilde / T;
    return out;
}

std::string certificate_json(const EuclideanCertificate& c) {
    std::ostringstream os;
    os << "{\"version\":\"1\",\"type\":\"euclidean\",\"t\":" << c.t
       << ",\"nu_min\":" << format_full(c.nu_min) << ",\"delta\":" << format_full(c.delta)
       << ",\"L_star\":" << format_full(c.L_star)
       << ",\"c1_holds\":" << (c.c1_holds ? "true" : "false")
       << ",\"c2_holds\":" << (c.c2_holds ? "true" : "false")
       << ",\"kappa\":" << format_full(c.kappa) << "}";
    return os.str();
}

std::string certificate_json(const BlockCertificate& c) {
    std::ostringstream os;
    os << "{\"version\":\"1\",\"type\":\"block_max\",\"t\":" << c.t
       << ",\"kappa_diag\":" << format_full(c.kappa_diag)
       << ",\"delta_cross\":" << format_full(c.delta_cross)
       << ",\"kappa_pc\":" << format_full(c.kappa_pc)
       << ",\"satisfied\":" << (c.satisfied ? "true" : "false") << "}";
    return os.str();
}

std::string expansion_csv(const Schedule& s, double lambda) {
    std::ostringstream os;
    os << "t,f_at_lambda,lambda_star,L_star\n";
    for (int t = 1; t <= s.T; ++t) {
        const StepGeometry g = step_geometry(s, t);
        os << s.timestep_label(t) << ',' << format_full(f_t(g, lambda)) << ','
           << format_full(lambda_star(s, t)) << ',' << format_full(g.L_star) << '\n';
    }
    return os.str();
}

}  // namespace pifs
