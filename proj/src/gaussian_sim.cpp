#include "pifs/gaussian_sim.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "pifs/contraction.hpp"
#include "pifs/numerics.hpp"

namespace pifs {

LinearChain build_chain(const Schedule& s, const PatchSpectrum& spectrum) {
    spectrum.validate();
    LinearChain chain;
    chain.schedule = s;
    for (const auto& p : spectrum.patches) {
        if (p.isotropic()) {
            chain.direction_variances.push_back(p.lambda());
            chain.direction_multiplicities.push_back(p.n_k);
        } else {
            for (double mu : p.eigenvalues) {
                chain.direction_variances.push_back(mu);
                chain.direction_multiplicities.push_back(1);
            }
        }
    }
    chain.multipliers.resize(chain.direction_variances.size());
    for (std::size_t d = 0; d < chain.direction_variances.size(); ++d) {
        const double mu = chain.direction_variances[d];
        if (!(mu > 0.0)) throw std::invalid_argument("build_chain: direction variance must be positive");
        auto& m = chain.multipliers[d];
        m.resize(static_cast<std::size_t>(s.T));
        for (int t = 1; t <= s.T; ++t) {
            const StepGeometry g = step_geometry(s, t);
            // score of N(0, alpha_bar*Sigma + v I): eps*(x) = sqrt(v) x / sigma_t^2
            const double sigma_sq = g.alpha_bar_t * mu + g.v_t;
            const double score_gain = std::sqrt(g.v_t) / sigma_sq;
            m[t - 1] = g.expand_ratio + g.b_t * score_gain;
            if (std::abs(m[t - 1] - f_t(g, mu)) > 1e-14 * std::max(1.0, std::abs(m[t - 1])))
                throw std::logic_error("build_chain: multiplier drifted from the diagonal expansion form");
        }
    }
    return chain;
}

ChainResult run_chain(const LinearChain& chain, const std::vector<double>& x_T) {
    const std::size_t D = chain.direction_variances.size();
    if (!x_T.empty() && x_T.size() != D)
        throw std::invalid_argument("run_chain: coordinate count does not match directions");
    ChainResult res;
    res.gains.resize(D);
    res.lyapunov.resize(D);
    res.covariance_gains.resize(D);
    res.output.resize(D);
    const int T = chain.schedule.T;
    for (std::size_t d = 0; d < D; ++d) {
        CompensatedSum log_gain;
        double x = x_T.empty() ? 0.0 : x_T[d];
        for (int t = T; t >= 1; --t) {
            const double m = chain.multipliers[d][t - 1];
            x *= m;
            log_gain.add(std::log(std::abs(m)));
        }
        res.gains[d] = std::exp(log_gain.value());
        res.lyapunov[d] = log_gain.value() / T;
        res.covariance_gains[d] = res.gains[d] * res.gains[d];
        res.output[d] = x;
    }
    // the chain is linear, so the origin is its fixed point
    double norm_sq = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
        double x = 0.0;
        for (int t = T; t >= 1; --t) x *= chain.multipliers[d][t - 1];
        norm_sq += x * x;
    }
    res.fixed_point_residual = std::sqrt(norm_sq);
    return res;
}

std::vector<double> generated_covariance(const LinearChain& chain) {
    return run_chain(chain).covariance_gains;
}

std::vector<double> monte_carlo_covariance(const LinearChain& chain, std::size_t samples,
                                           std::uint64_t seed) {
    if (samples < 2) throw std::invalid_argument("monte_carlo_covariance: need at least 2 samples");
    const std::size_t D = chain.direction_variances.size();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> sum(D, 0.0), sum_sq(D, 0.0);
    const int T = chain.schedule.T;
    for (std::size_t i = 0; i < samples; ++i) {
        for (std::size_t d = 0; d < D; ++d) {
            double x = normal(rng);
            for (int t = T; t >= 1; --t) x *= chain.multipliers[d][t - 1];
            sum[d] += x;
            sum_sq[d] += x * x;
        }
    }
    std::vector<double> var(D);
    for (std::size_t d = 0; d < D; ++d) {
        double m = sum[d] / samples;
        var[d] = sum_sq[d] / samples - m * m;
    }
    return var;
}

FlowMatchingChain fm_chain(int T, double mu, double delta_tilde) {
    if (T < 1) throw std::invalid_argument("fm_chain: T must be >= 1");
    FlowMatchingChain out;
    out.kappas.resize(static_cast<std::size_t>(T));
    double prod = 1.0;
    for (int i = 0; i < T; ++i) {
        double t = static_cast<double>(i) / T;
        FlowMatchingStep step = fm_kappa(T, t, mu, mu, delta_tilde);
        if (!step.cond_margin || !step.cond_euler)
            throw std::invalid_argument("fm_chain: flow-matching conditions fail at grid step " +
                                        std::to_string(i));
        out.kappas[i] = step.kappa;
        prod *= step.kappa;
    }
    out.product = prod;
    return out;
}

std::vector<double> dense_chain_singular_values(const Schedule& s, const std::vector<double>& eigenvalues,
                                                std::uint64_t seed) {
    const int n = static_cast<int>(eigenvalues.size());
    if (n < 1 || n > 64) throw std::invalid_argument("dense_chain_singular_values: n must be in 1..64");
    for (double mu : eigenvalues)
        if (!(mu > 0.0)) throw std::invalid_argument("dense_chain_singular_values: eigenvalues must be positive");

    // seeded random orthogonal basis via QR of a Gaussian matrix
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ();

    Eigen::VectorXd mus = Eigen::Map<const Eigen::VectorXd>(eigenvalues.data(), n);
    Eigen::MatrixXd Sigma = Q * mus.asDiagonal() * Q.transpose();

    Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(n, n);
    for (int t = s.T; t >= 1; --t) {
        const StepGeometry g = step_geometry(s, t);
        Eigen::MatrixXd noised = g.alpha_bar_t * Sigma + g.v_t * Eigen::MatrixXd::Identity(n, n);
        Eigen::MatrixXd J = g.expand_ratio * Eigen::MatrixXd::Identity(n, n) +
                            g.b_t * std::sqrt(g.v_t) * noised.inverse();
        prod = J * prod;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(prod);
    std::vector<double> sv(svd.singularValues().data(), svd.singularValues().data() + n);
    return sv;
}

std::string gains_csv(const LinearChain& chain) {
    ChainResult res = run_chain(chain);
    std::ostringstream os;
    os << "mu,gain,lyapunov\n";
    for (std::size_t d = 0; d < chain.direction_variances.size(); ++d)
        os << format_full(chain.direction_variances[d]) << ',' << format_full(res.gains[d]) << ','
           << format_full(res.lyapunov[d]) << '\n';
    return os.str();
}

}  // namespace pifs
