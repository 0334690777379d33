#include "pifs/attractor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pifs/contraction.hpp"
#include "pifs/numerics.hpp"

namespace pifs {

int PatchSpectrum::total_dim() const {
    int n = 0;
    for (const auto& p : patches) n += p.n_k;
    return n;
}

void PatchSpectrum::validate() const {
    if (patches.empty()) throw std::invalid_argument("spectrum: no patches");
    for (const auto& p : patches) {
        if (p.n_k < 1) throw std::invalid_argument("spectrum: n_k must be >= 1");
        if (p.eigenvalues.empty()) throw std::invalid_argument("spectrum: patch without eigenvalues");
        if (!p.isotropic() && static_cast<int>(p.eigenvalues.size()) != p.n_k)
            throw std::invalid_argument("spectrum: full mode needs n_k eigenvalues per patch");
        for (std::size_t i = 0; i < p.eigenvalues.size(); ++i) {
            if (p.eigenvalues[i] < 0.0) throw std::invalid_argument("spectrum: negative eigenvalue");
            if (i > 0 && p.eigenvalues[i] > p.eigenvalues[i - 1])
                throw std::invalid_argument("spectrum: eigenvalues must be sorted descending");
        }
    }
}

double log_moran_product(const Schedule& s, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("moran_product: lambda must be positive");
    CompensatedSum sum;
    for (int t = 1; t <= s.T; ++t) {
        double f = f_t(s, t, lambda);
        if (!(f > 0.0))
            throw std::invalid_argument("moran_product: f_t <= 0 at step t=" +
                                        std::to_string(s.timestep_label(t)));
        sum.add(std::log(f));
    }
    return sum.value();
}

double moran_product(const Schedule& s, double lambda) { return std::exp(log_moran_product(s, lambda)); }

double mean_lyapunov(const Schedule& s, double mu) { return log_moran_product(s, mu) / s.T; }

namespace {

constexpr double kBracketCap = 65536.0;  // 2^16

// Bisection on a strictly increasing logG with |exp(logG)-1| < tol target.
double bisect_root(const std::function<double(double)>& logG, double lo, double hi, double tol) {
    double mid = 0.5 * (lo + hi);
    for (int i = 0; i < 200; ++i) {
        mid = 0.5 * (lo + hi);
        double g = logG(mid);
        if (std::abs(std::expm1(g)) < tol) return mid;
        if (g < 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= std::numeric_limits<double>::epsilon() * mid) break;
    }
    return mid;
}

}  // namespace

double moran_root(const Schedule& s, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("moran_root: tol must be positive");
    auto logG = [&](double lam) { return log_moran_product(s, lam); };
    if (!(logG(1.0) < 0.0)) throw std::invalid_argument("moran_root: G(1) >= 1, schedule malformed");
    double hi = 2.0;
    while (logG(hi) <= 0.0) {
        hi *= 2.0;
        if (hi > kBracketCap) throw std::invalid_argument("moran_root: failed to bracket a root");
    }
    return bisect_root(logG, 1.0, hi, tol);
}

namespace {

// log prod_t (f_t(lambda) - S_t); NaN sentinel when some factor is <= 0,
// which bisection treats as "below the root".
double log_suppressed_product(const Schedule& s, const SuppressionTable& table,
                              std::optional<int> patch, double lambda) {
    CompensatedSum sum;
    std::vector<int> ks = patch ? std::vector<int>{*patch} : table.patches();
    if (ks.empty()) throw std::invalid_argument("suppressed moran: empty table");
    for (int t = 1; t <= s.T; ++t) {
        double label = static_cast<double>(s.timestep_label(t));
        double S = 0.0;
        for (int k : ks) S += table.value(k, label);
        S /= static_cast<double>(ks.size());
        double g = f_t(s, t, lambda) - S;
        if (!(g > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        sum.add(std::log(g));
    }
    return sum.value();
}

}  // namespace

SuppressedMoranResult moran_root_suppressed(const Schedule& s, const SuppressionTable& table,
                                            std::optional<int> patch, double cap, double tol) {
    if (!(cap > 1.0)) throw std::invalid_argument("suppressed moran: cap must exceed 1");
    SuppressedMoranResult out;
    out.cap = cap;
    auto logG = [&](double lam) {
        double v = log_suppressed_product(s, table, patch, lam);
        return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
    };
    double lo = 1.0;
    if (logG(lo) >= 0.0) {
        // already expanding at lambda = 1; root below the domain floor
        out.root = 1.0;
        out.residual = std::abs(std::expm1(logG(1.0)));
        return out;
    }
    double hi = std::min(2.0, cap);
    while (logG(hi) <= 0.0) {
        if (hi >= cap) {
            out.exceeds_cap = true;
            return out;
        }
        hi = std::min(hi * 2.0, cap);
    }
    double root = bisect_root(logG, lo, hi, tol);
    out.root = root;
    out.residual = std::abs(std::expm1(logG(root)));
    return out;
}

KYReport ky_dimension(std::vector<double> exponents) {
    if (exponents.empty()) throw std::invalid_argument("ky_dimension: empty spectrum");
    std::sort(exponents.begin(), exponents.end(), std::greater<double>());
    const int n = static_cast<int>(exponents.size());
    KYReport report;
    report.exponents = exponents;
    CompensatedSum partial;
    int jstar = 0;
    double sum_at_jstar = 0.0;
    for (int j = 1; j <= n; ++j) {
        partial.add(exponents[j - 1]);
        if (partial.value() >= 0.0) {
            jstar = j;
            sum_at_jstar = partial.value();
        }
    }
    report.jstar = jstar;
    if (jstar == 0)
        report.dimension = 0.0;
    else if (jstar == n)
        report.dimension = static_cast<double>(n);
    else
        report.dimension = jstar + sum_at_jstar / std::abs(exponents[jstar]);
    return report;
}

namespace {

struct ExponentSet {
    std::vector<double> values;   // one entry per direction
    double sum_expanding = 0.0;   // sum over positive exponents
    int n_expanding = 0;
    double min_expanding = std::numeric_limits<double>::infinity();
    std::optional<double> best_contracting;  // least-negative nonpositive exponent
};

// Per-patch exponents expanded direction-wise; "expanding" means a strictly
// positive exponent.
ExponentSet expand_exponents(const std::vector<std::pair<double, int>>& per_patch) {
    ExponentSet set;
    CompensatedSum pos;
    for (const auto& [lam, n_k] : per_patch) {
        if (lam > 0.0) {
            pos.add(lam * n_k);
            set.n_expanding += n_k;
            set.min_expanding = std::min(set.min_expanding, lam);
        } else if (!set.best_contracting || lam > *set.best_contracting) {
            set.best_contracting = lam;
        }
        for (int i = 0; i < n_k; ++i) set.values.push_back(lam);
    }
    set.sum_expanding = pos.value();
    return set;
}

KYReport build_report(const std::vector<std::pair<double, int>>& per_patch, KyMode mode) {
    ExponentSet set = expand_exponents(per_patch);
    KYReport report = ky_dimension(set.values);
    report.mode = mode;
    report.expanding_count = set.n_expanding;
    if (!set.best_contracting) {
        report.no_contracting_direction = true;
        report.closed_form_applicable = false;
        return report;
    }
    double abs_contract = std::abs(*set.best_contracting);
    report.jstar_condition_holds = abs_contract > 0.0 && set.sum_expanding < abs_contract;
    if (report.jstar_condition_holds) {
        report.closed_form_applicable = true;
        report.closed_form = set.n_expanding + set.sum_expanding / abs_contract;
    } else if (set.n_expanding > 0 && abs_contract > 0.0) {
        report.lower_bound = set.n_expanding + set.n_expanding * set.min_expanding / abs_contract;
    }
    return report;
}

}  // namespace

KYReport ky_gaussian(const Schedule& s, const PatchSpectrum& spectrum) {
    spectrum.validate();
    std::vector<std::pair<double, int>> per_patch;
    for (const auto& p : spectrum.patches) {
        if (p.isotropic()) {
            per_patch.emplace_back(mean_lyapunov(s, p.lambda()), p.n_k);
        } else {
            for (double mu : p.eigenvalues) per_patch.emplace_back(mean_lyapunov(s, mu), 1);
        }
    }
    return build_report(per_patch, KyMode::gaussian);
}

KYReport ky_suppressed(const Schedule& s, const PatchSpectrum& spectrum,
                       const SuppressionTable& table) {
    spectrum.validate();
    std::vector<std::pair<double, int>> per_patch;
    std::vector<std::pair<double, int>> gaussian;
    for (const auto& p : spectrum.patches) {
        if (!p.isotropic())
            throw std::invalid_argument("ky_suppressed: isotropic patches required");
        int k = 0;
        try {
            k = std::stoi(p.id);
        } catch (const std::exception&) {
            throw std::invalid_argument("ky_suppressed: patch id '" + p.id +
                                        "' is not a table index");
        }
        CompensatedSum sum;
        for (int t = 1; t <= s.T; ++t) {
            double f = f_t(s, t, p.lambda());
            double S = table.value(k, static_cast<double>(s.timestep_label(t)));
            double g = f - S;
            if (!(g > 0.0))
                throw std::invalid_argument("ky_suppressed: S >= f at patch " + p.id + ", t=" +
                                            std::to_string(s.timestep_label(t)));
            sum.add(std::log(g));
        }
        double lam_eff = sum.value() / s.T;
        double lam_gauss = mean_lyapunov(s, p.lambda());
        if (lam_eff > lam_gauss)
            throw std::logic_error("ky_suppressed: effective exponent above the Gaussian exponent");
        per_patch.emplace_back(lam_eff, p.n_k);
        gaussian.emplace_back(lam_gauss, p.n_k);
    }
    KYReport report = build_report(per_patch, KyMode::suppressed);
    report.gaussian_dimension = build_report(gaussian, KyMode::gaussian).dimension;
    if (report.dimension > report.gaussian_dimension)
        throw std::logic_error("ky_suppressed: suppressed dimension above the Gaussian dimension");
    return report;
}

namespace {

double info_gain_step(const StepGeometry& g, const PatchSpectrum& spectrum, bool exact_kl) {
    CompensatedSum sum;
    for (const auto& p : spectrum.patches) {
        auto add_direction = [&](double mu, int mult) {
            double eps = std::log(f_t(g, mu));
            if (exact_kl)
                sum.add(0.5 * mult * (std::expm1(2.0 * eps) - 2.0 * eps));
            else
                sum.add(mult * eps * eps);
        };
        if (p.isotropic())
            add_direction(p.lambda(), p.n_k);
        else
            for (double mu : p.eigenvalues) add_direction(mu, 1);
    }
    return sum.value();
}

double ky_growth_step(const StepGeometry& g, const PatchSpectrum& spectrum, double lss) {
    CompensatedSum sum;
    for (const auto& p : spectrum.patches) {
        auto add_direction = [&](double mu, int mult) {
            if (mu > lss) sum.add(mult * std::log(f_t(g, mu)));
        };
        if (p.isotropic())
            add_direction(p.lambda(), p.n_k);
        else
            for (double mu : p.eigenvalues) add_direction(mu, 1);
    }
    return sum.value();
}

}  // namespace

double info_gain(const Schedule& s, int t, const PatchSpectrum& spectrum, bool exact_kl) {
    spectrum.validate();
    return info_gain_step(step_geometry(s, t), spectrum, exact_kl);
}

double ky_growth(const Schedule& s, int t, const PatchSpectrum& spectrum, double lambda_star_star) {
    spectrum.validate();
    return ky_growth_step(step_geometry(s, t), spectrum, lambda_star_star);
}

std::vector<double> info_gain_curve(const Schedule& s, const PatchSpectrum& spectrum, bool exact_kl) {
    spectrum.validate();
    std::vector<double> out(static_cast<std::size_t>(s.T));
    parallel_for(out.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            out[i] = info_gain_step(step_geometry(s, static_cast<int>(i) + 1), spectrum, exact_kl);
    });
    return out;
}

std::vector<double> ky_growth_curve(const Schedule& s, const PatchSpectrum& spectrum,
                                    double lambda_star_star) {
    spectrum.validate();
    std::vector<double> out(static_cast<std::size_t>(s.T));
    parallel_for(out.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            out[i] = ky_growth_step(step_geometry(s, static_cast<int>(i) + 1), spectrum, lambda_star_star);
    });
    return out;
}

std::string ky_report_json(const KYReport& report) {
    std::ostringstream os;
    os << "{\"version\":\"1\",\"mode\":\"" << (report.mode == KyMode::gaussian ? "gaussian" : "suppressed")
       << "\",\"dimension\":" << format_full(report.dimension) << ",\"jstar\":" << report.jstar
       << ",\"expanding_count\":" << report.expanding_count
       << ",\"jstar_condition_holds\":" << (report.jstar_condition_holds ? "true" : "false")
       << ",\"closed_form_applicable\":" << (report.closed_form_applicable ? "true" : "false");
    if (report.closed_form_applicable) os << ",\"closed_form\":" << format_full(report.closed_form);
    if (!report.closed_form_applicable && report.lower_bound > 0.0)
        os << ",\"lower_bound\":" << format_full(report.lower_bound);
    os << ",\"no_contracting_direction\":" << (report.no_contracting_direction ? "true" : "false");
    if (report.mode == KyMode::suppressed)
        os << ",\"gaussian_dimension\":" << format_full(report.gaussian_dimension);
    os << ",\"exponents\":[";
    for (std::size_t i = 0; i < report.exponents.size(); ++i) {
        if (i) os << ',';
        os << format_full(report.exponents[i]);
    }
    os << "]}";
    return os.str();
}

}  // namespace pifs
