#include "pifs/design.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pifs/contraction.hpp"
#include "pifs/numerics.hpp"

namespace pifs::design {

std::vector<ScheduleReport> compare_schedules(const std::vector<std::pair<std::string, Schedule>>& schedules,
                                              const std::optional<PatchSpectrum>& spectrum) {
    if (schedules.empty()) throw std::invalid_argument("compare_schedules: no schedules");
    std::vector<ScheduleReport> reports(schedules.size());
    parallel_for(schedules.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Schedule& s = schedules[i].second;
            ScheduleReport r;
            r.name = schedules[i].first;
            r.thresholds = threshold_stats(s);
            if (s.T >= 3) {
                double lo = 0.0, hi = 0.0;
                int argmin = 2;
                for (int t = 2; t <= s.T - 1; ++t) {
                    double ls = lambda_star(s, t);
                    if (t == 2 || ls < lo) {
                        lo = ls;
                        argmin = t;
                    }
                    if (t == 2 || ls > hi) hi = ls;
                }
                r.lambda_star_interior_min = lo;
                r.lambda_star_interior_max = hi;
                r.lambda_star_argmin = s.timestep_label(argmin);
            }
            if (spectrum) {
                double lss = moran_root(s);
                std::vector<double> ig = info_gain_curve(s, *spectrum);
                std::vector<double> dd = ky_growth_curve(s, *spectrum, lss);
                std::vector<double> abs_dd(dd.size());
                std::vector<double> ratio(dd.size());
                int npp = 0;
                for (const auto& p : spectrum->patches) {
                    if (p.isotropic()) {
                        if (p.lambda() > lss) npp += p.n_k;
                    } else {
                        for (double mu : p.eigenvalues)
                            if (mu > lss) ++npp;
                    }
                }
                if (npp == 0)
                    throw std::invalid_argument(
                        "compare_schedules: no spectrum direction exceeds the expansion threshold, "
                        "the dimension-growth columns are undefined");
                for (std::size_t t = 0; t < dd.size(); ++t) {
                    abs_dd[t] = std::abs(dd[t]);
                    ratio[t] = ig[t] / (dd[t] * dd[t]);
                }
                r.has_ig_columns = true;
                r.cv_ig = stats::cv(ig);
                r.cv_abs_dd = stats::cv(abs_dd);
                r.spearman_ig_dd = stats::spearman(ig, abs_dd);
                r.ratio_to_theory = stats::mean(ratio) * npp;
            }
            reports[i] = std::move(r);
        }
    });
    return reports;
}

std::string compare_csv(const std::vector<ScheduleReport>& reports) {
    std::ostringstream os;
    bool ig = std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.has_ig_columns; });
    os << "schedule,steps,mean_L_star,cv_L_star,finest_L_star,finest_t,lambda_star_min,lambda_star_argmin";
    if (ig) os << ",cv_ig,cv_abs_dd,spearman_ig_dd,ratio_to_theory";
    os << '\n';
    for (const auto& r : reports) {
        os << r.name << ',' << r.thresholds.count << ',' << format_full(r.thresholds.mean) << ','
           << format_full(r.thresholds.cv) << ',' << format_full(r.thresholds.value_at_finest_executed_step)
           << ',' << r.thresholds.min_timestep << ',' << format_full(r.lambda_star_interior_min) << ','
           << r.lambda_star_argmin;
        if (ig) {
            if (r.has_ig_columns)
                os << ',' << format_full(r.cv_ig) << ',' << format_full(r.cv_abs_dd) << ','
                   << format_full(r.spearman_ig_dd) << ',' << format_full(r.ratio_to_theory);
            else
                os << ",,,,";
        }
        os << '\n';
    }
    return os.str();
}

EqualisationReport equalisation_check(const Schedule& s, double tol) {
    EqualisationReport rep;
    if (s.T < 3) {
        rep.exempt = true;
        return rep;
    }
    std::vector<double> L = l_star_values(s);
    auto [mn, mx] = std::minmax_element(L.begin(), L.end());
    rep.spread = *mx - *mn;
    rep.mean = stats::mean(L);
    rep.spread_exceeds_tol = rep.spread > tol * rep.mean;
    // proof mechanism: with the best-fit constant threshold, g(a) =
    // L*sqrt(1-a) + sqrt(a) is strictly concave in a, so it can cross 1 at
    // most twice along the alpha_bar sequence
    double fit = rep.mean;
    auto g = [&](double a) { return fit * std::sqrt(1.0 - a) + std::sqrt(a); };
    int crossings = 0;
    double prev = g(s.alpha_bar[0]) - 1.0;
    for (int t = 1; t <= s.T; ++t) {
        double cur = g(s.alpha_bar[t]) - 1.0;
        if ((prev < 0.0 && cur >= 0.0) || (prev > 0.0 && cur <= 0.0)) ++crossings;
        prev = cur;
    }
    rep.unit_crossings = crossings;
    return rep;
}

std::vector<OffsetRow> cosine_offset_analysis(int T, const std::vector<double>& offsets) {
    for (double s_off : offsets)
        if (s_off < 0.0) throw std::invalid_argument("cosine_offset_analysis: offsets must be >= 0");
    const StepGeometry base = step_geometry(make_cosine(T, 0.0), 1);
    std::vector<OffsetRow> rows;
    rows.reserve(offsets.size());
    for (double s_off : offsets) {
        const StepGeometry g = step_geometry(make_cosine(T, s_off), 1);
        OffsetRow row;
        row.s_off = s_off;
        row.v1 = g.v_t;
        row.L1_star = g.L_star;
        row.ratio_to_zero_offset = g.L_star / base.L_star;
        rows.push_back(row);
    }
    return rows;
}

CensusReport expansion_census(const Schedule& s, const PatchSpectrum& spectrum, bool include_boundary) {
    spectrum.validate();
    const int t_lo = include_boundary ? 1 : 2;
    const int t_hi = include_boundary ? s.T : s.T - 1;
    if (t_hi < t_lo) throw std::invalid_argument("expansion_census: no steps in range");
    std::vector<double> thresholds;
    for (int t = t_lo; t <= t_hi; ++t) thresholds.push_back(lambda_star(s, t));
    CensusReport report;
    long forcing_total = 0, total = 0;
    for (const auto& p : spectrum.patches) {
        CensusRow row;
        row.patch = p.id;
        row.lambda = p.lambda();
        row.total_steps = static_cast<int>(thresholds.size());
        for (double ls : thresholds)
            if (p.lambda() > ls) ++row.forcing_steps;
        forcing_total += row.forcing_steps;
        total += row.total_steps;
        report.rows.push_back(std::move(row));
    }
    report.global_fraction = static_cast<double>(forcing_total) / static_cast<double>(total);
    return report;
}

MinSnrBoundary minsnr_boundary(const Schedule& s, double gamma) {
    double snr_first = step_geometry(s, 1).snr_t;
    double snr_last = step_geometry(s, s.T).snr_t;
    if (!(gamma <= snr_first) || !(gamma >= snr_last))
        throw std::invalid_argument("minsnr_boundary: gamma outside the schedule's SNR range");
    // SNR is strictly decreasing in t, so scan for the largest t with SNR >= gamma
    MinSnrBoundary out;
    for (int t = s.T; t >= 1; --t) {
        const StepGeometry g = step_geometry(s, t);
        if (g.snr_t >= gamma) {
            out.t_cross = s.timestep_label(t);
            out.L_star_at_cross = g.L_star;
            return out;
        }
    }
    throw std::logic_error("minsnr_boundary: no crossing found");
}

namespace {

// Exact integral of 1/L over one piecewise-linear segment.
double segment_inverse_integral(double u0, double u1, double L0, double L1) {
    double du = u1 - u0;
    if (du <= 0.0) return 0.0;
    if (L0 == L1) return du / L0;
    return du * (std::log(L1) - std::log(L0)) / (L1 - L0);
}

}  // namespace

Allocation allocate_from_thresholds(const std::vector<double>& l_star, int N) {
    const int T = static_cast<int>(l_star.size());
    if (T < 1) throw std::invalid_argument("allocate: empty threshold profile");
    if (N < 1) throw std::invalid_argument("allocate: N must be >= 1");
    if (N > T) throw std::invalid_argument("allocate: N exceeds the parent step count");
    for (double L : l_star)
        if (!(L > 0.0)) throw std::invalid_argument("allocate: thresholds must be positive");

    // nodes u_t = t/T for t = 1..T; L* interpolates linearly between them
    std::vector<double> u(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t) u[t - 1] = static_cast<double>(t) / T;
    std::vector<double> cum(static_cast<std::size_t>(T), 0.0);
    for (int i = 1; i < T; ++i)
        cum[i] = cum[i - 1] + segment_inverse_integral(u[i - 1], u[i], l_star[i - 1], l_star[i]);
    const double total = cum.back();
    if (!(total > 0.0)) throw std::invalid_argument("allocate: degenerate density");

    auto invert = [&](double target) {
        auto hi = std::lower_bound(cum.begin(), cum.end(), target);
        if (hi == cum.begin()) return u.front();
        if (hi == cum.end()) return u.back();
        std::size_t i = static_cast<std::size_t>(hi - cum.begin());
        double mass = target - cum[i - 1];
        double du = u[i] - u[i - 1];
        double L0 = l_star[i - 1], L1 = l_star[i];
        if (L0 == L1) return u[i - 1] + mass * L0;
        // exact inversion of the segment mass m(x) = log(L(x)/L0)/slope
        double slope = (L1 - L0) / du;
        return u[i - 1] + L0 * std::expm1(slope * mass) / slope;
    };
    auto L_at = [&](double uu) {
        if (uu <= u.front()) return l_star.front();
        if (uu >= u.back()) return l_star.back();
        std::size_t i = static_cast<std::size_t>(std::upper_bound(u.begin(), u.end(), uu) - u.begin());
        double w = (uu - u[i - 1]) / (u[i] - u[i - 1]);
        return l_star[i - 1] + w * (l_star[i] - l_star[i - 1]);
    };

    Allocation alloc;
    alloc.N = N;
    alloc.positions.resize(static_cast<std::size_t>(N));
    for (int i = 1; i <= N; ++i)
        alloc.positions[i - 1] = invert((i - 0.5) / N * total);

    // pre-snapping loads: interval width / difficulty at the interval midpoint
    std::vector<double> edges(static_cast<std::size_t>(N) + 1);
    edges[0] = u.front();
    for (int i = 1; i <= N; ++i) edges[i] = invert(static_cast<double>(i) / N * total);
    alloc.loads.resize(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        double mid = 0.5 * (edges[i] + edges[i + 1]);
        alloc.loads[i] = (edges[i + 1] - edges[i]) / L_at(mid);
    }
    auto [lmin, lmax] = std::minmax_element(alloc.loads.begin(), alloc.loads.end());
    alloc.max_load = *lmax;
    alloc.load_spread = *lmax / *lmin - 1.0;
    alloc.density_integral = static_cast<double>(N);
    alloc.density.resize(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i)
        alloc.density[i] = N / (L_at(alloc.positions[i]) * total);

    // snap to the nearest parent step, shifting duplicates to the nearest free index
    std::set<int> used;
    for (double pos : alloc.positions) {
        int t = std::clamp(static_cast<int>(std::lround(pos * T)), 1, T);
        if (used.count(t)) {
            for (int off = 1; off < T; ++off) {
                if (t - off >= 1 && !used.count(t - off)) {
                    t -= off;
                    break;
                }
                if (t + off <= T && !used.count(t + off)) {
                    t += off;
                    break;
                }
            }
        }
        used.insert(t);
    }
    alloc.timesteps.assign(used.begin(), used.end());
    return alloc;
}

Allocation allocate_steps(const Schedule& parent, int N) {
    return allocate_from_thresholds(l_star_values(parent), N);
}

}  // namespace pifs::design
