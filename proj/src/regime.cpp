#include "pifs/regime.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pifs/contraction.hpp"
#include "pifs/numerics.hpp"

namespace pifs {

namespace {
constexpr double kNoiseTolerance = -1e-6;
}

void SuppressionTable::insert(int patch, double t, double S) {
    if (S < kNoiseTolerance)
        throw std::invalid_argument("suppression table: negative S at patch " + std::to_string(patch));
    if (S < 0.0) S = 0.0;
    auto& rows = grid_[patch];
    auto pos = std::lower_bound(rows.begin(), rows.end(), std::make_pair(t, -1.0));
    if (pos != rows.end() && pos->first == t)
        throw std::invalid_argument("suppression table: duplicate (patch,t) entry");
    rows.insert(pos, {t, S});
}

bool SuppressionTable::has_patch(int patch) const { return grid_.count(patch) != 0; }

std::vector<int> SuppressionTable::patches() const {
    std::vector<int> out;
    out.reserve(grid_.size());
    for (const auto& [k, rows] : grid_) out.push_back(k);
    return out;
}

double SuppressionTable::value(int patch, double t) const {
    auto it = grid_.find(patch);
    if (it == grid_.end())
        throw std::invalid_argument("suppression table: patch " + std::to_string(patch) + " absent");
    const auto& rows = it->second;
    if (t <= rows.front().first) return rows.front().second;  // constant extrapolation
    if (t >= rows.back().first) return rows.back().second;
    auto hi = std::upper_bound(rows.begin(), rows.end(), std::make_pair(t, 1e300));
    auto lo = hi - 1;
    if (interp_ == Interp::nearest)
        return (t - lo->first <= hi->first - t) ? lo->second : hi->second;
    double w = (t - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

SuppressionTable SuppressionTable::from_csv_text(const std::string& text) {
    SuppressionTable table;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        if (lineno == 1) {
            if (line.rfind("patch,t,S", 0) != 0)
                throw std::invalid_argument("suppression csv: expected header 'patch,t,S'");
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        int patch;
        double t, S;
        try {
            std::getline(row, cell, ',');
            patch = std::stoi(cell);
            std::getline(row, cell, ',');
            t = std::stod(cell);
            std::getline(row, cell, ',');
            S = std::stod(cell);
        } catch (const std::exception&) {
            throw std::invalid_argument("suppression csv: malformed row at line " + std::to_string(lineno));
        }
        table.insert(patch, t, S);
    }
    return table;
}

SuppressionTable SuppressionTable::from_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open suppression csv: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_csv_text(buf.str());
}

double margin(const Schedule& s, const SuppressionTable& table, double lambda_k, int patch, int t) {
    if (!(lambda_k > 0.0)) throw std::invalid_argument("margin: lambda must be positive");
    double S = table.value(patch, static_cast<double>(s.timestep_label(t)));
    return S - (f_t(s, t, lambda_k) - 1.0);
}

ReleaseReport release_times(const Schedule& s, const SuppressionTable& table,
                            const std::vector<std::pair<int, double>>& patch_lambdas) {
    for (const auto& [k, lam] : patch_lambdas)
        if (!table.has_patch(k))
            throw std::invalid_argument("release_times: patch " + std::to_string(k) + " absent from table");
    ReleaseReport report;
    std::optional<int> lo, hi;
    for (const auto& [k, lam] : patch_lambdas) {
        PatchRelease pr;
        pr.patch = k;
        pr.lambda = lam;
        pr.margin_curve.resize(static_cast<std::size_t>(s.T));
        for (int t = 1; t <= s.T; ++t) pr.margin_curve[t - 1] = margin(s, table, lam, k, t);
        for (int t = s.T; t >= 1; --t) {
            if (pr.margin_curve[t - 1] <= 0.0) {
                pr.release_time = s.timestep_label(t);
                break;
            }
        }
        pr.gamma_min = *std::min_element(pr.margin_curve.begin(), pr.margin_curve.end());
        pr.gamma_max = *std::max_element(pr.margin_curve.begin(), pr.margin_curve.end());
        if (pr.release_time) {
            lo = lo ? std::min(*lo, *pr.release_time) : *pr.release_time;
            hi = hi ? std::max(*hi, *pr.release_time) : *pr.release_time;
        }
        report.patches.push_back(std::move(pr));
    }
    if (lo && hi) report.stratified_span_observed = static_cast<double>(*hi - *lo);
    return report;
}

std::string release_csv(const ReleaseReport& report) {
    std::ostringstream os;
    os << "patch,lambda,t_rel,gamma_min,gamma_max\n";
    for (const auto& pr : report.patches) {
        os << pr.patch << ',' << format_full(pr.lambda) << ',';
        if (pr.release_time)
            os << *pr.release_time;
        else
            os << "never";
        os << ',' << format_full(pr.gamma_min) << ',' << format_full(pr.gamma_max) << '\n';
    }
    return os.str();
}

double stratified_span(double lambda_min, double lambda_max, double dS_dlambda, double dS_dt,
                       const Schedule& s, int t_bar, double lambda_bar) {
    if (t_bar < 2 || t_bar > s.T - 1)
        throw std::invalid_argument("stratified_span: t_bar needs interior neighbours for the central difference");
    const StepGeometry g = step_geometry(s, t_bar);
    double numerator = (lambda_max - lambda_min) * (dS_dlambda - f_t_dlambda(g, lambda_bar));
    double dfdt = 0.5 * (f_t(s, t_bar + 1, lambda_bar) - f_t(s, t_bar - 1, lambda_bar));
    double denominator = std::abs(dS_dt - dfdt);
    if (denominator == 0.0) throw std::invalid_argument("stratified_span: zero temporal margin slope");
    return numerator / denominator;
}

bool mm1_sufficient(const Schedule& s, int t, double c_t) {
    if (!(c_t > 0.0)) throw std::invalid_argument("mm1_sufficient: c_t must be positive");
    const StepGeometry g = step_geometry(s, t);
    return c_t * g.v_t * g.v_t > (-g.b_t) * std::sqrt(g.v_t) * g.alpha_bar_t;
}

double gaussian_patch_loss(const Schedule& s, int t, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("gaussian_patch_loss: lambda must be positive");
    const StepGeometry g = step_geometry(s, t);
    return lambda * g.v_t / (g.alpha_bar_t * lambda + g.v_t);
}

stats::SpearmanResult spearman_vs_lambda(const std::vector<double>& lambdas,
                                         const std::vector<double>& kappa_diag) {
    if (lambdas.size() < 3) throw std::invalid_argument("spearman_vs_lambda: need at least 3 patches");
    return stats::spearman_test(lambdas, kappa_diag);
}

}  // namespace pifs
