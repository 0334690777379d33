#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pifs/schedule.hpp"
#include "pifs/stats.hpp"

namespace pifs {

// Externally measured directional suppression S_{k,t} on a sparse
// (patch, timestep) grid. Values are interpolated in t between measured
// timesteps and extrapolated as constants at the ends. Timesteps are
// parent-chain labels, so a table measured on the full chain applies directly
// to a subsampled schedule.
class SuppressionTable {
public:
    enum class Interp { linear, nearest };

    // Negative inputs below -1e-6 are rejected; values in [-1e-6, 0) are
    // treated as measurement noise and clamped to 0.
    void insert(int patch, double t, double S);

    double value(int patch, double t) const;
    bool has_patch(int patch) const;
    std::vector<int> patches() const;
    bool empty() const { return grid_.empty(); }

    void set_interpolation(Interp mode) { interp_ = mode; }

    // CSV with header "patch,t,S", rows in any order.
    static SuppressionTable from_csv_text(const std::string& text);
    static SuppressionTable from_csv_file(const std::string& path);

private:
    std::map<int, std::vector<std::pair<double, double>>> grid_;  // patch -> sorted (t, S)
    Interp interp_ = Interp::linear;
};

// Suppression margin gamma_{k,t} = S_{k,t} - (f_t(lambda_k) - 1). Positive
// margin keeps the diagonal Rayleigh quotient below 1.
double margin(const Schedule& s, const SuppressionTable& table, double lambda_k, int patch, int t);

struct PatchRelease {
    int patch = 0;
    double lambda = 0.0;
    std::vector<double> margin_curve;   // gamma over executed steps, index t-1
    std::optional<int> release_time;    // largest parent timestep with gamma <= 0; nullopt = never
    double gamma_min = 0.0;
    double gamma_max = 0.0;
};

struct ReleaseReport {
    std::vector<PatchRelease> patches;
    // Observed spread of release times (max - min over released patches);
    // 0 when fewer than two patches released.
    double stratified_span_observed = 0.0;
};

ReleaseReport release_times(const Schedule& s, const SuppressionTable& table,
                            const std::vector<std::pair<int, double>>& patch_lambdas);

// CSV "patch,lambda,t_rel,gamma_min,gamma_max"; t_rel prints "never" when the
// margin stays positive throughout.
std::string release_csv(const ReleaseReport& report);

// First-order release-time spread across patches,
//   (lambda_max - lambda_min) * (dS/dlambda - f_t'(lambda_bar)) / |dS/dt - df_t/dt(lambda_bar)|,
// with df_t/dt taken as a central difference over adjacent steps. The result
// may be negative when the spectral-monotonicity condition fails; the sign is
// returned as-is.
double stratified_span(double lambda_min, double lambda_max, double dS_dlambda, double dS_dt,
                       const Schedule& s, int t_bar, double lambda_bar);

// Sufficient condition for spectral monotonicity of the margin:
//   c_t * v_t^2 > |b_t| * sqrt(v_t) * alpha_bar_t.
bool mm1_sufficient(const Schedule& s, int t, double c_t);

// Gaussian per-patch reconstruction loss lambda*v_t / (alpha_bar_t*lambda + v_t).
double gaussian_patch_loss(const Schedule& s, int t, double lambda);

// Spearman rank correlation of per-patch kappa_diag against patch variances,
// with a two-sided p-value (exact permutation for n < 10, t-approximation
// otherwise).
stats::SpearmanResult spearman_vs_lambda(const std::vector<double>& lambdas,
                                         const std::vector<double>& kappa_diag);

}  // namespace pifs
