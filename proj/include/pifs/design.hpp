#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pifs/attractor.hpp"
#include "pifs/schedule.hpp"
#include "pifs/stats.hpp"

namespace pifs::design {

// Shared statistics, re-exported.
using stats::cv;
using stats::ols_loglog;
using stats::spearman;
using stats::spearman_test;

struct ScheduleReport {
    std::string name;
    ThresholdStats thresholds;
    double lambda_star_interior_min = 0.0;   // over t = 2..T-1
    double lambda_star_interior_max = 0.0;
    int lambda_star_argmin = 0;              // parent-chain label
    // spectrum-dependent columns (set when a spectrum is supplied)
    bool has_ig_columns = false;
    double cv_ig = 0.0;
    double cv_abs_dd = 0.0;
    double spearman_ig_dd = 0.0;
    double ratio_to_theory = 0.0;            // mean(IG/dd^2) * N++
};

std::vector<ScheduleReport> compare_schedules(const std::vector<std::pair<std::string, Schedule>>& schedules,
                                              const std::optional<PatchSpectrum>& spectrum);

std::string compare_csv(const std::vector<ScheduleReport>& reports);

struct EqualisationReport {
    bool exempt = false;        // T < 3: the impossibility statement is vacuous
    double spread = 0.0;        // max L* - min L*
    double mean = 0.0;
    bool spread_exceeds_tol = false;
    // number of alpha_bar values where L_fit*sqrt(1-a) + sqrt(a) crosses 1;
    // concavity caps the exact-equalisation count at two
    int unit_crossings = 0;
};

EqualisationReport equalisation_check(const Schedule& s, double tol);

struct OffsetRow {
    double s_off = 0.0;
    double v1 = 0.0;
    double L1_star = 0.0;
    double ratio_to_zero_offset = 0.0;
};

std::vector<OffsetRow> cosine_offset_analysis(int T, const std::vector<double>& offsets);

struct CensusRow {
    std::string patch;
    double lambda = 0.0;
    int forcing_steps = 0;
    int total_steps = 0;
};

struct CensusReport {
    std::vector<CensusRow> rows;
    double global_fraction = 0.0;
};

// Counts steps with lambda_k > lambda*(t) per patch; include_boundary covers
// t = 1 and t = T, otherwise only interior steps.
CensusReport expansion_census(const Schedule& s, const PatchSpectrum& spectrum, bool include_boundary);

struct MinSnrBoundary {
    int t_cross = 0;            // largest t with SNR_t >= gamma
    double L_star_at_cross = 0.0;
};

MinSnrBoundary minsnr_boundary(const Schedule& s, double gamma);

struct Allocation {
    int N = 0;
    std::vector<double> positions;     // u_i in (0,1], strictly increasing
    std::vector<int> timesteps;        // parent steps after snapping, distinct
    std::vector<double> density;       // rho*(u_i), normalized so the density integrates to N
    std::vector<double> loads;         // per-interval difficulty loads, pre-snapping
    double max_load = 0.0;
    double load_spread = 0.0;          // max/min - 1
    double density_integral = 0.0;     // integral of the normalized density (= N)
};

// Inverse-CDF allocation with density proportional to 1/L*(u), L*
// piecewise-linear between the per-step values. Collisions after integer
// snapping shift to the nearest unused step.
Allocation allocate_steps(const Schedule& parent, int N);

// Same allocator on an externally supplied L* profile over T steps (used for
// synthetic flat-threshold checks).
Allocation allocate_from_thresholds(const std::vector<double>& l_star, int N);

}  // namespace pifs::design
