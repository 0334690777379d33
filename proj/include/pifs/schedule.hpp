#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pifs {

enum class ScheduleKind { linear, cosine, subsampled, custom };

// Cumulative noise schedule: alpha_bar[0] = 1, strictly decreasing, each value
// in (0,1]. Immutable after construction; every other quantity in this library
// derives from it.
struct Schedule {
    int T = 0;
    std::vector<double> alpha_bar;           // size T+1
    ScheduleKind kind = ScheduleKind::custom;

    // construction metadata
    double beta1 = 0.0, betaT = 0.0;         // linear
    double s_offset = 0.0;                   // cosine
    bool beta_clip = true;                   // cosine: per-step beta capped at 0.999
    std::optional<ScheduleKind> parent_kind; // subsampled
    std::vector<int> executed_timesteps;     // subsampled: parent indices, size T

    // Parent-chain timestep label for step t (1-based); identity for
    // non-subsampled schedules.
    int timestep_label(int t) const;
};

// Per-step scalar geometry. expand_ratio > 1 and b_t < 0 hold for every step
// of every valid schedule.
struct StepGeometry {
    int t = 0;
    double alpha_bar_prev = 0.0;
    double alpha_bar_t = 0.0;
    double v_prev = 0.0;     // 1 - alpha_bar_prev
    double v_t = 0.0;        // 1 - alpha_bar_t
    double expand_ratio = 0.0;  // sqrt(alpha_bar_prev / alpha_bar_t)
    double b_t = 0.0;           // sqrt(v_prev) - expand_ratio * sqrt(v_t)
    double L_star = 0.0;        // (expand_ratio - 1) / |b_t|
    double snr_t = 0.0;         // alpha_bar_t / v_t (+inf when v_t == 0)
    double logsnr_t = 0.0;
};

// Statistics of L*_t over the executed steps. The std/cv here use the
// population (n) convention, which is what reproduces the reference table at
// n = 50; the general-purpose sample-std cv lives in stats.
struct ThresholdStats {
    int count = 0;
    double mean = 0.0;
    double std = 0.0;
    double cv = 0.0;
    double min_value = 0.0;
    int min_timestep = 0;                  // parent-chain label
    double value_at_finest_executed_step = 0.0;
};

// Linear beta ramp, beta_s from beta1 to betaT over s = 1..T.
Schedule make_linear(int T, double beta1, double betaT);

// Squared-cosine schedule with offset. alpha_bar[T] is kept away from zero:
// per-step beta is capped at 0.999 when beta_clip is set (the convention the
// reference tables use), and the final value is floored at 1e-12 either way.
Schedule make_cosine(int T, double s_off, bool beta_clip = true);

// Wraps an externally supplied alpha_bar sequence (index 0..T); validates the
// Schedule invariants.
Schedule make_custom(std::vector<double> alpha_bar);

// New schedule executing the given strictly increasing parent timesteps;
// alpha_bar[0] = 1, so the first executed step is measured against the clean
// reference.
Schedule subsample(const Schedule& parent, const std::vector<int>& executed);

StepGeometry step_geometry(const Schedule& s, int t);

ThresholdStats threshold_stats(const Schedule& s);

std::vector<double> l_star_values(const Schedule& s);

// Schedule with per-step SNR scaled by (d_base/d)^2, alpha_bar recovered from
// the shifted SNR. Errors out if the shift underflows any alpha_bar.
Schedule logsnr_shift(const Schedule& s, double d, double d_base);

// w_t = min(SNR_t, gamma) / SNR_t.
std::vector<double> minsnr_weights(const Schedule& s, double gamma);

// Per-step SNR_t, the reconstruction-objective weights.
std::vector<double> collage_weights(const Schedule& s);

// Header: t,alpha_bar_prev,alpha_bar,v,b,L_star,snr,logsnr with one row per
// executed step at 17 significant digits.
std::string geometry_csv(const Schedule& s);

}  // namespace pifs
