#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pifs/regime.hpp"
#include "pifs/schedule.hpp"

namespace pifs {

// Per-patch covariance spectra. Isotropic shorthand: a single eigenvalue
// lambda_k standing for n_k equal directions; full mode: one eigenvalue per
// direction (eigenvalues.size() == n_k), sorted descending.
struct SpectrumPatch {
    std::string id;
    int n_k = 0;
    std::vector<double> eigenvalues;

    bool isotropic() const { return eigenvalues.size() == 1 && n_k >= 1; }
    double lambda() const { return eigenvalues.front(); }
};

struct PatchSpectrum {
    std::vector<SpectrumPatch> patches;

    int total_dim() const;
    void validate() const;
};

enum class KyMode { gaussian, suppressed };

struct KYReport {
    std::vector<double> exponents;      // sorted descending
    int expanding_count = 0;            // N+ (gaussian) or N+++ (suppressed)
    int jstar = 0;
    double dimension = 0.0;
    bool jstar_condition_holds = false; // sum of expanding exponents < |least-negative contracting|
    bool closed_form_applicable = false;
    double closed_form = 0.0;           // valid when closed_form_applicable
    double lower_bound = 0.0;           // N+ + N+ Lambda+ / |Lambda_k*^-| fallback
    bool no_contracting_direction = false;
    KyMode mode = KyMode::gaussian;
    double gaussian_dimension = 0.0;    // suppressed mode: paired Gaussian value
};

// log prod_t f_t(lambda), compensated. Throws when f_t(lambda) <= 0 at any
// step (the offending step is named).
double log_moran_product(const Schedule& s, double lambda);
double moran_product(const Schedule& s, double lambda);

// Mean Lyapunov exponent (1/T) sum_t log f_t(mu).
double mean_lyapunov(const Schedule& s, double mu);

// Unique root lambda** > 1 of prod_t f_t(lambda) = 1, bisected until
// |G - 1| < tol. The upper bracket doubles from 2 and gives up at 2^16.
double moran_root(const Schedule& s, double tol = 1e-11);

struct SuppressedMoranResult {
    std::optional<double> root;  // empty when no sign change below the cap
    bool exceeds_cap = false;
    double cap = 0.0;
    double residual = 0.0;       // |G - 1| at the root when found
};

// Root of prod_t (f_t(lambda) - S_t) = 1 with S from the table: per-patch
// when `patch` is set, patch-averaged over the table otherwise. The search is
// capped (default 500); "exceeds cap" is a reportable outcome, not an error.
SuppressedMoranResult moran_root_suppressed(const Schedule& s, const SuppressionTable& table,
                                            std::optional<int> patch, double cap = 500.0,
                                            double tol = 1e-11);

// Kaplan-Yorke dimension from a Lyapunov spectrum (any order; sorted
// internally): j* is the largest index with nonnegative partial sum, the
// dimension interpolates with the next exponent.
KYReport ky_dimension(std::vector<double> exponents);

// Gaussian-data KY report: the exponent multiset is Lambda(mu) per direction
// (a direction expands exactly when Lambda > 0, i.e. when its variance clears
// the product-equation root), with the closed form checked against the exact
// computation when its cutoff condition holds.
KYReport ky_gaussian(const Schedule& s, const PatchSpectrum& spectrum);

// Suppression-corrected report: Lambda_eff,k = (1/T) sum_t log(f_t(lambda_k) - S_{k,t}).
// Requires isotropic patches whose ids parse as table patch indices, and
// S < f everywhere covered. S == 0 reproduces ky_gaussian exactly.
KYReport ky_suppressed(const Schedule& s, const PatchSpectrum& spectrum,
                       const SuppressionTable& table);

// Information gain at step t: sum_k n_k (log f_t(lambda_k))^2, or the exact
// per-block KL sum_k (n_k/2)(e^{2eps}-1-2eps) in exact mode.
double info_gain(const Schedule& s, int t, const PatchSpectrum& spectrum, bool exact_kl = false);

// Per-step KY dimension growth sum over expanding patches of n_k log f_t(lambda_k).
double ky_growth(const Schedule& s, int t, const PatchSpectrum& spectrum, double lambda_star_star);

// Per-step IG_t and Delta d_t over the whole chain (parallel over t, ordered
// output).
std::vector<double> info_gain_curve(const Schedule& s, const PatchSpectrum& spectrum, bool exact_kl = false);
std::vector<double> ky_growth_curve(const Schedule& s, const PatchSpectrum& spectrum, double lambda_star_star);

std::string ky_report_json(const KYReport& report);

}  // namespace pifs
