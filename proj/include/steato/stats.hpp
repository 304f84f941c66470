#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "steato/core.hpp"

namespace steato::stats {

// ---------------------------------------------------------------------------
// Normal distribution helpers (Acklam inverse with a Halley refinement).

double normal_cdf(double x);
double normal_quantile(double p);

// ---------------------------------------------------------------------------
// Polynomial fits.

// Coefficients in ascending order: c0 + c1*m + c2*m^2 + c3*m^3. A fit
// degraded by rank deficiency keeps trailing zero coefficients.
struct CubicFit {
    std::array<double, 4> coef{0, 0, 0, 0};
    int degree = 3;            // degree actually fitted
    bool degraded = false;     // true when the requested degree was lowered

    double operator()(double m) const {
        return coef[0] + m * (coef[1] + m * (coef[2] + m * coef[3]));
    }
};

// OLS polynomial regression (default cubic) solved by a column-pivoted QR.
// Rank-deficient designs refit at successively lower degree.
CubicFit fit_sd_regression(std::span<const double> means, std::span<const double> sds,
                           int degree = 3);

// ---------------------------------------------------------------------------
// Repeatability.

// Sample standard deviation (n-1 denominator) of repeated image scores.
double within_subject_sd(std::span<const double> scores);

// RC = multiplier * sqrt(2/k) * s.
double rc_from_sd(double s, int k, double multiplier = 1.96);

struct RcTransform {
    int k = 1;
    double multiplier = 1.96;
    double sd_floor = 1e-6;  // keeps regressed SDs (and hence RCs) nonnegative

    double operator()(const CubicFit& fit, double m) const;
};

struct DomainMax {
    double argmax = 0.0;
    double value = 0.0;
};

// Maximum of the transformed curve over [lo, hi]: 1001-point uniform grid
// plus the cubic's interior critical points.
DomainMax max_over_domain(const CubicFit& fit, double lo, double hi,
                          const RcTransform& transform = {});

struct RepeatabilityCurve {
    CubicFit sd_fit;
    int k = 1;
    double domain_lo = 0.0;
    double domain_hi = 1.0;
    double max_rc = 0.0;
    std::pair<double, double> max_rc_ci{0.0, 0.0};
};

// ---------------------------------------------------------------------------
// Bland-Altman agreement.

struct BlandAltman {
    double bias = 0.0;
    std::vector<double> diffs;  // b - a
    std::vector<double> means;  // (a + b) / 2
};

BlandAltman bland_altman(std::span<const std::pair<double, double>> pairs);

struct LoaCurves {
    double bias = 0.0;              // mean difference
    CubicFit bias_fit;              // cubic of diffs on means
    CubicFit resid_fit;             // cubic of |residuals| on means
    double loa_multiplier = 1.96 * 1.2533141373155003;  // 1.96 * sqrt(pi/2)
    double domain_lo = 0.0;
    double domain_hi = 0.0;
    double max_upper = 0.0;
    double min_lower = 0.0;

    // The |residual| curve is floored at zero so upper(m) >= lower(m).
    double upper(double m) const;
    double lower(double m) const;
};

// Non-uniform limits of agreement via the absolute-residual method: cubic of
// diffs on means, cubic of |residuals| on means, LOA = bias curve +/-
// 1.96*sqrt(pi/2)*|residual| curve. Summaries over a 1001-point grid on the
// observed mean range.
LoaCurves fit_nonuniform_loa(std::span<const double> means, std::span<const double> diffs);

double percent_agreement(std::span<const SteatosisGrade> a, std::span<const SteatosisGrade> b);

// ---------------------------------------------------------------------------
// ROC / AUC.

struct RocResult {
    double auc = 0.0;
    std::pair<double, double> ci{0.0, 0.0};
    std::vector<std::pair<double, double>> points;  // (fpr, tpr), includes (0,0),(1,1)
    double youden_threshold = 0.0;
    double sens = 0.0;
    double spec = 0.0;
};

// Mann-Whitney AUC via DeLong structural components (ties count 1/2).
double auc(std::span<const double> scores, std::span<const char> labels);

// DeLong variance, normal-theory CI clamped to [0,1]; zero variance yields
// the degenerate interval (auc, auc).
struct DelongCi {
    double auc = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double se = 0.0;
};
DelongCi delong_ci(std::span<const double> scores, std::span<const char> labels,
                   double level = 0.95);

// Paired DeLong comparison of two score vectors on the same subjects.
struct DelongComparison {
    double auc_a = 0.0;
    double auc_b = 0.0;
    double z = 0.0;
    double p_value = 1.0;
};
DelongComparison delong_compare(std::span<const double> scores_a,
                                std::span<const double> scores_b, std::span<const char> labels);

struct YoudenCutoff {
    double threshold = 0.0;  // predicted positive <=> score > threshold
    double sens = 0.0;
    double spec = 0.0;
    double j = 0.0;
};
// Maximizes J = sens + spec - 1 over midpoints of adjacent distinct scores
// plus -inf/+inf sentinels; ties broken toward higher specificity, then
// lower threshold.
YoudenCutoff youden_cutoff(std::span<const double> scores, std::span<const char> labels);

// ROC curve points plus DeLong CI and the Youden operating point.
RocResult roc_analysis(std::span<const double> scores, std::span<const char> labels,
                       double level = 0.95);

// Predicted grade = number of cutoffs strictly below the score; returns the
// percentage of exact grade matches.
double grade_accuracy(std::span<const double> scores, std::span<const SteatosisGrade> grades,
                      const std::array<double, 3>& cutoffs);

// ---------------------------------------------------------------------------
// Trend test.

enum class TrendMethod { normal_approx, exact_permutation };

struct TrendTestResult {
    double statistic = 0.0;  // cross-group concordant pairs, ties counted 1/2
    double p_value = 1.0;    // one-sided, increasing alternative
    TrendMethod method = TrendMethod::normal_approx;
};

// Jonckheere-Terpstra test for a monotone increasing trend across ordered
// groups. Exact permutation enumeration when total n <= exact_limit, else a
// tie-corrected normal approximation with half-step continuity correction.
TrendTestResult jonckheere_terpstra(const std::vector<std::vector<double>>& groups,
                                    int exact_limit = 12);

// ---------------------------------------------------------------------------
// Multiplicity.

// Step-down Holm-Bonferroni; returns per-input rejection flags.
std::vector<bool> holm_bonferroni(std::span<const double> p_values, double alpha = 0.05);

}  // namespace steato::stats
