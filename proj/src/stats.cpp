#include "steato/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace steato::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0,1)");
    // Acklam's rational approximation, then one Halley step against erfc.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

// ---------------------------------------------------------------------------

CubicFit fit_sd_regression(std::span<const double> means, std::span<const double> sds,
                           int degree) {
    if (means.size() != sds.size())
        throw std::invalid_argument("fit_sd_regression: length mismatch");
    if (means.empty()) throw std::invalid_argument("fit_sd_regression: no points");
    if (degree < 0 || degree > 3) throw std::invalid_argument("fit_sd_regression: degree in 0..3");

    const auto n = static_cast<Eigen::Index>(means.size());
    bool degraded = false;
    for (int d = degree; d >= 0; --d) {
        if (n < d + 1) {
            degraded = true;
            continue;
        }
        Eigen::MatrixXd design(n, d + 1);
        Eigen::VectorXd rhs(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double pow_m = 1.0;
            for (int j = 0; j <= d; ++j) {
                design(i, j) = pow_m;
                pow_m *= means[static_cast<std::size_t>(i)];
            }
            rhs(i) = sds[static_cast<std::size_t>(i)];
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        if (qr.rank() < d + 1) {
            degraded = true;
            continue;
        }
        Eigen::VectorXd sol = qr.solve(rhs);
        CubicFit fit;
        fit.degree = d;
        fit.degraded = degraded || d < degree;
        for (int j = 0; j <= d; ++j) fit.coef[static_cast<std::size_t>(j)] = sol(j);
        return fit;
    }
    // Unreachable: degree 0 on n >= 1 always has full rank.
    throw NumericError("fit_sd_regression: no fit possible");
}

double within_subject_sd(std::span<const double> scores) {
    if (scores.size() < 2) throw std::domain_error("within_subject_sd: need >= 2 scores");
    const double n = static_cast<double>(scores.size());
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
    double ss = 0.0;
    for (double s : scores) ss += (s - mean) * (s - mean);
    return std::sqrt(ss / (n - 1.0));
}

double rc_from_sd(double s, int k, double multiplier) {
    if (s < 0.0) throw std::domain_error("rc_from_sd: s must be >= 0");
    if (k < 1) throw std::domain_error("rc_from_sd: k must be >= 1");
    return multiplier * std::sqrt(2.0 / static_cast<double>(k)) * s;
}

double RcTransform::operator()(const CubicFit& fit, double m) const {
    return multiplier * std::sqrt(2.0 / static_cast<double>(k)) * std::max(fit(m), sd_floor);
}

DomainMax max_over_domain(const CubicFit& fit, double lo, double hi,
                          const RcTransform& transform) {
    if (!(lo <= hi)) throw std::invalid_argument("max_over_domain: invalid interval");
    std::vector<double> candidates;
    candidates.reserve(1003);
    const int grid = 1000;
    for (int i = 0; i <= grid; ++i)
        candidates.push_back(lo + (hi - lo) * static_cast<double>(i) / grid);
    // Interior critical points of the cubic: 3*c3*m^2 + 2*c2*m + c1 = 0.
    const double c1 = fit.coef[1], c2 = fit.coef[2], c3 = fit.coef[3];
    if (c3 != 0.0) {
        const double disc = 4.0 * c2 * c2 - 12.0 * c3 * c1;
        if (disc >= 0.0) {
            const double r = std::sqrt(disc);
            for (double root : {(-2.0 * c2 + r) / (6.0 * c3), (-2.0 * c2 - r) / (6.0 * c3)})
                if (root > lo && root < hi) candidates.push_back(root);
        }
    } else if (c2 != 0.0) {
        const double root = -c1 / (2.0 * c2);
        if (root > lo && root < hi) candidates.push_back(root);
    }
    DomainMax best{candidates.front(), transform(fit, candidates.front())};
    for (double m : candidates) {
        const double v = transform(fit, m);
        if (v > best.value) best = {m, v};
    }
    return best;
}

// ---------------------------------------------------------------------------

BlandAltman bland_altman(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 2) throw std::domain_error("bland_altman: need >= 2 pairs");
    BlandAltman out;
    out.diffs.reserve(pairs.size());
    out.means.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
        out.diffs.push_back(b - a);
        out.means.push_back((a + b) / 2.0);
    }
    out.bias = std::accumulate(out.diffs.begin(), out.diffs.end(), 0.0) /
               static_cast<double>(out.diffs.size());
    return out;
}

double LoaCurves::upper(double m) const {
    return bias_fit(m) + loa_multiplier * std::max(resid_fit(m), 0.0);
}

double LoaCurves::lower(double m) const {
    return bias_fit(m) - loa_multiplier * std::max(resid_fit(m), 0.0);
}

LoaCurves fit_nonuniform_loa(std::span<const double> means, std::span<const double> diffs) {
    if (means.size() != diffs.size())
        throw std::invalid_argument("fit_nonuniform_loa: length mismatch");
    if (means.size() < 5) throw std::domain_error("fit_nonuniform_loa: need >= 5 pairs");

    LoaCurves out;
    out.bias = std::accumulate(diffs.begin(), diffs.end(), 0.0) /
               static_cast<double>(diffs.size());
    out.bias_fit = fit_sd_regression(means, diffs, 3);
    std::vector<double> abs_resid(means.size());
    for (std::size_t i = 0; i < means.size(); ++i)
        abs_resid[i] = std::abs(diffs[i] - out.bias_fit(means[i]));
    out.resid_fit = fit_sd_regression(means, abs_resid, 3);

    out.domain_lo = *std::min_element(means.begin(), means.end());
    out.domain_hi = *std::max_element(means.begin(), means.end());
    const int grid = 1000;
    out.max_upper = -std::numeric_limits<double>::infinity();
    out.min_lower = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
        const double m = out.domain_lo + (out.domain_hi - out.domain_lo) * i / double(grid);
        out.max_upper = std::max(out.max_upper, out.upper(m));
        out.min_lower = std::min(out.min_lower, out.lower(m));
    }
    return out;
}

double percent_agreement(std::span<const SteatosisGrade> a, std::span<const SteatosisGrade> b) {
    if (a.size() != b.size()) throw std::domain_error("percent_agreement: length mismatch");
    if (a.empty()) throw std::domain_error("percent_agreement: empty input");
    std::size_t equal = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] == b[i]) ++equal;
    return 100.0 * static_cast<double>(equal) / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------

namespace {

struct SplitScores {
    std::vector<double> pos;
    std::vector<double> neg;
};

SplitScores split_by_label(std::span<const double> scores, std::span<const char> labels) {
    if (scores.size() != labels.size()) throw std::domain_error("scores/labels length mismatch");
    SplitScores s;
    for (std::size_t i = 0; i < scores.size(); ++i)
        (labels[i] ? s.pos : s.neg).push_back(scores[i]);
    if (s.pos.empty() || s.neg.empty())
        throw std::domain_error("both classes must be present");
    return s;
}

inline double psi(double x, double y) { return x > y ? 1.0 : (x == y ? 0.5 : 0.0); }

// DeLong structural components V10 (per positive) and V01 (per negative).
void structural_components(const std::vector<double>& pos, const std::vector<double>& neg,
                           std::vector<double>& v10, std::vector<double>& v01) {
    const std::size_t m = pos.size(), n = neg.size();
    v10.assign(m, 0.0);
    v01.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double p = psi(pos[i], neg[j]);
            v10[i] += p;
            v01[j] += p;
        }
    }
    for (double& v : v10) v /= static_cast<double>(n);
    for (double& v : v01) v /= static_cast<double>(m);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_cov(const std::vector<double>& a, double ma, const std::vector<double>& b,
                  double mb) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / static_cast<double>(a.size() - 1);
}

}  // namespace

double auc(std::span<const double> scores, std::span<const char> labels) {
    const SplitScores s = split_by_label(scores, labels);
    std::vector<double> v10, v01;
    structural_components(s.pos, s.neg, v10, v01);
    return mean_of(v10);
}

DelongCi delong_ci(std::span<const double> scores, std::span<const char> labels, double level) {
    const SplitScores s = split_by_label(scores, labels);
    if (s.pos.size() < 2 || s.neg.size() < 2)
        throw std::domain_error("delong_ci: need >= 2 samples per class");
    std::vector<double> v10, v01;
    structural_components(s.pos, s.neg, v10, v01);
    DelongCi out;
    out.auc = mean_of(v10);
    const double s10 = sample_cov(v10, out.auc, v10, out.auc);
    const double s01 = sample_cov(v01, out.auc, v01, out.auc);
    const double var = s10 / static_cast<double>(s.pos.size()) +
                       s01 / static_cast<double>(s.neg.size());
    out.se = var > 0.0 ? std::sqrt(var) : 0.0;
    if (out.se == 0.0) {
        out.lo = out.hi = out.auc;
        return out;
    }
    const double z = normal_quantile(0.5 + level / 2.0);
    out.lo = std::max(0.0, out.auc - z * out.se);
    out.hi = std::min(1.0, out.auc + z * out.se);
    return out;
}

DelongComparison delong_compare(std::span<const double> scores_a,
                                std::span<const double> scores_b, std::span<const char> labels) {
    if (scores_a.size() != scores_b.size() || scores_a.size() != labels.size())
        throw std::domain_error("delong_compare: unpaired input lengths");
    std::vector<double> pos_a, neg_a, pos_b, neg_b;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            pos_a.push_back(scores_a[i]);
            pos_b.push_back(scores_b[i]);
        } else {
            neg_a.push_back(scores_a[i]);
            neg_b.push_back(scores_b[i]);
        }
    }
    if (pos_a.empty() || neg_a.empty())
        throw std::domain_error("delong_compare: both classes must be present");
    if (pos_a.size() < 2 || neg_a.size() < 2)
        throw std::domain_error("delong_compare: need >= 2 samples per class");

    std::vector<double> v10a, v01a, v10b, v01b;
    structural_components(pos_a, neg_a, v10a, v01a);
    structural_components(pos_b, neg_b, v10b, v01b);

    DelongComparison out;
    out.auc_a = mean_of(v10a);
    out.auc_b = mean_of(v10b);
    const double m = static_cast<double>(pos_a.size());
    const double n = static_cast<double>(neg_a.size());
    const double var =
        (sample_cov(v10a, out.auc_a, v10a, out.auc_a) +
         sample_cov(v10b, out.auc_b, v10b, out.auc_b) -
         2.0 * sample_cov(v10a, out.auc_a, v10b, out.auc_b)) / m +
        (sample_cov(v01a, out.auc_a, v01a, out.auc_a) +
         sample_cov(v01b, out.auc_b, v01b, out.auc_b) -
         2.0 * sample_cov(v01a, out.auc_a, v01b, out.auc_b)) / n;
    if (var <= 0.0) {
        out.z = 0.0;
        out.p_value = 1.0;
        return out;
    }
    out.z = (out.auc_a - out.auc_b) / std::sqrt(var);
    out.p_value = std::erfc(std::abs(out.z) / std::numbers::sqrt2);
    return out;
}

YoudenCutoff youden_cutoff(std::span<const double> scores, std::span<const char> labels) {
    const SplitScores s = split_by_label(scores, labels);
    std::vector<double> distinct(scores.begin(), scores.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> candidates;
    candidates.push_back(-std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
        candidates.push_back((distinct[i] + distinct[i + 1]) / 2.0);
    candidates.push_back(std::numeric_limits<double>::infinity());

    const long long p_total = static_cast<long long>(s.pos.size());
    const long long n_total = static_cast<long long>(s.neg.size());
    // J comparisons in exact integer arithmetic: J*(P*N) = TP*N + TN*P - P*N.
    long long best_num = std::numeric_limits<long long>::min();
    long long best_tn = -1;
    double best_t = 0.0;
    long long best_tp = 0;
    for (double t : candidates) {
        long long tp = 0, tn = 0;
        for (double x : s.pos)
            if (x > t) ++tp;
        for (double y : s.neg)
            if (!(y > t)) ++tn;
        const long long num = tp * n_total + tn * p_total;
        if (num > best_num || (num == best_num && tn > best_tn)) {
            best_num = num;
            best_tn = tn;
            best_tp = tp;
            best_t = t;
        }
    }
    YoudenCutoff out;
    out.threshold = best_t;
    out.sens = static_cast<double>(best_tp) / static_cast<double>(p_total);
    out.spec = static_cast<double>(best_tn) / static_cast<double>(n_total);
    out.j = out.sens + out.spec - 1.0;
    return out;
}

RocResult roc_analysis(std::span<const double> scores, std::span<const char> labels,
                       double level) {
    const DelongCi ci = delong_ci(scores, labels, level);
    const YoudenCutoff cut = youden_cutoff(scores, labels);

    // Sweep thresholds downward through distinct score values; ties move as a
    // block so the trapezoid area equals the Mann-Whitney estimate.
    std::vector<std::pair<double, char>> order(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) order[i] = {scores[i], labels[i]};
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    long long p_total = 0, n_total = 0;
    for (char l : labels) (l ? p_total : n_total) += 1;

    RocResult out;
    out.auc = ci.auc;
    out.ci = {ci.lo, ci.hi};
    out.youden_threshold = cut.threshold;
    out.sens = cut.sens;
    out.spec = cut.spec;
    out.points.push_back({0.0, 0.0});
    long long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && order[j].first == order[i].first) {
            (order[j].second ? tp : fp) += 1;
            ++j;
        }
        out.points.push_back({static_cast<double>(fp) / static_cast<double>(n_total),
                              static_cast<double>(tp) / static_cast<double>(p_total)});
        i = j;
    }
    if (out.points.back() != std::pair<double, double>{1.0, 1.0})
        out.points.push_back({1.0, 1.0});
    return out;
}

double grade_accuracy(std::span<const double> scores, std::span<const SteatosisGrade> grades,
                      const std::array<double, 3>& cutoffs) {
    if (!(cutoffs[0] < cutoffs[1] && cutoffs[1] < cutoffs[2]))
        throw std::domain_error("grade_accuracy: cutoffs must be strictly increasing");
    if (scores.size() != grades.size())
        throw std::domain_error("grade_accuracy: length mismatch");
    if (scores.empty()) throw std::domain_error("grade_accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        int pred = 0;
        for (double c : cutoffs)
            if (c < scores[i]) ++pred;
        if (pred == grade_value(grades[i])) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(scores.size());
}

// ---------------------------------------------------------------------------

namespace {

double jt_statistic(const std::vector<std::vector<double>>& groups) {
    double t = 0.0;
    for (std::size_t i = 0; i < groups.size(); ++i)
        for (std::size_t j = i + 1; j < groups.size(); ++j)
            for (double x : groups[i])
                for (double y : groups[j]) t += psi(y, x);
    return t;
}

// Enumerates every assignment of the pooled values into groups of the given
// sizes, counting assignments whose statistic reaches the observed one.
void enumerate_assignments(const std::vector<double>& pooled, std::vector<int>& taken,
                           std::vector<std::vector<double>>& current,
                           const std::vector<std::size_t>& sizes, std::size_t gi, double observed,
                           long long& ge_count, long long& total) {
    if (gi + 1 == sizes.size()) {
        auto& last = current[gi];
        last.clear();
        for (std::size_t i = 0; i < pooled.size(); ++i)
            if (!taken[i]) last.push_back(pooled[i]);
        ++total;
        if (jt_statistic(current) >= observed - 1e-9) ++ge_count;
        return;
    }
    // Choose sizes[gi] untaken indices in increasing order.
    std::vector<std::size_t> avail;
    for (std::size_t i = 0; i < pooled.size(); ++i)
        if (!taken[i]) avail.push_back(i);
    const std::size_t want = sizes[gi];
    std::vector<std::size_t> pickidx(want);
    auto rec = [&](auto&& self, std::size_t depth, std::size_t start) -> void {
        if (depth == want) {
            auto& g = current[gi];
            g.clear();
            for (std::size_t k = 0; k < want; ++k) {
                taken[avail[pickidx[k]]] = 1;
                g.push_back(pooled[avail[pickidx[k]]]);
            }
            enumerate_assignments(pooled, taken, current, sizes, gi + 1, observed, ge_count,
                                  total);
            for (std::size_t k = 0; k < want; ++k) taken[avail[pickidx[k]]] = 0;
            return;
        }
        for (std::size_t i = start; i + (want - depth) <= avail.size(); ++i) {
            pickidx[depth] = i;
            self(self, depth + 1, i + 1);
        }
    };
    rec(rec, 0, 0);
}

}  // namespace

TrendTestResult jonckheere_terpstra(const std::vector<std::vector<double>>& groups,
                                    int exact_limit) {
    if (groups.size() < 2) throw std::domain_error("jonckheere_terpstra: need >= 2 groups");
    std::size_t total_n = 0;
    for (const auto& g : groups) {
        if (g.empty()) throw std::domain_error("jonckheere_terpstra: empty group");
        total_n += g.size();
    }

    TrendTestResult out;
    out.statistic = jt_statistic(groups);

    if (static_cast<int>(total_n) <= exact_limit) {
        out.method = TrendMethod::exact_permutation;
        std::vector<double> pooled;
        std::vector<std::size_t> sizes;
        for (const auto& g : groups) {
            sizes.push_back(g.size());
            pooled.insert(pooled.end(), g.begin(), g.end());
        }
        std::vector<int> taken(pooled.size(), 0);
        std::vector<std::vector<double>> current(groups.size());
        long long ge_count = 0, total = 0;
        enumerate_assignments(pooled, taken, current, sizes, 0, out.statistic, ge_count, total);
        out.p_value = static_cast<double>(ge_count) / static_cast<double>(total);
        return out;
    }

    out.method = TrendMethod::normal_approx;
    const double n = static_cast<double>(total_n);
    double sum_sq = 0.0, sum_s1 = 0.0, sum_s2 = 0.0, sum_s3 = 0.0;
    for (const auto& g : groups) {
        const double s = static_cast<double>(g.size());
        sum_sq += s * s;
        sum_s1 += s * (s - 1.0) * (2.0 * s + 5.0);
        sum_s2 += s * (s - 1.0) * (s - 2.0);
        sum_s3 += s * (s - 1.0);
    }
    std::vector<double> pooled;
    for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
    std::sort(pooled.begin(), pooled.end());
    double sum_t1 = 0.0, sum_t2 = 0.0, sum_t3 = 0.0;
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
        const double t = static_cast<double>(j - i);
        sum_t1 += t * (t - 1.0) * (2.0 * t + 5.0);
        sum_t2 += t * (t - 1.0) * (t - 2.0);
        sum_t3 += t * (t - 1.0);
        i = j;
    }
    const double mean = (n * n - sum_sq) / 4.0;
    const double var = (n * (n - 1.0) * (2.0 * n + 5.0) - sum_s1 - sum_t1) / 72.0 +
                       sum_s2 * sum_t2 / (36.0 * n * (n - 1.0) * (n - 2.0)) +
                       sum_s3 * sum_t3 / (8.0 * n * (n - 1.0));
    if (var <= 0.0) {
        out.p_value = out.statistic > mean ? 0.0 : 1.0;
        return out;
    }
    // Half-step continuity correction for the integer statistic lattice.
    const double z = (out.statistic - 0.5 - mean) / std::sqrt(var);
    out.p_value = 1.0 - normal_cdf(z);
    return out;
}

std::vector<bool> holm_bonferroni(std::span<const double> p_values, double alpha) {
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0))
            throw std::domain_error("holm_bonferroni: p-values must be in [0,1]");
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    std::vector<bool> reject(m, false);
    for (std::size_t i = 0; i < m; ++i) {
        if (p_values[order[i]] <= alpha / static_cast<double>(m - i))
            reject[order[i]] = true;
        else
            break;
    }
    return reject;
}

}  // namespace steato::stats
