#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "steato/bootstrap.hpp"
#include "steato/stats.hpp"

using namespace steato;
using namespace steato::stats;

namespace {

// Brute-force Mann-Whitney pair counting, the independent AUC oracle.
double auc_brute_force(const std::vector<double>& scores, const std::vector<char>& labels) {
    double wins = 0.0;
    long long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

double jt_stat_oracle(const std::vector<std::vector<double>>& groups) {
    double t = 0.0;
    for (std::size_t i = 0; i < groups.size(); ++i)
        for (std::size_t j = i + 1; j < groups.size(); ++j)
            for (double x : groups[i])
                for (double y : groups[j]) t += y > x ? 1.0 : (y == x ? 0.5 : 0.0);
    return t;
}

// Exhaustive permutation oracle built on next_permutation over group labels,
// an independent code path from the library's combination recursion.
double jt_exact_p_oracle(const std::vector<std::vector<double>>& groups) {
    std::vector<double> pooled;
    std::vector<int> assignment;
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (double v : groups[g]) {
            pooled.push_back(v);
            assignment.push_back(static_cast<int>(g));
        }
    const double observed = jt_stat_oracle(groups);
    std::sort(assignment.begin(), assignment.end());
    long long ge = 0, total = 0;
    do {
        std::vector<std::vector<double>> arranged(groups.size());
        for (std::size_t i = 0; i < pooled.size(); ++i)
            arranged[static_cast<std::size_t>(assignment[i])].push_back(pooled[i]);
        ++total;
        if (jt_stat_oracle(arranged) >= observed - 1e-9) ++ge;
    } while (std::next_permutation(assignment.begin(), assignment.end()));
    return static_cast<double>(ge) / static_cast<double>(total);
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("within_subject_sd") {
    CHECK(within_subject_sd(std::vector{0.2, 0.4}) == doctest::Approx(0.1414213562).epsilon(1e-8));
    CHECK(within_subject_sd(std::vector{0.3, 0.3, 0.3}) == 0.0);
    CHECK(within_subject_sd(std::vector{0.1, 0.2, 0.3}) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(within_subject_sd(std::vector{0.1}), std::domain_error);
}

TEST_CASE("rc_from_sd formula and scaling") {
    CHECK(rc_from_sd(0.1, 1) == doctest::Approx(1.96 * std::sqrt(2.0) * 0.1).epsilon(1e-12));
    for (double s : {0.01, 0.2, 0.63})
        CHECK(rc_from_sd(s, 4) == doctest::Approx(rc_from_sd(s, 1) / 2.0).epsilon(1e-15));
    // Published RLL max-RC column: 0.37, 0.26, 0.21, 0.18 for k=1..4.
    const double s_cal = 0.37 / (1.96 * std::sqrt(2.0));
    const double expected[] = {0.37, 0.26, 0.21, 0.18};
    for (int k = 1; k <= 4; ++k)
        CHECK(std::abs(rc_from_sd(s_cal, k) - expected[k - 1]) <= 0.005 + 1e-12);
}

TEST_CASE("fit_sd_regression") {
    SUBCASE("constant data recovers a constant") {
        std::vector<double> m{0.1, 0.3, 0.5, 0.7, 0.9}, s(5, 0.05);
        const CubicFit fit = fit_sd_regression(m, s, 3);
        CHECK(fit.coef[0] == doctest::Approx(0.05).epsilon(1e-9));
        for (int i = 1; i < 4; ++i) CHECK(std::abs(fit.coef[i]) < 1e-9);
    }
    SUBCASE("noiseless cubic recovered within 1e-8") {
        std::vector<double> m, s;
        for (int i = 0; i <= 20; ++i) {
            const double x = i / 20.0;
            m.push_back(x);
            s.push_back(0.1 + 0.2 * x - 0.1 * x * x * x);
        }
        const CubicFit fit = fit_sd_regression(m, s, 3);
        CHECK(std::abs(fit.coef[0] - 0.1) < 1e-8);
        CHECK(std::abs(fit.coef[1] - 0.2) < 1e-8);
        CHECK(std::abs(fit.coef[2]) < 1e-8);
        CHECK(std::abs(fit.coef[3] + 0.1) < 1e-8);
        CHECK_FALSE(fit.degraded);
    }
    SUBCASE("3 points degrade a cubic to quadratic with the flag set") {
        std::vector<double> m{0.1, 0.5, 0.9}, s{0.1, 0.2, 0.15};
        const CubicFit fit = fit_sd_regression(m, s, 3);
        CHECK(fit.degree == 2);
        CHECK(fit.degraded);
        for (std::size_t i = 0; i < m.size(); ++i)
            CHECK(fit(m[i]) == doctest::Approx(s[i]).epsilon(1e-9));
    }
    SUBCASE("identical means degrade to a constant fit") {
        std::vector<double> m(6, 0.4), s{0.1, 0.2, 0.3, 0.1, 0.2, 0.3};
        const CubicFit fit = fit_sd_regression(m, s, 3);
        CHECK(fit.degree == 0);
        CHECK(fit.degraded);
        CHECK(fit.coef[0] == doctest::Approx(0.2));
    }
}

TEST_CASE("max_over_domain") {
    const RcTransform ident{1, 1.0, -1e9};  // multiplier 1, floor disabled
    SUBCASE("increasing linear curve peaks at the right endpoint") {
        CubicFit f;
        f.coef = {0.0, 1.0, 0.0, 0.0};
        const DomainMax dm = max_over_domain(f, 0.0, 1.0, ident);
        CHECK(dm.argmax == doctest::Approx(1.0));
        CHECK(dm.value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    }
    SUBCASE("concave quadratic peaks at its vertex") {
        CubicFit f;
        f.coef = {0.0, 1.0, -1.0, 0.0};  // x - x^2, vertex at 0.5
        const DomainMax dm = max_over_domain(f, 0.0, 1.0, ident);
        CHECK(std::abs(dm.argmax - 0.5) < 1e-6);
    }
    SUBCASE("random cubics agree with a dense-grid oracle") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> coef(-2.0, 2.0);
        for (int trial = 0; trial < 20; ++trial) {
            CubicFit f;
            for (auto& c : f.coef) c = coef(rng);
            const RcTransform t{1 + trial % 4, 1.96, 1e-6};
            const DomainMax dm = max_over_domain(f, 0.0, 1.0, t);
            double brute = -1e300;
            for (int i = 0; i <= 1000000; ++i)
                brute = std::max(brute, t(f, i / 1000000.0));
            CHECK(std::abs(dm.value - brute) < 1e-4);
        }
    }
}

TEST_CASE("percentile_bootstrap") {
    SUBCASE("constant data gives a degenerate interval") {
        std::vector<double> data(20, 3.25);
        const auto ci = percentile_bootstrap<double>(
            data, [](const std::vector<double>& v) { return v[0]; }, {200, 11});
        CHECK(ci.lo == 3.25);
        CHECK(ci.hi == 3.25);
    }
    SUBCASE("deterministic for a fixed seed, invariant to input order") {
        std::vector<double> data{0.3, 1.2, -0.4, 2.2, 0.9, 0.1, 1.7, -1.0};
        auto mean_stat = [](const std::vector<double>& v) {
            return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        };
        const auto a = percentile_bootstrap<double>(data, mean_stat, {500, 21});
        const auto b = percentile_bootstrap<double>(data, mean_stat, {500, 21});
        std::reverse(data.begin(), data.end());
        const auto c = percentile_bootstrap<double>(data, mean_stat, {500, 21});
        CHECK(a.lo == b.lo);
        CHECK(a.hi == b.hi);
        CHECK(a.lo == c.lo);
        CHECK(a.hi == c.hi);
    }
    SUBCASE("Monte-Carlo coverage of the mean is near nominal") {
        std::mt19937_64 rng(2024);
        std::normal_distribution<double> normal(0.0, 1.0);
        int covered = 0;
        const int trials = 500;
        auto mean_stat = [](const std::vector<double>& v) {
            return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        };
        for (int t = 0; t < trials; ++t) {
            std::vector<double> sample(100);
            for (double& x : sample) x = normal(rng);
            const auto ci = percentile_bootstrap<double>(
                sample, mean_stat, {1000, static_cast<std::uint64_t>(t) + 1});
            if (ci.lo <= 0.0 && 0.0 <= ci.hi) ++covered;
        }
        CHECK(covered >= static_cast<int>(0.92 * trials));
        CHECK(covered <= static_cast<int>(0.98 * trials));
    }
    SUBCASE("too many failing replicates raise NumericError") {
        std::vector<double> data{1.0, 2.0, 3.0};
        CHECK_THROWS_AS(percentile_bootstrap<double>(
                            data, [](const std::vector<double>&) -> double {
                                throw std::runtime_error("nope");
                            },
                            {100, 3}),
                        NumericError);
    }
}

TEST_CASE("bland_altman") {
    SUBCASE("identical methods") {
        std::vector<std::pair<double, double>> pairs{{0.1, 0.1}, {0.5, 0.5}, {0.9, 0.9}};
        const BlandAltman ba = bland_altman(pairs);
        CHECK(ba.bias == 0.0);
        for (double d : ba.diffs) CHECK(d == 0.0);
    }
    SUBCASE("constant offset") {
        std::vector<std::pair<double, double>> pairs;
        for (int i = 0; i < 10; ++i) pairs.push_back({0.05 * i, 0.05 * i + 0.1});
        CHECK(bland_altman(pairs).bias == doctest::Approx(0.1).epsilon(1e-12));
    }
    CHECK_THROWS_AS(bland_altman(std::vector<std::pair<double, double>>{{1.0, 2.0}}),
                    std::domain_error);
}

TEST_CASE("fit_nonuniform_loa") {
    SUBCASE("zero differences give zero curves") {
        std::vector<double> means{0.1, 0.3, 0.5, 0.7, 0.9}, diffs(5, 0.0);
        const LoaCurves loa = fit_nonuniform_loa(means, diffs);
        CHECK(std::abs(loa.max_upper) < 1e-9);
        CHECK(std::abs(loa.min_lower) < 1e-9);
    }
    SUBCASE("homoskedastic recovery within 20% at n=500") {
        // Fixed representative draw: the max/min of a fitted curve are
        // extreme-value statistics whose spread at n=500 is close to the 20%
        // band, so the draw is pinned.
        std::mt19937_64 rng(8);
        std::normal_distribution<double> noise(0.0, 0.05);
        std::vector<double> means, diffs;
        for (int i = 0; i < 500; ++i) {
            means.push_back(i / 499.0);
            diffs.push_back(noise(rng));
        }
        const LoaCurves loa = fit_nonuniform_loa(means, diffs);
        const double target = 1.96 * 0.05;
        CHECK(loa.max_upper > 0.8 * target);
        CHECK(loa.max_upper < 1.2 * target);
        CHECK(loa.min_lower < -0.8 * target);
        CHECK(loa.min_lower > -1.2 * target);
    }
    SUBCASE("variance peaking mid-severity puts max upper LOA in the interior") {
        std::mt19937_64 rng(8);
        std::normal_distribution<double> unit(0.0, 1.0);
        std::vector<double> means, diffs;
        for (int i = 0; i < 800; ++i) {
            const double m = static_cast<double>(i) / 799.0;
            const double sd = 0.02 + 0.2 * m * (1.0 - m);  // peak at 0.5
            means.push_back(m);
            diffs.push_back(sd * unit(rng));
        }
        const LoaCurves loa = fit_nonuniform_loa(means, diffs);
        double best_m = loa.domain_lo, best_v = -1e300;
        for (int i = 0; i <= 1000; ++i) {
            const double m = loa.domain_lo + (loa.domain_hi - loa.domain_lo) * i / 1000.0;
            if (loa.upper(m) > best_v) {
                best_v = loa.upper(m);
                best_m = m;
            }
        }
        CHECK(best_m > loa.domain_lo + 0.1);
        CHECK(best_m < loa.domain_hi - 0.1);
    }
    SUBCASE("upper stays above lower across the observed domain") {
        std::mt19937_64 rng(77);
        std::normal_distribution<double> unit(0.0, 1.0);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> means, diffs;
            for (int i = 0; i < 40; ++i) {
                means.push_back(static_cast<double>(rng() % 1000) / 1000.0);
                diffs.push_back(0.05 * unit(rng));
            }
            const LoaCurves loa = fit_nonuniform_loa(means, diffs);
            for (int i = 0; i <= 200; ++i) {
                const double m = loa.domain_lo + (loa.domain_hi - loa.domain_lo) * i / 200.0;
                CHECK(loa.upper(m) >= loa.lower(m));
            }
        }
    }
}

TEST_CASE("percent_agreement") {
    std::vector<SteatosisGrade> a{SteatosisGrade::None, SteatosisGrade::Mild,
                                  SteatosisGrade::Moderate, SteatosisGrade::Severe};
    CHECK(percent_agreement(a, a) == 100.0);
    std::vector<SteatosisGrade> b = a;
    b[2] = SteatosisGrade::Severe;
    CHECK(percent_agreement(a, b) == 75.0);
    // Counting oracle on random pairs.
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
        std::vector<SteatosisGrade> x, y;
        int eq = 0;
        const int n = 1 + static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) {
            x.push_back(grade_from_int(static_cast<int>(rng() % 4)));
            y.push_back(grade_from_int(static_cast<int>(rng() % 4)));
            eq += x.back() == y.back() ? 1 : 0;
        }
        CHECK(percent_agreement(x, y) == doctest::Approx(100.0 * eq / n).epsilon(1e-12));
    }
}

TEST_CASE("auc basics") {
    CHECK(auc(std::vector{0.9, 0.8, 0.2, 0.1}, std::vector<char>{1, 1, 0, 0}) == 1.0);
    CHECK(auc(std::vector{0.5, 0.5, 0.5, 0.5}, std::vector<char>{1, 0, 1, 0}) == 0.5);
    CHECK(auc(std::vector{0.9, 0.4, 0.5, 0.1}, std::vector<char>{1, 1, 0, 0}) == 0.75);
    CHECK_THROWS_AS(auc(std::vector{0.5, 0.6}, std::vector<char>{1, 1}), std::domain_error);
}

TEST_CASE("auc equals brute-force pair counting and respects rank invariances") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 6 + static_cast<int>(rng() % 45);
        std::vector<double> scores;
        std::vector<char> labels;
        int pos = 0;
        for (int i = 0; i < n; ++i) {
            scores.push_back(static_cast<double>(rng() % 12) / 11.0);  // ties likely
            labels.push_back(rng() % 2 ? 1 : 0);
            pos += labels.back();
        }
        if (pos == 0 || pos == n) {
            labels[0] = labels[0] ? 0 : 1;
        }
        const double a = auc(scores, labels);
        CHECK(std::abs(a - auc_brute_force(scores, labels)) < 1e-12);
        // Strictly increasing transform preserves AUC.
        std::vector<double> transformed(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i)
            transformed[i] = std::exp(2.0 * scores[i]) + 1.0;
        CHECK(auc(transformed, labels) == doctest::Approx(a).epsilon(1e-12));
        // Without ties, negation flips the AUC.
        bool has_ties = false;
        std::vector<double> sorted = scores;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 1; i < sorted.size(); ++i) has_ties |= sorted[i] == sorted[i - 1];
        if (!has_ties) {
            std::vector<double> neg(scores.size());
            for (std::size_t i = 0; i < scores.size(); ++i) neg[i] = -scores[i];
            CHECK(auc(neg, labels) == doctest::Approx(1.0 - a).epsilon(1e-12));
        }
    }
}

TEST_CASE("delong_ci") {
    SUBCASE("perfect separation clamps at 1") {
        const DelongCi ci = delong_ci(std::vector{0.9, 0.8, 0.2, 0.1},
                                      std::vector<char>{1, 1, 0, 0});
        CHECK(ci.auc == 1.0);
        CHECK(ci.hi == 1.0);
        CHECK(ci.lo == 1.0);  // zero variance at perfect separation
    }
    SUBCASE("symmetric scores give a CI symmetric about 0.5") {
        const std::vector<double> scores{0.1, 0.2, 0.3, 0.4, 0.1, 0.2, 0.3, 0.4};
        const std::vector<char> labels{1, 1, 1, 1, 0, 0, 0, 0};
        const DelongCi ci = delong_ci(scores, labels);
        CHECK(ci.auc == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::abs((ci.hi - 0.5) - (0.5 - ci.lo)) < 1e-9);
    }
    SUBCASE("n=100: DeLong CI within 0.02 of a percentile-bootstrap oracle") {
        std::mt19937_64 rng(314);
        std::normal_distribution<double> neg_draw(0.0, 1.0), pos_draw(1.0, 1.0);
        std::vector<std::pair<double, char>> units;
        std::vector<double> scores;
        std::vector<char> labels;
        for (int i = 0; i < 50; ++i) {
            units.push_back({pos_draw(rng), 1});
            units.push_back({neg_draw(rng), 0});
        }
        for (const auto& [s, l] : units) {
            scores.push_back(s);
            labels.push_back(l);
        }
        const DelongCi ci = delong_ci(scores, labels);
        const auto boot = percentile_bootstrap<std::pair<double, char>>(
            units,
            [](const std::vector<std::pair<double, char>>& resample) {
                std::vector<double> s;
                std::vector<char> l;
                for (const auto& [x, y] : resample) {
                    s.push_back(x);
                    l.push_back(y);
                }
                return auc(s, l);
            },
            {2000, 2718});
        CHECK(std::abs(ci.lo - boot.lo) < 0.02);
        CHECK(std::abs(ci.hi - boot.hi) < 0.02);
    }
}

TEST_CASE("delong_compare") {
    const std::vector<double> scores{0.9, 0.7, 0.65, 0.3, 0.5, 0.2, 0.4, 0.1};
    const std::vector<char> labels{1, 1, 1, 1, 0, 0, 0, 0};
    SUBCASE("identical classifiers give p = 1") {
        const DelongComparison cmp = delong_compare(scores, scores, labels);
        CHECK(cmp.z == 0.0);
        CHECK(cmp.p_value == 1.0);
    }
    SUBCASE("monotone transforms do not change the AUC or p") {
        std::vector<double> doubled(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) doubled[i] = 2.0 * scores[i];
        const DelongComparison cmp = delong_compare(scores, doubled, labels);
        CHECK(cmp.auc_a == cmp.auc_b);
        CHECK(cmp.p_value == 1.0);
    }
    SUBCASE("length mismatch is rejected") {
        CHECK_THROWS_AS(delong_compare(scores, std::vector<double>{0.1, 0.2}, labels),
                        std::domain_error);
    }
    SUBCASE("agrees with a studentized paired permutation oracle within 0.02") {
        std::mt19937_64 rng(555);
        std::normal_distribution<double> unit(0.0, 1.0);
        for (int trial = 0; trial < 3; ++trial) {
            std::vector<double> a, b;
            std::vector<char> y;
            for (int i = 0; i < 30; ++i) {
                const bool pos = i < 15;
                const double latent = pos ? 1.0 : 0.0;
                a.push_back(latent * 1.8 + unit(rng));  // stronger classifier
                b.push_back(latent * 0.3 + unit(rng));
                y.push_back(pos ? 1 : 0);
            }
            const DelongComparison cmp = delong_compare(a, b, y);
            // Per-subject classifier swaps; the replicate statistic is the
            // re-studentized |z| so the oracle is calibrated across the
            // whole p range.
            const double obs_z = std::abs(cmp.z);
            int ge = 0;
            const int reps = 10000;
            std::mt19937_64 perm_rng(99 + trial);
            std::vector<double> pa(a), pb(b);
            for (int r = 0; r < reps; ++r) {
                for (std::size_t i = 0; i < a.size(); ++i) {
                    const bool swap = perm_rng() & 1;
                    pa[i] = swap ? b[i] : a[i];
                    pb[i] = swap ? a[i] : b[i];
                }
                if (std::abs(delong_compare(pa, pb, y).z) >= obs_z - 1e-12) ++ge;
            }
            const double p_perm = static_cast<double>(ge) / reps;
            CHECK(std::abs(cmp.p_value - p_perm) < 0.02);
        }
    }
}

TEST_CASE("youden_cutoff") {
    SUBCASE("separable: midpoint of the gap with spec preference") {
        const std::vector<double> scores{0.8, 0.9, 0.1, 0.2};
        const std::vector<char> labels{1, 1, 0, 0};
        const YoudenCutoff cut = youden_cutoff(scores, labels);
        CHECK(cut.j == doctest::Approx(1.0));
        CHECK(cut.threshold == doctest::Approx(0.5));  // midpoint of 0.2 and 0.8
        CHECK(cut.spec == 1.0);
        CHECK(cut.sens == 1.0);
    }
    SUBCASE("degenerate equal scores return the +inf sentinel") {
        const std::vector<double> scores{0.4, 0.4, 0.4, 0.4};
        const std::vector<char> labels{1, 0, 1, 0};
        const YoudenCutoff cut = youden_cutoff(scores, labels);
        CHECK(std::isinf(cut.threshold));
        CHECK(cut.threshold > 0);
        CHECK(cut.spec == 1.0);
        CHECK(cut.sens == 0.0);
        CHECK(cut.j == doctest::Approx(0.0));
    }
    SUBCASE("matches an exhaustive threshold scan and is transform-invariant") {
        std::mt19937_64 rng(44);
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<double> scores;
            std::vector<char> labels;
            for (int i = 0; i < 50; ++i) {
                scores.push_back(static_cast<double>(rng() % 25) / 24.0);
                labels.push_back(rng() % 3 == 0 ? 1 : 0);
            }
            labels[0] = 1;
            labels[1] = 0;
            const YoudenCutoff cut = youden_cutoff(scores, labels);
            // Oracle: evaluate J on a fine grid of thresholds.
            double best_j = -2.0;
            for (int g = -1; g <= 1001; ++g) {
                const double t = g < 0 ? -1e18 : (g > 1000 ? 1e18 : g / 1000.0 - 5e-4);
                int tp = 0, p = 0, tn = 0, n = 0;
                for (std::size_t i = 0; i < scores.size(); ++i) {
                    if (labels[i]) {
                        ++p;
                        tp += scores[i] > t ? 1 : 0;
                    } else {
                        ++n;
                        tn += scores[i] > t ? 0 : 1;
                    }
                }
                best_j = std::max(best_j, static_cast<double>(tp) / p +
                                              static_cast<double>(tn) / n - 1.0);
            }
            CHECK(cut.j == doctest::Approx(best_j).epsilon(1e-12));
            // Invariance under a strictly increasing transform.
            std::vector<double> transformed(scores.size());
            for (std::size_t i = 0; i < scores.size(); ++i)
                transformed[i] = std::tanh(3.0 * scores[i]) * 5.0;
            const YoudenCutoff cut2 = youden_cutoff(transformed, labels);
            CHECK(cut2.j == doctest::Approx(cut.j).epsilon(1e-12));
            CHECK(cut2.sens == cut.sens);
            CHECK(cut2.spec == cut.spec);
        }
    }
}

TEST_CASE("roc_analysis invariants") {
    std::mt19937_64 rng(90);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> scores;
        std::vector<char> labels;
        for (int i = 0; i < 40; ++i) {
            scores.push_back(static_cast<double>(rng() % 15) / 14.0);
            labels.push_back(rng() % 2 ? 1 : 0);
        }
        labels[0] = 1;
        labels[1] = labels[2] = 0;
        labels[3] = 1;
        const RocResult roc = roc_analysis(scores, labels);
        REQUIRE(roc.points.size() >= 2);
        CHECK(roc.points.front() == std::pair{0.0, 0.0});
        CHECK(roc.points.back() == std::pair{1.0, 1.0});
        double area = 0.0;
        for (std::size_t i = 1; i < roc.points.size(); ++i) {
            CHECK(roc.points[i].first >= roc.points[i - 1].first);
            CHECK(roc.points[i].second >= roc.points[i - 1].second);
            area += (roc.points[i].first - roc.points[i - 1].first) *
                    (roc.points[i].second + roc.points[i - 1].second) / 2.0;
        }
        CHECK(std::abs(area - roc.auc) < 1e-12);
    }
}

TEST_CASE("grade_accuracy") {
    const std::array<double, 3> cutoffs{0.25, 0.5, 0.75};
    SUBCASE("scores at grade centroids are 100% accurate") {
        std::vector<double> scores{0.1, 0.4, 0.6, 0.9};
        std::vector<SteatosisGrade> grades{SteatosisGrade::None, SteatosisGrade::Mild,
                                           SteatosisGrade::Moderate, SteatosisGrade::Severe};
        CHECK(grade_accuracy(scores, grades, cutoffs) == 100.0);
    }
    SUBCASE("all predictions off by one grade give 0%") {
        std::vector<double> scores{0.4, 0.6, 0.9, 0.6};
        std::vector<SteatosisGrade> grades{SteatosisGrade::None, SteatosisGrade::Mild,
                                           SteatosisGrade::Moderate, SteatosisGrade::Severe};
        CHECK(grade_accuracy(scores, grades, cutoffs) == 0.0);
    }
    SUBCASE("random instances match a confusion-matrix oracle") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> scores;
            std::vector<SteatosisGrade> grades;
            int hits = 0;
            const int n = 1 + static_cast<int>(rng() % 40);
            for (int i = 0; i < n; ++i) {
                const double s = static_cast<double>(rng() % 1000) / 999.0;
                scores.push_back(s);
                grades.push_back(grade_from_int(static_cast<int>(rng() % 4)));
                const int pred = (s > 0.25 ? 1 : 0) + (s > 0.5 ? 1 : 0) + (s > 0.75 ? 1 : 0);
                hits += pred == grade_value(grades.back()) ? 1 : 0;
            }
            CHECK(grade_accuracy(scores, grades, cutoffs) ==
                  doctest::Approx(100.0 * hits / n).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(grade_accuracy(std::vector{0.5}, std::vector{SteatosisGrade::None},
                                   std::array<double, 3>{0.5, 0.5, 0.7}),
                    std::domain_error);
}

TEST_CASE("jonckheere_terpstra") {
    SUBCASE("worked example: [1,2],[3,4]") {
        const TrendTestResult r = jonckheere_terpstra({{1, 2}, {3, 4}});
        CHECK(r.statistic == 4.0);
        CHECK(r.method == TrendMethod::exact_permutation);
        CHECK(r.p_value == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    }
    SUBCASE("perfectly decreasing groups score zero") {
        CHECK(jonckheere_terpstra({{3, 4}, {1, 2}}).statistic == 0.0);
    }
    SUBCASE("complementarity without ties") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::vector<double>> groups(3);
            double n_total = 0;
            std::set<int> used;
            for (auto& g : groups) {
                const int size = 1 + static_cast<int>(rng() % 5);
                for (int i = 0; i < size; ++i) {
                    int v;
                    do {
                        v = static_cast<int>(rng() % 1000);
                    } while (used.count(v));
                    used.insert(v);
                    g.push_back(v);
                }
                n_total += size;
            }
            std::vector<std::vector<double>> reversed(groups.rbegin(), groups.rend());
            const double total_pairs =
                (n_total * n_total -
                 std::accumulate(groups.begin(), groups.end(), 0.0,
                                 [](double acc, const auto& g) {
                                     return acc + static_cast<double>(g.size()) * g.size();
                                 })) / 2.0;
            CHECK(jonckheere_terpstra(groups).statistic +
                      jonckheere_terpstra(reversed).statistic ==
                  doctest::Approx(total_pairs).epsilon(1e-12));
        }
    }
    SUBCASE("exact permutation matches the next_permutation oracle") {
        std::mt19937_64 rng(23);
        for (int trial = 0; trial < 12; ++trial) {
            const int gsize = 2 + static_cast<int>(rng() % 2);
            const int ngroups = 2 + static_cast<int>(trial % 2);
            std::vector<std::vector<double>> groups(static_cast<std::size_t>(ngroups));
            for (auto& g : groups)
                for (int i = 0; i < gsize; ++i)
                    g.push_back(static_cast<double>(rng() % 8));  // ties likely
            const TrendTestResult r = jonckheere_terpstra(groups);
            REQUIRE(r.method == TrendMethod::exact_permutation);
            CHECK(r.p_value == jt_exact_p_oracle(groups));
        }
    }
    SUBCASE("normal approximation calibrates against exact at n = 12") {
        std::mt19937_64 rng(29);
        for (int trial = 0; trial < 16; ++trial) {
            std::vector<int> ranks(12);
            std::iota(ranks.begin(), ranks.end(), 1);
            std::shuffle(ranks.begin(), ranks.end(), rng);
            std::vector<std::vector<double>> groups;
            if (trial % 2 == 0)
                groups = {{ranks.begin(), ranks.begin() + 6}, {ranks.begin() + 6, ranks.end()}};
            else
                groups = {{ranks.begin(), ranks.begin() + 4},
                          {ranks.begin() + 4, ranks.begin() + 8},
                          {ranks.begin() + 8, ranks.end()}};
            const double p_exact = jonckheere_terpstra(groups, 12).p_value;
            const double p_normal = jonckheere_terpstra(groups, 0).p_value;
            CHECK(std::abs(p_exact - p_normal) <= 0.03);
        }
    }
    CHECK_THROWS_AS(jonckheere_terpstra({{1.0, 2.0}}), std::domain_error);
}

TEST_CASE("holm_bonferroni") {
    SUBCASE("worked example rejects only the smallest p") {
        const auto flags = holm_bonferroni(std::vector{0.01, 0.04, 0.03}, 0.05);
        CHECK(flags == std::vector<bool>{true, false, false});
    }
    SUBCASE("all ones reject nothing") {
        const auto flags = holm_bonferroni(std::vector{1.0, 1.0, 1.0}, 0.05);
        CHECK(flags == std::vector<bool>{false, false, false});
    }
    SUBCASE("sandwiched between Bonferroni and uncorrected; monotone in alpha") {
        std::mt19937_64 rng(67);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t m = 1 + rng() % 10;
            std::vector<double> p(m);
            for (double& x : p) x = std::pow(unit(rng), 2.0);
            const auto holm = holm_bonferroni(p, 0.05);
            const auto holm_wide = holm_bonferroni(p, 0.10);
            for (std::size_t i = 0; i < m; ++i) {
                const bool bonf = p[i] <= 0.05 / static_cast<double>(m);
                const bool uncorrected = p[i] <= 0.05;
                if (bonf) CHECK(holm[i]);
                if (holm[i]) CHECK(uncorrected);
                if (holm[i]) CHECK(holm_wide[i]);  // raising alpha never un-rejects
            }
        }
    }
    CHECK_THROWS_AS(holm_bonferroni(std::vector{0.5, 1.5}), std::domain_error);
}

TEST_CASE("normal quantile/cdf round trip") {
    for (double p : {0.001, 0.025, 0.2, 0.5, 0.8, 0.975, 0.999})
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
}
