#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>

#include "steato/bootstrap.hpp"
#include "steato/common.hpp"
#include "steato/experiments.hpp"
#include "steato/report.hpp"
#include "steato/stats.hpp"

namespace steato {

namespace {

using nlohmann::ordered_json;

constexpr int kCurveGridPoints = 101;
constexpr std::array<const char*, 3> kCutoffNames = {"ge_mild", "ge_moderate", "severe"};

struct GroupKey {
    std::string name;
    std::optional<ViewGroup> group;  // nullopt = "All View Groups"
};

const std::vector<GroupKey>& group_keys() {
    static const std::vector<GroupKey> keys = {
        {"LLL", ViewGroup::LLL}, {"RLL", ViewGroup::RLL}, {"LKC", ViewGroup::LKC},
        {"SC", ViewGroup::SC},   {"ALL", std::nullopt},
    };
    return keys;
}

std::optional<double> study_group_score(const StudyScores& ss, const GroupKey& key) {
    if (ss.failed) return std::nullopt;
    if (!key.group) return ss.table.all_groups;
    const auto it = ss.table.per_group.find(*key.group);
    if (it == ss.table.per_group.end() || !it->second.qualifying) return std::nullopt;
    return it->second.score;
}

ordered_json curve_json(const stats::CubicFit& fit) {
    return {{"coef", fit.coef}, {"degree", fit.degree}, {"degraded", fit.degraded}};
}

ordered_json ci_json(double lo, double hi) {
    return ordered_json::array({json_number_or_null(lo), json_number_or_null(hi)});
}

std::string p_text(double p) { return p < 0.001 ? "<0.001" : format_double(p); }

ordered_json trend_json(const stats::TrendTestResult& t) {
    return {{"statistic", t.statistic},
            {"p_value", t.p_value},
            {"p_text", p_text(t.p_value)},
            {"method", t.method == stats::TrendMethod::exact_permutation ? "exact_permutation"
                                                                         : "normal_approx"}};
}

std::string sanitize_tag(const std::string& s) {
    std::string out;
    for (char c : s)
        out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / static_cast<double>(n - 1);
    return out;
}

int predicted_grade(double score, const std::array<double, 3>& cutoffs) {
    int g = 0;
    for (double c : cutoffs)
        if (c < score) ++g;
    return g;
}

// Per-group Youden cutoffs against fat-fraction grades; nullopt unless all
// three are finite and strictly increasing.
std::optional<std::array<double, 3>> compute_group_cutoffs(const Cohort& cohort,
                                                           const CohortScores& scores,
                                                           const GroupKey& key) {
    std::vector<double> s;
    std::vector<int> grade;
    for (std::size_t i = 0; i < cohort.studies.size(); ++i) {
        const auto score = study_group_score(scores.studies[i], key);
        if (!score || !cohort.studies[i].fat_fraction_pct) continue;
        s.push_back(*score);
        grade.push_back(grade_value(grade_from_fat_fraction(*cohort.studies[i].fat_fraction_pct)));
    }
    std::array<double, 3> cutoffs{};
    for (int c = 1; c <= 3; ++c) {
        std::vector<char> labels;
        labels.reserve(grade.size());
        int pos = 0;
        for (int g : grade) {
            labels.push_back(g >= c ? 1 : 0);
            pos += g >= c ? 1 : 0;
        }
        if (pos == 0 || pos == static_cast<int>(grade.size())) return std::nullopt;
        cutoffs[static_cast<std::size_t>(c - 1)] = stats::youden_cutoff(s, labels).threshold;
    }
    if (!std::isfinite(cutoffs[0]) || !std::isfinite(cutoffs[1]) || !std::isfinite(cutoffs[2]))
        return std::nullopt;
    if (!(cutoffs[0] < cutoffs[1] && cutoffs[1] < cutoffs[2])) return std::nullopt;
    return cutoffs;
}

// ---------------------------------------------------------------------------
// Experiment 1: repeatability across view groups and image counts.

ordered_json experiment_repeatability(const Cohort& cohort, const CohortScores& scores,
                                      const RunConfig& cfg,
                                      const std::filesystem::path& plots_dir) {
    (void)cohort;
    const stats::RcTransform base{1, 1.96, 1e-6};
    ordered_json groups = ordered_json::object();
    for (ViewGroup g : kAllViewGroups) {
        const std::string name = view_group_name(g);
        std::vector<std::pair<double, double>> units;  // (mean severity, within-subject sd)
        for (const StudyScores& ss : scores.studies) {
            const auto it = ss.group_scores.find(g);
            if (ss.failed || it == ss.group_scores.end() || it->second.size() < 2) continue;
            const auto& vals = it->second;
            const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) /
                                static_cast<double>(vals.size());
            units.push_back({mean, stats::within_subject_sd(vals)});
        }
        if (units.size() < 5) {
            groups[name] = nullptr;
            continue;
        }
        std::vector<double> means, sds;
        for (const auto& [m, s] : units) {
            means.push_back(m);
            sds.push_back(s);
        }
        const stats::CubicFit fit = stats::fit_sd_regression(means, sds, 3);
        const double lo = *std::min_element(means.begin(), means.end());
        const double hi = *std::max_element(means.begin(), means.end());
        const stats::DomainMax dm = stats::max_over_domain(fit, lo, hi, base);
        const std::vector<double> grid = linspace(lo, hi, kCurveGridPoints);

        // One bootstrap pass per group: component 0 is max RC at k=1, the
        // rest is the k=3 curve on the grid for the plot band.
        const std::uint64_t boot_seed =
            derive_seed(cfg.seed, 0x0e01u, static_cast<std::uint64_t>(g));
        std::function<std::vector<double>(const std::vector<std::pair<double, double>>&)>
            replicate_stat = [&](const std::vector<std::pair<double, double>>& resample) {
                std::vector<double> ms, ss;
                for (const auto& [m, s] : resample) {
                    ms.push_back(m);
                    ss.push_back(s);
                }
                const stats::CubicFit f = stats::fit_sd_regression(ms, ss, 3);
                const double rlo = *std::min_element(ms.begin(), ms.end());
                const double rhi = *std::max_element(ms.begin(), ms.end());
                std::vector<double> out;
                out.reserve(1 + grid.size());
                out.push_back(stats::max_over_domain(f, rlo, rhi, base).value);
                const stats::RcTransform k3{3, base.multiplier, base.sd_floor};
                for (double m : grid) out.push_back(k3(f, m));
                return out;
            };
        const auto replicates = stats::bootstrap_replicates(
            units, replicate_stat,
            {cfg.bootstrap_replicates, boot_seed, 0.95, 0.10});
        std::vector<double> max_rc1_samples;
        max_rc1_samples.reserve(replicates.size());
        for (const auto& r : replicates) max_rc1_samples.push_back(r[0]);
        std::sort(max_rc1_samples.begin(), max_rc1_samples.end());
        const double ci1_lo = stats::quantile_sorted(max_rc1_samples, 0.025);
        const double ci1_hi = stats::quantile_sorted(max_rc1_samples, 0.975);

        ordered_json per_k = ordered_json::object();
        ordered_json curve_grid = ordered_json::object();
        curve_grid["m"] = grid;
        for (int k = 1; k <= 4; ++k) {
            // Same regression for every k; the analytic sqrt(k) divisor
            // keeps the scaling law exact.
            const double root_k = std::sqrt(static_cast<double>(k));
            stats::RepeatabilityCurve curve;
            curve.sd_fit = fit;
            curve.k = k;
            curve.domain_lo = lo;
            curve.domain_hi = hi;
            curve.max_rc = dm.value / root_k;
            curve.max_rc_ci = {ci1_lo / root_k, ci1_hi / root_k};
            per_k[std::to_string(k)] = {
                {"max_rc", curve.max_rc},
                {"ci", ci_json(curve.max_rc_ci.first, curve.max_rc_ci.second)},
                {"argmax", dm.argmax}};
            const stats::RcTransform tk{curve.k, base.multiplier, base.sd_floor};
            std::vector<double> rc(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) rc[i] = tk(curve.sd_fit, grid[i]);
            curve_grid["rc_k" + std::to_string(k)] = rc;
        }

        groups[name] = {{"n_studies", units.size()},
                        {"domain", ordered_json::array({lo, hi})},
                        {"sd_fit", curve_json(fit)},
                        {"per_k", per_k},
                        {"curve_grid", curve_grid}};

        if (!plots_dir.empty()) {
            std::vector<double> band_lo(grid.size()), band_hi(grid.size()), column;
            column.reserve(replicates.size());
            for (std::size_t i = 0; i < grid.size(); ++i) {
                column.clear();
                for (const auto& r : replicates) column.push_back(r[1 + i]);
                std::sort(column.begin(), column.end());
                band_lo[i] = stats::quantile_sorted(column, 0.025);
                band_hi[i] = stats::quantile_sorted(column, 0.975);
            }
            std::vector<double> scatter_rc3(sds.size());
            for (std::size_t i = 0; i < sds.size(); ++i)
                scatter_rc3[i] = stats::rc_from_sd(sds[i], 3, base.multiplier);
            PlotTable scatter{{"mean_score", "within_subject_sd", "rc_k3"},
                              {means, sds, scatter_rc3}};
            write_plot_csv(scatter, plots_dir / ("exp1_" + name + "_scatter.csv"));
            PlotTable curve{{"mean_score", "rc_k1", "rc_k2", "rc_k3", "rc_k4", "rc_k3_band_lo",
                             "rc_k3_band_hi"},
                            {grid, {}, {}, {}, {}, band_lo, band_hi}};
            for (int k = 1; k <= 4; ++k) {
                const stats::RcTransform tk{k, base.multiplier, base.sd_floor};
                std::vector<double> rc(grid.size());
                for (std::size_t i = 0; i < grid.size(); ++i) rc[i] = tk(fit, grid[i]);
                curve.data[static_cast<std::size_t>(k)] = rc;
            }
            write_plot_csv(curve, plots_dir / ("exp1_" + name + "_curve.csv"));

            SvgPlot svg;
            svg.title = "Repeatability (k=3), view group " + name;
            svg.x_label = "mean severity score";
            svg.y_label = "repeatability coefficient";
            svg.bands.push_back({grid, band_lo, band_hi, "#c8d8ea"});
            svg.series.push_back({grid, curve.data[3], "#1f6fb2", false});
            svg.series.push_back({means, scatter_rc3, "#d1495b", true});
            write_svg_plot(svg, plots_dir / ("exp1_" + name + ".svg"));
        }
    }
    return {{"rc_multiplier", 1.96}, {"sd_floor", 1e-6}, {"view_groups", groups}};
}

// ---------------------------------------------------------------------------
// Experiment 2: cross-scanner Bland-Altman agreement.

ordered_json analyze_agreement(const std::vector<std::pair<double, double>>& ab_pairs,
                               const std::optional<std::array<double, 3>>& cutoffs,
                               const RunConfig& cfg, std::uint64_t boot_seed,
                               const std::filesystem::path& plots_dir,
                               const std::string& plot_tag) {
    if (ab_pairs.size() < 5) return nullptr;
    const stats::BlandAltman ba = stats::bland_altman(ab_pairs);
    const stats::LoaCurves loa = stats::fit_nonuniform_loa(ba.means, ba.diffs);
    const std::vector<double> grid = linspace(loa.domain_lo, loa.domain_hi, kCurveGridPoints);

    std::vector<std::pair<double, double>> units(ba.means.size());
    for (std::size_t i = 0; i < units.size(); ++i) units[i] = {ba.means[i], ba.diffs[i]};
    std::function<std::vector<double>(const std::vector<std::pair<double, double>>&)>
        replicate_stat = [&](const std::vector<std::pair<double, double>>& resample) {
            std::vector<double> ms, ds;
            for (const auto& [m, d] : resample) {
                ms.push_back(m);
                ds.push_back(d);
            }
            const stats::LoaCurves l = stats::fit_nonuniform_loa(ms, ds);
            std::vector<double> out;
            out.reserve(3 + 2 * grid.size());
            out.push_back(l.bias);
            out.push_back(l.max_upper);
            out.push_back(l.min_lower);
            for (double m : grid) out.push_back(l.upper(m));
            for (double m : grid) out.push_back(l.lower(m));
            return out;
        };
    const auto replicates = stats::bootstrap_replicates(
        units, replicate_stat, {cfg.bootstrap_replicates, boot_seed, 0.95, 0.10});
    auto component_ci = [&](std::size_t idx) {
        std::vector<double> v;
        v.reserve(replicates.size());
        for (const auto& r : replicates) v.push_back(r[idx]);
        std::sort(v.begin(), v.end());
        return std::pair<double, double>{stats::quantile_sorted(v, 0.025),
                                         stats::quantile_sorted(v, 0.975)};
    };
    const auto bias_ci = component_ci(0);
    const auto upper_ci = component_ci(1);
    const auto lower_ci = component_ci(2);

    ordered_json out = {{"n_pairs", ab_pairs.size()},
                        {"bias", ba.bias},
                        {"bias_ci", ci_json(bias_ci.first, bias_ci.second)},
                        {"max_upper_loa", loa.max_upper},
                        {"max_upper_loa_ci", ci_json(upper_ci.first, upper_ci.second)},
                        {"min_lower_loa", loa.min_lower},
                        {"min_lower_loa_ci", ci_json(lower_ci.first, lower_ci.second)},
                        {"domain", ordered_json::array({loa.domain_lo, loa.domain_hi})},
                        {"bias_fit", curve_json(loa.bias_fit)},
                        {"resid_fit", curve_json(loa.resid_fit)}};
    if (cutoffs) {
        std::vector<SteatosisGrade> ga, gb;
        for (const auto& [a, b] : ab_pairs) {
            ga.push_back(grade_from_int(predicted_grade(a, *cutoffs)));
            gb.push_back(grade_from_int(predicted_grade(b, *cutoffs)));
        }
        out["agreement_pct"] = stats::percent_agreement(ga, gb);
        out["grade_cutoffs"] = *cutoffs;
    } else {
        out["agreement_pct"] = nullptr;
        out["grade_cutoffs"] = nullptr;
    }

    if (!plots_dir.empty()) {
        std::vector<double> upper(grid.size()), lower(grid.size()), biasc(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            upper[i] = loa.upper(grid[i]);
            lower[i] = loa.lower(grid[i]);
            biasc[i] = loa.bias_fit(grid[i]);
        }
        std::vector<double> ub_lo(grid.size()), ub_hi(grid.size()), lb_lo(grid.size()),
            lb_hi(grid.size()), column;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            column.clear();
            for (const auto& r : replicates) column.push_back(r[3 + i]);
            std::sort(column.begin(), column.end());
            ub_lo[i] = stats::quantile_sorted(column, 0.025);
            ub_hi[i] = stats::quantile_sorted(column, 0.975);
            column.clear();
            for (const auto& r : replicates) column.push_back(r[3 + grid.size() + i]);
            std::sort(column.begin(), column.end());
            lb_lo[i] = stats::quantile_sorted(column, 0.025);
            lb_hi[i] = stats::quantile_sorted(column, 0.975);
        }
        write_plot_csv({{"pair_mean", "pair_diff"}, {ba.means, ba.diffs}},
                       plots_dir / ("exp2_" + plot_tag + "_scatter.csv"));
        write_plot_csv({{"mean", "bias_curve", "upper_loa", "lower_loa", "upper_band_lo",
                         "upper_band_hi", "lower_band_lo", "lower_band_hi"},
                        {grid, biasc, upper, lower, ub_lo, ub_hi, lb_lo, lb_hi}},
                       plots_dir / ("exp2_" + plot_tag + "_curve.csv"));
        SvgPlot svg;
        svg.title = "Bland-Altman " + plot_tag;
        svg.x_label = "pair mean score";
        svg.y_label = "difference";
        svg.bands.push_back({grid, ub_lo, ub_hi, "#c8d8ea"});
        svg.bands.push_back({grid, lb_lo, lb_hi, "#c8d8ea"});
        svg.series.push_back({grid, upper, "#1f6fb2", false});
        svg.series.push_back({grid, lower, "#1f6fb2", false});
        svg.series.push_back({grid, biasc, "#666666", false});
        svg.series.push_back({ba.means, ba.diffs, "#d1495b", true});
        write_svg_plot(svg, plots_dir / ("exp2_" + plot_tag + ".svg"));
    }
    return out;
}

ordered_json experiment_agreement(const Cohort& cohort, const CohortScores& scores,
                                  const RunConfig& cfg,
                                  const std::filesystem::path& plots_dir) {
    std::set<std::string> scanner_set;
    for (const StudyRecord& s : cohort.studies) scanner_set.insert(s.scanner);
    if (scanner_set.size() < 2)
        throw DataError("experiment 2 requires studies from at least 2 scanners");
    const std::vector<std::string> scanners(scanner_set.begin(), scanner_set.end());

    // First study per (patient, scanner) in cohort order.
    std::map<std::string, std::map<std::string, std::size_t>> patient_scanner;
    for (std::size_t i = 0; i < cohort.studies.size(); ++i) {
        const StudyRecord& s = cohort.studies[i];
        patient_scanner[s.patient_id].emplace(s.scanner, i);
    }

    // Cutoffs for percent agreement: explicit config wins, otherwise derived
    // from this manifest's fat fractions (per view group).
    std::map<std::string, std::optional<std::array<double, 3>>> cutoffs_by_group;
    for (const GroupKey& key : group_keys())
        cutoffs_by_group[key.name] =
            cfg.grade_cutoffs ? cfg.grade_cutoffs : compute_group_cutoffs(cohort, scores, key);

    using PairList = std::vector<std::pair<double, double>>;
    std::map<std::string, PairList> pooled;  // per group name
    ordered_json pairs_json = ordered_json::object();
    std::uint64_t pair_ordinal = 0;
    for (std::size_t a = 0; a < scanners.size(); ++a) {
        for (std::size_t b = a + 1; b < scanners.size(); ++b, ++pair_ordinal) {
            const std::string pair_name = scanners[a] + "|" + scanners[b];
            ordered_json group_json = ordered_json::object();
            for (std::size_t ki = 0; ki < group_keys().size(); ++ki) {
                const GroupKey& key = group_keys()[ki];
                PairList pairs;
                for (const auto& [patient, by_scanner] : patient_scanner) {
                    const auto ia = by_scanner.find(scanners[a]);
                    const auto ib = by_scanner.find(scanners[b]);
                    if (ia == by_scanner.end() || ib == by_scanner.end()) continue;
                    const auto sa = study_group_score(scores.studies[ia->second], key);
                    const auto sb = study_group_score(scores.studies[ib->second], key);
                    if (!sa || !sb) continue;
                    pairs.push_back({*sa, *sb});
                }
                auto& pool = pooled[key.name];
                pool.insert(pool.end(), pairs.begin(), pairs.end());
                group_json[key.name] = analyze_agreement(
                    pairs, cutoffs_by_group[key.name], cfg,
                    derive_seed(cfg.seed, 0x0e02u, pair_ordinal * 8 + ki), plots_dir,
                    sanitize_tag(scanners[a]) + "-" + sanitize_tag(scanners[b]) + "_" + key.name);
            }
            pairs_json[pair_name] = {{"view_groups", group_json}};
        }
    }
    ordered_json pooled_json = ordered_json::object();
    std::uint64_t gi = 0;
    for (const GroupKey& key : group_keys()) {
        pooled_json[key.name] = analyze_agreement(pooled[key.name], cutoffs_by_group[key.name],
                                                  cfg, derive_seed(cfg.seed, 0x0e03u, gi++),
                                                  plots_dir, "pooled_" + key.name);
    }
    return {{"scanners", scanners},
            {"scanner_pairs", pairs_json},
            {"pooled", ordered_json{{"view_groups", pooled_json}}}};
}

// ---------------------------------------------------------------------------
// Experiments 3a/4a: diagnostic performance against fat-fraction grades.

ordered_json experiment_diagnostic(const Cohort& cohort, const CohortScores& scores,
                                   const RunConfig& cfg,
                                   const std::filesystem::path& plots_dir,
                                   const std::string& experiment_id) {
    (void)cfg;
    bool any_fat = false;
    for (const StudyRecord& s : cohort.studies) any_fat |= s.fat_fraction_pct.has_value();
    if (!any_fat)
        throw DataError("experiment " + experiment_id +
                        " requires the fat_fraction_pct column");

    ordered_json groups = ordered_json::object();
    for (const GroupKey& key : group_keys()) {
        std::vector<double> s;
        std::vector<int> grade;
        for (std::size_t i = 0; i < cohort.studies.size(); ++i) {
            const auto score = study_group_score(scores.studies[i], key);
            if (!score || !cohort.studies[i].fat_fraction_pct) continue;
            s.push_back(*score);
            grade.push_back(
                grade_value(grade_from_fat_fraction(*cohort.studies[i].fat_fraction_pct)));
        }
        if (s.size() < 4) {
            groups[key.name] = nullptr;
            continue;
        }

        ordered_json cutoffs_json = ordered_json::object();
        std::array<double, 3> youden{};
        bool youden_ok = true;
        for (int c = 1; c <= 3; ++c) {
            std::vector<char> labels;
            int pos = 0;
            for (int g : grade) {
                labels.push_back(g >= c ? 1 : 0);
                pos += g >= c ? 1 : 0;
            }
            const int neg = static_cast<int>(grade.size()) - pos;
            const char* cname = kCutoffNames[static_cast<std::size_t>(c - 1)];
            if (pos < 2 || neg < 2) {
                cutoffs_json[cname] = nullptr;
                youden_ok = false;
                continue;
            }
            const stats::RocResult roc = stats::roc_analysis(s, labels);
            youden[static_cast<std::size_t>(c - 1)] = roc.youden_threshold;
            youden_ok = youden_ok && std::isfinite(roc.youden_threshold);
            cutoffs_json[cname] = {
                {"n_pos", pos},
                {"n_neg", neg},
                {"auc", roc.auc},
                {"ci", ci_json(roc.ci.first, roc.ci.second)},
                {"youden_threshold", json_number_or_null(roc.youden_threshold)},
                {"sens", roc.sens},
                {"spec", roc.spec}};
            if (!plots_dir.empty()) {
                std::vector<double> fpr, tpr;
                for (const auto& [f, t] : roc.points) {
                    fpr.push_back(f);
                    tpr.push_back(t);
                }
                const std::string tag =
                    "exp" + experiment_id + "_" + key.name + "_" + cname;
                write_plot_csv({{"fpr", "tpr"}, {fpr, tpr}}, plots_dir / (tag + "_roc.csv"));
                SvgPlot svg;
                svg.title = "ROC " + key.name + " " + cname;
                svg.x_label = "false positive rate";
                svg.y_label = "true positive rate";
                svg.series.push_back({fpr, tpr, "#1f6fb2", false});
                svg.series.push_back({{0.0, 1.0}, {0.0, 1.0}, "#bbbbbb", false});
                write_svg_plot(svg, plots_dir / (tag + "_roc.svg"));
            }
        }

        // Trend across histology grades.
        ordered_json trend = nullptr;
        std::vector<std::vector<double>> by_grade(4);
        for (std::size_t i = 0; i < s.size(); ++i)
            by_grade[static_cast<std::size_t>(grade[i])].push_back(s[i]);
        std::vector<std::vector<double>> present;
        for (auto& gvec : by_grade)
            if (!gvec.empty()) present.push_back(std::move(gvec));
        if (present.size() >= 2) trend = trend_json(stats::jonckheere_terpstra(present));

        // Accuracy with the Youden cutoffs applied.
        ordered_json accuracy = nullptr;
        ordered_json cutoff_values = nullptr;
        if (youden_ok && youden[0] < youden[1] && youden[1] < youden[2]) {
            std::vector<SteatosisGrade> grades;
            for (int g : grade) grades.push_back(grade_from_int(g));
            accuracy = stats::grade_accuracy(s, grades, youden);
            cutoff_values = youden;
        }

        groups[key.name] = {{"n", s.size()},
                            {"cutoffs", cutoffs_json},
                            {"trend", trend},
                            {"accuracy_pct", accuracy},
                            {"grade_cutoffs", cutoff_values}};
    }
    return {{"view_groups", groups}};
}

// ---------------------------------------------------------------------------
// Experiments 3b/4b: paired DeLong comparison against CAP.

ordered_json experiment_comparison(const Cohort& cohort, const CohortScores& scores,
                                   const RunConfig& cfg, const std::string& experiment_id) {
    (void)cfg;
    bool any_cap = false, any_fat = false;
    for (const StudyRecord& s : cohort.studies) {
        any_cap |= s.cap_score.has_value();
        any_fat |= s.fat_fraction_pct.has_value();
    }
    if (!any_cap)
        throw DataError("experiment " + experiment_id + " requires the cap_score column");
    if (!any_fat)
        throw DataError("experiment " + experiment_id +
                        " requires the fat_fraction_pct column");

    std::vector<double> dl, cap;
    std::vector<int> grade;
    for (std::size_t i = 0; i < cohort.studies.size(); ++i) {
        const StudyRecord& st = cohort.studies[i];
        std::optional<double> score;
        if (!scores.studies[i].failed) score = scores.studies[i].table.all_groups;
        if (!score || !st.cap_score || !st.fat_fraction_pct) continue;
        dl.push_back(*score);
        cap.push_back(*st.cap_score);
        grade.push_back(grade_value(grade_from_fat_fraction(*st.fat_fraction_pct)));
    }
    if (dl.size() < 4)
        throw DataError("experiment " + experiment_id +
                        ": fewer than 4 studies with score, CAP, and fat fraction");

    ordered_json comparisons = ordered_json::object();
    std::vector<double> p_for_holm;
    std::vector<const char*> holm_names;
    for (int c = 1; c <= 3; ++c) {
        const char* cname = kCutoffNames[static_cast<std::size_t>(c - 1)];
        std::vector<char> labels;
        int pos = 0;
        for (int g : grade) {
            labels.push_back(g >= c ? 1 : 0);
            pos += g >= c ? 1 : 0;
        }
        const int neg = static_cast<int>(grade.size()) - pos;
        if (pos < 2 || neg < 2) {
            comparisons[cname] = nullptr;
            continue;
        }
        const stats::DelongComparison cmp = stats::delong_compare(dl, cap, labels);
        comparisons[cname] = {{"auc_score", cmp.auc_a}, {"auc_cap", cmp.auc_b},
                              {"z", cmp.z},             {"p_value", cmp.p_value},
                              {"p_text", p_text(cmp.p_value)}};
        p_for_holm.push_back(cmp.p_value);
        holm_names.push_back(cname);
    }
    const std::vector<bool> reject = stats::holm_bonferroni(p_for_holm, 0.05);
    for (std::size_t i = 0; i < holm_names.size(); ++i)
        comparisons[holm_names[i]]["reject_holm"] = reject[i];
    return {{"n", dl.size()}, {"alpha", 0.05}, {"comparisons", comparisons}};
}

std::uint64_t config_digest(const RunConfig& cfg, const std::string& experiment_id) {
    std::string canon = "experiment=" + experiment_id;
    canon += ";min_images=" + std::to_string(cfg.min_images);
    canon += ";bootstrap=" + std::to_string(cfg.bootstrap_replicates);
    canon += ";one_per_patient=" + std::to_string(cfg.one_study_per_patient ? 1 : 0);
    const img::PreprocessConfig& p = cfg.preprocess;
    canon += ";margin=" + std::to_string(p.margin_px) + ";bg_tol=" + std::to_string(p.bg_tol);
    canon += ";sigma=" + format_double(p.canny_sigma) + ";low=" + format_double(p.canny_low) +
             ";high=" + format_double(p.canny_high);
    canon += ";top_n=" + std::to_string(p.hough_top_n) +
             ";window=" + format_double(p.center_window) + ";side=" + std::to_string(p.out_side);
    if (cfg.grade_cutoffs)
        canon += ";cutoffs=" + format_double((*cfg.grade_cutoffs)[0]) + "," +
                 format_double((*cfg.grade_cutoffs)[1]) + "," +
                 format_double((*cfg.grade_cutoffs)[2]);
    return fnv1a64(canon.data(), canon.size(), digest_file(cfg.manifest));
}

}  // namespace

nlohmann::ordered_json run_experiment(const Cohort& cohort, const CohortScores& scores,
                                      const RunConfig& cfg, const std::string& experiment_id) {
    const std::filesystem::path plots_dir =
        cfg.out_dir.empty() ? std::filesystem::path() : cfg.out_dir / "plots";
    if (!plots_dir.empty()) std::filesystem::create_directories(plots_dir);

    ordered_json results;
    if (experiment_id == "1")
        results = experiment_repeatability(cohort, scores, cfg, plots_dir);
    else if (experiment_id == "2")
        results = experiment_agreement(cohort, scores, cfg, plots_dir);
    else if (experiment_id == "3a" || experiment_id == "4a")
        results = experiment_diagnostic(cohort, scores, cfg, plots_dir, experiment_id);
    else if (experiment_id == "3b" || experiment_id == "4b")
        results = experiment_comparison(cohort, scores, cfg, experiment_id);
    else
        throw std::invalid_argument("unknown experiment id: " + experiment_id);

    ordered_json report;
    report["schema_version"] = "steatoscore-report/1";
    report["experiment"] = experiment_id;
    report["tool"] = {{"name", "steatoscore"}, {"version", kToolVersion}};
    report["seed"] = cfg.seed;
    report["inputs_digest"] = digest_hex(config_digest(cfg, experiment_id));
    report["generated_at"] = report_timestamp();
    report["min_images"] = cfg.min_images;
    report["results"] = results;

    const auto problems = validate_against_schema(report_schema(), report);
    if (!problems.empty())
        throw std::logic_error("internal error: report fails its schema: " + problems.front());
    return report;
}

int cmd_experiment(const RunConfig& cfg, const std::string& experiment_id) {
    static const std::set<std::string> known = {"1", "2", "3a", "3b", "4a", "4b"};
    if (!known.count(experiment_id))
        throw std::invalid_argument("unknown experiment id: " + experiment_id);
    Cohort cohort = parse_manifest(cfg.manifest, cfg.images_dir);
    if (cohort.studies.empty()) throw DataError("empty cohort");
    if (cfg.one_study_per_patient) cohort = select_one_study_per_patient(cohort, cfg.seed);
    const OrdinalHead model = load_model(cfg.model_path);
    const CohortScores scores = score_cohort(cohort, model, cfg);

    std::filesystem::create_directories(cfg.out_dir);
    const ordered_json report = run_experiment(cohort, scores, cfg, experiment_id);
    const std::filesystem::path out_path =
        cfg.out_dir / ("experiment_" + experiment_id + ".json");
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw DataError("cannot write report: " + out_path.string());
    out << report.dump(2) << '\n';
    std::cout << "experiment " << experiment_id << " report written to " << out_path.string()
              << '\n';
    int warnings = 0;
    for (const StudyScores& ss : scores.studies) warnings += static_cast<int>(ss.drops.size());
    return warnings;
}

}  // namespace steato
