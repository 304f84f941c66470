#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "steato/common.hpp"

namespace steato::stats {

struct BootstrapConfig {
    int replicates = 1000;
    std::uint64_t seed = 0;
    double level = 0.95;
    double max_failure_fraction = 0.10;
};

struct BootstrapCi {
    double lo = 0.0;
    double hi = 0.0;
    int replicates_used = 0;
    int failures = 0;
};

// Linear-interpolation empirical quantile on a sorted vector.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    if (sorted.size() == 1) return sorted[0];
    double pos = q * static_cast<double>(sorted.size() - 1);
    std::size_t i = static_cast<std::size_t>(pos);
    if (i >= sorted.size() - 1) return sorted.back();
    double frac = pos - static_cast<double>(i);
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

// Percentile bootstrap over resampling units (a unit is a study, never an
// image). Units are canonicalized by sorting so the CI is invariant to input
// order; replicate seeds derive from (seed, replicate index).
template <typename T>
    requires std::totally_ordered<T>
BootstrapCi percentile_bootstrap(std::vector<T> units,
                                 const std::function<double(const std::vector<T>&)>& statistic,
                                 const BootstrapConfig& cfg = {}) {
    if (units.empty()) throw std::invalid_argument("percentile_bootstrap: no units");
    if (cfg.replicates < 1) throw std::invalid_argument("percentile_bootstrap: replicates < 1");
    std::sort(units.begin(), units.end());

    std::vector<double> stats;
    stats.reserve(static_cast<std::size_t>(cfg.replicates));
    int failures = 0;
    std::vector<T> resample(units.size());
    for (int b = 0; b < cfg.replicates; ++b) {
        std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(b)));
        std::uniform_int_distribution<std::size_t> pick(0, units.size() - 1);
        for (std::size_t i = 0; i < units.size(); ++i) resample[i] = units[pick(rng)];
        double value;
        try {
            value = statistic(resample);
        } catch (const std::exception&) {
            ++failures;
            continue;
        }
        if (!std::isfinite(value)) {
            ++failures;
            continue;
        }
        stats.push_back(value);
    }
    if (static_cast<double>(failures) >
        cfg.max_failure_fraction * static_cast<double>(cfg.replicates))
        throw NumericError("percentile_bootstrap: " + std::to_string(failures) + " of " +
                           std::to_string(cfg.replicates) + " replicates failed");

    std::sort(stats.begin(), stats.end());
    const double alpha = 1.0 - cfg.level;
    BootstrapCi ci;
    ci.lo = quantile_sorted(stats, alpha / 2.0);
    ci.hi = quantile_sorted(stats, 1.0 - alpha / 2.0);
    ci.replicates_used = static_cast<int>(stats.size());
    ci.failures = failures;
    return ci;
}

// Variant keeping every replicate's statistic vector; used for pointwise
// confidence bands on fitted curves.
template <typename T>
    requires std::totally_ordered<T>
std::vector<std::vector<double>> bootstrap_replicates(
    std::vector<T> units,
    const std::function<std::vector<double>(const std::vector<T>&)>& statistic,
    const BootstrapConfig& cfg = {}) {
    if (units.empty()) throw std::invalid_argument("bootstrap_replicates: no units");
    std::sort(units.begin(), units.end());
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(cfg.replicates));
    int failures = 0;
    std::vector<T> resample(units.size());
    for (int b = 0; b < cfg.replicates; ++b) {
        std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(b)));
        std::uniform_int_distribution<std::size_t> pick(0, units.size() - 1);
        for (std::size_t i = 0; i < units.size(); ++i) resample[i] = units[pick(rng)];
        try {
            out.push_back(statistic(resample));
        } catch (const std::exception&) {
            ++failures;
        }
    }
    if (static_cast<double>(failures) >
        cfg.max_failure_fraction * static_cast<double>(cfg.replicates))
        throw NumericError("bootstrap_replicates: too many failed replicates");
    return out;
}

}  // namespace steato::stats
