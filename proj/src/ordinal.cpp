#include "steato/ordinal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace steato {

OrdinalLabelVector encode_ordinal(SteatosisGrade grade) {
    const int g = grade_value(grade);
    OrdinalLabelVector v;
    for (int i = 0; i < 3; ++i) v.bits[static_cast<std::size_t>(i)] = g >= i + 1 ? 1 : 0;
    return v;
}

SteatosisGrade decode_ordinal(const OrdinalLabelVector& v) {
    if (v.bits[0] < v.bits[1] || v.bits[1] < v.bits[2])
        throw std::domain_error("decode_ordinal: non-monotone label vector");
    for (int b : v.bits)
        if (b != 0 && b != 1) throw std::domain_error("decode_ordinal: bits must be 0/1");
    return grade_from_int(v.bits[0] + v.bits[1] + v.bits[2]);
}

double image_score(const OrdinalConfidence& y) {
    for (double c : y.y_hat)
        if (!(c >= 0.0 && c <= 1.0))
            throw std::domain_error("image_score: confidences must be in [0,1]");
    return (y.y_hat[0] + y.y_hat[1] + y.y_hat[2]) / 3.0;
}

std::optional<double> view_group_score(std::span<const double> scores, int min_images) {
    if (static_cast<int>(scores.size()) < min_images) return std::nullopt;
    if (scores.empty()) return std::nullopt;
    return std::accumulate(scores.begin(), scores.end(), 0.0) /
           static_cast<double>(scores.size());
}

std::optional<double> all_groups_score(const ScoreTable& table) {
    double sum = 0.0;
    int n = 0;
    for (const auto& [group, gs] : table.per_group) {
        if (!gs.qualifying) continue;
        sum += gs.score;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

ScoreTable make_score_table(const std::map<ViewGroup, std::vector<double>>& group_scores,
                            int min_images) {
    ScoreTable table;
    for (const auto& [group, scores] : group_scores) {
        if (scores.empty()) continue;
        GroupScore gs;
        gs.n_images = static_cast<int>(scores.size());
        gs.score = std::accumulate(scores.begin(), scores.end(), 0.0) /
                   static_cast<double>(scores.size());
        gs.qualifying = gs.n_images >= min_images;
        table.per_group[group] = gs;
    }
    table.all_groups = all_groups_score(table);
    return table;
}

double calibrate_qc_threshold(std::span<const double> scores, std::span<const char> qualifying,
                              double target_specificity) {
    if (scores.size() != qualifying.size())
        throw std::domain_error("calibrate_qc_threshold: length mismatch");
    if (!(target_specificity > 0.0 && target_specificity <= 1.0))
        throw std::domain_error("calibrate_qc_threshold: target must be in (0,1]");
    std::vector<double> neg;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (!qualifying[i]) neg.push_back(scores[i]);
    if (neg.empty()) throw std::domain_error("calibrate_qc_threshold: no negative samples");
    std::sort(neg.begin(), neg.end());
    // Need ceil(target * N) negatives at or below the threshold; the smallest
    // such threshold is that order statistic itself.
    const auto need = static_cast<std::size_t>(
        std::ceil(target_specificity * static_cast<double>(neg.size()) - 1e-12));
    return neg[std::max<std::size_t>(need, 1) - 1];
}

}  // namespace steato
