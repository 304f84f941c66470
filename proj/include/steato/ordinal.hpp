#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "steato/core.hpp"

namespace steato {

// Frank-Hall multi-label encoding of an ordinal grade: bit i says grade >= i+1.
struct OrdinalLabelVector {
    std::array<int, 3> bits{0, 0, 0};

    bool operator==(const OrdinalLabelVector&) const = default;
};

// Per-cutoff model confidences. Components are free in [0,1]; no
// monotonicity is imposed on model outputs.
struct OrdinalConfidence {
    std::array<double, 3> y_hat{0.0, 0.0, 0.0};
};

OrdinalLabelVector encode_ordinal(SteatosisGrade grade);
SteatosisGrade decode_ordinal(const OrdinalLabelVector& v);  // throws on non-monotone bits

// p_hat = (y1 + y2 + y3) / 3.
double image_score(const OrdinalConfidence& y);

struct GroupScore {
    double score = 0.0;
    int n_images = 0;
    bool qualifying = false;  // n_images >= min_images
};

struct ScoreTable {
    std::map<ViewGroup, GroupScore> per_group;
    std::optional<double> all_groups;
};

// Mean of image-wise scores; nullopt when fewer than min_images.
std::optional<double> view_group_score(std::span<const double> scores, int min_images = 3);

// Unweighted mean over qualifying groups; nullopt when none qualifies.
std::optional<double> all_groups_score(const ScoreTable& table);

// Builds the table from per-group image-wise scores and fills all_groups.
ScoreTable make_score_table(const std::map<ViewGroup, std::vector<double>>& group_scores,
                            int min_images = 3);

// Smallest threshold whose specificity on the given set reaches the target
// (non-qualifying = negative; predicted qualifying <=> score > threshold).
double calibrate_qc_threshold(std::span<const double> scores, std::span<const char> qualifying,
                              double target_specificity = 0.95);

}  // namespace steato
