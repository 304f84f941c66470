#pragma once

#include <vector>

#include "steato/image.hpp"

namespace steato {

// Fixed deterministic feature extractor standing in for a CNN backbone:
// intensity histogram + block means + gradient-energy statistics.
struct FeatureSpec {
    int side = 256;       // required input size
    int hist_bins = 64;
    int block_grid = 8;   // block_grid x block_grid mean-intensity cells
    int gradient_stats = 4;

    int dim() const { return hist_bins + block_grid * block_grid + gradient_stats; }
    bool operator==(const FeatureSpec&) const = default;
};

std::vector<double> extract_features(const img::GrayImage& image, const FeatureSpec& spec = {});

}  // namespace steato
