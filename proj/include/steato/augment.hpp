#pragma once

#include <random>

#include "steato/image.hpp"

namespace steato {

// Bounds follow the published augmentation scheme.
struct AugmentConfig {
    double noise_sd_max = 0.01;   // fraction of full intensity scale
    double jitter_max = 0.2;      // brightness/contrast fraction
    double rot_max_deg = 10.0;
    double scale_lo = 0.9;
    double scale_hi = 1.1;
    double apply_prob = 0.5;
};

// Applies, each independently with apply_prob, in fixed order:
// Gaussian noise -> brightness/contrast jitter -> rotation -> affine scale.
// Deterministic for a fixed generator state.
img::GrayImage augment(const img::GrayImage& image, const AugmentConfig& cfg,
                       std::mt19937_64& rng);

}  // namespace steato
