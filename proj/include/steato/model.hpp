#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "steato/features.hpp"
#include "steato/ordinal.hpp"

namespace steato {

// Three independent logistic outputs over a shared feature vector (the
// Frank-Hall binary decomposition head).
struct OrdinalHead {
    FeatureSpec feature_spec;
    std::vector<double> weights;  // 3 x F row-major
    std::array<double, 3> biases{0.0, 0.0, 0.0};

    // Training metadata recorded in the serialized model.
    std::uint64_t seed = 0;
    int epochs = 0;
    double lr = 0.0;
    double l2 = 0.0;
    int batch = 0;

    double weight(int cutoff, int f) const {
        return weights[static_cast<std::size_t>(cutoff) * feature_spec.dim() + f];
    }
};

struct TrainSample {
    std::vector<double> features;
    OrdinalLabelVector label;
};

// Defaults follow the published training configuration.
struct TrainHyper {
    double lr = 0.0005;
    int epochs = 120;
    int batch = 32;
    double l2 = 0.0001;
    std::uint64_t seed = 0;
};

// Mean over samples of the summed per-cutoff binary cross-entropies plus
// (l2/2)*||W||^2 (weights only).
double head_loss(const OrdinalHead& head, std::span<const TrainSample> data, double l2);

struct HeadGradient {
    std::vector<double> weights;  // same layout as OrdinalHead::weights
    std::array<double, 3> biases{0.0, 0.0, 0.0};
};
HeadGradient head_gradient(const OrdinalHead& head, std::span<const TrainSample> data, double l2);

// Zero-initialized seeded mini-batch SGD; deterministic for a fixed seed.
OrdinalHead train_ordinal_head(std::span<const TrainSample> data, const TrainHyper& hyper,
                               const FeatureSpec& spec = {});

OrdinalConfidence predict_confidences(const OrdinalHead& head, std::span<const double> features);

// Single-document JSON serialization, version "ordinal-head/1".
void save_model(const OrdinalHead& head, const std::filesystem::path& path);
OrdinalHead load_model(const std::filesystem::path& path);

}  // namespace steato
