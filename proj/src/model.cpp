#include "steato/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "steato/common.hpp"

namespace steato {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Stable binary cross-entropy in terms of the logit.
inline double bce_from_logit(double z, int y) {
    return std::max(z, 0.0) - z * static_cast<double>(y) + std::log1p(std::exp(-std::abs(z)));
}

double logit(const OrdinalHead& head, int cutoff, const std::vector<double>& x) {
    const int f_dim = head.feature_spec.dim();
    double z = head.biases[static_cast<std::size_t>(cutoff)];
    const double* w = head.weights.data() + static_cast<std::size_t>(cutoff) * f_dim;
    for (int f = 0; f < f_dim; ++f) z += w[f] * x[static_cast<std::size_t>(f)];
    return z;
}

void check_data(const OrdinalHead& head, std::span<const TrainSample> data) {
    if (data.empty()) throw std::invalid_argument("ordinal head: empty data");
    const auto f_dim = static_cast<std::size_t>(head.feature_spec.dim());
    for (const TrainSample& s : data)
        if (s.features.size() != f_dim)
            throw std::domain_error("ordinal head: feature length mismatch");
}

}  // namespace

double head_loss(const OrdinalHead& head, std::span<const TrainSample> data, double l2) {
    check_data(head, data);
    double loss = 0.0;
    for (const TrainSample& s : data)
        for (int i = 0; i < 3; ++i)
            loss += bce_from_logit(logit(head, i, s.features),
                                   s.label.bits[static_cast<std::size_t>(i)]);
    loss /= static_cast<double>(data.size());
    double w_sq = 0.0;
    for (double w : head.weights) w_sq += w * w;
    return loss + 0.5 * l2 * w_sq;
}

HeadGradient head_gradient(const OrdinalHead& head, std::span<const TrainSample> data,
                           double l2) {
    check_data(head, data);
    const int f_dim = head.feature_spec.dim();
    HeadGradient grad;
    grad.weights.assign(head.weights.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(data.size());
    for (const TrainSample& s : data) {
        for (int i = 0; i < 3; ++i) {
            const double dz =
                (sigmoid(logit(head, i, s.features)) -
                 static_cast<double>(s.label.bits[static_cast<std::size_t>(i)])) * inv_n;
            double* gw = grad.weights.data() + static_cast<std::size_t>(i) * f_dim;
            for (int f = 0; f < f_dim; ++f) gw[f] += dz * s.features[static_cast<std::size_t>(f)];
            grad.biases[static_cast<std::size_t>(i)] += dz;
        }
    }
    for (std::size_t i = 0; i < grad.weights.size(); ++i) grad.weights[i] += l2 * head.weights[i];
    return grad;
}

OrdinalHead train_ordinal_head(std::span<const TrainSample> data, const TrainHyper& hyper,
                               const FeatureSpec& spec) {
    if (data.empty()) throw std::invalid_argument("train_ordinal_head: empty data");
    if (!(std::isfinite(hyper.lr) && std::isfinite(hyper.l2)) || hyper.batch < 1 ||
        hyper.epochs < 0)
        throw std::invalid_argument("train_ordinal_head: bad hyperparameters");

    OrdinalHead head;
    head.feature_spec = spec;
    head.weights.assign(static_cast<std::size_t>(3) * spec.dim(), 0.0);
    head.seed = hyper.seed;
    head.epochs = hyper.epochs;
    head.lr = hyper.lr;
    head.l2 = hyper.l2;
    head.batch = hyper.batch;
    check_data(head, data);

    std::mt19937_64 rng(hyper.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<TrainSample> batch;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(hyper.batch)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(hyper.batch));
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(data[order[i]]);
            const HeadGradient grad = head_gradient(head, batch, hyper.l2);
            for (std::size_t i = 0; i < head.weights.size(); ++i)
                head.weights[i] -= hyper.lr * grad.weights[i];
            for (int i = 0; i < 3; ++i)
                head.biases[static_cast<std::size_t>(i)] -=
                    hyper.lr * grad.biases[static_cast<std::size_t>(i)];
        }
        const double loss = head_loss(head, data, hyper.l2);
        if (!std::isfinite(loss))
            throw NumericError("train_ordinal_head: loss diverged at epoch " +
                               std::to_string(epoch + 1));
    }
    return head;
}

OrdinalConfidence predict_confidences(const OrdinalHead& head, std::span<const double> features) {
    if (features.size() != static_cast<std::size_t>(head.feature_spec.dim()))
        throw std::domain_error("predict_confidences: feature length mismatch");
    OrdinalConfidence out;
    const int f_dim = head.feature_spec.dim();
    for (int i = 0; i < 3; ++i) {
        double z = head.biases[static_cast<std::size_t>(i)];
        const double* w = head.weights.data() + static_cast<std::size_t>(i) * f_dim;
        for (int f = 0; f < f_dim; ++f) z += w[f] * features[static_cast<std::size_t>(f)];
        out.y_hat[static_cast<std::size_t>(i)] = sigmoid(z);
    }
    return out;
}

void save_model(const OrdinalHead& head, const std::filesystem::path& path) {
    nlohmann::ordered_json doc;
    doc["version"] = "ordinal-head/1";
    doc["feature_spec"] = {{"side", head.feature_spec.side},
                           {"hist_bins", head.feature_spec.hist_bins},
                           {"block_grid", head.feature_spec.block_grid},
                           {"gradient_stats", head.feature_spec.gradient_stats}};
    doc["weights"] = head.weights;
    doc["biases"] = head.biases;
    doc["training"] = {{"seed", head.seed}, {"epochs", head.epochs}, {"lr", head.lr},
                       {"l2", head.l2},     {"batch", head.batch}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model: " + path.string());
    out << doc.dump(2) << '\n';
}

OrdinalHead load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad model JSON: " + std::string(e.what()));
    }
    if (doc.value("version", "") != "ordinal-head/1")
        throw DataError("unsupported model version in " + path.string());
    OrdinalHead head;
    const auto& fs = doc.at("feature_spec");
    head.feature_spec.side = fs.at("side").get<int>();
    head.feature_spec.hist_bins = fs.at("hist_bins").get<int>();
    head.feature_spec.block_grid = fs.at("block_grid").get<int>();
    head.feature_spec.gradient_stats = fs.at("gradient_stats").get<int>();
    head.weights = doc.at("weights").get<std::vector<double>>();
    const auto biases = doc.at("biases").get<std::vector<double>>();
    if (biases.size() != 3 ||
        head.weights.size() != static_cast<std::size_t>(3) * head.feature_spec.dim())
        throw DataError("model parameter shapes do not match feature_spec");
    std::copy(biases.begin(), biases.end(), head.biases.begin());
    const auto& tr = doc.at("training");
    head.seed = tr.at("seed").get<std::uint64_t>();
    head.epochs = tr.at("epochs").get<int>();
    head.lr = tr.at("lr").get<double>();
    head.l2 = tr.at("l2").get<double>();
    head.batch = tr.at("batch").get<int>();
    for (double w : head.weights)
        if (!std::isfinite(w)) throw DataError("model contains non-finite weights");
    return head;
}

}  // namespace steato
