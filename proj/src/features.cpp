#include "steato/features.hpp"

#include <cmath>
#include <stdexcept>

namespace steato {

std::vector<double> extract_features(const img::GrayImage& image, const FeatureSpec& spec) {
    if (image.width != spec.side || image.height != spec.side)
        throw std::domain_error("extract_features: image must be " + std::to_string(spec.side) +
                                "x" + std::to_string(spec.side));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(spec.dim()));
    const double n_px = static_cast<double>(image.data.size());

    // Normalized intensity histogram.
    std::vector<double> hist(static_cast<std::size_t>(spec.hist_bins), 0.0);
    const int bin_width = 256 / spec.hist_bins;
    for (std::uint8_t v : image.data) hist[static_cast<std::size_t>(v / bin_width)] += 1.0;
    for (double h : hist) out.push_back(h / n_px);

    // Block mean intensities in [0,1].
    const int block = spec.side / spec.block_grid;
    for (int by = 0; by < spec.block_grid; ++by) {
        for (int bx = 0; bx < spec.block_grid; ++bx) {
            double sum = 0.0;
            for (int y = by * block; y < (by + 1) * block; ++y)
                for (int x = bx * block; x < (bx + 1) * block; ++x) sum += image.at(x, y);
            out.push_back(sum / (255.0 * block * block));
        }
    }

    // Gradient-energy statistics over interior central differences.
    double sum_ax = 0.0, sum_ay = 0.0, sum_sq = 0.0, high_count = 0.0;
    const double high_cut = 0.1 * 255.0;
    double interior = 0.0;
    for (int y = 1; y + 1 < image.height; ++y) {
        for (int x = 1; x + 1 < image.width; ++x) {
            const double gx = (static_cast<double>(image.at(x + 1, y)) - image.at(x - 1, y)) / 2.0;
            const double gy = (static_cast<double>(image.at(x, y + 1)) - image.at(x, y - 1)) / 2.0;
            sum_ax += std::abs(gx);
            sum_ay += std::abs(gy);
            const double sq = gx * gx + gy * gy;
            sum_sq += sq;
            if (std::sqrt(sq) > high_cut) high_count += 1.0;
            interior += 1.0;
        }
    }
    if (interior > 0.0) {
        out.push_back(sum_ax / (255.0 * interior));
        out.push_back(sum_ay / (255.0 * interior));
        out.push_back(std::sqrt(sum_sq / interior) / 255.0);
        out.push_back(high_count / interior);
    } else {
        out.insert(out.end(), 4, 0.0);
    }
    return out;
}

}  // namespace steato
