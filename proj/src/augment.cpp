#include "steato/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace steato {

namespace {

using Buffer = std::vector<double>;

double sample_bilinear(const Buffer& buf, int w, int h, double x, double y) {
    if (x < 0.0 || y < 0.0 || x > w - 1 || y > h - 1) return 0.0;
    const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    const auto at = [&](int xx, int yy) { return buf[static_cast<std::size_t>(yy) * w + xx]; };
    return (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x1, y0)) +
           fy * ((1 - fx) * at(x0, y1) + fx * at(x1, y1));
}

}  // namespace

img::GrayImage augment(const img::GrayImage& image, const AugmentConfig& cfg,
                       std::mt19937_64& rng) {
    if (!(cfg.apply_prob >= 0.0 && cfg.apply_prob <= 1.0))
        throw std::domain_error("augment: apply_prob must be in [0,1]");
    const int w = image.width, h = image.height;
    Buffer buf(image.data.begin(), image.data.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto applies = [&]() { return unit(rng) < cfg.apply_prob; };

    // Additive Gaussian noise, sd drawn uniformly from (0, noise_sd_max].
    if (applies()) {
        const double sd = (1.0 - unit(rng)) * cfg.noise_sd_max * 255.0;
        std::normal_distribution<double> noise(0.0, sd > 0.0 ? sd : 1e-12);
        for (double& v : buf) v += noise(rng);
    }

    // Brightness/contrast jitter about the image mean.
    if (applies()) {
        std::uniform_real_distribution<double> jitter(-cfg.jitter_max, cfg.jitter_max);
        const double brightness = jitter(rng) * 255.0;
        const double contrast = 1.0 + jitter(rng);
        double mean = 0.0;
        for (double v : buf) mean += v;
        mean /= static_cast<double>(buf.size());
        for (double& v : buf) v = (v - mean) * contrast + mean + brightness;
    }

    // Rotation about the center, bilinear, zero fill.
    if (applies()) {
        std::uniform_real_distribution<double> deg(-cfg.rot_max_deg, cfg.rot_max_deg);
        const double a = deg(rng) * std::numbers::pi / 180.0;
        const double c = std::cos(a), s = std::sin(a);
        const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
        Buffer rotated(buf.size());
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double dx = x - cx, dy = y - cy;
                rotated[static_cast<std::size_t>(y) * w + x] =
                    sample_bilinear(buf, w, h, cx + c * dx + s * dy, cy - s * dx + c * dy);
            }
        buf = std::move(rotated);
    }

    // Affine scale about the center, bilinear, zero fill.
    if (applies()) {
        std::uniform_real_distribution<double> factor(cfg.scale_lo, cfg.scale_hi);
        const double f = factor(rng);
        const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
        Buffer scaled(buf.size());
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                scaled[static_cast<std::size_t>(y) * w + x] =
                    sample_bilinear(buf, w, h, cx + (x - cx) / f, cy + (y - cy) / f);
        buf = std::move(scaled);
    }

    img::GrayImage out(w, h);
    for (std::size_t i = 0; i < buf.size(); ++i)
        out.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(buf[i]), 0L, 255L));
    return out;
}

}  // namespace steato
