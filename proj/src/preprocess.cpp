#include "steato/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numbers>
#include <stdexcept>

namespace steato::img {

GrayImage strip_margin(const GrayImage& img, int margin_px) {
    if (margin_px < 0) throw std::domain_error("strip_margin: negative margin");
    if (2 * margin_px >= std::min(img.width, img.height))
        throw std::domain_error("strip_margin: margin too large for image");
    if (margin_px == 0) return img;
    GrayImage out(img.width - 2 * margin_px, img.height - 2 * margin_px);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(x, y) = img.at(x + margin_px, y + margin_px);
    return out;
}

std::optional<std::uint8_t> background_intensity(const GrayImage& img) {
    std::array<std::size_t, 50> hist{};
    for (std::uint8_t v : img.data)
        if (v < 50) ++hist[v];
    std::optional<std::uint8_t> best;
    std::size_t best_count = 0;
    for (int v = 0; v < 50; ++v) {
        if (hist[static_cast<std::size_t>(v)] > best_count) {  // ties keep the lowest value
            best_count = hist[static_cast<std::size_t>(v)];
            best = static_cast<std::uint8_t>(v);
        }
    }
    return best;
}

EdgeMap foreground_mask(const GrayImage& img, std::uint8_t bg, int tol) {
    EdgeMap mask(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        mask.data[i] = std::abs(static_cast<int>(img.data[i]) - static_cast<int>(bg)) > tol;
    return mask;
}

ComponentInfo largest_connected_component(const EdgeMap& mask) {
    const int w = mask.width, h = mask.height;
    std::vector<std::uint8_t> visited(mask.data.size(), 0);
    ComponentInfo best;
    bool found = false;
    std::deque<std::pair<int, int>> queue;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            const std::size_t sidx = static_cast<std::size_t>(sy) * w + sx;
            if (!mask.data[sidx] || visited[sidx]) continue;
            ComponentInfo comp;
            int min_x = sx, max_x = sx, min_y = sy, max_y = sy;
            visited[sidx] = 1;
            queue.push_back({sx, sy});
            while (!queue.empty()) {
                auto [x, y] = queue.front();
                queue.pop_front();
                ++comp.pixel_count;
                min_x = std::min(min_x, x);
                max_x = std::max(max_x, x);
                min_y = std::min(min_y, y);
                max_y = std::max(max_y, y);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
                        if (mask.data[nidx] && !visited[nidx]) {
                            visited[nidx] = 1;
                            queue.push_back({nx, ny});
                        }
                    }
                }
            }
            comp.box = {min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
            // Scan order guarantees earlier components have the smaller
            // row-major top-left corner, so a strict > keeps the right one.
            if (!found || comp.pixel_count > best.pixel_count) {
                best = comp;
                found = true;
            }
        }
    }
    if (!found) throw AllBackgroundError("largest_connected_component: empty mask");
    return best;
}

GrayImage crop_to_lcc(const GrayImage& img, const BoundingBox& box) {
    if (box.x0 < 0 || box.y0 < 0 || box.width < 1 || box.height < 1 ||
        box.x0 + box.width > img.width || box.y0 + box.height > img.height)
        throw std::domain_error("crop_to_lcc: box out of bounds");

    const int side = std::max(box.width, box.height);
    int x0, y0, cw, ch;
    if (side <= img.width && side <= img.height) {
        x0 = std::clamp(box.x0 - (side - box.width) / 2, 0, img.width - side);
        y0 = std::clamp(box.y0 - (side - box.height) / 2, 0, img.height - side);
        cw = ch = side;
    } else {
        // No square of this side fits; keep the rectangular box.
        x0 = box.x0;
        y0 = box.y0;
        cw = box.width;
        ch = box.height;
    }
    GrayImage out(cw, ch);
    for (int y = 0; y < ch; ++y)
        for (int x = 0; x < cw; ++x) out.at(x, y) = img.at(x0 + x, y0 + y);
    return out;
}

// ---------------------------------------------------------------------------
// Canny

namespace {

std::vector<float> gaussian_smooth(const GrayImage& img, double sigma) {
    std::vector<float> cur(img.data.begin(), img.data.end());
    if (sigma <= 0.0) return cur;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<float> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[static_cast<std::size_t>(i + radius)] =
            static_cast<float>(std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma)));
        sum += kernel[static_cast<std::size_t>(i + radius)];
    }
    for (float& k : kernel) k = static_cast<float>(k / sum);

    const int w = img.width, h = img.height;
    auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };
    std::vector<float> tmp(cur.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       cur[static_cast<std::size_t>(y) * w + clampi(x + i, w)];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       tmp[static_cast<std::size_t>(clampi(y + i, h)) * w + x];
            cur[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return cur;
}

}  // namespace

EdgeMap canny_edges(const GrayImage& img, double low, double high, double sigma) {
    if (!(low > 0.0 && low < high)) throw std::domain_error("canny_edges: need 0 < low < high");
    const int w = img.width, h = img.height;
    EdgeMap edges(w, h);
    if (w < 3 || h < 3) return edges;

    const std::vector<float> smooth = gaussian_smooth(img, sigma);
    std::vector<float> mag(smooth.size(), 0.0f);
    std::vector<float> gxv(smooth.size(), 0.0f), gyv(smooth.size(), 0.0f);
    auto s = [&](int x, int y) { return smooth[static_cast<std::size_t>(y) * w + x]; };
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            const float gx = (s(x + 1, y - 1) + 2.0f * s(x + 1, y) + s(x + 1, y + 1)) -
                             (s(x - 1, y - 1) + 2.0f * s(x - 1, y) + s(x - 1, y + 1));
            const float gy = (s(x - 1, y + 1) + 2.0f * s(x, y + 1) + s(x + 1, y + 1)) -
                             (s(x - 1, y - 1) + 2.0f * s(x, y - 1) + s(x + 1, y - 1));
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            gxv[idx] = gx;
            gyv[idx] = gy;
            mag[idx] = std::hypot(gx, gy);
        }
    }

    // Non-maximum suppression along the quantized gradient direction. Strict
    // comparison on the positive side resolves two-pixel plateaus.
    std::vector<std::uint8_t> kept(mag.size(), 0);
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            const float m = mag[idx];
            if (m < low) continue;
            double angle = std::atan2(gyv[idx], gxv[idx]);
            if (angle < 0) angle += std::numbers::pi;
            int dx, dy;
            if (angle < std::numbers::pi / 8 || angle >= 7 * std::numbers::pi / 8) {
                dx = 1; dy = 0;
            } else if (angle < 3 * std::numbers::pi / 8) {
                dx = 1; dy = 1;
            } else if (angle < 5 * std::numbers::pi / 8) {
                dx = 0; dy = 1;
            } else {
                dx = -1; dy = 1;
            }
            const float plus = mag[static_cast<std::size_t>(y + dy) * w + (x + dx)];
            const float minus = mag[static_cast<std::size_t>(y - dy) * w + (x - dx)];
            if (m > plus && m >= minus) kept[idx] = 1;
        }
    }

    // Hysteresis: seed from strong pixels, grow through weak ones.
    std::deque<std::pair<int, int>> queue;
    for (int y = 1; y + 1 < h; ++y)
        for (int x = 1; x + 1 < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (kept[idx] && mag[idx] >= high) {
                edges.data[idx] = 1;
                queue.push_back({x, y});
            }
        }
    while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (nx < 1 || ny < 1 || nx + 1 >= w || ny + 1 >= h) continue;
                const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
                if (kept[nidx] && !edges.data[nidx]) {
                    edges.data[nidx] = 1;
                    queue.push_back({nx, ny});
                }
            }
    }
    return edges;
}

// ---------------------------------------------------------------------------
// Hough

std::vector<HoughLine> hough_top_lines(const EdgeMap& edges, int n, const PreprocessConfig& cfg) {
    if (n < 1) throw std::domain_error("hough_top_lines: n must be >= 1");
    std::vector<HoughLine> out;
    const int w = edges.width, h = edges.height;
    const int n_theta = std::max(1, static_cast<int>(std::round(std::numbers::pi /
                                                                cfg.hough_theta_res)));
    const double diag = std::hypot(static_cast<double>(w), static_cast<double>(h));
    const int rho_half = static_cast<int>(std::ceil(diag / cfg.hough_rho_res));
    const int n_rho = 2 * rho_half + 1;

    std::vector<double> cos_t(static_cast<std::size_t>(n_theta));
    std::vector<double> sin_t(static_cast<std::size_t>(n_theta));
    for (int t = 0; t < n_theta; ++t) {
        cos_t[static_cast<std::size_t>(t)] = std::cos(t * cfg.hough_theta_res);
        sin_t[static_cast<std::size_t>(t)] = std::sin(t * cfg.hough_theta_res);
    }

    std::vector<int> acc(static_cast<std::size_t>(n_theta) * n_rho, 0);
    bool any = false;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!edges.at(x, y)) continue;
            any = true;
            for (int t = 0; t < n_theta; ++t) {
                const double rho = x * cos_t[static_cast<std::size_t>(t)] +
                                   y * sin_t[static_cast<std::size_t>(t)];
                const int r = static_cast<int>(std::lround(rho / cfg.hough_rho_res)) + rho_half;
                if (r >= 0 && r < n_rho)
                    acc[static_cast<std::size_t>(t) * n_rho + r] += 1;
            }
        }
    if (!any) return out;

    // Greedy NMS: take cells by descending votes, suppressing anything
    // within the (rho, theta) window of an accepted cell. Theta wraps at pi
    // with the rho axis mirrored.
    struct Cell {
        int votes, t, r;
    };
    std::vector<Cell> cells;
    for (int t = 0; t < n_theta; ++t)
        for (int r = 0; r < n_rho; ++r) {
            const int v = acc[static_cast<std::size_t>(t) * n_rho + r];
            if (v > 0) cells.push_back({v, t, r});
        }
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        if (a.votes != b.votes) return a.votes > b.votes;
        if (a.t != b.t) return a.t < b.t;
        return a.r < b.r;
    });

    std::vector<Cell> accepted;
    auto suppressed = [&](const Cell& c) {
        for (const Cell& a : accepted) {
            for (int wrap = -1; wrap <= 1; ++wrap) {
                const int t = c.t + wrap * n_theta;
                const int r = wrap == 0 ? c.r : 2 * rho_half - c.r;
                if (std::abs(t - a.t) <= cfg.hough_nms_theta &&
                    std::abs(r - a.r) <= cfg.hough_nms_rho)
                    return true;
            }
        }
        return false;
    };
    for (const Cell& c : cells) {
        if (static_cast<int>(accepted.size()) >= n) break;
        if (!suppressed(c)) accepted.push_back(c);
    }
    for (const Cell& c : accepted)
        out.push_back({(c.r - rho_half) * cfg.hough_rho_res, c.t * cfg.hough_theta_res, c.votes});
    return out;
}

std::optional<double> beam_intersection(const std::vector<HoughLine>& lines, int img_width,
                                        int img_height, double center_window) {
    if (!(center_window > 0.0 && center_window <= 1.0))
        throw std::domain_error("beam_intersection: center_window in (0,1]");
    std::vector<double> xs;
    const double cx = img_width / 2.0;
    const double half_window = center_window * img_width / 2.0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            const double det = std::sin(lines[j].theta - lines[i].theta);
            if (std::abs(det) < 1e-3) continue;  // near-parallel
            const double x = (lines[i].rho * std::sin(lines[j].theta) -
                              lines[j].rho * std::sin(lines[i].theta)) / det;
            const double y = (lines[j].rho * std::cos(lines[i].theta) -
                              lines[i].rho * std::cos(lines[j].theta)) / det;
            if (std::abs(x - cx) <= half_window && y >= 0.0 && y < img_height)
                xs.push_back(x);
        }
    }
    if (xs.empty()) return std::nullopt;
    std::sort(xs.begin(), xs.end());
    const std::size_t mid = xs.size() / 2;
    return xs.size() % 2 == 1 ? xs[mid] : (xs[mid - 1] + xs[mid]) / 2.0;
}

DualBeamDecision decide_dual_beam(const std::vector<std::optional<double>>& per_image,
                                  int width) {
    if (per_image.empty()) throw std::domain_error("decide_dual_beam: empty input");
    std::size_t found = 0;
    double sum = 0.0;
    for (const auto& x : per_image)
        if (x) {
            ++found;
            sum += *x;
        }
    DualBeamDecision d;
    d.is_dual = 2 * found > per_image.size();  // strict majority
    if (d.is_dual) {
        const double mean = sum / static_cast<double>(found);
        d.split_x = std::clamp(mean, 1.0, static_cast<double>(width - 1));
    }
    return d;
}

std::pair<GrayImage, GrayImage> split_dual(const GrayImage& img, double split_x) {
    const long split = std::lround(split_x);
    if (split < 1 || split > img.width - 1)
        throw std::domain_error("split_dual: split_x out of range");
    const int sx = static_cast<int>(split);
    GrayImage left(sx, img.height), right(img.width - sx, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < sx; ++x) left.at(x, y) = img.at(x, y);
        for (int x = sx; x < img.width; ++x) right.at(x - sx, y) = img.at(x, y);
    }
    return {std::move(left), std::move(right)};
}

GrayImage resample(const GrayImage& img, int side) {
    if (side < 1) throw std::domain_error("resample: side must be >= 1");
    GrayImage out(side, side);
    const double sx = static_cast<double>(img.width) / side;
    const double sy = static_cast<double>(img.height) / side;
    for (int y = 0; y < side; ++y) {
        const double src_y = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                        static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(src_y);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fy = src_y - y0;
        for (int x = 0; x < side; ++x) {
            const double src_x = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                            static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(src_x);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fx = src_x - x0;
            const double v = (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
                             fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

// Background removal + LCC crop; nullopt when the mask comes out empty.
std::optional<GrayImage> remove_background(const GrayImage& img, const PreprocessConfig& cfg) {
    const auto bg = background_intensity(img);
    if (!bg) return img;  // nothing darker than 50: keep everything
    const EdgeMap mask = foreground_mask(img, *bg, cfg.bg_tol);
    try {
        const ComponentInfo lcc = largest_connected_component(mask);
        return crop_to_lcc(img, lcc.box);
    } catch (const AllBackgroundError&) {
        return std::nullopt;
    }
}

}  // namespace

StudyPreprocessResult preprocess_study(const std::vector<GrayImage>& images,
                                       const PreprocessConfig& cfg) {
    StudyPreprocessResult result;
    struct Stage {
        GrayImage image;
        std::size_t source_index;
        std::optional<double> intersection;
    };
    std::vector<Stage> staged;

    for (std::size_t i = 0; i < images.size(); ++i) {
        GrayImage cropped;
        try {
            const GrayImage stripped = strip_margin(images[i], cfg.margin_px);
            auto fg = remove_background(stripped, cfg);
            if (!fg) {
                result.drops.push_back({i, "all background"});
                continue;
            }
            cropped = std::move(*fg);
        } catch (const std::exception& e) {
            result.drops.push_back({i, e.what()});
            continue;
        }
        const EdgeMap edges = canny_edges(cropped, cfg.canny_low, cfg.canny_high,
                                          cfg.canny_sigma);
        const auto lines = hough_top_lines(edges, cfg.hough_top_n, cfg);
        const auto x = beam_intersection(lines, cropped.width, cropped.height,
                                         cfg.center_window);
        staged.push_back({std::move(cropped), i, x});
    }
    if (staged.empty())
        throw EmptyStudyError("preprocess_study: every image was dropped", result.drops);

    std::vector<std::optional<double>> xs;
    int max_width = 0;
    for (const Stage& s : staged) {
        xs.push_back(s.intersection);
        max_width = std::max(max_width, s.image.width);
    }
    result.dual = decide_dual_beam(xs, max_width);

    for (Stage& s : staged) {
        if (!result.dual.is_dual) {
            result.images.push_back({resample(s.image, cfg.out_side), s.source_index,
                                     BeamHalf::whole});
            continue;
        }
        const double split = std::clamp(*result.dual.split_x, 1.0,
                                        static_cast<double>(s.image.width - 1));
        auto [left, right] = split_dual(s.image, split);
        const std::array<std::pair<GrayImage*, BeamHalf>, 2> halves = {
            {{&left, BeamHalf::left}, {&right, BeamHalf::right}}};
        for (auto [half_img, which] : halves) {
            auto fg = remove_background(*half_img, cfg);
            if (!fg) {
                result.drops.push_back({s.source_index,
                                        which == BeamHalf::left ? "left half all background"
                                                                : "right half all background"});
                continue;
            }
            result.images.push_back({resample(*fg, cfg.out_side), s.source_index, which});
        }
    }
    if (result.images.empty())
        throw EmptyStudyError("preprocess_study: every image was dropped", result.drops);
    return result;
}

}  // namespace steato::img
