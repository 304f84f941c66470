#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steato/image.hpp"

namespace steato::img {

// Raised when a foreground mask has no pixels; study-level processing skips
// the image and records a drop.
struct AllBackgroundError : std::runtime_error {
    explicit AllBackgroundError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DropReport {
    std::size_t source_index = 0;
    std::string reason;
};

// Raised when preprocessing drops every image of a study; carries the
// per-image drop reports.
struct EmptyStudyError : std::runtime_error {
    std::vector<DropReport> drops;
    explicit EmptyStudyError(const std::string& msg, std::vector<DropReport> d = {})
        : std::runtime_error(msg), drops(std::move(d)) {}
};

struct HoughLine {
    double rho = 0.0;    // signed distance from origin, pixels
    double theta = 0.0;  // radians in [0, pi)
    int votes = 0;
};

struct DualBeamDecision {
    bool is_dual = false;
    std::optional<double> split_x;  // study-level average intersection abscissa
};

struct BoundingBox {
    int x0 = 0, y0 = 0;  // inclusive top-left
    int width = 0, height = 0;
};

struct ComponentInfo {
    std::size_t pixel_count = 0;
    BoundingBox box;
};

struct PreprocessConfig {
    int margin_px = 8;
    int bg_tol = 5;             // |intensity - bg| > tol is foreground
    double canny_sigma = 1.4;
    double canny_low = 30.0;
    double canny_high = 90.0;
    int hough_top_n = 8;
    double hough_rho_res = 1.0;                  // pixels per rho bin
    double hough_theta_res = 3.14159265358979323846 / 180.0;
    int hough_nms_rho = 5;                       // NMS half-window, rho bins
    int hough_nms_theta = 5;                     // NMS half-window, theta bins
    double center_window = 0.2;                  // central fraction of width
    int out_side = 256;
};

// Step 1: drop a fixed boundary strip (header/annotation removal).
GrayImage strip_margin(const GrayImage& img, int margin_px);

// Step 2: background removal.
std::optional<std::uint8_t> background_intensity(const GrayImage& img);
EdgeMap foreground_mask(const GrayImage& img, std::uint8_t bg, int tol);
// Largest 8-connected component; ties go to the smallest top-left bbox
// corner in row-major order. Throws on an all-background mask.
ComponentInfo largest_connected_component(const EdgeMap& mask);
// Smallest square holding the box, shifted into bounds; falls back to the
// rectangular box when no square fits.
GrayImage crop_to_lcc(const GrayImage& img, const BoundingBox& lcc_box);

// Step 3: dual-beam detection.
EdgeMap canny_edges(const GrayImage& img, double low, double high, double sigma);
std::vector<HoughLine> hough_top_lines(const EdgeMap& edges, int n,
                                       const PreprocessConfig& cfg = {});
// Median x of pairwise line intersections that fall in the central
// `center_window` fraction of the width with y inside the image.
std::optional<double> beam_intersection(const std::vector<HoughLine>& lines, int img_width,
                                        int img_height, double center_window);
DualBeamDecision decide_dual_beam(const std::vector<std::optional<double>>& per_image,
                                  int width);
std::pair<GrayImage, GrayImage> split_dual(const GrayImage& img, double split_x);

// Bilinear resize to side x side (aspect ratio not preserved).
GrayImage resample(const GrayImage& img, int side);

enum class BeamHalf { whole, left, right };

struct ProcessedImage {
    GrayImage image;
    std::size_t source_index = 0;  // index into the input list
    BeamHalf half = BeamHalf::whole;
};

struct StudyPreprocessResult {
    std::vector<ProcessedImage> images;
    std::vector<DropReport> drops;
    DualBeamDecision dual;
};

// Full pipeline: margin strip -> background removal + LCC crop -> study-level
// dual-beam vote -> split (if dual, halves re-cropped) -> resample.
StudyPreprocessResult preprocess_study(const std::vector<GrayImage>& images,
                                       const PreprocessConfig& cfg = {});

}  // namespace steato::img
