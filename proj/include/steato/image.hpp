#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace steato::img {

// 8-bit grayscale raster, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    bool operator==(const GrayImage&) const = default;
};

struct EdgeMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // 0/1

    EdgeMap() = default;
    EdgeMap(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

    bool at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) {
        data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
    std::size_t count() const;
};

// 8-bit grayscale PNG I/O; other PNG color types are converted on read.
GrayImage read_png(const std::filesystem::path& path);
void write_png(const GrayImage& img, const std::filesystem::path& path);

}  // namespace steato::img
