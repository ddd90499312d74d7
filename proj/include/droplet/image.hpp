#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "droplet/errors.hpp"

namespace droplet {

// Row-major 8-bit grayscale raster.
struct DropletImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    DropletImage() = default;
    DropletImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int row, int col) const {
        return pixels[static_cast<std::size_t>(row) * width + col];
    }
    std::uint8_t& at(int row, int col) {
        return pixels[static_cast<std::size_t>(row) * width + col];
    }
    std::size_t pixel_count() const { return pixels.size(); }
    bool operator==(const DropletImage& other) const = default;
};

// Reads a PNG (8-bit gray or RGB; color converted by luminance) or a binary
// PGM (P5). Throws BadImageError naming the file on any failure.
DropletImage load_image(const std::filesystem::path& path);

void save_png(const DropletImage& image, const std::filesystem::path& path);
void save_pgm(const DropletImage& image, const std::filesystem::path& path);

}  // namespace droplet
