#pragma once

#include <cstdint>
#include <vector>

#include "droplet/image.hpp"

namespace droplet {

struct SegOpts {
    int min_area = 20;          // regions below this pixel count are dropped
    double marker_frac = 0.4;   // marker threshold as fraction of per-component max distance
    int open_iterations = 2;    // 3x3 morphological opening passes
};

// Indexed droplet pixel sets. labels[i] is 0 for background, 1..M for
// droplets; regions[k] lists the linear pixel indices of droplet k+1.
struct SegmentationResult {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> labels;
    int droplet_count = 0;
    std::vector<std::vector<std::int32_t>> regions;
    bool foreground_bright = false;  // polarity chosen by the threshold step
    int otsu_threshold = 0;
};

struct PixelCoord {
    int row = 0;
    int col = 0;
};

struct DropletGeometry {
    double centroid_row = 0.0;
    double centroid_col = 0.0;
    double r_major = 0.0;       // longest chord through the region
    double r_minor = 0.0;       // longest chord perpendicular to the major axis
    double circle_radius = 0.0; // (r_major + r_minor) / 4
    std::vector<std::int32_t> circle_pixels;  // rasterized fitted disk, clipped to image
};

struct ScoreResult {
    double loss = 1.0;
    double geom_loss = 1.0;
    double yield_loss = 1.0;
    SegmentationResult segmentation;
};

// Watershed pipeline: Otsu threshold with polarity auto-detection,
// morphological opening, Euclidean distance transform, markers at
// marker_frac of each component's distance maximum, flooding over the
// image gradient. An all-background image yields droplet_count = 0.
SegmentationResult segment(const DropletImage& image, const SegOpts& opts = {});

DropletGeometry droplet_geometry(const std::vector<std::int32_t>& region, int width, int height);

double geom_loss(const SegmentationResult& seg);
double yield_loss(const SegmentationResult& seg, int count_max);

ScoreResult score(const DropletImage& image, const SegOpts& opts = {}, int count_max = 50);

// Exposed for tests: exact squared Euclidean distance to the nearest
// zero entry of mask (width*height, nonzero = foreground).
std::vector<double> distance_transform_squared(const std::vector<std::uint8_t>& mask, int width,
                                               int height);
int otsu_threshold(const DropletImage& image);

}  // namespace droplet
