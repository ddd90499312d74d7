#include "droplet/vision.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>

namespace droplet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Neighbor4 {
    int dr, dc;
};
constexpr std::array<Neighbor4, 4> kNeighbors4{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};

std::vector<std::uint8_t> erode(const std::vector<std::uint8_t>& mask, int w, int h) {
    std::vector<std::uint8_t> out(mask.size(), 0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (r == 0 || c == 0 || r == h - 1 || c == w - 1) continue;
            bool keep = true;
            for (int dr = -1; dr <= 1 && keep; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (!mask[static_cast<std::size_t>(r + dr) * w + (c + dc)]) {
                        keep = false;
                        break;
                    }
                }
            }
            out[static_cast<std::size_t>(r) * w + c] = keep ? 1 : 0;
        }
    }
    return out;
}

std::vector<std::uint8_t> dilate(const std::vector<std::uint8_t>& mask, int w, int h) {
    std::vector<std::uint8_t> out(mask.size(), 0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            bool hit = false;
            for (int dr = -1; dr <= 1 && !hit; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr;
                    const int cc = c + dc;
                    if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
                    if (mask[static_cast<std::size_t>(rr) * w + cc]) {
                        hit = true;
                        break;
                    }
                }
            }
            out[static_cast<std::size_t>(r) * w + c] = hit ? 1 : 0;
        }
    }
    return out;
}

// 1D squared-distance transform (Felzenszwalb & Huttenlocher lower envelope).
void dt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
           std::vector<double>& z, int n) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        double s;
        while (true) {
            const int p = v[k];
            s = ((f[q] + q * static_cast<double>(q)) - (f[p] + p * static_cast<double>(p))) /
                (2.0 * (q - p));
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - static_cast<double>(v[k]);
        d[q] = dq * dq + f[v[k]];
    }
}

// Labels 4-connected components of a binary mask; returns the count.
int connected_components(const std::vector<std::uint8_t>& mask, int w, int h,
                         std::vector<std::int32_t>& labels) {
    labels.assign(mask.size(), 0);
    int next = 0;
    std::vector<std::int32_t> stack;
    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (!mask[start] || labels[start]) continue;
        ++next;
        stack.push_back(static_cast<std::int32_t>(start));
        labels[start] = next;
        while (!stack.empty()) {
            const std::int32_t p = stack.back();
            stack.pop_back();
            const int r = p / w;
            const int c = p % w;
            for (const auto& nb : kNeighbors4) {
                const int rr = r + nb.dr;
                const int cc = c + nb.dc;
                if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
                const std::size_t q = static_cast<std::size_t>(rr) * w + cc;
                if (mask[q] && !labels[q]) {
                    labels[q] = next;
                    stack.push_back(static_cast<std::int32_t>(q));
                }
            }
        }
    }
    return next;
}

std::vector<int> gradient_magnitude(const DropletImage& img) {
    const int w = img.width;
    const int h = img.height;
    std::vector<int> g(img.pixel_count(), 0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int v = img.at(r, c);
            int best = 0;
            for (const auto& nb : kNeighbors4) {
                const int rr = r + nb.dr;
                const int cc = c + nb.dc;
                if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
                best = std::max(best, std::abs(v - img.at(rr, cc)));
            }
            g[static_cast<std::size_t>(r) * w + c] = best;
        }
    }
    return g;
}

struct FloodEntry {
    int priority;
    std::uint64_t seq;
    std::int32_t pixel;
    std::int32_t label;
};

struct FloodOrder {
    bool operator()(const FloodEntry& a, const FloodEntry& b) const {
        if (a.priority != b.priority) return a.priority > b.priority;
        return a.seq > b.seq;  // FIFO within equal priority
    }
};

}  // namespace

int otsu_threshold(const DropletImage& image) {
    std::array<std::uint64_t, 256> hist{};
    for (std::uint8_t p : image.pixels) ++hist[p];
    const double total = static_cast<double>(image.pixel_count());

    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += i * static_cast<double>(hist[i]);

    double best_sigma = -1.0;
    int best_t = 0;
    double w0 = 0.0;
    double sum0 = 0.0;
    for (int t = 0; t < 256; ++t) {
        w0 += static_cast<double>(hist[t]);
        if (w0 == 0.0) continue;
        const double w1 = total - w0;
        if (w1 == 0.0) break;
        sum0 += t * static_cast<double>(hist[t]);
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_all - sum0) / w1;
        const double sigma = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (sigma > best_sigma) {
            best_sigma = sigma;
            best_t = t;
        }
    }
    return best_t;
}

std::vector<double> distance_transform_squared(const std::vector<std::uint8_t>& mask, int w,
                                               int h) {
    std::vector<double> dist(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        dist[i] = mask[i] ? kInf : 0.0;
    }

    const int n = std::max(w, h);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);

    // Columns, then rows.
    for (int c = 0; c < w; ++c) {
        bool any_finite = false;
        for (int r = 0; r < h; ++r) {
            f[r] = dist[static_cast<std::size_t>(r) * w + c];
            if (f[r] < kInf) any_finite = true;
        }
        if (!any_finite) continue;  // stays +inf, resolved by the row pass
        dt_1d(f, d, v, z, h);
        for (int r = 0; r < h; ++r) {
            dist[static_cast<std::size_t>(r) * w + c] = d[r];
        }
    }
    for (int r = 0; r < h; ++r) {
        bool all_inf = true;
        for (int c = 0; c < w; ++c) {
            f[c] = dist[static_cast<std::size_t>(r) * w + c];
            if (f[c] < kInf) all_inf = false;
        }
        if (all_inf) continue;  // whole image is foreground; leave +inf
        dt_1d(f, d, v, z, w);
        for (int c = 0; c < w; ++c) {
            dist[static_cast<std::size_t>(r) * w + c] = d[c];
        }
    }
    return dist;
}

SegmentationResult segment(const DropletImage& image, const SegOpts& opts) {
    if (image.width < 16 || image.height < 16) {
        throw BadImageError("image must be at least 16x16 pixels");
    }
    const int w = image.width;
    const int h = image.height;
    const std::size_t n = image.pixel_count();

    SegmentationResult res;
    res.width = w;
    res.height = h;
    res.labels.assign(n, 0);

    // Threshold with polarity auto-detection: droplets are the minority class.
    const int t = otsu_threshold(image);
    res.otsu_threshold = t;
    std::size_t above = 0;
    for (std::uint8_t p : image.pixels) {
        if (p > t) ++above;
    }
    res.foreground_bright = above * 2 <= n;
    std::vector<std::uint8_t> mask(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const bool fg = res.foreground_bright ? image.pixels[i] > t : image.pixels[i] <= t;
        mask[i] = fg ? 1 : 0;
    }
    if (std::all_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m == 0; })) {
        return res;  // empty image: droplet_count stays 0
    }

    for (int it = 0; it < opts.open_iterations; ++it) mask = erode(mask, w, h);
    for (int it = 0; it < opts.open_iterations; ++it) mask = dilate(mask, w, h);

    std::vector<std::int32_t> comp;
    const int num_comps = connected_components(mask, w, h, comp);
    if (num_comps == 0) {
        return res;
    }

    const std::vector<double> dist2 = distance_transform_squared(mask, w, h);

    // Markers: pixels at >= marker_frac of their component's distance peak.
    std::vector<double> comp_max(static_cast<std::size_t>(num_comps) + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (comp[i]) comp_max[comp[i]] = std::max(comp_max[comp[i]], dist2[i]);
    }
    const double frac2 = opts.marker_frac * opts.marker_frac;
    std::vector<std::uint8_t> marker_mask(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (comp[i] && dist2[i] >= frac2 * comp_max[comp[i]]) marker_mask[i] = 1;
    }
    std::vector<std::int32_t> markers;
    const int num_markers = connected_components(marker_mask, w, h, markers);
    if (num_markers == 0) {
        return res;
    }

    // Meyer flooding from the markers, ordered by image gradient.
    const std::vector<int> grad = gradient_magnitude(image);
    std::vector<std::int32_t>& labels = res.labels;
    std::priority_queue<FloodEntry, std::vector<FloodEntry>, FloodOrder> queue;
    std::uint64_t seq = 0;

    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = markers[i];
    }
    auto push_neighbors = [&](std::int32_t p, std::int32_t label) {
        const int r = p / w;
        const int c = p % w;
        for (const auto& nb : kNeighbors4) {
            const int rr = r + nb.dr;
            const int cc = c + nb.dc;
            if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
            const std::int32_t q = rr * w + cc;
            if (mask[q] && !labels[q]) {
                queue.push(FloodEntry{grad[q], seq++, q, label});
            }
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i]) push_neighbors(static_cast<std::int32_t>(i), labels[i]);
    }
    while (!queue.empty()) {
        const FloodEntry e = queue.top();
        queue.pop();
        if (labels[e.pixel]) continue;
        labels[e.pixel] = e.label;
        push_neighbors(e.pixel, e.label);
    }

    // Gather regions, drop the ones below min_area, relabel compactly.
    // Chord geometry needs at least 3 pixels, so 3 is the floor.
    const int min_area = std::max(opts.min_area, 3);
    std::vector<std::vector<std::int32_t>> raw(static_cast<std::size_t>(num_markers));
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i]) raw[static_cast<std::size_t>(labels[i]) - 1].push_back(
            static_cast<std::int32_t>(i));
    }
    std::vector<std::int32_t> remap(static_cast<std::size_t>(num_markers) + 1, 0);
    for (int m = 0; m < num_markers; ++m) {
        if (static_cast<int>(raw[m].size()) >= min_area) {
            remap[m + 1] = ++res.droplet_count;
            res.regions.push_back(std::move(raw[m]));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = remap[labels[i]];
    }
    return res;
}

DropletGeometry droplet_geometry(const std::vector<std::int32_t>& region, int width, int height) {
    if (region.size() < 3) {
        throw DegenerateRegionError("droplet region has fewer than 3 pixels");
    }

    std::vector<std::uint8_t> member(static_cast<std::size_t>(width) * height, 0);
    for (std::int32_t p : region) member[p] = 1;

    std::vector<PixelCoord> boundary;
    for (std::int32_t p : region) {
        const int r = p / width;
        const int c = p % width;
        bool edge = false;
        for (const auto& nb : kNeighbors4) {
            const int rr = r + nb.dr;
            const int cc = c + nb.dc;
            if (rr < 0 || cc < 0 || rr >= height || cc >= width ||
                !member[static_cast<std::size_t>(rr) * width + cc]) {
                edge = true;
                break;
            }
        }
        if (edge) boundary.push_back({r, c});
    }

    // Major chord: antipodal boundary pair scan, O(B^2).
    double best_sq = -1.0;
    PixelCoord a{}, b{};
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        for (std::size_t j = i + 1; j < boundary.size(); ++j) {
            const double dr = boundary[i].row - boundary[j].row;
            const double dc = boundary[i].col - boundary[j].col;
            const double sq = dr * dr + dc * dc;
            if (sq > best_sq) {
                best_sq = sq;
                a = boundary[i];
                b = boundary[j];
            }
        }
    }
    DropletGeometry geo;
    geo.r_major = std::sqrt(std::max(best_sq, 0.0));
    if (geo.r_major <= 0.0) {
        throw DegenerateRegionError("droplet region collapses to a point");
    }

    const double ur = (b.row - a.row) / geo.r_major;
    const double uc = (b.col - a.col) / geo.r_major;
    const double vr = -uc;
    const double vc = ur;

    // Minor chord: widest perpendicular slice along the major axis.
    const int nbins = static_cast<int>(std::lround(geo.r_major)) + 1;
    std::vector<double> tmin(static_cast<std::size_t>(nbins), kInf);
    std::vector<double> tmax(static_cast<std::size_t>(nbins), -kInf);
    for (std::int32_t p : region) {
        const double pr = p / width - a.row;
        const double pc = p % width - a.col;
        const double s = pr * ur + pc * uc;
        const double t = pr * vr + pc * vc;
        int bin = static_cast<int>(std::lround(s));
        bin = std::clamp(bin, 0, nbins - 1);
        tmin[bin] = std::min(tmin[bin], t);
        tmax[bin] = std::max(tmax[bin], t);
    }
    double minor = 0.0;
    int minor_bin = 0;
    double minor_mid = 0.0;
    for (int bin = 0; bin < nbins; ++bin) {
        if (tmax[bin] < tmin[bin]) continue;
        const double extent = tmax[bin] - tmin[bin];
        if (extent > minor) {
            minor = extent;
            minor_bin = bin;
            minor_mid = 0.5 * (tmin[bin] + tmax[bin]);
        }
    }
    geo.r_minor = minor;
    geo.centroid_row = a.row + ur * minor_bin + vr * minor_mid;
    geo.centroid_col = a.col + uc * minor_bin + vc * minor_mid;
    geo.circle_radius = 0.25 * (geo.r_major + geo.r_minor);

    const double rad2 = geo.circle_radius * geo.circle_radius;
    const int r0 = std::max(0, static_cast<int>(std::floor(geo.centroid_row - geo.circle_radius)));
    const int r1 = std::min(height - 1,
                            static_cast<int>(std::ceil(geo.centroid_row + geo.circle_radius)));
    const int c0 = std::max(0, static_cast<int>(std::floor(geo.centroid_col - geo.circle_radius)));
    const int c1 = std::min(width - 1,
                            static_cast<int>(std::ceil(geo.centroid_col + geo.circle_radius)));
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            const double dr = r - geo.centroid_row;
            const double dc = c - geo.centroid_col;
            if (dr * dr + dc * dc <= rad2) {
                geo.circle_pixels.push_back(r * width + c);
            }
        }
    }
    return geo;
}

double geom_loss(const SegmentationResult& seg) {
    if (seg.droplet_count == 0) {
        return 1.0;
    }
    std::vector<std::uint8_t> member(static_cast<std::size_t>(seg.width) * seg.height, 0);
    double xor_total = 0.0;
    double area_total = 0.0;
    for (const auto& region : seg.regions) {
        const DropletGeometry geo = droplet_geometry(region, seg.width, seg.height);
        for (std::int32_t p : region) member[p] = 1;
        std::size_t inter = 0;
        for (std::int32_t p : geo.circle_pixels) {
            if (member[p]) ++inter;
        }
        for (std::int32_t p : region) member[p] = 0;
        xor_total += static_cast<double>(region.size() + geo.circle_pixels.size() - 2 * inter);
        area_total += static_cast<double>(region.size());
    }
    return std::clamp(xor_total / area_total, 0.0, 1.0);
}

double yield_loss(const SegmentationResult& seg, int count_max) {
    if (count_max < 1) {
        throw InvalidCountMaxError("count_max must be >= 1, got " + std::to_string(count_max));
    }
    const double total = static_cast<double>(seg.width) * seg.height;
    std::size_t droplet_pixels = 0;
    for (const auto& region : seg.regions) droplet_pixels += region.size();
    const double background_frac = (total - static_cast<double>(droplet_pixels)) / total;
    const int counted = std::min(seg.droplet_count, count_max);
    const double count_term = static_cast<double>(count_max - counted) / count_max;
    return 0.5 * background_frac + 0.5 * count_term;
}

ScoreResult score(const DropletImage& image, const SegOpts& opts, int count_max) {
    ScoreResult out;
    out.segmentation = segment(image, opts);
    out.geom_loss = geom_loss(out.segmentation);
    out.yield_loss = yield_loss(out.segmentation, count_max);
    out.loss = 0.5 * (out.geom_loss + out.yield_loss);
    return out;
}

}  // namespace droplet
