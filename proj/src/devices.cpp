#include "droplet/devices.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "droplet/rng.hpp"

namespace droplet {

namespace {

// Float canvas with coverage-based anti-aliased compositing.
struct Canvas {
    int width;
    int height;
    std::vector<float> data;

    Canvas(int w, int h, float background) : width(w), height(h), data(size_t(w) * h, background) {}

    void composite(int r, int c, float value, float coverage) {
        float& px = data[static_cast<std::size_t>(r) * width + c];
        px = px * (1.0f - coverage) + value * coverage;
    }

    DropletImage finish(Rng& rng, double noise_sigma) const {
        DropletImage img(width, height);
        std::normal_distribution<double> noise(0.0, noise_sigma);
        for (std::size_t i = 0; i < img.pixel_count(); ++i) {
            const double v = data[i] + noise(rng);
            img.pixels[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
        return img;
    }
};

// Rotated ellipse, coverage approximated from the scaled implicit function.
void draw_ellipse(Canvas& canvas, double cy, double cx, double ry, double rx, double angle,
                  float value) {
    const double cos_a = std::cos(angle);
    const double sin_a = std::sin(angle);
    const double rmax = std::max(rx, ry) + 2.0;
    const int r0 = std::max(0, static_cast<int>(std::floor(cy - rmax)));
    const int r1 = std::min(canvas.height - 1, static_cast<int>(std::ceil(cy + rmax)));
    const int c0 = std::max(0, static_cast<int>(std::floor(cx - rmax)));
    const int c1 = std::min(canvas.width - 1, static_cast<int>(std::ceil(cx + rmax)));
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            const double dy = r - cy;
            const double dx = c - cx;
            const double u = cos_a * dx + sin_a * dy;
            const double v = -sin_a * dx + cos_a * dy;
            const double q = std::sqrt((u * u) / (rx * rx) + (v * v) / (ry * ry));
            if (q == 0.0) {
                canvas.composite(r, c, value, 1.0f);
                continue;
            }
            const double grad = std::sqrt((u * u) / (rx * rx * rx * rx) +
                                          (v * v) / (ry * ry * ry * ry)) /
                                q;
            const double dist = (q - 1.0) / std::max(grad, 1e-9);
            const double coverage = std::clamp(0.5 - dist, 0.0, 1.0);
            if (coverage > 0.0) {
                canvas.composite(r, c, value, static_cast<float>(coverage));
            }
        }
    }
}

// Capsule: segment (ay,ax)-(by,bx) inflated by radius.
void draw_capsule(Canvas& canvas, double ay, double ax, double by, double bx, double radius,
                  float value) {
    const double pad = radius + 2.0;
    const int r0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - pad)));
    const int r1 = std::min(canvas.height - 1, static_cast<int>(std::ceil(std::max(ay, by) + pad)));
    const int c0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - pad)));
    const int c1 = std::min(canvas.width - 1, static_cast<int>(std::ceil(std::max(ax, bx) + pad)));
    const double vy = by - ay;
    const double vx = bx - ax;
    const double len2 = vy * vy + vx * vx;
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            const double py = r - ay;
            const double px = c - ax;
            double t = len2 > 0.0 ? std::clamp((py * vy + px * vx) / len2, 0.0, 1.0) : 0.0;
            const double dy = py - t * vy;
            const double dx = px - t * vx;
            const double dist = std::sqrt(dy * dy + dx * dx) - radius;
            const double coverage = std::clamp(0.5 - dist, 0.0, 1.0);
            if (coverage > 0.0) {
                canvas.composite(r, c, value, static_cast<float>(coverage));
            }
        }
    }
}

std::vector<DropletImage> render_parallel(const std::vector<ControlVector>& xs,
                                          const std::vector<std::uint64_t>& seeds, int jobs,
                                          const auto& render_one) {
    std::vector<DropletImage> images(xs.size());
    const int workers = std::max(1, jobs);
    if (workers == 1 || xs.size() <= 1) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            images[i] = render_one(xs[i], seeds[i]);
        }
        return images;
    }
    std::vector<std::thread> threads;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < std::min<std::size_t>(workers, xs.size()); ++t) {
        threads.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= xs.size()) break;
                images[i] = render_one(xs[i], seeds[i]);
            }
        });
    }
    for (auto& th : threads) th.join();
    return images;
}

}  // namespace

ParameterSpace inkjet_space() {
    return ParameterSpace({{"pressure", 0.03, 0.15, "MPa"},
                           {"frequency", 1.0, 600.0, "Hz"},
                           {"speed", 10.0, 360.0, "mm_s"}});
}

ParameterSpace microfluidic_space() {
    return ParameterSpace({{"water_pressure", 0.0, 2000.0, "mbar"},
                           {"oil_pressure", 0.0, 2000.0, "mbar"}});
}

double InkjetSimulator::regime_score(const ControlVector& x) {
    return 0.6 * (1.0 - x[1]) + 0.4 * x[2];
}

DropletImage InkjetSimulator::render(const ControlVector& x, std::uint64_t seed) const {
    if (x.size() != 3 || !x.in_unit_box(1e-9)) {
        throw DeviceFailureError("inkjet simulator expects a 3-d point in the unit box");
    }
    constexpr int kSize = 512;
    const double rho = regime_score(x);
    const float background = 225.0f;
    const float ink = static_cast<float>(50.0 + 30.0 * x[0]);  // pressure only tints the dye

    Canvas canvas(kSize, kSize, background);
    Rng rng = make_rng(seed, "inkjet-render");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    if (rho > 0.55) {
        // Droplet regime: grid of deposited drops, rounder and denser as the
        // regime score climbs.
        const double t = (rho - 0.55) / 0.45;
        const int count = 18 + static_cast<int>(std::lround(30.0 * t));
        const double base_radius = 9.0 + 3.0 * t;
        const double ecc_sigma = 0.30 * (1.0 - t);
        constexpr int kGrid = 7;
        const double cell = static_cast<double>(kSize) / kGrid;
        for (int i = 0; i < count && i < kGrid * kGrid; ++i) {
            const int gr = i / kGrid;
            const int gc = i % kGrid;
            const double cy = cell * (gr + 0.5) + 2.0 * gauss(rng);
            const double cx = cell * (gc + 0.5) + 2.0 * gauss(rng);
            const double radius = base_radius * (1.0 + 0.08 * gauss(rng));
            const double aspect = std::min(2.0, 1.0 + std::abs(gauss(rng)) * ecc_sigma);
            const double angle = unit(rng) * M_PI;
            draw_ellipse(canvas, cy, cx, radius / std::sqrt(aspect), radius * std::sqrt(aspect),
                         angle, ink);
        }
    } else if (rho >= 0.35) {
        // Blob regime: rows of partially merged elongated beads.
        const double t = (rho - 0.35) / 0.20;  // 1 = nearly droplets, 0 = nearly streaks
        constexpr int kRows = 6;
        for (int row = 0; row < kRows; ++row) {
            const double y = 55.0 + row * 80.0 + 3.0 * gauss(rng);
            double xpos = 8.0 + 20.0 * unit(rng);
            while (xpos < kSize - 10.0) {
                const double len = 25.0 + (1.0 - t) * 60.0 + 25.0 * unit(rng);
                const double thickness = 6.0 + 2.0 * unit(rng);
                const double y_jitter = 2.5 * gauss(rng);
                draw_capsule(canvas, y + y_jitter, xpos, y + y_jitter + 1.5 * gauss(rng),
                             std::min(xpos + len, double(kSize - 6)), thickness, ink);
                const double gap = 2.0 + 22.0 * t * unit(rng);
                xpos += len + gap;
            }
        }
    } else {
        // Streak regime: the jet never breaks up; continuous lines span the plate.
        constexpr int kRows = 7;
        for (int row = 0; row < kRows; ++row) {
            const double y = 45.0 + row * 68.0 + 3.0 * gauss(rng);
            const double thickness = 5.0 + 3.0 * unit(rng);
            const double slope = 2.0 * gauss(rng);
            draw_capsule(canvas, y, -8.0, y + slope, kSize + 8.0, thickness, ink);
        }
    }
    return canvas.finish(rng, 4.0);
}

std::vector<DropletImage> InkjetSimulator::run_batch(const std::vector<ControlVector>& xs,
                                                     int /*batch_index*/,
                                                     const std::vector<std::uint64_t>& seeds,
                                                     int jobs) {
    return render_parallel(xs, seeds, jobs,
                           [this](const ControlVector& x, std::uint64_t s) { return render(x, s); });
}

double MicrofluidicSimulator::band_offset(const ControlVector& x) {
    return x[0] - 0.65 * x[1];
}

DropletImage MicrofluidicSimulator::render(const ControlVector& x, std::uint64_t seed) const {
    if (x.size() != 2 || !x.in_unit_box(1e-9)) {
        throw DeviceFailureError("microfluidic simulator expects a 2-d point in the unit box");
    }
    constexpr int kWidth = 512;
    constexpr int kHeight = 256;
    const float background = 35.0f;
    const float water = 215.0f;

    Canvas canvas(kWidth, kHeight, background);
    Rng rng = make_rng(seed, "micro-render");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double offset = band_offset(x);
    const bool in_band = std::abs(offset) < 0.18 && x[1] > 0.1;

    if (x[0] <= 0.02) {
        // No water drive: empty channel.
    } else if (in_band) {
        // Dripping band: a train of drops, smaller and denser at high oil
        // pressure, deformed near the band edges.
        const double edge = std::abs(offset) / 0.18;
        const double radius = 19.0 - 8.0 * x[1];
        const double spacing = 2.2 * radius * (1.0 + 0.6 * edge);
        const bool double_row = x[1] > 0.55 && edge < 0.5;
        const int per_row = std::max(1, static_cast<int>((kWidth - 32) / spacing));
        const int rows = double_row ? 2 : 1;
        for (int row = 0; row < rows; ++row) {
            const double y_base = kHeight / 2.0 + (rows == 2 ? (row == 0 ? -26.0 : 26.0) : 0.0);
            for (int i = 0; i < per_row; ++i) {
                const double cx = 16.0 + spacing * (i + 0.5) + (1.0 + 3.0 * edge) * gauss(rng);
                const double cy = y_base + (1.0 + 4.0 * edge) * gauss(rng);
                const double r = radius * (1.0 + 0.05 * gauss(rng));
                const double aspect =
                    std::min(2.0, 1.0 + std::abs(gauss(rng)) * (0.05 + 0.5 * edge * edge));
                const double angle = unit(rng) * M_PI;
                draw_ellipse(canvas, cy, cx, r / std::sqrt(aspect), r * std::sqrt(aspect), angle,
                             water);
            }
        }
    } else if (offset >= 0.18) {
        // Water pressure far above the band: unbroken jet through the channel.
        const double thickness = 14.0 + 50.0 * std::min(1.0, offset);
        const double y = kHeight / 2.0 + 6.0 * gauss(rng);
        draw_capsule(canvas, y, -8.0, y + 4.0 * gauss(rng), kWidth + 8.0, thickness, water);
    } else {
        // Oil chokes the water line: at most a few starved specks.
        const int specks = static_cast<int>(3.0 * unit(rng) * std::clamp(x[0] * 4.0, 0.0, 1.0));
        for (int i = 0; i < specks; ++i) {
            draw_ellipse(canvas, 40.0 + unit(rng) * (kHeight - 80.0),
                         30.0 + unit(rng) * (kWidth - 60.0), 2.2, 2.2, 0.0, water);
        }
    }
    return canvas.finish(rng, 4.0);
}

std::vector<DropletImage> MicrofluidicSimulator::run_batch(const std::vector<ControlVector>& xs,
                                                           int /*batch_index*/,
                                                           const std::vector<std::uint64_t>& seeds,
                                                           int jobs) {
    return render_parallel(xs, seeds, jobs,
                           [this](const ControlVector& x, std::uint64_t s) { return render(x, s); });
}

DimensionlessNumbers dimensionless(const FluidProperties& props) {
    const auto check = [](double v, const char* field) {
        if (!(v > 0.0)) {
            throw NonPositiveInputError(std::string("fluid property '") + field +
                                        "' must be positive");
        }
    };
    check(props.density, "density");
    check(props.viscosity, "viscosity");
    check(props.surface_tension, "surface_tension");
    check(props.jet_diameter, "jet_diameter");
    check(props.droplet_diameter, "droplet_diameter");
    check(props.velocity, "velocity");
    check(props.shear_rate, "shear_rate");
    check(props.gravity, "gravity");

    DimensionlessNumbers n;
    n.ohnesorge = props.viscosity /
                  std::sqrt(props.density * props.surface_tension * props.jet_diameter);
    n.weber = props.density * props.velocity * props.velocity * props.droplet_diameter /
              props.surface_tension;
    n.reynolds = props.density * props.velocity * props.jet_diameter / props.viscosity;
    n.capillary = props.viscosity * props.shear_rate * props.droplet_diameter /
                  props.surface_tension;
    n.bond = props.density * props.gravity * props.jet_diameter * props.jet_diameter /
             props.surface_tension;
    return n;
}

}  // namespace droplet
