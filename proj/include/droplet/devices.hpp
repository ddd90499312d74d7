#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "droplet/image.hpp"
#include "droplet/types.hpp"

namespace droplet {

// Maps a batch of control vectors to droplet images. Simulators are pure in
// (x, seed); the file adapter blocks until an operator supplies the images.
class DeviceAdapter {
public:
    virtual ~DeviceAdapter() = default;
    virtual const ParameterSpace& space() const = 0;
    virtual std::string name() const = 0;

    // Images are returned in suggestion order. seeds[i] drives sample i's
    // stochastic rendering; hardware-backed adapters ignore it.
    virtual std::vector<DropletImage> run_batch(const std::vector<ControlVector>& xs,
                                                int batch_index,
                                                const std::vector<std::uint64_t>& seeds,
                                                int jobs) = 0;
};

ParameterSpace inkjet_space();
ParameterSpace microfluidic_space();

// Deposition-plate simulator with three regimes driven by a
// pressure-independent score 0.6*(1 - frequency) + 0.4*speed:
// above 0.55 rows of near-circular droplets, 0.35..0.55 elongated merging
// blobs, below 0.35 continuous streaks.
class InkjetSimulator : public DeviceAdapter {
public:
    InkjetSimulator() : space_(inkjet_space()) {}

    const ParameterSpace& space() const override { return space_; }
    std::string name() const override { return "inkjet-sim"; }
    std::vector<DropletImage> run_batch(const std::vector<ControlVector>& xs, int batch_index,
                                        const std::vector<std::uint64_t>& seeds,
                                        int jobs) override;

    DropletImage render(const ControlVector& x, std::uint64_t seed) const;
    static double regime_score(const ControlVector& x);

private:
    ParameterSpace space_;
};

// Channel simulator: droplets form in a linear pressure band
// |water - 0.65*oil| < 0.18 with oil > 0.1; droplet size shrinks as oil
// pressure grows. Above the band the water jets as a continuous stream,
// below it the flow starves.
class MicrofluidicSimulator : public DeviceAdapter {
public:
    MicrofluidicSimulator() : space_(microfluidic_space()) {}

    const ParameterSpace& space() const override { return space_; }
    std::string name() const override { return "microfluidic-sim"; }
    std::vector<DropletImage> run_batch(const std::vector<ControlVector>& xs, int batch_index,
                                        const std::vector<std::uint64_t>& seeds,
                                        int jobs) override;

    DropletImage render(const ControlVector& x, std::uint64_t seed) const;
    static double band_offset(const ControlVector& x);

private:
    ParameterSpace space_;
};

struct FileAdapterOptions {
    double timeout_seconds = 86400.0;  // 24 h
    double poll_seconds = 1.0;
};

// Human-in-the-loop batch exchange: writes batch_<k>_suggestions.csv with
// physical-unit rows, then polls for batch_<k>/sample_<i>.png (or .pgm)
// until every image arrives or the timeout passes. One instance per run
// directory, guarded by run.lock.
class FileAdapter : public DeviceAdapter {
public:
    FileAdapter(std::filesystem::path run_dir, ParameterSpace space,
                FileAdapterOptions options = {});
    ~FileAdapter() override;

    FileAdapter(const FileAdapter&) = delete;
    FileAdapter& operator=(const FileAdapter&) = delete;

    const ParameterSpace& space() const override { return space_; }
    std::string name() const override { return "files"; }
    std::vector<DropletImage> run_batch(const std::vector<ControlVector>& xs, int batch_index,
                                        const std::vector<std::uint64_t>& seeds,
                                        int jobs) override;

    std::filesystem::path suggestion_path(int batch_index) const;

private:
    std::filesystem::path run_dir_;
    ParameterSpace space_;
    FileAdapterOptions options_;
};

struct FluidProperties {
    double density = 0.0;           // kg/m^3
    double viscosity = 0.0;         // Pa.s
    double surface_tension = 0.0;   // N/m
    double jet_diameter = 0.0;      // m
    double droplet_diameter = 0.0;  // m
    double velocity = 0.0;          // m/s
    double shear_rate = 0.0;        // 1/s
    double gravity = 9.81;          // m/s^2
};

struct DimensionlessNumbers {
    double ohnesorge = 0.0;  // mu / sqrt(rho * sigma * d)
    double weber = 0.0;      // rho * v^2 * a / sigma
    double reynolds = 0.0;   // rho * v * d / mu
    double capillary = 0.0;  // mu * shear_rate * a / sigma
    double bond = 0.0;       // rho * g * d^2 / sigma
};

DimensionlessNumbers dimensionless(const FluidProperties& props);

}  // namespace droplet
