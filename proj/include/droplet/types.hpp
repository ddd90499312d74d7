#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "droplet/errors.hpp"

namespace droplet {

// One physical control parameter. Units are display-only; all math runs on
// normalized coordinates.
struct ParameterDef {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    std::string unit;

    // Column header used in operator-facing CSV files, e.g. "pressure_MPa".
    std::string column_label() const { return name + "_" + unit; }
};

// Bounded box of N control parameters; the normalization map onto [0,1]^N
// is bijective on the box.
class ParameterSpace {
public:
    ParameterSpace() = default;
    explicit ParameterSpace(std::vector<ParameterDef> dims);

    std::size_t size() const { return dims_.size(); }
    const ParameterDef& dim(std::size_t i) const { return dims_.at(i); }
    const std::vector<ParameterDef>& dims() const { return dims_; }

    bool operator==(const ParameterSpace& other) const;

private:
    std::vector<ParameterDef> dims_;
};

// A point in normalized control space; every component lies in [0,1].
struct ControlVector {
    std::vector<double> values;

    ControlVector() = default;
    explicit ControlVector(std::vector<double> v) : values(std::move(v)) {}

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    bool operator==(const ControlVector& other) const { return values == other.values; }

    bool in_unit_box(double tol = 0.0) const;
};

double distance(const ControlVector& a, const ControlVector& b);

ControlVector normalize(const ParameterSpace& space, const std::vector<double>& physical);
std::vector<double> denormalize(const ParameterSpace& space, const ControlVector& x);

enum class Acquisition { Ei, Mpi, Lcb };

std::string to_string(Acquisition a);
Acquisition acquisition_from_string(const std::string& s);

// A scored experiment point. loss is the mean of the two components.
struct Sample {
    ControlVector x;
    double loss = 0.0;
    double geom_loss = 0.0;
    double yield_loss = 0.0;
    int batch_index = 0;  // 0 = LHS initialization
    std::optional<std::string> image_ref;
};

struct ExperimentConfig {
    int init_count = 20;
    int batch_size = 10;
    int num_batches = 4;
    Acquisition acquisition = Acquisition::Ei;
    double lcb_beta = 2.0;
    double feasibility_threshold = 0.75;
    int count_max = 50;
    double penalization_radius = 0.1;
    int candidate_pool_size = 4096;

    void validate() const;
};

// Growing history of one experiment. Samples are append-only with
// non-decreasing batch indices; the mutation path is owned by the loop.
class ExperimentState {
public:
    ExperimentState() = default;
    ExperimentState(ParameterSpace space, ExperimentConfig config, std::uint64_t rng_seed)
        : space_(std::move(space)), config_(config), rng_seed_(rng_seed) {
        config_.validate();
    }

    const ParameterSpace& space() const { return space_; }
    const ExperimentConfig& config() const { return config_; }
    std::uint64_t rng_seed() const { return rng_seed_; }
    const std::vector<Sample>& samples() const { return samples_; }
    std::size_t sample_count() const { return samples_.size(); }

    // Enforces batch monotonicity and the loss = mean(geom, yield) invariant.
    void append_sample(Sample s);

private:
    ParameterSpace space_;
    ExperimentConfig config_;
    std::uint64_t rng_seed_ = 0;
    std::vector<Sample> samples_;
};

}  // namespace droplet
