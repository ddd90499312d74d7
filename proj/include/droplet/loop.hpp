#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "droplet/devices.hpp"
#include "droplet/types.hpp"
#include "droplet/vision.hpp"

namespace droplet {

struct BatchRecord {
    int batch_index = 0;
    std::vector<ControlVector> points;
    std::vector<double> losses;
    double running_min = 1.0;
    double fit_seconds = 0.0;
    double acquisition_seconds = 0.0;
    double device_seconds = 0.0;
    double scoring_seconds = 0.0;
};

struct LoopReport {
    std::vector<BatchRecord> batches;
    ControlVector best_x;
    double best_loss = 1.0;
};

struct RunOptions {
    int jobs = 1;
    SegOpts seg;
    // When set, the state file is rewritten after every completed batch and
    // device images are kept as batch_<k>/sample_<i>.pgm under this directory.
    std::optional<std::filesystem::path> out_dir;
    bool save_images = true;
};

// Executes the closed loop on `state`: LHS initialization (batch 0) if the
// state is empty, then config.num_batches rounds of fit / propose / run /
// score / append. A partially-filled state resumes at the next batch
// boundary and replays the exact seeded decisions of an uninterrupted run.
LoopReport run_experiment(ExperimentState& state, DeviceAdapter& device,
                          const RunOptions& options = {});

// Best sample so far: lowest loss, earliest index on ties.
std::pair<ControlVector, double> best(const ExperimentState& state);
std::size_t best_index(const ExperimentState& state);

}  // namespace droplet
