#include "droplet/loop.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "droplet/acquisition.hpp"
#include "droplet/gp.hpp"
#include "droplet/lhs.hpp"
#include "droplet/rng.hpp"
#include "droplet/state_io.hpp"

namespace droplet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<ScoreResult> score_batch(const std::vector<DropletImage>& images, const SegOpts& seg,
                                     int count_max, int jobs) {
    std::vector<ScoreResult> results(images.size());
    const int workers = std::max(1, jobs);
    if (workers == 1 || images.size() <= 1) {
        for (std::size_t i = 0; i < images.size(); ++i) {
            results[i] = score(images[i], seg, count_max);
        }
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t t = 0; t < std::min<std::size_t>(workers, images.size()); ++t) {
        threads.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= images.size()) break;
                try {
                    results[i] = score(images[i], seg, count_max);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

// Runs one batch through the device and the scorer and appends the results.
BatchRecord execute_batch(ExperimentState& state, DeviceAdapter& device,
                          const std::vector<ControlVector>& points, int batch_index,
                          const RunOptions& options) {
    BatchRecord record;
    record.batch_index = batch_index;
    record.points = points;

    std::vector<std::uint64_t> seeds(points.size());
    const std::size_t first_global = state.sample_count();
    for (std::size_t i = 0; i < points.size(); ++i) {
        seeds[i] = derive_seed(state.rng_seed(), "device", first_global + i);
    }

    auto t0 = Clock::now();
    std::vector<DropletImage> images;
    try {
        images = device.run_batch(points, batch_index, seeds, options.jobs);
    } catch (const Error& e) {
        throw DeviceFailureError("device '" + device.name() + "' failed on batch " +
                                 std::to_string(batch_index) + ": " + e.what());
    }
    record.device_seconds = seconds_since(t0);

    t0 = Clock::now();
    std::vector<ScoreResult> scores;
    try {
        scores = score_batch(images, options.seg, state.config().count_max, options.jobs);
    } catch (const Error& e) {
        throw VisionFailureError("scoring failed on batch " + std::to_string(batch_index) + ": " +
                                 e.what());
    }
    record.scoring_seconds = seconds_since(t0);

    for (std::size_t i = 0; i < points.size(); ++i) {
        Sample s;
        s.x = points[i];
        s.loss = scores[i].loss;
        s.geom_loss = scores[i].geom_loss;
        s.yield_loss = scores[i].yield_loss;
        s.batch_index = batch_index;
        if (options.out_dir && options.save_images) {
            const auto rel = std::filesystem::path("batch_" + std::to_string(batch_index)) /
                             ("sample_" + std::to_string(i) + ".pgm");
            const auto abs = *options.out_dir / rel;
            std::filesystem::create_directories(abs.parent_path());
            save_pgm(images[i], abs);
            s.image_ref = rel.generic_string();
        }
        state.append_sample(std::move(s));
        record.losses.push_back(scores[i].loss);
    }
    return record;
}

}  // namespace

LoopReport run_experiment(ExperimentState& state, DeviceAdapter& device,
                          const RunOptions& options) {
    const ExperimentConfig& config = state.config();
    config.validate();
    if (!(device.space() == state.space())) {
        throw Error("device parameter space does not match the experiment space");
    }

    const std::size_t init = static_cast<std::size_t>(config.init_count);
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);

    // Resume only at batch boundaries; these are the points the state file
    // is written at, so anything else indicates a foreign or corrupt state.
    int completed_batches = -1;  // -1 = LHS initialization still pending
    const std::size_t have = state.sample_count();
    if (have > 0) {
        if (have < init || (have - init) % batch != 0) {
            throw SchemaMismatchError("state holds " + std::to_string(have) +
                                      " samples, which is not a batch boundary for init_count " +
                                      std::to_string(config.init_count) + " and batch_size " +
                                      std::to_string(config.batch_size));
        }
        completed_batches = static_cast<int>((have - init) / batch);
    }

    LoopReport report;
    auto checkpoint = [&]() {
        if (options.out_dir) {
            std::filesystem::create_directories(*options.out_dir);
            save_state(state, *options.out_dir / "state.json");
        }
    };
    auto record_running_min = [&](BatchRecord& record) {
        double running = 1.0;
        for (const Sample& s : state.samples()) running = std::min(running, s.loss);
        record.running_min = running;
    };

    if (completed_batches < 0) {
        Rng rng = make_rng(state.rng_seed(), "lhs-init");
        const std::vector<ControlVector> points = lhs_sample(state.space(), config.init_count, rng);
        try {
            BatchRecord record = execute_batch(state, device, points, 0, options);
            record_running_min(record);
            report.batches.push_back(std::move(record));
        } catch (...) {
            checkpoint();
            throw;
        }
        checkpoint();
        completed_batches = 0;
    }

    for (int k = completed_batches + 1; k <= config.num_batches; ++k) {
        auto t0 = Clock::now();
        GpFitOptions fit_opts;
        fit_opts.seed = derive_seed(state.rng_seed(), "gp-fit", static_cast<std::uint64_t>(k));
        const GpModel model = GpModel::fit(state.samples(), fit_opts);
        const double fit_seconds = seconds_since(t0);

        t0 = Clock::now();
        const BatchProposal proposal = propose_batch(
            model, config.acquisition, config.lcb_beta, config.batch_size,
            config.penalization_radius, config.candidate_pool_size,
            derive_seed(state.rng_seed(), "acquire", static_cast<std::uint64_t>(k)));
        const double acquisition_seconds = seconds_since(t0);

        try {
            BatchRecord record = execute_batch(state, device, proposal.points, k, options);
            record.fit_seconds = fit_seconds;
            record.acquisition_seconds = acquisition_seconds;
            record_running_min(record);
            report.batches.push_back(std::move(record));
        } catch (...) {
            checkpoint();
            throw;
        }
        checkpoint();
    }

    const auto [x_best, loss_best] = best(state);
    report.best_x = x_best;
    report.best_loss = loss_best;
    return report;
}

std::size_t best_index(const ExperimentState& state) {
    if (state.sample_count() == 0) {
        throw EmptyExperimentError("experiment has no samples");
    }
    std::size_t arg = 0;
    for (std::size_t i = 1; i < state.sample_count(); ++i) {
        if (state.samples()[i].loss < state.samples()[arg].loss) {
            arg = i;
        }
    }
    return arg;
}

std::pair<ControlVector, double> best(const ExperimentState& state) {
    const Sample& s = state.samples()[best_index(state)];
    return {s.x, s.loss};
}

}  // namespace droplet
