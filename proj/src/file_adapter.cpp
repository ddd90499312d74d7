#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "droplet/devices.hpp"
#include "droplet/state_io.hpp"

#ifdef _WIN32
#include <process.h>
#else
#include <unistd.h>
#endif

namespace droplet {

namespace {

std::string format_physical(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

FileAdapter::FileAdapter(std::filesystem::path run_dir, ParameterSpace space,
                         FileAdapterOptions options)
    : run_dir_(std::move(run_dir)), space_(std::move(space)), options_(options) {
    std::error_code ec;
    std::filesystem::create_directories(run_dir_, ec);
    if (ec) {
        throw IoError("cannot create run directory '" + run_dir_.string() + "': " + ec.message());
    }
    const auto lock = run_dir_ / "run.lock";
    if (std::filesystem::exists(lock)) {
        throw Error("run directory '" + run_dir_.string() +
                    "' is already in use (run.lock present)");
    }
    std::ofstream out(lock);
    if (!out) {
        throw IoError("cannot create lockfile '" + lock.string() + "'");
    }
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
#ifdef _WIN32
    out << _getpid() << "\n" << now << "\n";
#else
    out << ::getpid() << "\n" << now << "\n";
#endif
}

FileAdapter::~FileAdapter() {
    std::error_code ec;
    std::filesystem::remove(run_dir_ / "run.lock", ec);
}

std::filesystem::path FileAdapter::suggestion_path(int batch_index) const {
    return run_dir_ / ("batch_" + std::to_string(batch_index) + "_suggestions.csv");
}

std::vector<DropletImage> FileAdapter::run_batch(const std::vector<ControlVector>& xs,
                                                 int batch_index,
                                                 const std::vector<std::uint64_t>& /*seeds*/,
                                                 int /*jobs*/) {
    // Suggestions in physical units, one row per sample.
    {
        std::ofstream csv(suggestion_path(batch_index), std::ios::binary | std::ios::trunc);
        if (!csv) {
            throw IoError("cannot write '" + suggestion_path(batch_index).string() + "'");
        }
        csv << "sample_id";
        for (const auto& dim : space_.dims()) {
            csv << "," << dim.column_label();
        }
        csv << "\n";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            csv << i;
            for (double v : denormalize(space_, xs[i])) {
                csv << "," << format_physical(v);
            }
            csv << "\n";
        }
    }

    const auto batch_dir = run_dir_ / ("batch_" + std::to_string(batch_index));
    auto image_path = [&batch_dir](std::size_t i) -> std::filesystem::path {
        const auto png = batch_dir / ("sample_" + std::to_string(i) + ".png");
        if (std::filesystem::exists(png)) return png;
        const auto pgm = batch_dir / ("sample_" + std::to_string(i) + ".pgm");
        if (std::filesystem::exists(pgm)) return pgm;
        return {};
    };

    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(options_.timeout_seconds));
    std::string load_failure;
    while (true) {
        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (image_path(i).empty()) missing.push_back(i);
        }
        if (missing.empty()) {
            // A file may still be mid-write; re-poll on load failure.
            try {
                std::vector<DropletImage> images;
                images.reserve(xs.size());
                for (std::size_t i = 0; i < xs.size(); ++i) {
                    images.push_back(load_image(image_path(i)));
                }
                return images;
            } catch (const BadImageError& e) {
                load_failure = e.what();
            }
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            if (!missing.empty()) {
                std::ostringstream os;
                os << "timed out waiting for batch " << batch_index << " images; missing sample ids:";
                for (std::size_t id : missing) os << " " << id;
                throw MissingImageError(os.str());
            }
            throw BadImageError(load_failure);
        }
        std::this_thread::sleep_for(std::chrono::duration<double>(options_.poll_seconds));
    }
}

}  // namespace droplet
