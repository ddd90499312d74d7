#include "droplet/state_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace droplet {

namespace {

constexpr int kSchemaVersion = 1;

void append_escaped(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw SchemaMismatchError(std::string("state file missing field '") + key + "'");
    }
    return *it;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string serialize_state(const ExperimentState& state) {
    std::string out;
    out.reserve(4096 + state.sample_count() * 256);
    out += "{\n";
    out += "  \"schema_version\": " + std::to_string(kSchemaVersion) + ",\n";
    out += "  \"rng_seed\": " + std::to_string(state.rng_seed()) + ",\n";

    out += "  \"space\": {\"dims\": [\n";
    const auto& dims = state.space().dims();
    for (std::size_t i = 0; i < dims.size(); ++i) {
        out += "    {\"name\": ";
        append_escaped(out, dims[i].name);
        out += ", \"unit\": ";
        append_escaped(out, dims[i].unit);
        out += ", \"lower\": " + format_double(dims[i].lower);
        out += ", \"upper\": " + format_double(dims[i].upper) + "}";
        out += (i + 1 < dims.size()) ? ",\n" : "\n";
    }
    out += "  ]},\n";

    const auto& c = state.config();
    out += "  \"config\": {\n";
    out += "    \"init_count\": " + std::to_string(c.init_count) + ",\n";
    out += "    \"batch_size\": " + std::to_string(c.batch_size) + ",\n";
    out += "    \"num_batches\": " + std::to_string(c.num_batches) + ",\n";
    out += "    \"acquisition\": \"" + to_string(c.acquisition) + "\",\n";
    out += "    \"lcb_beta\": " + format_double(c.lcb_beta) + ",\n";
    out += "    \"feasibility_threshold\": " + format_double(c.feasibility_threshold) + ",\n";
    out += "    \"count_max\": " + std::to_string(c.count_max) + ",\n";
    out += "    \"penalization_radius\": " + format_double(c.penalization_radius) + ",\n";
    out += "    \"candidate_pool_size\": " + std::to_string(c.candidate_pool_size) + "\n";
    out += "  },\n";

    out += "  \"samples\": [";
    const auto& samples = state.samples();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        out += (i == 0) ? "\n" : ",\n";
        out += "    {\"x\": [";
        for (std::size_t d = 0; d < s.x.size(); ++d) {
            if (d > 0) out += ", ";
            out += format_double(s.x[d]);
        }
        out += "], \"loss\": " + format_double(s.loss);
        out += ", \"geom_loss\": " + format_double(s.geom_loss);
        out += ", \"yield_loss\": " + format_double(s.yield_loss);
        out += ", \"batch_index\": " + std::to_string(s.batch_index);
        if (s.image_ref) {
            out += ", \"image_ref\": ";
            append_escaped(out, *s.image_ref);
        }
        out += "}";
    }
    out += samples.empty() ? "]\n" : "\n  ]\n";
    out += "}\n";
    return out;
}

ExperimentState deserialize_state(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatchError(std::string("state file is not valid JSON: ") + e.what());
    }

    try {
        const int version = require(j, "schema_version").get<int>();
        if (version != kSchemaVersion) {
            throw SchemaMismatchError("unsupported state schema version " +
                                      std::to_string(version));
        }

        std::vector<ParameterDef> dims;
        for (const auto& dj : require(require(j, "space"), "dims")) {
            ParameterDef d;
            d.name = require(dj, "name").get<std::string>();
            d.unit = require(dj, "unit").get<std::string>();
            d.lower = require(dj, "lower").get<double>();
            d.upper = require(dj, "upper").get<double>();
            dims.push_back(std::move(d));
        }
        ParameterSpace space(std::move(dims));

        const auto& cj = require(j, "config");
        ExperimentConfig config;
        config.init_count = require(cj, "init_count").get<int>();
        config.batch_size = require(cj, "batch_size").get<int>();
        config.num_batches = require(cj, "num_batches").get<int>();
        config.acquisition = acquisition_from_string(require(cj, "acquisition").get<std::string>());
        config.lcb_beta = require(cj, "lcb_beta").get<double>();
        config.feasibility_threshold = require(cj, "feasibility_threshold").get<double>();
        config.count_max = require(cj, "count_max").get<int>();
        config.penalization_radius = require(cj, "penalization_radius").get<double>();
        config.candidate_pool_size = require(cj, "candidate_pool_size").get<int>();

        ExperimentState state(std::move(space), config,
                              require(j, "rng_seed").get<std::uint64_t>());

        for (const auto& sj : require(j, "samples")) {
            Sample s;
            s.x.values = require(sj, "x").get<std::vector<double>>();
            s.loss = require(sj, "loss").get<double>();
            s.geom_loss = require(sj, "geom_loss").get<double>();
            s.yield_loss = require(sj, "yield_loss").get<double>();
            s.batch_index = require(sj, "batch_index").get<int>();
            if (sj.contains("image_ref")) {
                s.image_ref = sj["image_ref"].get<std::string>();
            }
            state.append_sample(std::move(s));
        }
        return state;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatchError(std::string("state file field has wrong type: ") + e.what());
    }
}

void save_state(const ExperimentState& state, const std::filesystem::path& path) {
    const std::string body = serialize_state(state);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) {
        throw IoError("failed to write state to '" + path.string() + "'");
    }
}

ExperimentState load_state(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_state(buf.str());
}

}  // namespace droplet
