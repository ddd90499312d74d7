#include "droplet/types.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace droplet {

ParameterSpace::ParameterSpace(std::vector<ParameterDef> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) {
        throw Error("ParameterSpace needs at least one dimension");
    }
    std::set<std::string> names;
    for (const auto& d : dims_) {
        if (d.name.empty()) {
            throw Error("parameter name must be non-empty");
        }
        if (d.unit.empty()) {
            throw Error("parameter '" + d.name + "' needs a unit string");
        }
        if (!(d.lower < d.upper)) {
            throw Error("parameter '" + d.name + "' needs lower < upper");
        }
        if (!names.insert(d.name).second) {
            throw Error("duplicate parameter name '" + d.name + "'");
        }
    }
}

bool ParameterSpace::operator==(const ParameterSpace& other) const {
    if (dims_.size() != other.dims_.size()) return false;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        const auto& a = dims_[i];
        const auto& b = other.dims_[i];
        if (a.name != b.name || a.unit != b.unit || a.lower != b.lower || a.upper != b.upper) {
            return false;
        }
    }
    return true;
}

bool ControlVector::in_unit_box(double tol) const {
    for (double v : values) {
        if (!(v >= -tol && v <= 1.0 + tol)) return false;
    }
    return true;
}

double distance(const ControlVector& a, const ControlVector& b) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::sqrt(sq);
}

ControlVector normalize(const ParameterSpace& space, const std::vector<double>& physical) {
    if (physical.size() != space.size()) {
        throw OutOfBoundsError("expected " + std::to_string(space.size()) + " values, got " +
                               std::to_string(physical.size()));
    }
    ControlVector x;
    x.values.reserve(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const ParameterDef& d = space.dim(i);
        const double v = physical[i];
        if (v < d.lower || v > d.upper) {
            std::ostringstream os;
            os << "parameter '" << d.name << "' value " << v << " outside [" << d.lower << ", "
               << d.upper << "]";
            throw OutOfBoundsError(os.str());
        }
        x.values.push_back((v - d.lower) / (d.upper - d.lower));
    }
    return x;
}

std::vector<double> denormalize(const ParameterSpace& space, const ControlVector& x) {
    if (x.size() != space.size()) {
        throw OutOfBoundsError("control vector dimension mismatch");
    }
    std::vector<double> physical;
    physical.reserve(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const ParameterDef& d = space.dim(i);
        physical.push_back(d.lower + x[i] * (d.upper - d.lower));
    }
    return physical;
}

std::string to_string(Acquisition a) {
    switch (a) {
        case Acquisition::Ei: return "ei";
        case Acquisition::Mpi: return "mpi";
        case Acquisition::Lcb: return "lcb";
    }
    return "ei";
}

Acquisition acquisition_from_string(const std::string& s) {
    if (s == "ei" || s == "EI") return Acquisition::Ei;
    if (s == "mpi" || s == "MPI") return Acquisition::Mpi;
    if (s == "lcb" || s == "LCB") return Acquisition::Lcb;
    throw ConfigError("unknown acquisition '" + s + "' (expected ei, mpi or lcb)");
}

void ExperimentConfig::validate() const {
    if (init_count < 2) throw ConfigError("init_count must be >= 2");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (num_batches < 0) throw ConfigError("num_batches must be >= 0");
    if (!(lcb_beta > 0.0)) throw ConfigError("lcb_beta must be > 0");
    if (!(feasibility_threshold > 0.0 && feasibility_threshold < 1.0)) {
        throw ConfigError("feasibility_threshold must lie in (0, 1)");
    }
    if (count_max < 1) throw InvalidCountMaxError("count_max must be >= 1");
    if (!(penalization_radius > 0.0)) throw ConfigError("penalization_radius must be > 0");
    if (candidate_pool_size < 1) throw ConfigError("candidate_pool_size must be >= 1");
}

void ExperimentState::append_sample(Sample s) {
    if (!s.x.in_unit_box(1e-12) || s.x.size() != space_.size()) {
        throw Error("sample x must lie in the normalized box of the experiment space");
    }
    if (!samples_.empty() && s.batch_index < samples_.back().batch_index) {
        throw Error("batch_index must be non-decreasing");
    }
    if (s.batch_index < 0) {
        throw Error("batch_index must be >= 0");
    }
    const double mean = 0.5 * (s.geom_loss + s.yield_loss);
    if (std::abs(s.loss - mean) > 1e-12) {
        throw Error("sample loss must equal mean(geom_loss, yield_loss)");
    }
    if (s.loss < 0.0 || s.loss > 1.0) {
        throw Error("sample loss must lie in [0, 1]");
    }
    samples_.push_back(std::move(s));
}

}  // namespace droplet
