// Copyright 2026 The cvsense Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "cvsense/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cvsense/error.hpp"
#include "json_util.hpp"

namespace cvsense {

namespace {

using Json = nlohmann::ordered_json;

Json number(double v) {
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

double read_number(const Json &j, const char *key, double if_null) {
    const auto it = j.find(key);
    if (it == j.end()) {
        fail(ErrorCode::Format, std::string("trace record lacks field '") + key + "'");
    }
    if (it->is_null()) {
        return if_null;
    }
    if (!it->is_number()) {
        fail(ErrorCode::Format, std::string("trace field '") + key + "' is not a number");
    }
    return it->get<double>();
}

template <typename T>
T read_value(const Json &j, const char *key) {
    const auto it = j.find(key);
    if (it == j.end()) {
        fail(ErrorCode::Format, std::string("trace record lacks field '") + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception &) {
        fail(ErrorCode::Format, std::string("trace field '") + key + "' has the wrong type");
    }
}

void check_version(const Json &j, std::size_t line) {
    const auto it = j.find("schema_version");
    if (it == j.end() || !it->is_string()) {
        fail(ErrorCode::Format, "line " + std::to_string(line) + ": missing schema_version");
    }
    const std::string v = it->get<std::string>();
    int major = -1;
    int minor = -1;
    char tail = 0;
    if (std::sscanf(v.c_str(), "%d.%d%c", &major, &minor, &tail) != 2) {
        fail(ErrorCode::Format, "line " + std::to_string(line) + ": malformed schema_version '" + v + "'");
    }
    if (major != kTraceSchemaMajor) {
        fail(ErrorCode::Format, "line " + std::to_string(line) + ": unsupported schema version " + v);
    }
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

bool same(double a, double b) {
    return a == b || (std::isnan(a) && std::isnan(b));
}

} // namespace

nlohmann::ordered_json bench_to_json(const BenchConfig &b) {
    Json j;
    j["r"] = b.r;
    j["alpha"] = b.alpha;
    j["eta"] = b.eta;
    j["n_bar"] = b.n_bar;
    j["phase_noise_rms"] = b.phase_noise_rms;
    j["phase_noise_mean"] = b.phase_noise_mean;
    j["displacement_phase_noise_rms"] = b.displacement_phase_noise_rms;
    j["per_sample_noise"] = b.per_sample_noise;
    j["encoded_phase"] = b.encoded_phase;
    j["samples_per_measurement"] = b.samples_per_measurement;
    j["rng_seed"] = b.rng_seed;
    return j;
}

BenchConfig bench_from_json(const nlohmann::ordered_json &j, const BenchConfig &defaults) {
    if (!j.is_object()) {
        fail(ErrorCode::Config, "bench must be an object");
    }
    BenchConfig b = defaults;
    for (const auto &[key, value] : j.items()) {
        try {
            if (key == "r") {
                b.r = value.get<double>();
            } else if (key == "alpha") {
                b.alpha = value.get<double>();
            } else if (key == "eta") {
                b.eta = value.get<double>();
            } else if (key == "n_bar") {
                b.n_bar = value.get<double>();
            } else if (key == "phase_noise_rms") {
                b.phase_noise_rms = value.get<double>();
            } else if (key == "phase_noise_mean") {
                b.phase_noise_mean = value.get<double>();
            } else if (key == "displacement_phase_noise_rms") {
                b.displacement_phase_noise_rms = value.get<double>();
            } else if (key == "per_sample_noise") {
                b.per_sample_noise = value.get<bool>();
            } else if (key == "encoded_phase") {
                b.encoded_phase = value.get<double>();
            } else if (key == "samples_per_measurement") {
                b.samples_per_measurement = value.get<long long>();
            } else if (key == "rng_seed") {
                b.rng_seed = value.get<std::uint64_t>();
            } else {
                fail(ErrorCode::Config, "unknown bench field '" + key + "'");
            }
        } catch (const nlohmann::json::exception &) {
            fail(ErrorCode::Config, "bench field '" + key + "' has the wrong type");
        }
    }
    return b;
}

nlohmann::ordered_json summary_to_json(const TraceSummary &s) {
    Json j;
    j["optimizer"] = s.optimizer;
    j["epochs"] = s.epochs;
    j["best_cost"] = number(s.best_cost);
    j["best_epoch"] = s.best_epoch;
    j["best_true_cost"] = number(s.best_true_cost);
    j["best_seen_cost"] = number(s.best_seen_cost);
    j["final_phi_hd"] = s.final_settings.phi_hd;
    j["final_phi_alpha"] = s.final_settings.phi_alpha;
    j["total_measurements"] = s.total_measurements;
    j["shot_noise_limit"] = s.shot_noise_limit;
    j["below_shot_noise_limit"] = s.below_shot_noise_limit;
    Json kicks = Json::array();
    for (const auto &k : s.kicks) {
        Json kj;
        kj["kick_epoch"] = k.kick_epoch;
        kj["reference_cost"] = number(k.reference_cost);
        kj["recovered_epoch"] = k.recovered() ? Json(k.recovered_epoch) : Json(nullptr);
        kicks.push_back(std::move(kj));
    }
    j["kicks"] = std::move(kicks);
    return j;
}

void write_trace_header(std::ostream &os, const TraceHeader &h) {
    Json j;
    j["schema_version"] = kTraceSchemaVersion;
    j["type"] = "header";
    j["optimizer"] = h.optimizer;
    j["seed"] = h.seed;
    j["bench"] = bench_to_json(h.bench);
    j["warm_start_size"] = h.warm_start_size;
    j["warm_start_from_gd"] = h.warm_start_from_gd;
    j["warm_start_random"] = h.warm_start_random;
    j["warm_start_measurements"] = h.warm_start_measurements;
    j["warm_start_best_cost"] = number(h.warm_start_best_cost);
    os << j.dump() << '\n';
}

void write_trace_record(std::ostream &os, const EpochRecord &r) {
    Json j;
    j["schema_version"] = kTraceSchemaVersion;
    j["type"] = "epoch";
    j["epoch"] = r.epoch;
    j["phi_hd"] = r.phi_hd;
    j["phi_alpha"] = r.phi_alpha;
    j["cost"] = number(r.cost);
    j["fisher"] = number(r.fisher);
    j["mu"] = number(r.mu);
    j["var"] = number(r.var);
    j["dmu_dphi"] = number(r.dmu_dphi);
    j["dvar_dphi"] = number(r.dvar_dphi);
    j["measurements"] = r.measurements;
    j["cumulative_measurements"] = r.cumulative_measurements;
    j["dC_dphi_hd"] = number(r.dC_dphi_hd);
    j["dC_dphi_alpha"] = number(r.dC_dphi_alpha);
    j["grad_norm"] = number(r.grad_norm);
    j["ei_max"] = number(r.ei_max);
    j["best_cost"] = number(r.best_cost);
    j["lengthscale"] = number(r.lengthscale);
    j["output_scale"] = number(r.output_scale);
    j["noise"] = number(r.noise);
    j["true_cost"] = number(r.true_cost);
    j["event"] = r.event;
    os << j.dump() << '\n';
}

void write_trace(std::ostream &os, const TraceFile &t) {
    write_trace_header(os, t.header);
    for (const auto &r : t.trace.records) {
        write_trace_record(os, r);
    }
}

TraceFile read_trace(std::istream &is) {
    TraceFile out;
    bool have_header = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        Json j;
        try {
            j = Json::parse(line);
        } catch (const nlohmann::json::parse_error &e) {
            fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object()) {
            fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": not an object");
        }
        check_version(j, line_no);
        const std::string type = read_value<std::string>(j, "type");
        if (type == "header") {
            if (have_header) {
                fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": second header");
            }
            have_header = true;
            TraceHeader &h = out.header;
            h.optimizer = read_value<std::string>(j, "optimizer");
            h.seed = read_value<std::uint64_t>(j, "seed");
            try {
                h.bench = bench_from_json(read_value<Json>(j, "bench"));
            } catch (const Error &e) {
                fail(ErrorCode::Format, std::string("trace header: ") + e.what());
            }
            h.warm_start_size = read_value<int>(j, "warm_start_size");
            h.warm_start_from_gd = read_value<int>(j, "warm_start_from_gd");
            h.warm_start_random = read_value<int>(j, "warm_start_random");
            h.warm_start_measurements = read_value<long long>(j, "warm_start_measurements");
            h.warm_start_best_cost = read_number(j, "warm_start_best_cost", kNaN);
            out.trace.optimizer = h.optimizer;
        } else if (type == "epoch") {
            if (!have_header) {
                fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": epoch record before header");
            }
            EpochRecord r;
            r.epoch = read_value<int>(j, "epoch");
            r.phi_hd = read_number(j, "phi_hd", kNaN);
            r.phi_alpha = read_number(j, "phi_alpha", kNaN);
            r.cost = read_number(j, "cost", kInf);
            r.fisher = read_number(j, "fisher", kNaN);
            r.mu = read_number(j, "mu", kNaN);
            r.var = read_number(j, "var", kNaN);
            r.dmu_dphi = read_number(j, "dmu_dphi", kNaN);
            r.dvar_dphi = read_number(j, "dvar_dphi", kNaN);
            r.measurements = read_value<int>(j, "measurements");
            r.cumulative_measurements = read_value<long long>(j, "cumulative_measurements");
            r.dC_dphi_hd = read_number(j, "dC_dphi_hd", kNaN);
            r.dC_dphi_alpha = read_number(j, "dC_dphi_alpha", kNaN);
            r.grad_norm = read_number(j, "grad_norm", kNaN);
            r.ei_max = read_number(j, "ei_max", kNaN);
            r.best_cost = read_number(j, "best_cost", kNaN);
            r.lengthscale = read_number(j, "lengthscale", kNaN);
            r.output_scale = read_number(j, "output_scale", kNaN);
            r.noise = read_number(j, "noise", kNaN);
            r.true_cost = read_number(j, "true_cost", kNaN);
            r.event = read_value<std::string>(j, "event");
            if (!out.trace.records.empty() && r.epoch <= out.trace.records.back().epoch) {
                fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": epochs not increasing");
            }
            out.trace.records.push_back(std::move(r));
        } else {
            fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": unknown record type '" + type + "'");
        }
    }
    if (!have_header) {
        fail(ErrorCode::Format, "trace has no header record");
    }
    if (out.trace.records.empty()) {
        fail(ErrorCode::Format, "trace has no epoch records");
    }
    return out;
}

TraceFile read_trace_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::Io, "cannot open trace '" + path + "'");
    }
    return read_trace(in);
}

bool TraceSummary::operator==(const TraceSummary &o) const {
    return optimizer == o.optimizer && epochs == o.epochs && same(best_cost, o.best_cost) &&
           best_epoch == o.best_epoch && same(best_true_cost, o.best_true_cost) &&
           same(best_seen_cost, o.best_seen_cost) && same(final_settings.phi_hd, o.final_settings.phi_hd) &&
           same(final_settings.phi_alpha, o.final_settings.phi_alpha) &&
           total_measurements == o.total_measurements && same(shot_noise_limit, o.shot_noise_limit) &&
           below_shot_noise_limit == o.below_shot_noise_limit && kicks == o.kicks;
}

TraceSummary summarize(const TraceFile &t, int window, double factor) {
    const auto &records = t.trace.records;
    require(!records.empty(), "trace has no epoch records", ErrorCode::Format);
    TraceSummary s;
    s.optimizer = t.header.optimizer;
    s.epochs = static_cast<int>(records.size());
    s.best_cost = kInf;
    for (const auto &r : records) {
        if (std::isfinite(r.cost) && r.cost < s.best_cost) {
            s.best_cost = r.cost;
            s.best_epoch = r.epoch;
            s.best_true_cost = r.true_cost;
        }
    }
    require(std::isfinite(s.best_cost), "trace has no finite cost", ErrorCode::Format);
    if (t.header.optimizer == "bo") {
        s.best_seen_cost = s.best_cost;
        if (std::isfinite(t.header.warm_start_best_cost) && t.header.warm_start_best_cost < s.best_seen_cost) {
            s.best_seen_cost = t.header.warm_start_best_cost;
        }
    }
    s.final_settings = {records.back().phi_hd, records.back().phi_alpha};
    s.total_measurements = records.back().cumulative_measurements + t.header.warm_start_measurements;
    s.shot_noise_limit = shot_noise_limit(t.header.bench);
    s.below_shot_noise_limit = s.best_cost < s.shot_noise_limit;

    auto metric = [](const EpochRecord &r) { return std::isfinite(r.true_cost) ? r.true_cost : r.cost; };
    for (std::size_t k = 0; k < records.size(); ++k) {
        if (records[k].event != "kick") {
            continue;
        }
        KickRecovery kr;
        kr.kick_epoch = records[k].epoch;
        kr.reference_cost = kInf;
        for (std::size_t i = 0; i < k; ++i) {
            if (std::isfinite(metric(records[i]))) {
                kr.reference_cost = std::min(kr.reference_cost, metric(records[i]));
            }
        }
        for (std::size_t i = k; i < records.size() && records[i].epoch <= kr.kick_epoch + window; ++i) {
            if (std::isfinite(kr.reference_cost) && metric(records[i]) <= factor * kr.reference_cost) {
                kr.recovered_epoch = records[i].epoch;
                break;
            }
        }
        s.kicks.push_back(kr);
    }
    return s;
}

std::string format_summary(const TraceSummary &s) {
    std::ostringstream os;
    os.precision(6);
    os << "optimizer: " << s.optimizer << '\n';
    os << "epochs: " << s.epochs << '\n';
    os << "best cost: " << s.best_cost << " (epoch " << s.best_epoch << ")\n";
    if (std::isfinite(s.best_true_cost)) {
        os << "true cost at best: " << s.best_true_cost << '\n';
    }
    if (std::isfinite(s.best_seen_cost)) {
        os << "best cost incl. warm start: " << s.best_seen_cost << '\n';
    }
    os << "final settings: phi_hd=" << s.final_settings.phi_hd << " phi_alpha=" << s.final_settings.phi_alpha
       << '\n';
    os << "total measurements: " << s.total_measurements << '\n';
    os << "shot-noise limit: " << s.shot_noise_limit << '\n';
    os << "below SNL: " << (s.below_shot_noise_limit ? "yes" : "no") << '\n';
    for (const auto &k : s.kicks) {
        os << "kick at epoch " << k.kick_epoch << ": ";
        if (k.recovered()) {
            os << "re-converged at epoch " << k.recovered_epoch << " (" << (k.recovered_epoch - k.kick_epoch)
               << " epochs)\n";
        } else {
            os << "not re-converged\n";
        }
    }
    return os.str();
}

} // namespace cvsense
