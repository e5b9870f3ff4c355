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
/**
 * @file trace_io.hpp
 * Newline-delimited JSON traces and their summaries.
 *
 * A trace file holds one header object followed by one object per epoch.
 * Every line carries "schema_version"; readers accept any minor version of
 * the supported major version. Non-finite numbers are written as null; a
 * null cost reads back as +infinity, any other null as NaN. Field names are
 * listed in docs/format.md.
 */
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cvsense/optimizers.hpp"
#include "cvsense/virtual_bench.hpp"

namespace cvsense {

inline constexpr const char *kTraceSchemaVersion = "1.0";
inline constexpr int kTraceSchemaMajor = 1;

struct TraceHeader {
    std::string optimizer; ///< "gd" or "bo"
    std::uint64_t seed = 0;
    BenchConfig bench;
    int warm_start_size = 0; ///< BO only
    int warm_start_from_gd = 0;
    int warm_start_random = 0;
    long long warm_start_measurements = 0;
    double warm_start_best_cost = kNotApplicable;
};

struct TraceFile {
    TraceHeader header;
    OptimizationTrace trace;
};

void write_trace_header(std::ostream &os, const TraceHeader &header);
void write_trace_record(std::ostream &os, const EpochRecord &record);
void write_trace(std::ostream &os, const TraceFile &trace);

/// Throws Error(Format) on malformed lines, a missing header, an unknown
/// major schema version or a trace without epoch records.
[[nodiscard]] TraceFile read_trace(std::istream &is);
/// As read_trace; Error(Io) if the file cannot be opened.
[[nodiscard]] TraceFile read_trace_file(const std::string &path);

struct KickRecovery {
    int kick_epoch = 0;
    double reference_cost = 0.0; ///< best cost before the kick
    int recovered_epoch = -1;    ///< -1 if not within the window
    [[nodiscard]] bool recovered() const { return recovered_epoch >= 0; }
    bool operator==(const KickRecovery &) const = default;
};

struct TraceSummary {
    std::string optimizer;
    int epochs = 0;
    double best_cost = 0.0; ///< lowest finite estimated cost among the epochs
    int best_epoch = 0;
    double best_true_cost = kNotApplicable; ///< true cost at the best epoch
    double best_seen_cost = kNotApplicable; ///< BO: including the warm start
    Settings final_settings;
    long long total_measurements = 0; ///< epochs plus BO warm start
    double shot_noise_limit = 0.0;
    bool below_shot_noise_limit = false;
    std::vector<KickRecovery> kicks;

    bool operator==(const TraceSummary &other) const;
};

/// Kick recovery compares true_cost (estimated cost where true_cost is
/// absent) against `factor` times the best value before the kick, over the
/// kick epoch and the `window` epochs after it. Throws Error(Format) if the
/// trace has no epochs or no finite cost.
[[nodiscard]] TraceSummary summarize(const TraceFile &trace, int window = 14, double factor = 1.1);

/// Human-readable report, one item per line.
[[nodiscard]] std::string format_summary(const TraceSummary &summary);

} // namespace cvsense
