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
 * @file campaign.hpp
 * Config-driven campaigns: GD, BO, GD followed by BO, or a cost landscape.
 *
 * Every random stream of a run derives from its campaign seed S:
 *   bench sampling   derive_seed(S, "bench")
 *   BO random points derive_seed(S, "warm_start")
 *   GP fit restarts  derive_seed(S, "bo")
 * Several seeds run independently, each in the sub-directory seed_<S>.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvsense/error.hpp"
#include "cvsense/optimizers.hpp"
#include "cvsense/trace_io.hpp"
#include "cvsense/virtual_bench.hpp"

namespace cvsense {

inline constexpr const char *kVersion = "0.1.0";

enum class CampaignMode { GD, BO, GDThenBO, Landscape };

[[nodiscard]] std::string to_string(CampaignMode mode);

struct BOCampaignConfig {
    BOConfig optimizer;
    std::string prior_preset = "tuned";
    int warm_start_total = 136;
    std::optional<int> warm_start_random; ///< overrides warm_start_total
    bool analytic_oracle = false;         ///< noiseless cost, no bench calls
    long long n_samples = 10000;
};

struct LandscapeConfig {
    int grid_size = 200;
    bool include_phase_noise = false;
};

struct CampaignConfig {
    std::vector<std::uint64_t> seeds;
    CampaignMode mode = CampaignMode::GD;
    BenchConfig bench;
    GDConfig gd;
    BOCampaignConfig bo;
    std::vector<Perturbation> perturbations;
    LandscapeConfig landscape;
    std::string out_dir = ".";

    void validate() const;
};

/// Parses a JSON campaign description. Sample counts left unset follow
/// bench.samples_per_measurement. Throws Error(Config) on syntax errors,
/// unknown fields, wrong types or a missing seed.
[[nodiscard]] CampaignConfig parse_campaign(const std::string &text);
/// Error(Io) if the file cannot be read.
[[nodiscard]] CampaignConfig load_campaign(const std::string &path);

/// The fully resolved config as JSON, defaults filled in.
[[nodiscard]] std::string campaign_to_json(const CampaignConfig &cfg);

struct LandscapePoint {
    double phi_hd = 0.0;
    double phi_alpha = 0.0;
    double true_cost = 0.0;
};

/// Dense true-cost grid, rows (phi_hd, phi_alpha, true_cost) with phi_hd
/// varying fastest, both axes spanning [-pi, pi].
[[nodiscard]] std::vector<LandscapePoint> cost_landscape(const BenchConfig &bench, const LandscapeConfig &cfg);

struct RunResult {
    std::uint64_t seed = 0;
    std::string dir;
    bool ok = false;
    ErrorCode error_code = ErrorCode::InvalidArgument;
    std::string error;
    std::optional<TraceSummary> gd_summary;
    std::optional<TraceSummary> bo_summary;
    std::optional<LandscapePoint> landscape_minimum;
    int warm_start_from_gd = 0;
    int warm_start_random = 0;
};

/// Runs every seed; up to `parallel` seeds at once. Failures are recorded
/// per run (partial traces stay on disk) and never thrown.
[[nodiscard]] std::vector<RunResult> run_campaign(const CampaignConfig &cfg, int parallel = 1);

/// One seed, written to `dir`.
[[nodiscard]] RunResult run_single(const CampaignConfig &cfg, std::uint64_t seed, const std::string &dir);

} // namespace cvsense
