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
 * @file optimizers.hpp
 * Gradient descent and Bayesian optimisation of (phi_hd, phi_alpha).
 *
 * Both optimisers emit an OptimizationTrace with one EpochRecord per epoch.
 * Epochs are numbered from 1; a perturbation scheduled at epoch e is applied
 * before the cost of epoch e is measured.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvsense/estimation.hpp"
#include "cvsense/gaussian_process.hpp"
#include "cvsense/virtual_bench.hpp"

namespace cvsense {

inline constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

struct EpochRecord {
    int epoch = 0;
    double phi_hd = 0.0; ///< settings at which the cost was measured
    double phi_alpha = 0.0;
    double cost = 0.0; ///< estimated single-shot cost, +inf on zero Fisher information
    double fisher = 0.0;
    double mu = 0.0;
    double var = 0.0;
    double dmu_dphi = 0.0;
    double dvar_dphi = 0.0;
    int measurements = 0; ///< bench calls spent in this epoch
    long long cumulative_measurements = 0;
    double dC_dphi_hd = kNotApplicable; ///< GD only
    double dC_dphi_alpha = kNotApplicable;
    double grad_norm = kNotApplicable;
    double ei_max = kNotApplicable; ///< BO only
    double best_cost = kNotApplicable; ///< BO only: best seen so far, warm start included
    double lengthscale = kNotApplicable;
    double output_scale = kNotApplicable;
    double noise = kNotApplicable;
    double true_cost = kNotApplicable; ///< noiseless model cost at the measured settings
    std::string event; ///< "", "kick", "drift", "infinite_cost"
};

struct OptimizationTrace {
    std::string optimizer; ///< "gd" or "bo"
    std::vector<EpochRecord> records;
};

using EpochCallback = std::function<void(const EpochRecord &)>;

struct GDConfig {
    double learning_rate = 5.0;
    int epochs = 50;
    Settings initial{0.6, 2.0};
    long long n_samples = 10000;
    /// Per-parameter cap on |update| in radians; 0 disables it.
    double max_step = 0.5;
    DisplacementGradientSchedule schedule = DisplacementGradientSchedule::Compact;

    void validate() const;
};

/// Runs GD against the bench. Each epoch: perturb, five cost calls, gradient
/// calls, then settings -= learning_rate * grad C (wrapped). An epoch with
/// zero Fisher information leaves the settings unchanged. Errors from the
/// bench propagate after the records produced so far were passed to
/// `on_epoch`.
[[nodiscard]] OptimizationTrace run_gradient_descent(VirtualBench &bench, const GDConfig &cfg,
                                                     std::span<const Perturbation> schedule = {},
                                                     const EpochCallback &on_epoch = {});

struct GPPriors {
    LogNormalPrior lengthscale;
    std::optional<LogNormalPrior> output_scale;
};

/// Hyperprior presets: "tuned", "loose" (prior means x100) and "strict"
/// (prior means x0.01). Throws Error(Config) for unknown names.
[[nodiscard]] GPPriors prior_preset(const std::string &name);

struct BOConfig {
    int epochs = 50;
    int grid_size = 200; ///< candidates per axis over [-pi, pi]
    GPPriors priors = prior_preset("tuned");
    /// Model log(cost) instead of cost; costs span orders of magnitude.
    bool log_outputs = true;
    int fit_starts = 16;  ///< first fit
    int refit_starts = 1; ///< later fits; the first starts from the previous optimum
    int max_fit_iterations = 200;
    bool exclude_queried = true; ///< never re-query a grid point
    std::uint64_t seed = 0;

    void validate() const;
};

struct OracleResult {
    CostEstimate estimate;
    int measurements = 0;
    double true_cost = kNotApplicable;
};

using CostOracle = std::function<OracleResult(const Settings &)>;

/// Five-call cost estimate on the bench.
[[nodiscard]] CostOracle bench_oracle(VirtualBench &bench, long long n_samples);
/// Noiseless analytic cost; no bench calls.
[[nodiscard]] CostOracle analytic_oracle(const BenchConfig &cfg);

struct WarmPoint {
    Settings settings;
    double cost = 0.0;
};

struct BOResult {
    OptimizationTrace trace;
    Settings best_settings;
    double best_cost = std::numeric_limits<double>::infinity();
    bool best_from_warm_start = true;
    GPHyperparameters final_hyper;
};

/// Candidate grid used for the EI argmax, rows (phi_hd, phi_alpha) with
/// phi_hd varying fastest.
[[nodiscard]] Eigen::MatrixXd candidate_grid(int grid_size);

/// Per epoch: fit the GP to all finite data, take the EI argmax over the
/// grid, query the oracle there. A failed fit is retried once with a larger
/// jitter floor; a second failure throws Error(Optimizer).
[[nodiscard]] BOResult run_bayesian_optimization(const CostOracle &oracle, std::span<const WarmPoint> warm_start,
                                                 const BOConfig &cfg, const EpochCallback &on_epoch = {});

/// `count` uniform random points in [-pi, pi)^2 evaluated by the oracle.
[[nodiscard]] std::vector<WarmPoint> random_warm_start(const CostOracle &oracle, int count, std::uint64_t seed,
                                                       long long *measurements = nullptr);

/// The settings/cost pairs of a trace, skipping infinite costs.
[[nodiscard]] std::vector<WarmPoint> warm_points_from(const OptimizationTrace &trace);

/// Mean wrapped Euclidean distance between consecutive epoch settings.
[[nodiscard]] double mean_settings_step(const OptimizationTrace &trace);

} // namespace cvsense
