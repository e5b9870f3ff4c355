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
 * @file virtual_bench.hpp
 * Black-box stand-in for the optical experiment.
 *
 * A probe is squeezed along X, displaced by alpha at angle phi_alpha, sent
 * through a loss channel and then picks up the encoded signal phase. A
 * homodyne detector at basis angle phi_hd returns a finite batch of
 * samples. Phase noise jitters the homodyne basis (and optionally the
 * displacement angle), either once per sample or once per batch.
 */
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cvsense/gaussian_state.hpp"

namespace cvsense {

struct BenchConfig {
    double r = 1.52;
    double alpha = 5.2;
    double eta = 0.72;
    double n_bar = 0.0;
    double phase_noise_rms = 0.03;              ///< homodyne-basis jitter, radians
    double phase_noise_mean = 0.0;              ///< systematic offset of the jitter
    double displacement_phase_noise_rms = 0.0;  ///< independent jitter of phi_alpha
    bool per_sample_noise = true;               ///< false: one draw per batch
    double encoded_phase = 0.0;                 ///< signal phase imprinted on the probe
    long long samples_per_measurement = 10000;
    std::uint64_t rng_seed = 0;

    /// Throws Error(Config) on out-of-range values.
    void validate() const;
};

struct Settings {
    double phi_hd = 0.0;
    double phi_alpha = 0.0;
};

struct MeasurementRecord {
    double phi_hd_requested = 0.0;
    double phi_alpha_requested = 0.0;
    double sample_mean = 0.0;
    double sample_var = 0.0; ///< unbiased (n - 1) estimator
    long long n_samples = 0;
    std::uint64_t seed_used = 0;
};

/// Probe state after loss and before the encoded phase, without noise.
[[nodiscard]] GaussianState prepared_state(const BenchConfig &cfg, double phi_alpha);

/// Noise-free homodyne moments including the encoded phase.
[[nodiscard]] HomodyneMoments expected_moments(const BenchConfig &cfg, double phi_hd, double phi_alpha);

/// One batch of samples drawn with the given seed. Deterministic.
[[nodiscard]] MeasurementRecord measure(const BenchConfig &cfg, double phi_hd, double phi_alpha,
                                        std::uint64_t seed, long long n_samples);

/// One batch using cfg.rng_seed and cfg.samples_per_measurement.
[[nodiscard]] MeasurementRecord measure(const BenchConfig &cfg, double phi_hd, double phi_alpha);

/// Inverse Fisher information of the noise-free probe at the given settings.
/// With include_phase_noise the variance is broadened by
/// (dmu/dphi * phase_noise_rms)^2. Returns +infinity where F vanishes.
/// Mean photon number of the probe before loss: sinh^2 r + alpha^2.
[[nodiscard]] double probe_photon_number(const BenchConfig &cfg);

/// Single-shot cost of a coherent probe with the same photon number.
[[nodiscard]] double shot_noise_limit(const BenchConfig &cfg);

[[nodiscard]] double true_cost(const BenchConfig &cfg, double phi_hd, double phi_alpha,
                               bool include_phase_noise = false);

/// Stateful bench: owns the measurement counter from which per-call seeds
/// are derived (seed_k = derive_seed(cfg.rng_seed, k)). Not thread-safe;
/// use one instance per thread.
class VirtualBench {
  public:
    explicit VirtualBench(BenchConfig cfg);

    MeasurementRecord measure(double phi_hd, double phi_alpha);
    MeasurementRecord measure(double phi_hd, double phi_alpha, long long n_samples);

    [[nodiscard]] const BenchConfig &config() const noexcept { return cfg_; }
    [[nodiscard]] std::uint64_t measurement_count() const noexcept { return calls_; }

  private:
    BenchConfig cfg_;
    std::uint64_t calls_ = 0;
};

enum class PerturbationKind { Kick, DriftRate };

/// Offset added to the control settings. A kick is applied once at `epoch`;
/// a drift rate adds its offsets every epoch after `epoch`.
struct Perturbation {
    int epoch = 0;
    double d_phi_hd = 0.0;
    double d_phi_alpha = 0.0;
    PerturbationKind kind = PerturbationKind::Kick;
};

/// Total offset accumulated by the schedule up to and including `epoch`.
[[nodiscard]] Settings perturbation_offset(std::span<const Perturbation> schedule, int epoch);

/// Settings plus the offset increment that the schedule applies at `epoch`.
[[nodiscard]] Settings apply_perturbations(const Settings &settings,
                                           std::span<const Perturbation> schedule, int epoch);

/// True if a kick fires at `epoch`.
[[nodiscard]] bool kick_at(std::span<const Perturbation> schedule, int epoch);

/// Wraps an angle to (-pi, pi].
[[nodiscard]] double wrap_angle(double phi);

} // namespace cvsense
