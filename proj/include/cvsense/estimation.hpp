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
 * @file estimation.hpp
 * Cost and gradient estimates from finite homodyne batches.
 *
 * The encoded phase rotates the probe opposite to the homodyne basis, so a
 * derivative with respect to the encoded phase is minus the derivative with
 * respect to phi_hd. The mean is a pure first harmonic of the basis angle
 * and the variance a second-order trigonometric polynomial, so the rotation
 * shift rules below are exact up to sampling noise:
 *
 *   d mu / d phi = (mu(phi_hd - pi/2) - mu(phi_hd + pi/2)) / 2
 *   d V  / d phi =  V(phi_hd - pi/4) -  V(phi_hd + pi/4)
 */
#pragma once

#include <array>
#include <string>
#include <vector>

#include "cvsense/fisher.hpp"
#include "cvsense/virtual_bench.hpp"

namespace cvsense {

/// Fisher information below this is reported as zero (infinite cost).
inline constexpr double kFisherFloor = 1e-12;

/// Order of the five cost records.
enum class CostBasis : int { Center = 0, PlusHalfPi = 1, MinusHalfPi = 2, PlusQuarterPi = 3, MinusQuarterPi = 4 };

struct CostEstimate {
    double cost = 0.0; ///< single-shot inverse Fisher information
    double fisher = 0.0;
    double mu = 0.0;
    double var = 0.0;
    double dmu_dphi = 0.0;
    double dvar_dphi = 0.0;
    bool zero_fisher = false; ///< cost is +infinity
    Settings settings;
    std::array<MeasurementRecord, 5> records{};

    [[nodiscard]] const MeasurementRecord &record(CostBasis b) const {
        return records[static_cast<std::size_t>(b)];
    }
    [[nodiscard]] QuadratureDerivatives quadrature() const { return {mu, var, dmu_dphi, dvar_dphi}; }
};

/// Measurement schedule for the displacement-angle gradient.
enum class DisplacementGradientSchedule {
    /// Four bases (phi_hd +- pi/4, +- pi/2) at each shifted phi_alpha; the
    /// central variance is recovered as V(+pi/4) + V(-pi/4) - (V(+pi/2) + V(-pi/2)) / 2.
    Compact,
    /// The full five-basis cost schedule at each shifted phi_alpha.
    Full,
};

struct PlannedMeasurement {
    std::string purpose; ///< "cost", "phi_hd" or "phi_alpha"
    double phi_hd = 0.0;
    double phi_alpha = 0.0;
    bool reused = false; ///< taken from the cost records, no bench call
};

struct GradientEstimate {
    double dC_dphi_hd = 0.0;
    double dC_dphi_alpha = 0.0;
    double dF_dphi_hd = 0.0;
    double dF_dphi_alpha = 0.0;
    int new_measurements_phi_hd = 0;
    int new_measurements_phi_alpha = 0;
    int reused_measurements_phi_hd = 0;
    int reused_measurements_phi_alpha = 0;
    std::vector<PlannedMeasurement> audit;
    std::vector<MeasurementRecord> records; ///< the new bench calls, in order
};

/// Exactly five bench calls. Throws Error(Numerical) if a sample variance
/// is not positive.
[[nodiscard]] CostEstimate estimate_cost(VirtualBench &bench, double phi_hd, double phi_alpha);
[[nodiscard]] CostEstimate estimate_cost(VirtualBench &bench, double phi_hd, double phi_alpha,
                                         long long n_samples);

/// Builds the estimate from five records ordered as CostBasis.
[[nodiscard]] CostEstimate cost_from_records(const std::array<MeasurementRecord, 5> &records,
                                             Settings settings);

/// Gradient of the single-shot cost reusing the records of `base`.
/// phi_hd needs two extra calls (phi_hd +- pi); phi_alpha needs eight
/// (Compact) or ten (Full). Throws Error(Numerical) if base.zero_fisher.
[[nodiscard]] GradientEstimate estimate_gradient(
    VirtualBench &bench, const CostEstimate &base, long long n_samples,
    DisplacementGradientSchedule schedule = DisplacementGradientSchedule::Compact);

[[nodiscard]] GradientEstimate estimate_gradient(
    VirtualBench &bench, const CostEstimate &base,
    DisplacementGradientSchedule schedule = DisplacementGradientSchedule::Compact);

/// |alpha| = sqrt(<X>^2 + <P>^2) / 2 from records at two orthogonal bases.
[[nodiscard]] double estimate_alpha(const MeasurementRecord &x_basis, const MeasurementRecord &p_basis);

/// <n> = (<X^2> + <P^2> - 2) / 4 with <X^2> = var + mean^2.
[[nodiscard]] double estimate_n(const MeasurementRecord &x_basis, const MeasurementRecord &p_basis);

} // namespace cvsense
