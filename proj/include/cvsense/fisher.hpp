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
 * @file fisher.hpp
 * Classical Fisher information of Gaussian homodyne statistics for phase
 * estimation, the inverse-Fisher cost and its gradient, the closed-form
 * landscape of a displaced squeezed probe under pure loss, and the
 * shot-noise baseline.
 *
 * All phase derivatives are taken with respect to the encoded phase.
 */
#pragma once

#include <span>
#include <vector>

namespace cvsense {

/// Homodyne mean/variance and their derivatives with respect to the encoded phase.
struct QuadratureDerivatives {
    double mu = 0.0;
    double var = 1.0;
    double dmu_dphi = 0.0;
    double dvar_dphi = 0.0;
};

/// Derivatives of the Fisher-information ingredients with respect to one
/// control parameter.
struct ControlDerivatives {
    double dvar = 0.0;       ///< d V / d theta
    double d2mu_dphi = 0.0;  ///< d (d mu / d phi) / d theta
    double d2var_dphi = 0.0; ///< d (d V / d phi) / d theta
};

struct FisherGradientInputs {
    QuadratureDerivatives q;
    std::vector<ControlDerivatives> controls;
};

/// F = (dmu/dphi)^2 / V + (dV/dphi)^2 / (2 V^2). Throws Error(Numerical)
/// for V <= 0.
[[nodiscard]] double fisher_from_moments(const QuadratureDerivatives &q);

/// 1 / (n_samples F). Returns +infinity when F == 0; check with
/// is_infinite_cost before feeding it to arithmetic.
[[nodiscard]] double cost(double fisher, long long n_samples = 1);
[[nodiscard]] double cost(const QuadratureDerivatives &q, long long n_samples = 1);
[[nodiscard]] bool is_infinite_cost(double c);

/// dF/dtheta_i for every control parameter.
[[nodiscard]] std::vector<double> fisher_gradient(const FisherGradientInputs &in);

/// dC/dtheta_i = -dF/dtheta_i / F^2. Throws Error(Numerical) for F <= 0.
[[nodiscard]] std::vector<double> cost_gradient(double fisher, std::span<const double> grad_fisher);

/// Closed-form Fisher information of a displaced squeezed state measured at
/// basis angle phi after pure loss eta.
[[nodiscard]] double analytic_fisher(double phi, double phi_alpha, double r, double alpha,
                                     double eta);

/// Homodyne moments of the same probe, used as the analytic reference.
[[nodiscard]] QuadratureDerivatives analytic_moments(double phi, double phi_alpha, double r,
                                                     double alpha, double eta);

/// Basis angle in [0, pi/4] maximising the squeezing contribution to F.
/// For eta == 1 this is arccos(tanh 2r)/2; otherwise the lossy variance
/// ratio replaces e^{4r}. r == 0 returns pi/4 (no preferred angle).
[[nodiscard]] double optimal_measurement_angle(double r, double eta);

/// Optimal displacement angle relative to the measurement basis.
[[nodiscard]] double optimal_relative_displacement_angle();

/// Coherent-probe bound: 1 / (n_samples * 4 <n>).
[[nodiscard]] double shot_noise_limit_cost(double n_photons, long long n_samples = 1);

} // namespace cvsense
