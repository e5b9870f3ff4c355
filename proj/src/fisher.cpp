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
#include "cvsense/fisher.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cvsense/error.hpp"

namespace cvsense {

double fisher_from_moments(const QuadratureDerivatives &q) {
    require(q.var > 0.0 && std::isfinite(q.var), "quadrature variance must be positive",
            ErrorCode::Numerical);
    return q.dmu_dphi * q.dmu_dphi / q.var + q.dvar_dphi * q.dvar_dphi / (2.0 * q.var * q.var);
}

double cost(double fisher, long long n_samples) {
    require(n_samples >= 1, "sample count must be at least 1");
    require(fisher >= 0.0, "Fisher information must be non-negative", ErrorCode::Numerical);
    if (fisher == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 1.0 / (static_cast<double>(n_samples) * fisher);
}

double cost(const QuadratureDerivatives &q, long long n_samples) {
    return cost(fisher_from_moments(q), n_samples);
}

bool is_infinite_cost(double c) { return std::isinf(c); }

std::vector<double> fisher_gradient(const FisherGradientInputs &in) {
    const auto &q = in.q;
    require(q.var > 0.0, "quadrature variance must be positive", ErrorCode::Numerical);
    const double v = q.var;
    const double v3 = v * v * v;
    std::vector<double> grad;
    grad.reserve(in.controls.size());
    for (const auto &c : in.controls) {
        const double mean_term =
            2.0 * v * v * q.dmu_dphi * c.d2mu_dphi - v * q.dmu_dphi * q.dmu_dphi * c.dvar;
        const double var_term = v * q.dvar_dphi * c.d2var_dphi - q.dvar_dphi * q.dvar_dphi * c.dvar;
        grad.push_back((mean_term + var_term) / v3);
    }
    return grad;
}

std::vector<double> cost_gradient(double fisher, std::span<const double> grad_fisher) {
    require(fisher > 0.0, "cost gradient is undefined at zero Fisher information",
            ErrorCode::Numerical);
    std::vector<double> out;
    out.reserve(grad_fisher.size());
    for (double g : grad_fisher) {
        out.push_back(-g / (fisher * fisher));
    }
    return out;
}

QuadratureDerivatives analytic_moments(double phi, double phi_alpha, double r, double alpha,
                                       double eta) {
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double amp = 2.0 * std::sqrt(eta) * alpha;
    QuadratureDerivatives q;
    q.mu = amp * std::cos(phi_alpha - phi);
    q.var = eta * (std::exp(-2.0 * r) * c * c + std::exp(2.0 * r) * s * s) + 1.0 - eta;
    // d/dphi of the basis-angle expressions; squared in F, so the sign
    // relative to the encoded phase does not matter here.
    q.dmu_dphi = amp * std::sin(phi_alpha - phi);
    q.dvar_dphi = eta * (std::exp(2.0 * r) - std::exp(-2.0 * r)) * std::sin(2.0 * phi);
    return q;
}

double analytic_fisher(double phi, double phi_alpha, double r, double alpha, double eta) {
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double denom = eta * (std::exp(-2.0 * r) * c * c + std::exp(2.0 * r) * s * s) + 1.0 - eta;
    const double rel = std::sin(phi_alpha - phi);
    const double sh = std::sinh(2.0 * r);
    const double s2 = std::sin(2.0 * phi);
    return 4.0 * eta * alpha * alpha * rel * rel / denom +
           2.0 * eta * eta * sh * sh * s2 * s2 / (denom * denom);
}

double optimal_measurement_angle(double r, double eta) {
    require(r >= 0.0, "squeeze strength must be non-negative");
    require(eta >= 0.0 && eta <= 1.0, "transmittivity must lie in [0, 1]");
    if (eta == 1.0) {
        return 0.5 * std::acos(std::tanh(2.0 * r));
    }
    const double anti = eta * std::exp(2.0 * r) + (1.0 - eta);
    const double sq = eta * std::exp(-2.0 * r) + (1.0 - eta);
    const double ratio = anti / sq;
    return 0.5 * std::acos((ratio - 1.0) / (ratio + 1.0));
}

double optimal_relative_displacement_angle() { return std::numbers::pi / 2.0; }

double shot_noise_limit_cost(double n_photons, long long n_samples) {
    require(n_photons > 0.0, "shot-noise limit needs a positive photon number");
    require(n_samples >= 1, "sample count must be at least 1");
    return 1.0 / (static_cast<double>(n_samples) * 4.0 * n_photons);
}

} // namespace cvsense
