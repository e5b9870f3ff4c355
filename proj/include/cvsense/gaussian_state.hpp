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
 * @file gaussian_state.hpp
 * Single-mode Gaussian states in the (X, P) quadrature picture.
 *
 * Conventions: X = a^dag + a, P = i(a^dag - a), [X, P] = 2i, so the vacuum
 * covariance is the identity and a coherent displacement alpha shifts the
 * mean by 2*alpha*(cos phi, sin phi). Squeezing with strength r scales X by
 * e^{-r} and P by e^{r}.
 */
#pragma once

#include <Eigen/Core>

namespace cvsense {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Mean vector and covariance of one bosonic mode. Construction checks that
/// the covariance is symmetric, positive definite (smallest eigenvalue above
/// 1e-10) and obeys det(cov) >= 1.
class GaussianState {
  public:
    GaussianState(const Vec2 &mean, const Mat2 &cov);

    [[nodiscard]] const Vec2 &mean() const noexcept { return mean_; }
    [[nodiscard]] const Mat2 &cov() const noexcept { return cov_; }

    [[nodiscard]] double var_x() const noexcept { return cov_(0, 0); }
    [[nodiscard]] double var_p() const noexcept { return cov_(1, 1); }
    [[nodiscard]] double cov_xp() const noexcept { return cov_(0, 1); }

  private:
    Vec2 mean_;
    Mat2 cov_;
};

enum class GateKind { Squeeze, Displace, Rotate };

/// One parametrised Gaussian gate. Only the fields relevant to `kind` are
/// read: Squeeze uses r, Displace uses alpha and phi, Rotate uses phi.
struct Gate {
    GateKind kind = GateKind::Rotate;
    double r = 0.0;
    double alpha = 0.0;
    double phi = 0.0;

    static Gate squeeze(double r) { return {GateKind::Squeeze, r, 0.0, 0.0}; }
    static Gate displace(double alpha, double phi) {
        return {GateKind::Displace, 0.0, alpha, phi};
    }
    static Gate rotate(double phi) { return {GateKind::Rotate, 0.0, 0.0, phi}; }
};

/// Beamsplitter coupling to a thermal environment mode.
struct LossChannel {
    double eta = 1.0;   ///< transmittivity in [0, 1]
    double n_bar = 0.0; ///< environment mean photon number
};

/// Mean and variance of the homodyne outcome at one basis angle.
struct HomodyneMoments {
    double mu;
    double var;
};

[[nodiscard]] GaussianState vacuum();

/// Throws Error(InvalidArgument) for a negative squeeze strength or
/// displacement amplitude.
[[nodiscard]] GaussianState apply_gate(const GaussianState &state, const Gate &g);

/// mean -> sqrt(eta) mean, cov -> eta cov + (1 - eta)(2 n_bar + 1) I.
[[nodiscard]] GaussianState apply_loss(const GaussianState &state, const LossChannel &ch);

/// Projection onto u = (cos phi_hd, sin phi_hd).
[[nodiscard]] HomodyneMoments homodyne_moments(const GaussianState &state, double phi_hd);

/// <n> = (V_X + V_P + <X>^2 + <P>^2 - 2) / 4.
[[nodiscard]] double photon_number(const GaussianState &state);

/// Plane rotation acting on (X, P).
[[nodiscard]] Mat2 rotation_matrix(double phi);

/// 10 log10(v) relative to the vacuum variance.
[[nodiscard]] double variance_db(double v);

} // namespace cvsense
