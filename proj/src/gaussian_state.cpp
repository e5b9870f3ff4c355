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
#include "cvsense/gaussian_state.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "cvsense/error.hpp"

namespace cvsense {

namespace {
constexpr double kMinEigenvalue = 1e-10;
constexpr double kUncertaintyTol = 1e-9;
} // namespace

GaussianState::GaussianState(const Vec2 &mean, const Mat2 &cov) : mean_(mean), cov_(cov) {
    require(mean.allFinite() && cov.allFinite(), "Gaussian state has non-finite moments");
    const double asym = std::abs(cov(0, 1) - cov(1, 0));
    require(asym <= 1e-12 * (1.0 + cov.cwiseAbs().maxCoeff()),
            "covariance matrix is not symmetric");
    cov_(1, 0) = cov_(0, 1);

    // Closed-form eigenvalues of a symmetric 2x2.
    const double half_tr = 0.5 * (cov_(0, 0) + cov_(1, 1));
    const double half_diff = 0.5 * (cov_(0, 0) - cov_(1, 1));
    const double lambda_min = half_tr - std::hypot(half_diff, cov_(0, 1));
    if (lambda_min <= kMinEigenvalue) {
        std::ostringstream msg;
        msg << "covariance is not positive definite (smallest eigenvalue " << lambda_min << ")";
        fail(ErrorCode::InvalidArgument, msg.str());
    }
    const double det = cov_.determinant();
    if (det < 1.0 - kUncertaintyTol) {
        std::ostringstream msg;
        msg << "covariance violates the uncertainty relation (det " << det << " < 1)";
        fail(ErrorCode::InvalidArgument, msg.str());
    }
}

GaussianState vacuum() { return {Vec2::Zero(), Mat2::Identity()}; }

Mat2 rotation_matrix(double phi) {
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    Mat2 rot;
    rot << c, -s, s, c;
    return rot;
}

GaussianState apply_gate(const GaussianState &state, const Gate &g) {
    switch (g.kind) {
    case GateKind::Squeeze: {
        require(g.r >= 0.0, "squeeze strength must be non-negative");
        const Eigen::DiagonalMatrix<double, 2> scale(std::exp(-g.r), std::exp(g.r));
        return {scale * state.mean(), scale * state.cov() * scale};
    }
    case GateKind::Displace: {
        require(g.alpha >= 0.0, "displacement amplitude must be non-negative");
        const Vec2 shift(2.0 * g.alpha * std::cos(g.phi), 2.0 * g.alpha * std::sin(g.phi));
        return {state.mean() + shift, state.cov()};
    }
    case GateKind::Rotate: {
        const Mat2 rot = rotation_matrix(g.phi);
        return {rot * state.mean(), rot * state.cov() * rot.transpose()};
    }
    }
    fail(ErrorCode::InvalidArgument, "unknown gate kind");
}

GaussianState apply_loss(const GaussianState &state, const LossChannel &ch) {
    require(ch.eta >= 0.0 && ch.eta <= 1.0, "transmittivity must lie in [0, 1]");
    require(ch.n_bar >= 0.0, "thermal photon number must be non-negative");
    const double env = (1.0 - ch.eta) * (2.0 * ch.n_bar + 1.0);
    return {std::sqrt(ch.eta) * state.mean(), ch.eta * state.cov() + env * Mat2::Identity()};
}

HomodyneMoments homodyne_moments(const GaussianState &state, double phi_hd) {
    const Vec2 u(std::cos(phi_hd), std::sin(phi_hd));
    return {u.dot(state.mean()), u.dot(state.cov() * u)};
}

double photon_number(const GaussianState &state) {
    return 0.25 * (state.var_x() + state.var_p() + state.mean().squaredNorm() - 2.0);
}

double variance_db(double v) { return 10.0 * std::log10(v); }

} // namespace cvsense
