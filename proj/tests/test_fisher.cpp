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
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cvsense/error.hpp"
#include "cvsense/fisher.hpp"
#include "cvsense/gaussian_state.hpp"

namespace {

using namespace cvsense;
using std::numbers::pi;

constexpr double kR = 1.52;
constexpr double kAlpha = 5.2;
constexpr double kEta = 0.72;

// Homodyne mean and variance of the lossy probe at basis angle phi, from the
// Gaussian-state pipeline.
HomodyneMoments state_moments(double phi, double phi_alpha, double r, double alpha, double eta) {
    GaussianState s = apply_gate(vacuum(), Gate::squeeze(r));
    s = apply_gate(s, Gate::displace(alpha, phi_alpha));
    s = apply_loss(s, {eta, 0.0});
    return homodyne_moments(s, phi);
}

// Fisher information with phase derivatives taken by central differences
// of the state pipeline.
double oracle_fisher(double phi, double phi_alpha, double r = kR, double alpha = kAlpha, double eta = kEta) {
    const double h = 1e-5;
    const HomodyneMoments m = state_moments(phi, phi_alpha, r, alpha, eta);
    const HomodyneMoments p = state_moments(phi + h, phi_alpha, r, alpha, eta);
    const HomodyneMoments n = state_moments(phi - h, phi_alpha, r, alpha, eta);
    const double dmu = (p.mu - n.mu) / (2.0 * h);
    const double dvar = (p.var - n.var) / (2.0 * h);
    return dmu * dmu / m.var + dvar * dvar / (2.0 * m.var * m.var);
}

// Exact closed form, written independently of the library.
double closed_form_fisher(double phi, double phi_alpha, double r, double alpha, double eta) {
    const double vx = eta * std::exp(-2.0 * r) + 1.0 - eta;
    const double vp = eta * std::exp(2.0 * r) + 1.0 - eta;
    const double v = vx * std::cos(phi) * std::cos(phi) + vp * std::sin(phi) * std::sin(phi);
    const double dmu = 2.0 * alpha * std::sqrt(eta) * std::sin(phi - phi_alpha);
    const double dv = (vp - vx) * std::sin(2.0 * phi);
    return dmu * dmu / v + dv * dv / (2.0 * v * v);
}

struct GridOptimum {
    double phi;
    double phi_alpha;
    double fisher;
};

GridOptimum grid_argmax(int n, double r, double alpha, double eta) {
    GridOptimum best{0.0, 0.0, -1.0};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double phi = -pi + 2.0 * pi * i / (n - 1);
            const double pa = -pi + 2.0 * pi * j / (n - 1);
            const double f = closed_form_fisher(phi, pa, r, alpha, eta);
            if (f > best.fisher) {
                best = {phi, pa, f};
            }
        }
    }
    return best;
}

TEST(Fisher, FromMomentsFormula) {
    const QuadratureDerivatives q{1.0, 2.0, 3.0, 4.0};
    EXPECT_DOUBLE_EQ(fisher_from_moments(q), 9.0 / 2.0 + 16.0 / 8.0);
    EXPECT_THROW((void)fisher_from_moments({0.0, 0.0, 1.0, 1.0}), Error);
}

TEST(Fisher, CostIsInverseFisher) {
    EXPECT_DOUBLE_EQ(cost(4.0), 0.25);
    EXPECT_DOUBLE_EQ(cost(4.0, 100), 0.0025);
    EXPECT_TRUE(is_infinite_cost(cost(0.0)));
    EXPECT_FALSE(is_infinite_cost(cost(1.0)));
}

TEST(Fisher, ClosedFormMatchesStatePipeline) {
    for (double phi : {-2.0, -0.4, 0.1, 0.142, 1.0, 2.9}) {
        for (double pa : {-1.0, 0.3, pi / 2, 2.5}) {
            const double want = oracle_fisher(phi, pa);
            EXPECT_NEAR(closed_form_fisher(phi, pa, kR, kAlpha, kEta), want, 1e-6 * want);
        }
    }
}

TEST(Fisher, MomentsAndClosedFormAgreeOnGrid) {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 50; ++j) {
            const double phi = -pi + 2.0 * pi * i / 49.0;
            const double pa = -pi + 2.0 * pi * j / 49.0;
            const double lib = fisher_from_moments(analytic_moments(phi, pa, kR, kAlpha, kEta));
            const double want = closed_form_fisher(phi, pa, kR, kAlpha, kEta);
            worst = std::max(worst, std::abs(lib - want) / std::max(1.0, want));
            EXPECT_NEAR(analytic_fisher(phi, pa, kR, kAlpha, kEta), want, 1e-10 * std::max(1.0, want));
        }
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(Fisher, AnalyticMomentsMatchState) {
    for (double phi : {-1.3, 0.0, 0.7}) {
        const HomodyneMoments m = state_moments(phi, 0.9, kR, kAlpha, kEta);
        const QuadratureDerivatives q = analytic_moments(phi, 0.9, kR, kAlpha, kEta);
        EXPECT_NEAR(q.mu, m.mu, 1e-12);
        EXPECT_NEAR(q.var, m.var, 1e-12);
    }
}

TEST(Fisher, OptimalMeasurementAngleMatchesGridArgmax) {
    // Without displacement only the squeezing term remains.
    for (double eta : {1.0, 0.72}) {
        const int n = 20001;
        double best_phi = 0.0;
        double best_f = -1.0;
        for (int i = 0; i < n; ++i) {
            const double phi = (pi / 4) * i / (n - 1);
            const double f = closed_form_fisher(phi, 0.0, kR, 0.0, eta);
            if (f > best_f) {
                best_f = f;
                best_phi = phi;
            }
        }
        EXPECT_NEAR(optimal_measurement_angle(kR, eta), best_phi, (pi / 4) / (n - 1));
    }
    EXPECT_NEAR(optimal_measurement_angle(kR, 1.0), 0.0478, 5e-4);
    EXPECT_NEAR(optimal_measurement_angle(kR, 0.72), 0.142, 5e-4);
    EXPECT_DOUBLE_EQ(optimal_measurement_angle(0.0, 0.5), pi / 4);
}

TEST(Fisher, DisplacedProbeBeatsShotNoiseLimit) {
    const GridOptimum opt = grid_argmax(721, kR, kAlpha, kEta);
    const double n_photons = std::sinh(kR) * std::sinh(kR) + kAlpha * kAlpha;
    EXPECT_GT(opt.fisher, 4.0 * n_photons);
    EXPECT_LT(cost(opt.fisher), shot_noise_limit_cost(n_photons));
    EXPECT_DOUBLE_EQ(shot_noise_limit_cost(n_photons), 1.0 / (4.0 * n_photons));
    EXPECT_NEAR(shot_noise_limit_cost(n_photons, 10), 1.0 / (40.0 * n_photons), 1e-18);
    // The optimum sits at a displacement orthogonal to the basis.
    EXPECT_NEAR(std::abs(std::remainder(opt.phi_alpha - opt.phi, pi)), optimal_relative_displacement_angle(),
                2.0 * pi / 720);
}

TEST(Fisher, CostGradientChainRule) {
    const std::vector<double> g{2.0, -4.0};
    const std::vector<double> c = cost_gradient(2.0, g);
    EXPECT_DOUBLE_EQ(c[0], -0.5);
    EXPECT_DOUBLE_EQ(c[1], 1.0);
    EXPECT_THROW((void)cost_gradient(0.0, g), Error);
}

// dF/dtheta from the control derivatives equals a finite difference of F
// when theta moves the displacement angle.
TEST(FisherProperty, GradientMatchesFiniteDifference) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-pi, pi);
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
        const double phi = u(rng);
        const double pa = u(rng);
        auto moments = [&](double p) { return analytic_moments(phi, p, kR, kAlpha, kEta); };
        const QuadratureDerivatives q = moments(pa);
        const QuadratureDerivatives qp = moments(pa + h);
        const QuadratureDerivatives qm = moments(pa - h);
        ControlDerivatives d;
        d.dvar = (qp.var - qm.var) / (2.0 * h);
        d.d2mu_dphi = (qp.dmu_dphi - qm.dmu_dphi) / (2.0 * h);
        d.d2var_dphi = (qp.dvar_dphi - qm.dvar_dphi) / (2.0 * h);
        const std::vector<double> grad = fisher_gradient({q, {d}});
        const double fd = (closed_form_fisher(phi, pa + h, kR, kAlpha, kEta) -
                           closed_form_fisher(phi, pa - h, kR, kAlpha, kEta)) /
                          (2.0 * h);
        EXPECT_NEAR(grad[0], fd, 1e-5 * (1.0 + std::abs(fd)));
    }
}

TEST(FisherProperty, NonNegativeEverywhere) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const double f = analytic_fisher(2.0 * pi * u(rng), 2.0 * pi * u(rng), 2.0 * u(rng), 6.0 * u(rng), u(rng));
        EXPECT_GE(f, 0.0);
    }
}

} // namespace
