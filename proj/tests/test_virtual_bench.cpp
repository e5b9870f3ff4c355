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
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cvsense/error.hpp"
#include "cvsense/seeding.hpp"
#include "cvsense/virtual_bench.hpp"

namespace {

using namespace cvsense;
using std::numbers::pi;

BenchConfig noiseless() {
    BenchConfig cfg;
    cfg.phase_noise_rms = 0.0;
    return cfg;
}

// Moments written out for the default probe: X squeezed, displaced at
// phi_alpha, pure loss.
void expected(const BenchConfig &c, double phi_hd, double phi_alpha, double &mu, double &var) {
    const double phi = phi_hd - c.encoded_phase;
    const double vx = c.eta * std::exp(-2.0 * c.r) + (1.0 - c.eta) * (2.0 * c.n_bar + 1.0);
    const double vp = c.eta * std::exp(2.0 * c.r) + (1.0 - c.eta) * (2.0 * c.n_bar + 1.0);
    mu = 2.0 * c.alpha * std::sqrt(c.eta) * std::cos(phi - phi_alpha);
    var = vx * std::cos(phi) * std::cos(phi) + vp * std::sin(phi) * std::sin(phi);
}

TEST(VirtualBench, ExpectedMomentsMatchClosedForm) {
    BenchConfig c = noiseless();
    c.n_bar = 0.3;
    c.encoded_phase = 0.2;
    for (double hd : {-1.0, 0.0, 0.5}) {
        double mu = 0.0;
        double var = 0.0;
        expected(c, hd, 1.1, mu, var);
        const HomodyneMoments m = expected_moments(c, hd, 1.1);
        EXPECT_NEAR(m.mu, mu, 1e-12);
        EXPECT_NEAR(m.var, var, 1e-12);
    }
}

TEST(VirtualBench, SamplesConvergeToMoments) {
    const BenchConfig c = noiseless();
    const long long n = 1000000;
    double mu = 0.0;
    double var = 0.0;
    expected(c, 0.3, 1.2, mu, var);
    const MeasurementRecord rec = measure(c, 0.3, 1.2, 99, n);
    EXPECT_EQ(rec.n_samples, n);
    EXPECT_NEAR(rec.sample_mean, mu, 5.0 * std::sqrt(var / n));
    EXPECT_NEAR(rec.sample_var, var, 5.0 * var * std::sqrt(2.0 / n));
}

TEST(VirtualBench, SameSeedSameSamples) {
    const BenchConfig c;
    const MeasurementRecord a = measure(c, 0.1, 0.2, 5, 1000);
    const MeasurementRecord b = measure(c, 0.1, 0.2, 5, 1000);
    const MeasurementRecord d = measure(c, 0.1, 0.2, 6, 1000);
    EXPECT_EQ(a.sample_mean, b.sample_mean);
    EXPECT_EQ(a.sample_var, b.sample_var);
    EXPECT_NE(a.sample_mean, d.sample_mean);
}

TEST(VirtualBench, CallSeedsDeriveFromBenchSeed) {
    BenchConfig c;
    c.rng_seed = 1234;
    c.samples_per_measurement = 500;
    VirtualBench bench(c);
    const MeasurementRecord first = bench.measure(0.0, 0.0);
    const MeasurementRecord second = bench.measure(0.0, 0.0);
    EXPECT_EQ(first.seed_used, derive_seed(1234, 0));
    EXPECT_EQ(second.seed_used, derive_seed(1234, 1));
    EXPECT_EQ(bench.measurement_count(), 2u);
    EXPECT_EQ(first.sample_mean, measure(c, 0.0, 0.0, derive_seed(1234, 0), 500).sample_mean);
}

TEST(VirtualBench, PhaseNoiseBroadensVariance) {
    BenchConfig c;
    c.phase_noise_rms = 0.05;
    // Law of total variance over a Gaussian jitter, by direct quadrature.
    double m1 = 0.0;
    double m2 = 0.0;
    double inner = 0.0;
    double weight = 0.0;
    for (int k = -4000; k <= 4000; ++k) {
        const double d = 8.0 * c.phase_noise_rms * k / 4000.0;
        const double w = std::exp(-0.5 * d * d / (c.phase_noise_rms * c.phase_noise_rms));
        double mu = 0.0;
        double var = 0.0;
        expected(c, d, pi / 2, mu, var);
        m1 += w * mu;
        m2 += w * mu * mu;
        inner += w * var;
        weight += w;
    }
    const double total = inner / weight + m2 / weight - (m1 / weight) * (m1 / weight);
    const long long n = 400000;
    const MeasurementRecord rec = measure(c, 0.0, pi / 2, 17, n);
    EXPECT_NEAR(rec.sample_var, total, 5.0 * total * std::sqrt(2.0 / n) + 0.01 * total);
    double mu0 = 0.0;
    double var0 = 0.0;
    expected(c, 0.0, pi / 2, mu0, var0);
    EXPECT_GT(rec.sample_var, 1.5 * var0);
}

TEST(VirtualBench, BatchNoiseSharesOneDraw) {
    BenchConfig c;
    c.phase_noise_rms = 0.2;
    c.per_sample_noise = false;
    const long long n = 200000;
    const MeasurementRecord rec = measure(c, 0.0, pi / 2, 23, n);
    // The mean fixes the single jitter; the spread is that of one fixed basis.
    const double d = std::asin(rec.sample_mean / (2.0 * c.alpha * std::sqrt(c.eta)));
    double mu = 0.0;
    double var = 0.0;
    expected(c, d, pi / 2, mu, var);
    EXPECT_GT(std::abs(d), 1e-3);
    EXPECT_NEAR(rec.sample_var, var, 5.0 * var * std::sqrt(2.0 / n) + 0.01 * var);
}

TEST(VirtualBench, TrueCostIsInverseClosedFormFisher) {
    const BenchConfig c;
    for (double hd : {-0.5, 0.0, 0.142, 1.0}) {
        for (double pa : {0.3, pi / 2, -2.0}) {
            const double phi = hd;
            const double vx = c.eta * std::exp(-2.0 * c.r) + 1.0 - c.eta;
            const double vp = c.eta * std::exp(2.0 * c.r) + 1.0 - c.eta;
            const double v = vx * std::cos(phi) * std::cos(phi) + vp * std::sin(phi) * std::sin(phi);
            const double dmu = 2.0 * c.alpha * std::sqrt(c.eta) * std::sin(phi - pa);
            const double dv = (vp - vx) * std::sin(2.0 * phi);
            const double f = dmu * dmu / v + dv * dv / (2.0 * v * v);
            EXPECT_NEAR(true_cost(c, hd, pa), 1.0 / f, 1e-12 / f);
        }
    }
}

TEST(VirtualBench, ShotNoiseLimitUsesProbePhotonNumber) {
    const BenchConfig c;
    const double n = std::sinh(c.r) * std::sinh(c.r) + c.alpha * c.alpha;
    EXPECT_NEAR(probe_photon_number(c), n, 1e-10);
    EXPECT_NEAR(probe_photon_number(c), 31.78, 0.01);
    EXPECT_NEAR(shot_noise_limit(c), 1.0 / (4.0 * n), 1e-15);
}

TEST(VirtualBench, RejectsInvalidConfig) {
    BenchConfig c;
    c.eta = 1.2;
    EXPECT_THROW(VirtualBench{c}, Error);
    c = BenchConfig{};
    c.samples_per_measurement = 1;
    EXPECT_THROW(VirtualBench{c}, Error);
    c = BenchConfig{};
    c.phase_noise_rms = -0.1;
    EXPECT_THROW(c.validate(), Error);
}

TEST(Perturbations, KickAppliesOnceAtItsEpoch) {
    const std::vector<Perturbation> s{{15, 0.5, -0.25, PerturbationKind::Kick}};
    const Settings base{0.1, 0.2};
    EXPECT_DOUBLE_EQ(apply_perturbations(base, s, 14).phi_hd, 0.1);
    EXPECT_DOUBLE_EQ(apply_perturbations(base, s, 15).phi_hd, 0.6);
    EXPECT_DOUBLE_EQ(apply_perturbations(base, s, 15).phi_alpha, -0.05);
    EXPECT_DOUBLE_EQ(apply_perturbations(base, s, 16).phi_hd, 0.1);
    EXPECT_TRUE(kick_at(s, 15));
    EXPECT_FALSE(kick_at(s, 16));
}

TEST(Perturbations, DriftAccumulatesPerEpoch) {
    const std::vector<Perturbation> s{{10, 0.01, 0.0, PerturbationKind::DriftRate}};
    EXPECT_DOUBLE_EQ(perturbation_offset(s, 10).phi_hd, 0.0);
    EXPECT_NEAR(perturbation_offset(s, 13).phi_hd, 0.03, 1e-15);
    EXPECT_NEAR(apply_perturbations({0.0, 0.0}, s, 13).phi_hd, 0.01, 1e-15);
}

// Replaying the schedule epoch by epoch reproduces the cumulative offset,
// and the function has no hidden state.
TEST(PerturbationsProperty, ReplayIsIdempotent) {
    const std::vector<Perturbation> s{{3, 0.5, 0.5, PerturbationKind::Kick},
                                      {5, 0.02, -0.01, PerturbationKind::DriftRate},
                                      {9, -0.3, 0.1, PerturbationKind::Kick}};
    Settings a{0.0, 0.0};
    for (int epoch = 1; epoch <= 20; ++epoch) {
        a = apply_perturbations(a, s, epoch);
        const Settings total = perturbation_offset(s, epoch);
        EXPECT_NEAR(a.phi_hd, total.phi_hd, 1e-12);
        EXPECT_NEAR(a.phi_alpha, total.phi_alpha, 1e-12);
        const Settings again = apply_perturbations({0.0, 0.0}, s, epoch);
        EXPECT_EQ(again.phi_hd, apply_perturbations({0.0, 0.0}, s, epoch).phi_hd);
    }
}

TEST(WrapAngle, MapsIntoHalfOpenInterval) {
    EXPECT_DOUBLE_EQ(wrap_angle(pi), pi);
    EXPECT_DOUBLE_EQ(wrap_angle(-pi), pi);
    EXPECT_NEAR(wrap_angle(3.0 * pi / 2), -pi / 2, 1e-15);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng);
        const double w = wrap_angle(x);
        EXPECT_GT(w, -pi);
        EXPECT_LE(w, pi);
        EXPECT_NEAR(std::remainder(x - w, 2.0 * pi), 0.0, 1e-12);
    }
}

TEST(Seeding, DerivedSeedsAreDistinctAndStable) {
    EXPECT_EQ(derive_seed(7, "bench"), derive_seed(7, "bench"));
    EXPECT_NE(derive_seed(7, "bench"), derive_seed(7, "bo"));
    EXPECT_NE(derive_seed(7, 0), derive_seed(7, 1));
    EXPECT_NE(derive_seed(7, 0), derive_seed(8, 0));
}

} // namespace
