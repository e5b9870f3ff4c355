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
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "cvsense/error.hpp"
#include "cvsense/optimizers.hpp"
#include "cvsense/seeding.hpp"

namespace {

using namespace cvsense;
using std::numbers::pi;

double closed_form_cost(const BenchConfig &c, double phi, double pa) {
    const double vx = c.eta * std::exp(-2.0 * c.r) + 1.0 - c.eta;
    const double vp = c.eta * std::exp(2.0 * c.r) + 1.0 - c.eta;
    const double v = vx * std::cos(phi) * std::cos(phi) + vp * std::sin(phi) * std::sin(phi);
    const double dmu = 2.0 * c.alpha * std::sqrt(c.eta) * std::sin(phi - pa);
    const double dv = (vp - vx) * std::sin(2.0 * phi);
    return 1.0 / (dmu * dmu / v + dv * dv / (2.0 * v * v));
}

// Brute-force minimum of the closed-form cost over a fine grid.
double oracle_minimum(const BenchConfig &c) {
    const int n = 721;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double phi = -pi + 2.0 * pi * i / (n - 1);
            const double pa = -pi + 2.0 * pi * j / (n - 1);
            best = std::min(best, closed_form_cost(c, phi, pa));
        }
    }
    return best;
}

BenchConfig noiseless(std::uint64_t seed = 1) {
    BenchConfig c;
    c.phase_noise_rms = 0.0;
    c.rng_seed = seed;
    return c;
}

TEST(GradientDescent, ZeroLearningRateKeepsSettings) {
    VirtualBench bench(noiseless());
    GDConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 5;
    cfg.n_samples = 1000;
    const OptimizationTrace t = run_gradient_descent(bench, cfg);
    ASSERT_EQ(t.records.size(), 5u);
    for (const auto &r : t.records) {
        EXPECT_DOUBLE_EQ(r.phi_hd, cfg.initial.phi_hd);
        EXPECT_DOUBLE_EQ(r.phi_alpha, cfg.initial.phi_alpha);
    }
    EXPECT_EQ(t.optimizer, "gd");
    EXPECT_EQ(t.records.front().epoch, 1);
}

TEST(GradientDescent, ConvergesToOracleMinimumWithoutNoise) {
    const BenchConfig c = noiseless(3);
    VirtualBench bench(c);
    GDConfig cfg;
    cfg.n_samples = 100000;
    cfg.epochs = 50;
    const OptimizationTrace t = run_gradient_descent(bench, cfg);
    const double best = oracle_minimum(c);
    EXPECT_NEAR(best, 4.03776e-3, 1e-7);
    const EpochRecord &last = t.records.back();
    EXPECT_LE(last.true_cost, 1.05 * best);
    EXPECT_NEAR(last.true_cost, closed_form_cost(c, last.phi_hd, last.phi_alpha), 1e-12);
}

// With a small step and precise estimates every update lowers the true cost.
TEST(GradientDescentProperty, DescentAtSmallLearningRate) {
    VirtualBench bench(noiseless(5));
    GDConfig cfg;
    cfg.learning_rate = 1.0;
    cfg.n_samples = 1000000;
    cfg.epochs = 8;
    const OptimizationTrace t = run_gradient_descent(bench, cfg);
    for (std::size_t i = 1; i < t.records.size(); ++i) {
        EXPECT_LE(t.records[i].true_cost, t.records[i - 1].true_cost * (1.0 + 1e-3)) << "epoch " << i + 1;
    }
    EXPECT_LT(t.records.back().true_cost, t.records.front().true_cost);
}

TEST(GradientDescent, MeasurementAccounting) {
    for (auto schedule : {DisplacementGradientSchedule::Compact, DisplacementGradientSchedule::Full}) {
        VirtualBench bench(noiseless());
        GDConfig cfg;
        cfg.epochs = 4;
        cfg.n_samples = 500;
        cfg.schedule = schedule;
        const OptimizationTrace t = run_gradient_descent(bench, cfg);
        const int per_epoch = schedule == DisplacementGradientSchedule::Compact ? 15 : 17;
        long long total = 0;
        for (const auto &r : t.records) {
            EXPECT_EQ(r.measurements, per_epoch);
            total += r.measurements;
            EXPECT_EQ(r.cumulative_measurements, total);
            EXPECT_TRUE(std::isfinite(r.grad_norm));
            EXPECT_NEAR(r.grad_norm, std::hypot(r.dC_dphi_hd, r.dC_dphi_alpha), 1e-15);
            EXPECT_TRUE(std::isnan(r.ei_max));
        }
        EXPECT_EQ(bench.measurement_count(), static_cast<std::uint64_t>(total));
    }
}

// Sampled vacuum statistics give a tiny but nonzero Fisher estimate; the
// model cost is infinite and the settings stay finite.
TEST(GradientDescent, VacuumProbeHasInfiniteModelCost) {
    BenchConfig c = noiseless();
    c.r = 0.0;
    c.alpha = 0.0;
    VirtualBench bench(c);
    GDConfig cfg;
    cfg.epochs = 3;
    cfg.n_samples = 2000;
    const OptimizationTrace t = run_gradient_descent(bench, cfg);
    for (const auto &r : t.records) {
        EXPECT_TRUE(std::isinf(r.true_cost));
        EXPECT_GT(r.cost, 10.0);
        EXPECT_TRUE(std::isfinite(r.phi_hd));
        EXPECT_TRUE(std::isfinite(r.phi_alpha));
    }
}

TEST(BayesianOptimization, ZeroFisherQueryIsFlaggedAndSkipped) {
    const BenchConfig c = noiseless();
    const CostOracle analytic = analytic_oracle(c);
    int calls = 0;
    const CostOracle flaky = [&](const Settings &s) {
        OracleResult r = analytic(s);
        if (++calls == 2) {
            r.estimate.zero_fisher = true;
            r.estimate.fisher = 0.0;
            r.estimate.cost = std::numeric_limits<double>::infinity();
        }
        return r;
    };
    const std::vector<WarmPoint> warm = random_warm_start(analytic, 8, 4);
    BOConfig cfg;
    cfg.epochs = 4;
    cfg.grid_size = 30;
    const BOResult r = run_bayesian_optimization(flaky, warm, cfg);
    EXPECT_EQ(r.trace.records[1].event, "infinite_cost");
    EXPECT_TRUE(std::isinf(r.trace.records[1].cost));
    EXPECT_EQ(r.trace.records[0].event, "");
    EXPECT_TRUE(std::isfinite(r.best_cost));
}

TEST(GradientDescent, KickMovesSettingsAtItsEpoch) {
    VirtualBench bench(noiseless());
    GDConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 5;
    cfg.n_samples = 200;
    const std::vector<Perturbation> s{{3, 0.5, -0.5, PerturbationKind::Kick}};
    std::vector<int> seen;
    const OptimizationTrace t =
        run_gradient_descent(bench, cfg, s, [&](const EpochRecord &r) { seen.push_back(r.epoch); });
    EXPECT_EQ(seen, (std::vector<int>{1, 2, 3, 4, 5}));
    EXPECT_EQ(t.records[2].event, "kick");
    EXPECT_EQ(t.records[1].event, "");
    EXPECT_NEAR(t.records[1].phi_hd, 0.6, 1e-15);
    EXPECT_NEAR(t.records[2].phi_hd, 1.1, 1e-15);
    EXPECT_NEAR(t.records[4].phi_alpha, 1.5, 1e-15);
}

TEST(GradientDescent, SameSeedSameTrace) {
    GDConfig cfg;
    cfg.epochs = 6;
    cfg.n_samples = 1000;
    BenchConfig c;
    c.rng_seed = 77;
    VirtualBench a(c);
    VirtualBench b(c);
    const OptimizationTrace ta = run_gradient_descent(a, cfg);
    const OptimizationTrace tb = run_gradient_descent(b, cfg);
    for (std::size_t i = 0; i < ta.records.size(); ++i) {
        EXPECT_EQ(ta.records[i].cost, tb.records[i].cost);
        EXPECT_EQ(ta.records[i].phi_hd, tb.records[i].phi_hd);
    }
}

TEST(GradientDescent, RejectsBadConfig) {
    VirtualBench bench(noiseless());
    GDConfig cfg;
    cfg.epochs = -1;
    EXPECT_THROW((void)run_gradient_descent(bench, cfg), Error);
    cfg = GDConfig{};
    cfg.n_samples = 1;
    EXPECT_THROW((void)run_gradient_descent(bench, cfg), Error);
}

TEST(BayesianOptimization, AnalyticOracleFindsMinimum) {
    const BenchConfig c = noiseless();
    const CostOracle oracle = analytic_oracle(c);
    const std::vector<WarmPoint> warm = random_warm_start(oracle, 20, derive_seed(11, "warm_start"));
    ASSERT_EQ(warm.size(), 20u);
    BOConfig cfg;
    cfg.epochs = 50;
    cfg.seed = 3;
    const BOResult r = run_bayesian_optimization(oracle, warm, cfg);
    EXPECT_LE(r.best_cost, 1.05 * oracle_minimum(c));
    EXPECT_NEAR(r.best_cost, closed_form_cost(c, r.best_settings.phi_hd, r.best_settings.phi_alpha), 1e-12);
    EXPECT_EQ(r.trace.optimizer, "bo");
    EXPECT_EQ(r.trace.records.size(), 50u);
}

TEST(BayesianOptimizationProperty, BestNeverRegresses) {
    const CostOracle oracle = analytic_oracle(noiseless());
    const std::vector<WarmPoint> warm = random_warm_start(oracle, 10, 5);
    double warm_best = std::numeric_limits<double>::infinity();
    for (const auto &w : warm) {
        warm_best = std::min(warm_best, w.cost);
    }
    BOConfig cfg;
    cfg.epochs = 15;
    cfg.grid_size = 60;
    const BOResult r = run_bayesian_optimization(oracle, warm, cfg);
    double running = warm_best;
    for (const auto &rec : r.trace.records) {
        running = std::min(running, rec.cost);
        EXPECT_DOUBLE_EQ(rec.best_cost, running);
        EXPECT_GE(rec.ei_max, 0.0);
        EXPECT_GT(rec.lengthscale, 0.0);
        EXPECT_TRUE(std::isnan(rec.dC_dphi_hd));
    }
    EXPECT_DOUBLE_EQ(r.best_cost, running);
}

TEST(BayesianOptimization, BenchOracleSpendsFiveCallsPerEpoch) {
    VirtualBench bench(noiseless());
    const CostOracle oracle = bench_oracle(bench, 500);
    long long warm_calls = 0;
    const std::vector<WarmPoint> warm = random_warm_start(oracle, 6, 2, &warm_calls);
    EXPECT_EQ(warm_calls, 30);
    BOConfig cfg;
    cfg.epochs = 4;
    cfg.grid_size = 30;
    const BOResult r = run_bayesian_optimization(oracle, warm, cfg);
    for (const auto &rec : r.trace.records) {
        EXPECT_EQ(rec.measurements, 5);
    }
    EXPECT_EQ(bench.measurement_count(), 30u + 20u);
}

TEST(BayesianOptimization, QueriedGridPointsAreNotRepeated) {
    const CostOracle oracle = analytic_oracle(noiseless());
    const std::vector<WarmPoint> warm = random_warm_start(oracle, 5, 8);
    BOConfig cfg;
    cfg.epochs = 20;
    cfg.grid_size = 12;
    const BOResult r = run_bayesian_optimization(oracle, warm, cfg);
    for (std::size_t i = 0; i < r.trace.records.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const bool same = r.trace.records[i].phi_hd == r.trace.records[j].phi_hd &&
                              r.trace.records[i].phi_alpha == r.trace.records[j].phi_alpha;
            EXPECT_FALSE(same) << i << " repeats " << j;
        }
    }
}

TEST(BayesianOptimization, EmptyWarmStartIsRejected) {
    EXPECT_THROW((void)run_bayesian_optimization(analytic_oracle(noiseless()), {}, BOConfig{}), Error);
}

TEST(PriorPreset, FactorsAndSpreads) {
    const GPPriors tuned = prior_preset("tuned");
    const GPPriors loose = prior_preset("loose");
    const GPPriors strict = prior_preset("strict");
    EXPECT_NEAR(std::exp(tuned.lengthscale.mean_log), 0.3, 1e-12);
    ASSERT_TRUE(tuned.output_scale && loose.output_scale && strict.output_scale);
    EXPECT_NEAR(std::exp(loose.lengthscale.mean_log), 30.0, 1e-9);
    EXPECT_NEAR(std::exp(strict.lengthscale.mean_log), 0.003, 1e-12);
    EXPECT_NEAR(std::exp(loose.output_scale->mean_log - tuned.output_scale->mean_log), 100.0, 1e-9);
    EXPECT_NEAR(std::exp(strict.output_scale->mean_log - tuned.output_scale->mean_log), 0.01, 1e-12);
    EXPECT_GT(loose.lengthscale.std_log, tuned.lengthscale.std_log);
    EXPECT_LT(strict.lengthscale.std_log, tuned.lengthscale.std_log);
    try {
        (void)prior_preset("medium");
        FAIL() << "expected an error";
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::Config);
    }
}

TEST(CandidateGrid, LayoutHasFirstAxisFastest) {
    const Eigen::MatrixXd g = candidate_grid(4);
    ASSERT_EQ(g.rows(), 16);
    EXPECT_DOUBLE_EQ(g(0, 0), -pi);
    EXPECT_DOUBLE_EQ(g(0, 1), -pi);
    EXPECT_DOUBLE_EQ(g(1, 1), -pi);
    EXPECT_NEAR(g(1, 0), -pi / 3, 1e-15);
    EXPECT_DOUBLE_EQ(g(4, 0), -pi);
    EXPECT_NEAR(g(4, 1), -pi / 3, 1e-15);
    EXPECT_DOUBLE_EQ(g(15, 0), pi);
    EXPECT_DOUBLE_EQ(g(15, 1), pi);
}

TEST(MeanSettingsStep, UsesWrappedDistance) {
    OptimizationTrace t;
    EpochRecord a;
    a.phi_hd = 3.1;
    a.phi_alpha = 0.0;
    EpochRecord b;
    b.phi_hd = -3.1;
    b.phi_alpha = 0.0;
    EpochRecord c;
    c.phi_hd = -3.1;
    c.phi_alpha = 0.4;
    t.records = {a, b, c};
    EXPECT_NEAR(mean_settings_step(t), (2.0 * pi - 6.2 + 0.4) / 2.0, 1e-12);
    t.records.resize(1);
    EXPECT_DOUBLE_EQ(mean_settings_step(t), 0.0);
}

TEST(WarmPoints, SkipInfiniteCosts) {
    OptimizationTrace t;
    EpochRecord a;
    a.cost = 0.1;
    EpochRecord b;
    b.cost = std::numeric_limits<double>::infinity();
    t.records = {a, b, a};
    EXPECT_EQ(warm_points_from(t).size(), 2u);
}

} // namespace
