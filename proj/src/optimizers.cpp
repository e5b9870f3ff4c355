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
#include "cvsense/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cvsense/error.hpp"
#include "cvsense/fisher.hpp"
#include "cvsense/seeding.hpp"

namespace cvsense {

namespace {

using std::numbers::pi;

// Output scale of log(cost); the tuned prior is weakly informative.
constexpr LogNormalPrior kTunedOutputScalePrior{0.0, 1.0};

void fill_from_estimate(EpochRecord &rec, const CostEstimate &est) {
    rec.phi_hd = est.settings.phi_hd;
    rec.phi_alpha = est.settings.phi_alpha;
    rec.cost = est.cost;
    rec.fisher = est.fisher;
    rec.mu = est.mu;
    rec.var = est.var;
    rec.dmu_dphi = est.dmu_dphi;
    rec.dvar_dphi = est.dvar_dphi;
}

double clip(double step, double limit) {
    return limit > 0.0 ? std::clamp(step, -limit, limit) : step;
}

std::string perturbation_event(std::span<const Perturbation> schedule, int epoch) {
    if (kick_at(schedule, epoch)) {
        return "kick";
    }
    for (const auto &p : schedule) {
        if (p.kind == PerturbationKind::DriftRate && epoch > p.epoch) {
            return "drift";
        }
    }
    return "";
}

} // namespace

void GDConfig::validate() const {
    require(std::isfinite(learning_rate) && learning_rate >= 0.0, "gd.learning_rate must be finite and >= 0",
            ErrorCode::Config);
    require(epochs >= 1, "gd.epochs must be at least 1", ErrorCode::Config);
    require(std::isfinite(initial.phi_hd) && std::isfinite(initial.phi_alpha),
            "gd initial settings must be finite", ErrorCode::Config);
    require(n_samples >= 2, "gd.n_samples must be at least 2", ErrorCode::Config);
    require(std::isfinite(max_step) && max_step >= 0.0, "gd.max_step must be >= 0", ErrorCode::Config);
}

OptimizationTrace run_gradient_descent(VirtualBench &bench, const GDConfig &cfg,
                                       std::span<const Perturbation> schedule, const EpochCallback &on_epoch) {
    cfg.validate();
    OptimizationTrace trace;
    trace.optimizer = "gd";
    Settings s{wrap_angle(cfg.initial.phi_hd), wrap_angle(cfg.initial.phi_alpha)};
    long long cumulative = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.event = perturbation_event(schedule, epoch);
        const Settings moved = apply_perturbations(s, schedule, epoch);
        s = {wrap_angle(moved.phi_hd), wrap_angle(moved.phi_alpha)};

        const CostEstimate est = estimate_cost(bench, s.phi_hd, s.phi_alpha, cfg.n_samples);
        fill_from_estimate(rec, est);
        rec.measurements = 5;
        rec.true_cost = true_cost(bench.config(), s.phi_hd, s.phi_alpha);

        if (est.zero_fisher) {
            rec.event = "infinite_cost";
        } else {
            const GradientEstimate g = estimate_gradient(bench, est, cfg.n_samples, cfg.schedule);
            rec.measurements += g.new_measurements_phi_hd + g.new_measurements_phi_alpha;
            rec.dC_dphi_hd = g.dC_dphi_hd;
            rec.dC_dphi_alpha = g.dC_dphi_alpha;
            rec.grad_norm = std::hypot(g.dC_dphi_hd, g.dC_dphi_alpha);
            s.phi_hd = wrap_angle(s.phi_hd - clip(cfg.learning_rate * g.dC_dphi_hd, cfg.max_step));
            s.phi_alpha = wrap_angle(s.phi_alpha - clip(cfg.learning_rate * g.dC_dphi_alpha, cfg.max_step));
        }
        cumulative += rec.measurements;
        rec.cumulative_measurements = cumulative;
        trace.records.push_back(rec);
        if (on_epoch) {
            on_epoch(rec);
        }
    }
    return trace;
}

GPPriors prior_preset(const std::string &name) {
    GPPriors tuned;
    tuned.output_scale = kTunedOutputScalePrior;
    if (name == "tuned") {
        return tuned;
    }
    double factor = 0.0;
    if (name == "loose") {
        factor = 100.0;
    } else if (name == "strict") {
        factor = 0.01;
    } else {
        fail(ErrorCode::Config, "unknown hyperprior preset '" + name + "'");
    }
    // "loose" is high and wide, "strict" low and narrow.
    const double spread = factor > 1.0 ? 10.0 : 0.1;
    GPPriors out;
    out.lengthscale = {tuned.lengthscale.mean_log + std::log(factor), tuned.lengthscale.std_log * spread};
    out.output_scale = LogNormalPrior{tuned.output_scale->mean_log + std::log(factor), tuned.output_scale->std_log * spread};
    return out;
}

void BOConfig::validate() const {
    require(epochs >= 0, "bo.epochs must be >= 0", ErrorCode::Config);
    require(grid_size >= 2, "bo.grid_size must be at least 2", ErrorCode::Config);
    require(priors.lengthscale.std_log > 0.0 && std::isfinite(priors.lengthscale.mean_log),
            "bo lengthscale prior must have a positive spread", ErrorCode::Config);
    require(!priors.output_scale ||
                (priors.output_scale->std_log > 0.0 && std::isfinite(priors.output_scale->mean_log)),
            "bo output-scale prior must have a positive spread", ErrorCode::Config);
    require(fit_starts >= 1 && refit_starts >= 1, "bo fit start counts out of range", ErrorCode::Config);
    require(max_fit_iterations >= 1, "bo.max_fit_iterations must be >= 1", ErrorCode::Config);
}

CostOracle bench_oracle(VirtualBench &bench, long long n_samples) {
    return [&bench, n_samples](const Settings &s) {
        OracleResult out;
        out.estimate = estimate_cost(bench, s.phi_hd, s.phi_alpha, n_samples);
        out.measurements = 5;
        out.true_cost = true_cost(bench.config(), s.phi_hd, s.phi_alpha);
        return out;
    };
}

CostOracle analytic_oracle(const BenchConfig &cfg) {
    cfg.validate();
    return [cfg](const Settings &s) {
        QuadratureDerivatives q =
            analytic_moments(s.phi_hd - cfg.encoded_phase, s.phi_alpha, cfg.r, cfg.alpha, cfg.eta);
        q.var += (1.0 - cfg.eta) * 2.0 * cfg.n_bar;
        OracleResult out;
        CostEstimate &e = out.estimate;
        e.settings = s;
        e.mu = q.mu;
        e.var = q.var;
        e.dmu_dphi = q.dmu_dphi;
        e.dvar_dphi = q.dvar_dphi;
        e.fisher = fisher_from_moments(q);
        e.zero_fisher = e.fisher < kFisherFloor;
        e.cost = e.zero_fisher ? std::numeric_limits<double>::infinity() : cost(e.fisher);
        out.true_cost = e.cost;
        return out;
    };
}

Eigen::MatrixXd candidate_grid(int grid_size) {
    require(grid_size >= 2, "candidate grid needs at least two points per axis");
    const Eigen::Index n = grid_size;
    Eigen::MatrixXd grid(n * n, 2);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            grid(j * n + i, 0) = -pi + 2.0 * pi * static_cast<double>(i) / static_cast<double>(n - 1);
            grid(j * n + i, 1) = -pi + 2.0 * pi * static_cast<double>(j) / static_cast<double>(n - 1);
        }
    }
    return grid;
}

std::vector<WarmPoint> random_warm_start(const CostOracle &oracle, int count, std::uint64_t seed,
                                         long long *measurements) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(-pi, pi);
    std::vector<WarmPoint> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        Settings s;
        s.phi_hd = angle(rng);
        s.phi_alpha = angle(rng);
        const OracleResult r = oracle(s);
        if (measurements != nullptr) {
            *measurements += r.measurements;
        }
        out.push_back({s, r.estimate.cost});
    }
    return out;
}

std::vector<WarmPoint> warm_points_from(const OptimizationTrace &trace) {
    std::vector<WarmPoint> out;
    for (const auto &r : trace.records) {
        if (std::isfinite(r.cost)) {
            out.push_back({{r.phi_hd, r.phi_alpha}, r.cost});
        }
    }
    return out;
}

double mean_settings_step(const OptimizationTrace &trace) {
    if (trace.records.size() < 2) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t i = 1; i < trace.records.size(); ++i) {
        const auto &a = trace.records[i - 1];
        const auto &b = trace.records[i];
        total += std::hypot(wrap_angle(b.phi_hd - a.phi_hd), wrap_angle(b.phi_alpha - a.phi_alpha));
    }
    return total / static_cast<double>(trace.records.size() - 1);
}

BOResult run_bayesian_optimization(const CostOracle &oracle, std::span<const WarmPoint> warm_start,
                                   const BOConfig &cfg, const EpochCallback &on_epoch) {
    cfg.validate();
    require(!warm_start.empty(), "Bayesian optimisation needs a non-empty warm start");

    auto transform = [&](double c) { return cfg.log_outputs ? std::log(c) : c; };

    std::vector<Settings> xs;
    std::vector<double> ys;
    BOResult result;
    result.trace.optimizer = "bo";
    for (const auto &w : warm_start) {
        if (std::isfinite(w.cost) && w.cost > 0.0) {
            xs.push_back({wrap_angle(w.settings.phi_hd), wrap_angle(w.settings.phi_alpha)});
            ys.push_back(transform(w.cost));
            if (w.cost < result.best_cost) {
                result.best_cost = w.cost;
                result.best_settings = xs.back();
            }
        }
    }
    require(xs.size() >= 2, "warm start has fewer than two finite costs");

    const Eigen::MatrixXd grid = candidate_grid(cfg.grid_size);
    const Eigen::VectorXd axis = grid.col(0).head(cfg.grid_size);
    std::vector<char> queried(static_cast<std::size_t>(grid.rows()), 0);

    GPModel model;
    model.lengthscale_prior = cfg.priors.lengthscale;
    model.output_scale_prior = cfg.priors.output_scale;
    std::optional<GPHyperparameters> previous;
    long long cumulative = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto n = static_cast<Eigen::Index>(xs.size());
        model.inputs.resize(n, 2);
        model.outputs.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            model.inputs(i, 0) = xs[static_cast<std::size_t>(i)].phi_hd;
            model.inputs(i, 1) = xs[static_cast<std::size_t>(i)].phi_alpha;
            model.outputs(i) = ys[static_cast<std::size_t>(i)];
        }
        GPFitOptions fit;
        fit.starts = previous ? cfg.refit_starts : cfg.fit_starts;
        fit.max_iterations = cfg.max_fit_iterations;
        fit.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch));
        fit.warm_start = previous;
        model.min_jitter = 0.0;
        try {
            model = gp_fit(std::move(model), fit);
        } catch (const Error &) {
            model.min_jitter = 1e-4;
            try {
                model = gp_fit(std::move(model), fit);
            } catch (const Error &e) {
                fail(ErrorCode::Optimizer, std::string("GP fit failed at BO epoch ") + std::to_string(epoch) +
                                               ": " + e.what());
            }
        }
        previous = model.hyper;

        const double best_y = *std::min_element(ys.begin(), ys.end());
        const AcquisitionMaximum next =
            argmax_expected_improvement_grid(model, axis, axis, best_y, cfg.exclude_queried ? queried : std::vector<char>{});
        require(next.index >= 0, "every candidate has already been queried", ErrorCode::Optimizer);
        queried[static_cast<std::size_t>(next.index)] = 1;
        const Settings s{grid(next.index, 0), grid(next.index, 1)};

        const OracleResult r = oracle(s);
        EpochRecord rec;
        rec.epoch = epoch;
        fill_from_estimate(rec, r.estimate);
        rec.phi_hd = s.phi_hd;
        rec.phi_alpha = s.phi_alpha;
        rec.measurements = r.measurements;
        cumulative += r.measurements;
        rec.cumulative_measurements = cumulative;
        rec.ei_max = next.ei;
        rec.lengthscale = model.hyper.lengthscale;
        rec.output_scale = model.hyper.output_scale;
        rec.noise = model.hyper.noise;
        rec.true_cost = r.true_cost;
        if (r.estimate.zero_fisher || !(r.estimate.cost > 0.0)) {
            rec.event = "infinite_cost";
        } else {
            xs.push_back(s);
            ys.push_back(transform(r.estimate.cost));
            if (r.estimate.cost < result.best_cost) {
                result.best_cost = r.estimate.cost;
                result.best_settings = s;
                result.best_from_warm_start = false;
            }
        }
        rec.best_cost = result.best_cost;
        result.trace.records.push_back(rec);
        if (on_epoch) {
            on_epoch(rec);
        }
    }
    result.final_hyper = model.hyper;
    return result;
}

} // namespace cvsense
