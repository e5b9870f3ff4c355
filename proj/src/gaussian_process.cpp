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
#include "cvsense/gaussian_process.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "cvsense/error.hpp"

namespace cvsense {

namespace {

constexpr std::array<double, 6> kJitterLadder{0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};

// Box in log-parameter space; leaving it costs a quadratic penalty so the
// line search never sees overflow.
constexpr std::array<double, 3> kLogLower{-9.2, -27.6, -27.6}; // 1e-4, 1e-12, 1e-12
constexpr std::array<double, 3> kLogUpper{6.9, 13.8, 13.8};     // 1e3, 1e6, 1e6
constexpr double kBoxPenalty = 1e3;

double output_mean(const GPModel &m) {
    return (m.center_outputs && m.outputs.size() > 0) ? m.outputs.mean() : 0.0;
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows(), b.rows());
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            d.col(j).array() += (a.col(k).array() - b(j, k)).square();
        }
    }
    return d;
}

struct Factorisation {
    Eigen::LLT<Eigen::MatrixXd> chol;
    double jitter = 0.0;
    bool ok = false;
};

Factorisation factorise(const Eigen::MatrixXd &k_signal, double noise, double min_jitter) {
    Factorisation f;
    for (double step : kJitterLadder) {
        const double jitter = std::max(step, min_jitter);
        Eigen::MatrixXd k = k_signal;
        k.diagonal().array() += noise + jitter;
        f.chol.compute(k);
        if (f.chol.info() == Eigen::Success) {
            f.jitter = jitter;
            f.ok = true;
            return f;
        }
    }
    return f;
}

struct FitProblem {
    const GPModel *model;
    Eigen::MatrixXd sqdist;
    Eigen::VectorXd centred;
};

GPHyperparameters from_log(const double *theta) {
    return {std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2])};
}

// Log marginal likelihood and its gradient in log-parameter space. Returns
// false if the kernel stays indefinite.
bool marginal_likelihood(const FitProblem &p, const double *theta, double &value, double *grad) {
    const GPModel &m = *p.model;
    const GPHyperparameters h = from_log(theta);
    const Eigen::Index n = m.size();

    const Eigen::MatrixXd k_signal =
        h.output_scale * (-p.sqdist.array() / (2.0 * h.lengthscale * h.lengthscale)).exp().matrix();
    const Factorisation f = factorise(k_signal, h.noise, m.min_jitter);
    if (!f.ok) {
        return false;
    }
    const Eigen::VectorXd alpha = f.chol.solve(p.centred);
    const double log_det = 2.0 * f.chol.matrixLLT().diagonal().array().log().sum();
    value = -0.5 * p.centred.dot(alpha) - 0.5 * log_det -
            0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    if (grad != nullptr) {
        // d/dtheta = tr((alpha alpha^T - K^{-1}) dK/dtheta) / 2
        Eigen::MatrixXd l_inv = Eigen::MatrixXd::Identity(n, n);
        f.chol.matrixL().solveInPlace(l_inv);
        Eigen::MatrixXd w = alpha * alpha.transpose();
        w.noalias() -= l_inv.transpose() * l_inv.triangularView<Eigen::Lower>();
        const double inv_l2 = 1.0 / (h.lengthscale * h.lengthscale);
        grad[0] = 0.5 * (w.array() * k_signal.array() * p.sqdist.array()).sum() * inv_l2;
        grad[1] = 0.5 * (w.array() * k_signal.array()).sum();
        grad[2] = 0.5 * w.trace() * h.noise;
    }
    return true;
}

// d log p(x) / d log x for a lognormal prior.
double log_prior_slope(const LogNormalPrior &prior, double log_x) {
    return -(log_x - prior.mean_log) / (prior.std_log * prior.std_log) - 1.0;
}

// Negative log posterior (up to a constant) plus the box penalty.
double objective(const FitProblem &p, const double *theta, double *grad) {
    const GPModel &m = *p.model;
    double lml = 0.0;
    if (!marginal_likelihood(p, theta, lml, grad)) {
        if (grad != nullptr) {
            std::fill(grad, grad + 3, 0.0);
        }
        return std::numeric_limits<double>::max();
    }
    double value = -lml - m.lengthscale_prior.log_density(std::exp(theta[0]));
    if (m.output_scale_prior) {
        value -= m.output_scale_prior->log_density(std::exp(theta[1]));
    }
    if (grad != nullptr) {
        for (int i = 0; i < 3; ++i) {
            grad[i] = -grad[i];
        }
        grad[0] -= log_prior_slope(m.lengthscale_prior, theta[0]);
        if (m.output_scale_prior) {
            grad[1] -= log_prior_slope(*m.output_scale_prior, theta[1]);
        }
    }
    for (int i = 0; i < 3; ++i) {
        const double lo = theta[i] - kLogLower[i];
        const double hi = theta[i] - kLogUpper[i];
        const double excess = lo < 0.0 ? lo : (hi > 0.0 ? hi : 0.0);
        value += kBoxPenalty * excess * excess;
        if (grad != nullptr) {
            grad[i] += 2.0 * kBoxPenalty * excess;
        }
    }
    return value;
}

double gsl_f(const gsl_vector *x, void *params) {
    return objective(*static_cast<const FitProblem *>(params), x->data, nullptr);
}

void gsl_df(const gsl_vector *x, void *params, gsl_vector *g) {
    std::array<double, 3> grad{};
    objective(*static_cast<const FitProblem *>(params), x->data, grad.data());
    for (int i = 0; i < 3; ++i) {
        gsl_vector_set(g, i, grad[i]);
    }
}

void gsl_fdf(const gsl_vector *x, void *params, double *f, gsl_vector *g) {
    std::array<double, 3> grad{};
    *f = objective(*static_cast<const FitProblem *>(params), x->data, grad.data());
    for (int i = 0; i < 3; ++i) {
        gsl_vector_set(g, i, grad[i]);
    }
}

struct LocalResult {
    std::array<double, 3> theta;
    double value;
};

LocalResult minimise_from(FitProblem &problem, std::array<double, 3> start, const GPFitOptions &opt) {
    gsl_multimin_function_fdf fn;
    fn.n = 3;
    fn.f = &gsl_f;
    fn.df = &gsl_df;
    fn.fdf = &gsl_fdf;
    fn.params = &problem;

    gsl_vector *x = gsl_vector_alloc(3);
    for (int i = 0; i < 3; ++i) {
        gsl_vector_set(x, i, start[i]);
    }
    gsl_multimin_fdfminimizer *s =
        gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, 3);
    gsl_multimin_fdfminimizer_set(s, &fn, x, 0.1, 0.1);

    double last = s->f;
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        if (gsl_multimin_fdfminimizer_iterate(s) != GSL_SUCCESS) {
            break; // no further progress along the search direction
        }
        if (gsl_multimin_test_gradient(s->gradient, opt.gradient_tolerance) == GSL_SUCCESS) {
            break;
        }
        if (last - s->f < opt.value_tolerance * std::max(1.0, std::abs(s->f))) {
            break;
        }
        last = s->f;
    }
    LocalResult out{};
    for (int i = 0; i < 3; ++i) {
        out.theta[i] = gsl_vector_get(s->x, i);
    }
    out.value = s->f;
    gsl_multimin_fdfminimizer_free(s);
    gsl_vector_free(x);
    return out;
}

// GSL's default handler aborts the process; errors here surface through
// return codes instead.
// The GSL error handler is process-wide: the first active fit switches it
// off and the last one restores it.
std::mutex gsl_handler_mutex;
int gsl_handler_depth = 0;
gsl_error_handler_t *gsl_saved_handler = nullptr;

struct GslHandlerGuard {
    GslHandlerGuard() {
        std::lock_guard<std::mutex> lock(gsl_handler_mutex);
        if (gsl_handler_depth++ == 0) {
            gsl_saved_handler = gsl_set_error_handler_off();
        }
    }
    ~GslHandlerGuard() {
        std::lock_guard<std::mutex> lock(gsl_handler_mutex);
        if (--gsl_handler_depth == 0) {
            gsl_set_error_handler(gsl_saved_handler);
        }
    }
    GslHandlerGuard(const GslHandlerGuard &) = delete;
    GslHandlerGuard &operator=(const GslHandlerGuard &) = delete;
};

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

} // namespace

double LogNormalPrior::log_density(double x) const {
    const double z = (std::log(x) - mean_log) / std_log;
    return -0.5 * z * z - std::log(x * std_log * std::sqrt(2.0 * std::numbers::pi));
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b, double lengthscale,
                           double output_scale) {
    return output_scale *
           (-squared_distances(a, b).array() / (2.0 * lengthscale * lengthscale)).exp().matrix();
}

GPModel gp_condition(GPModel model) {
    require(model.inputs.cols() == 2 || model.inputs.rows() == 0, "GP inputs must have two columns");
    require(model.inputs.rows() == model.outputs.size(), "GP inputs and outputs differ in length");
    require(model.hyper.lengthscale > 0.0 && model.hyper.output_scale > 0.0 && model.hyper.noise >= 0.0,
            "GP hyperparameters out of range");
    model.posterior.reset();
    if (model.size() == 0) {
        return model;
    }
    const Eigen::MatrixXd k =
        rbf_kernel(model.inputs, model.inputs, model.hyper.lengthscale, model.hyper.output_scale);
    Factorisation f = factorise(k, model.hyper.noise, model.min_jitter);
    require(f.ok, "kernel matrix is not positive definite after the jitter ladder",
            ErrorCode::Numerical);
    GPPosterior post;
    post.mean_offset = output_mean(model);
    post.weights = f.chol.solve((model.outputs.array() - post.mean_offset).matrix());
    post.chol = std::move(f.chol);
    post.jitter = f.jitter;
    model.posterior = std::move(post);
    return model;
}

double log_marginal_likelihood(const GPModel &model, const GPHyperparameters &h, Eigen::Vector3d *grad) {
    const FitProblem p{&model, squared_distances(model.inputs, model.inputs),
                       model.outputs.array() - output_mean(model)};
    const std::array<double, 3> theta{std::log(h.lengthscale), std::log(h.output_scale), std::log(h.noise)};
    std::array<double, 3> g{};
    double value = 0.0;
    require(marginal_likelihood(p, theta.data(), value, grad != nullptr ? g.data() : nullptr),
            "kernel matrix is not positive definite after the jitter ladder", ErrorCode::Numerical);
    if (grad != nullptr) {
        *grad << g[0], g[1], g[2];
    }
    return value;
}

GPModel gp_fit(GPModel model, const GPFitOptions &options) {
    require(model.size() >= 2, "GP fitting needs at least two observations");
    require(model.inputs.cols() == 2, "GP inputs must have two columns");
    require(model.inputs.rows() == model.outputs.size(), "GP inputs and outputs differ in length");
    require(model.lengthscale_prior.std_log > 0.0, "lengthscale prior needs a positive spread");
    require(!model.output_scale_prior || model.output_scale_prior->std_log > 0.0,
            "output-scale prior needs a positive spread");
    GslHandlerGuard guard;

    FitProblem problem{&model, squared_distances(model.inputs, model.inputs),
                       model.outputs.array() - output_mean(model)};

    const double y_var = std::max(problem.centred.squaredNorm() / static_cast<double>(model.size()), 1e-12);
    const double log_var = std::log(y_var);
    const double log_scale = model.output_scale_prior ? model.output_scale_prior->mean_log : log_var;

    std::vector<std::array<double, 3>> starts;
    if (options.warm_start) {
        const auto &w = *options.warm_start;
        starts.push_back({std::log(w.lengthscale), std::log(w.output_scale), std::log(w.noise)});
    }
    if (starts.empty()) {
        starts.push_back({model.lengthscale_prior.mean_log, log_scale, log_var - 4.6});
    }
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    while (static_cast<int>(starts.size()) < std::max(options.starts, 1)) {
        std::array<double, 3> s{model.lengthscale_prior.mean_log + model.lengthscale_prior.std_log * unit(rng),
                                log_scale + unit(rng), log_var - 4.6 + 2.0 * unit(rng)};
        for (int i = 0; i < 3; ++i) {
            s[i] = std::clamp(s[i], kLogLower[i], kLogUpper[i]);
        }
        starts.push_back(s);
    }

    LocalResult best{{}, std::numeric_limits<double>::infinity()};
    for (const auto &s : starts) {
        const LocalResult r = minimise_from(problem, s, options);
        if (std::isfinite(r.value) && r.value < best.value) {
            best = r;
        }
    }
    require(std::isfinite(best.value) && best.value < std::numeric_limits<double>::max(),
            "GP hyperparameter search found no finite optimum", ErrorCode::Numerical);
    for (int i = 0; i < 3; ++i) {
        best.theta[i] = std::clamp(best.theta[i], kLogLower[i], kLogUpper[i]);
    }
    model.hyper = from_log(best.theta.data());
    return gp_condition(std::move(model));
}

void gp_predict_batch(const GPModel &model, const Eigen::MatrixXd &points, Eigen::VectorXd &mu,
                      Eigen::VectorXd &var) {
    const Eigen::Index m = points.rows();
    mu.resize(m);
    var.resize(m);
    if (model.size() == 0) {
        mu.setZero();
        var.setConstant(model.hyper.output_scale);
        return;
    }
    require(model.posterior.has_value(), "GP model has data but was not conditioned");
    const GPPosterior &post = *model.posterior;
    constexpr Eigen::Index kChunk = 2048;
    for (Eigen::Index start = 0; start < m; start += kChunk) {
        const Eigen::Index len = std::min(kChunk, m - start);
        const Eigen::MatrixXd ks = rbf_kernel(model.inputs, points.middleRows(start, len),
                                              model.hyper.lengthscale, model.hyper.output_scale);
        mu.segment(start, len) = (ks.transpose() * post.weights).array() + post.mean_offset;
        const Eigen::MatrixXd v = post.chol.matrixL().solve(ks);
        var.segment(start, len) =
            (model.hyper.output_scale - v.colwise().squaredNorm().transpose().array()).max(0.0);
    }
}

GPPrediction gp_predict(const GPModel &model, const Eigen::Vector2d &x) {
    Eigen::VectorXd mu;
    Eigen::VectorXd var;
    gp_predict_batch(model, x.transpose(), mu, var);
    return {mu(0), var(0)};
}

double expected_improvement(double mu, double sigma, double best) {
    const double improvement = best - mu;
    if (!(sigma > 0.0)) {
        return std::max(improvement, 0.0);
    }
    const double z = improvement / sigma;
    return std::max(improvement * normal_cdf(z) + sigma * normal_pdf(z), 0.0);
}

double expected_improvement(const GPModel &model, const Eigen::Vector2d &x, double best) {
    const GPPrediction p = gp_predict(model, x);
    return expected_improvement(p.mu, std::sqrt(p.var), best);
}

namespace {

// Visits candidates in decreasing order of the EI upper bound and stops
// once the bound drops below the best exact EI. `kernel_columns(rows, out)`
// fills the cross-covariances between the training inputs and the given
// candidate rows.
template <typename KernelColumns>
AcquisitionMaximum search_candidates(const GPModel &model, const Eigen::VectorXd &mu, const Eigen::VectorXd &bound,
                                     double best, const std::vector<char> &excluded,
                                     KernelColumns &&kernel_columns) {
    const Eigen::Index m = mu.size();
    const GPPosterior &post = *model.posterior;
    const double s2 = model.hyper.output_scale;

    std::vector<Eigen::Index> order;
    order.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        if (excluded.empty() || excluded[static_cast<std::size_t>(i)] == 0) {
            order.push_back(i);
        }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return bound(a) > bound(b); });

    AcquisitionMaximum out;
    constexpr std::size_t kBatch = 256;
    std::vector<Eigen::Index> rows;
    Eigen::MatrixXd ks;
    for (std::size_t start = 0; start < order.size(); start += kBatch) {
        if (out.index >= 0 && bound(order[start]) < out.ei) {
            break;
        }
        const std::size_t len = std::min(kBatch, order.size() - start);
        rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                    order.begin() + static_cast<std::ptrdiff_t>(start + len));
        kernel_columns(rows, ks);
        const Eigen::MatrixXd v = post.chol.matrixL().solve(ks);
        for (std::size_t j = 0; j < len; ++j) {
            const Eigen::Index i = rows[j];
            if (out.index >= 0 && bound(i) < out.ei) {
                continue;
            }
            const double var = std::max(s2 - v.col(static_cast<Eigen::Index>(j)).squaredNorm(), 0.0);
            const double ei = expected_improvement(mu(i), std::sqrt(var), best);
            if (out.index < 0 || ei > out.ei || (ei == out.ei && i < out.index)) {
                out = {i, ei, mu(i), var};
            }
        }
    }
    return out;
}

// With no data every candidate has the prior EI; the first one wins.
AcquisitionMaximum prior_maximum(const GPModel &model, Eigen::Index m, double best,
                                 const std::vector<char> &excluded) {
    for (Eigen::Index i = 0; i < m; ++i) {
        if (excluded.empty() || excluded[static_cast<std::size_t>(i)] == 0) {
            return {i, expected_improvement(0.0, std::sqrt(model.hyper.output_scale), best), 0.0,
                    model.hyper.output_scale};
        }
    }
    return {};
}

double variance_bound(const GPModel &model, double kmax) {
    const double s2 = model.hyper.output_scale;
    const double denom = s2 + model.hyper.noise + model.posterior->jitter;
    return std::max(s2 - kmax * kmax / denom, 0.0);
}

} // namespace

AcquisitionMaximum argmax_expected_improvement(const GPModel &model, const Eigen::MatrixXd &candidates,
                                              double best, const std::vector<char> &excluded) {
    const Eigen::Index m = candidates.rows();
    require(excluded.empty() || static_cast<Eigen::Index>(excluded.size()) == m,
            "exclusion mask does not match the candidate count");
    if (model.size() == 0) {
        return prior_maximum(model, m, best, excluded);
    }
    require(model.posterior.has_value(), "GP model has data but was not conditioned");
    const GPPosterior &post = *model.posterior;
    const double l = model.hyper.lengthscale;
    const double s2 = model.hyper.output_scale;

    Eigen::VectorXd mu(m);
    Eigen::VectorXd bound(m);
    constexpr Eigen::Index kChunk = 2048;
    for (Eigen::Index start = 0; start < m; start += kChunk) {
        const Eigen::Index len = std::min(kChunk, m - start);
        const Eigen::MatrixXd ks = rbf_kernel(model.inputs, candidates.middleRows(start, len), l, s2);
        mu.segment(start, len) = (ks.transpose() * post.weights).array() + post.mean_offset;
        for (Eigen::Index j = 0; j < len; ++j) {
            const double var_ub = variance_bound(model, ks.col(j).maxCoeff());
            bound(start + j) = expected_improvement(mu(start + j), std::sqrt(var_ub), best);
        }
    }
    return search_candidates(model, mu, bound, best, excluded,
                             [&](const std::vector<Eigen::Index> &rows, Eigen::MatrixXd &ks) {
                                 Eigen::MatrixXd pts(static_cast<Eigen::Index>(rows.size()), candidates.cols());
                                 for (std::size_t j = 0; j < rows.size(); ++j) {
                                     pts.row(static_cast<Eigen::Index>(j)) = candidates.row(rows[j]);
                                 }
                                 ks = rbf_kernel(model.inputs, pts, l, s2);
                             });
}

AcquisitionMaximum argmax_expected_improvement_grid(const GPModel &model, const Eigen::VectorXd &axis0,
                                                   const Eigen::VectorXd &axis1, double best,
                                                   const std::vector<char> &excluded) {
    const Eigen::Index n0 = axis0.size();
    const Eigen::Index n1 = axis1.size();
    const Eigen::Index m = n0 * n1;
    require(excluded.empty() || static_cast<Eigen::Index>(excluded.size()) == m,
            "exclusion mask does not match the candidate count");
    if (model.size() == 0) {
        return prior_maximum(model, m, best, excluded);
    }
    require(model.inputs.cols() == 2, "grid search needs two-dimensional inputs");
    require(model.posterior.has_value(), "GP model has data but was not conditioned");
    const GPPosterior &post = *model.posterior;
    const double s2 = model.hyper.output_scale;
    const double scale = -0.5 / (model.hyper.lengthscale * model.hyper.lengthscale);
    const Eigen::Index n = model.size();

    // Per-axis kernel factors, N x n0 and N x n1.
    Eigen::MatrixXd e0(n, n0);
    Eigen::MatrixXd e1(n, n1);
    for (Eigen::Index g = 0; g < n0; ++g) {
        e0.col(g) = ((model.inputs.col(0).array() - axis0(g)).square() * scale).exp();
    }
    for (Eigen::Index g = 0; g < n1; ++g) {
        e1.col(g) = ((model.inputs.col(1).array() - axis1(g)).square() * scale).exp();
    }

    const Eigen::MatrixXd mean_grid = s2 * (e0.transpose() * post.weights.asDiagonal() * e1);
    Eigen::VectorXd mu(m);
    Eigen::VectorXd bound(m);
    for (Eigen::Index j = 0; j < n1; ++j) {
        for (Eigen::Index i = 0; i < n0; ++i) {
            const double kmax = s2 * (e0.col(i).array() * e1.col(j).array()).maxCoeff();
            const Eigen::Index idx = j * n0 + i;
            mu(idx) = mean_grid(i, j) + post.mean_offset;
            bound(idx) = expected_improvement(mu(idx), std::sqrt(variance_bound(model, kmax)), best);
        }
    }
    return search_candidates(model, mu, bound, best, excluded,
                             [&](const std::vector<Eigen::Index> &rows, Eigen::MatrixXd &ks) {
                                 ks.resize(n, static_cast<Eigen::Index>(rows.size()));
                                 for (std::size_t j = 0; j < rows.size(); ++j) {
                                     const Eigen::Index i0 = rows[j] % n0;
                                     const Eigen::Index i1 = rows[j] / n0;
                                     ks.col(static_cast<Eigen::Index>(j)) =
                                         s2 * (e0.col(i0).array() * e1.col(i1).array());
                                 }
                             });
}

} // namespace cvsense
