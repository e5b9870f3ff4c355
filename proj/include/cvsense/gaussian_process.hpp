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
 * @file gaussian_process.hpp
 * Gaussian-process surrogate with an RBF kernel over (phi_hd, phi_alpha).
 *
 *   k(x, x') = output_scale * exp(-|x - x'|^2 / (2 lengthscale^2))
 *   mu(x*)   = m + k*^T (K + noise I)^{-1} (y - m)
 *   var(x*)  = k(x*, x*) - k*^T (K + noise I)^{-1} k*
 *
 * m is the sample mean of the outputs when center_outputs is set, else 0.
 * Solves go through a Cholesky factor; a jitter ladder (1e-10 up to 1e-6)
 * is added to the diagonal when the plain factorisation fails.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace cvsense {

struct GPHyperparameters {
    double lengthscale = 0.3;
    double output_scale = 1.0;
    double noise = 1e-4; ///< observation noise variance sigma_n^2
};

/// Lognormal prior: log(x) ~ N(mean_log, std_log^2).
struct LogNormalPrior {
    double mean_log = -1.2039728043259361; // log(0.3)
    double std_log = 0.5;

    [[nodiscard]] double log_density(double x) const;
};

/// Cached factorisation of K + (noise + jitter) I.
struct GPPosterior {
    Eigen::LLT<Eigen::MatrixXd> chol;
    Eigen::VectorXd weights; ///< (K + noise I)^{-1} (y - m)
    double mean_offset = 0.0;
    double jitter = 0.0;
};

struct GPModel {
    Eigen::MatrixXd inputs;  ///< N x 2
    Eigen::VectorXd outputs; ///< N
    GPHyperparameters hyper;
    LogNormalPrior lengthscale_prior;
    std::optional<LogNormalPrior> output_scale_prior; ///< flat when unset
    bool center_outputs = true;
    double min_jitter = 0.0; ///< floor for the jitter ladder
    std::optional<GPPosterior> posterior; ///< set by gp_condition / gp_fit

    [[nodiscard]] Eigen::Index size() const { return inputs.rows(); }
};

struct GPPrediction {
    double mu;
    double var;
};

struct GPFitOptions {
    int starts = 16; ///< total, the warm start counting as one
    int max_iterations = 200;
    double gradient_tolerance = 1e-3; ///< on |grad| in log-parameter space
    double value_tolerance = 1e-8;    ///< relative decrease per iteration
    std::uint64_t seed = 0;
    /// Replaces the default first start (prior mean lengthscale, data
    /// variance as output scale, 1% of it as noise).
    std::optional<GPHyperparameters> warm_start;
};

/// Kernel matrix between the rows of a and b.
[[nodiscard]] Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b,
                                         double lengthscale, double output_scale);

/// Factorises with the current hyperparameters. Throws Error(Numerical) if
/// the kernel stays indefinite after the jitter ladder.
[[nodiscard]] GPModel gp_condition(GPModel model);

/// Log marginal likelihood (without the prior) at the given hyperparameters.
/// When `grad` is non-null it receives d/d(log lengthscale, log output_scale,
/// log noise).
[[nodiscard]] double log_marginal_likelihood(const GPModel &model, const GPHyperparameters &h,
                                             Eigen::Vector3d *grad = nullptr);

/// Maximises log marginal likelihood + log prior densities by
/// multi-start BFGS in log-parameter space, then conditions. Needs N >= 2.
[[nodiscard]] GPModel gp_fit(GPModel model, const GPFitOptions &options = {});

/// Posterior at one point. N == 0 returns the prior (0, output_scale).
/// Throws Error(InvalidArgument) if the model has data but was never
/// conditioned.
[[nodiscard]] GPPrediction gp_predict(const GPModel &model, const Eigen::Vector2d &x);

/// Posterior means and variances for every row of `points`.
void gp_predict_batch(const GPModel &model, const Eigen::MatrixXd &points, Eigen::VectorXd &mu,
                      Eigen::VectorXd &var);

/// Expected improvement for minimisation: with z = (best - mu) / sigma,
/// EI = (best - mu) Phi(z) + sigma phi(z); max(best - mu, 0) when sigma == 0.
[[nodiscard]] double expected_improvement(double mu, double sigma, double best);
[[nodiscard]] double expected_improvement(const GPModel &model, const Eigen::Vector2d &x, double best);

struct AcquisitionMaximum {
    Eigen::Index index = -1; ///< row of the candidate matrix, -1 if all were excluded
    double ei = 0.0;
    double mu = 0.0;
    double var = 0.0;
};

/// Exact argmax of expected improvement over the rows of `candidates`.
/// Rows flagged in `excluded` (same length, may be empty) are skipped; ties
/// go to the lowest row index. Candidates are visited in order of an upper
/// bound on EI (posterior variance is never above the variance left after
/// conditioning on the single closest training point), so most rows only
/// need the posterior mean.
[[nodiscard]] AcquisitionMaximum argmax_expected_improvement(const GPModel &model,
                                                             const Eigen::MatrixXd &candidates,
                                                             double best,
                                                             const std::vector<char> &excluded = {});

/// Same result as argmax_expected_improvement on the tensor-product grid
/// with rows (axis0[i], axis1[j]) at index j * axis0.size() + i. The RBF
/// kernel factorises over the axes, which avoids a full kernel evaluation
/// per candidate.
[[nodiscard]] AcquisitionMaximum argmax_expected_improvement_grid(const GPModel &model,
                                                                  const Eigen::VectorXd &axis0,
                                                                  const Eigen::VectorXd &axis1, double best,
                                                                  const std::vector<char> &excluded = {});

} // namespace cvsense
