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
 * @file operator_shift.hpp
 * Heisenberg-picture gate matrices on the truncated operator basis
 * (I, X, P, X^2, P^2, XP, PX) and exact parameter-shift rules for them.
 *
 * Row i of a gate matrix M holds the image of basis operator i, so a
 * coefficient vector transforms as a -> M^T a. The basis is closed only up
 * to quadratic order; products that would leave it are rejected.
 */
#pragma once

#include <complex>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cvsense/gaussian_state.hpp"

namespace cvsense {

inline constexpr int kOperatorDim = 7;

/// Index of each basis operator in OperatorVector::coeffs.
enum class Basis : int { I = 0, X = 1, P = 2, XX = 3, PP = 4, XP = 5, PX = 6 };

using OperatorBasisMatrix = Eigen::Matrix<double, kOperatorDim, kOperatorDim>;

struct OperatorVector {
    Eigen::Matrix<double, kOperatorDim, 1> coeffs = Eigen::Matrix<double, kOperatorDim, 1>::Zero();

    [[nodiscard]] double &operator[](Basis b) { return coeffs(static_cast<int>(b)); }
    [[nodiscard]] double operator[](Basis b) const { return coeffs(static_cast<int>(b)); }

    /// True when every quadratic coefficient is zero.
    [[nodiscard]] bool is_linear() const;

    static OperatorVector unit(Basis b);
    /// n = (X^2 + P^2 - 2 I) / 4
    static OperatorVector number();
};

enum class GateParamName { R, Alpha, PhiAlpha, Phi };
enum class OperatorBlock { Linear, Quadratic };

/// Default free shift for the squeeze and displacement-amplitude rules.
inline constexpr double kDefaultShift = 0.1;

struct ShiftTerm {
    double offset;
    double weight;
};

/// Weighted parameter offsets whose combination of gate matrices equals the
/// parameter derivative on one block (rows 0-2 for Linear, rows 3-6 for
/// Quadratic).
struct ShiftRule {
    GateKind kind;
    GateParamName param;
    OperatorBlock block;
    double shift_scale; ///< the free shift s, or 0 for fixed-angle rules
    std::vector<ShiftTerm> terms;
};

[[nodiscard]] OperatorBasisMatrix gate_matrix(const Gate &g);

[[nodiscard]] OperatorVector apply_operator_gate(const OperatorVector &op, const Gate &g);

/// Throws Error(InvalidArgument) for a parameter the gate does not have, or
/// a zero free shift.
[[nodiscard]] ShiftRule shift_rule_for(GateKind kind, GateParamName param, OperatorBlock block,
                                       double s = kDefaultShift);

/// Sum of weight * gate_matrix(param + offset) with rows outside the rule's
/// block zeroed.
[[nodiscard]] OperatorBasisMatrix apply_shift_rule(const ShiftRule &rule, const Gate &g);

/// Full 7x7 derivative assembled from the linear and quadratic block rules.
[[nodiscard]] OperatorBasisMatrix shifted_matrix_derivative(const Gate &g, GateParamName param,
                                                            double s = kDefaultShift);

/// d(M^T op)/d(param), evaluated only through shifted gate matrices.
[[nodiscard]] OperatorVector shifted_derivative(const OperatorVector &op, const Gate &g,
                                                GateParamName param, double s = kDefaultShift);

/// Quadratic rows from d G[AB] = dG[A] G[B] + G[A] dG[B] with the linear
/// rows taken from the linear shift rule. Independent of the quadratic
/// block rules, so it serves as their cross-check.
[[nodiscard]] OperatorBasisMatrix product_rule_derivative(const Gate &g, GateParamName param,
                                                          double s = kDefaultShift);

/// Product of two operators with no quadratic part. Throws
/// Error(InvalidArgument) when the result would leave the basis.
[[nodiscard]] OperatorVector multiply(const OperatorVector &a, const OperatorVector &b);

/// Expectation value in a Gaussian state. XP and PX carry the +-i from the
/// commutator, so the result is real only for Hermitian combinations.
[[nodiscard]] std::complex<double> expectation(const OperatorVector &op,
                                               const GaussianState &state);

/// Gate with one parameter replaced.
[[nodiscard]] Gate with_param(Gate g, GateParamName param, double value);
[[nodiscard]] double param_value(const Gate &g, GateParamName param);

[[nodiscard]] std::string_view to_string(GateParamName param);

} // namespace cvsense
