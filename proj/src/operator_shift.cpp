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
#include "cvsense/operator_shift.hpp"

#include <cmath>
#include <numbers>

#include "cvsense/error.hpp"

namespace cvsense {

namespace {

constexpr int idx(Basis b) { return static_cast<int>(b); }

bool param_belongs(GateKind kind, GateParamName param) {
    switch (kind) {
    case GateKind::Squeeze:
        return param == GateParamName::R;
    case GateKind::Displace:
        return param == GateParamName::Alpha || param == GateParamName::PhiAlpha;
    case GateKind::Rotate:
        return param == GateParamName::Phi;
    }
    return false;
}

// Rows of a block inside the 7x7 matrix.
std::pair<int, int> block_rows(OperatorBlock block) {
    return block == OperatorBlock::Linear ? std::pair{0, 3} : std::pair{3, 4};
}

OperatorVector row_as_operator(const OperatorBasisMatrix &m, Basis b) {
    OperatorVector out;
    out.coeffs = m.row(idx(b)).transpose();
    return out;
}

} // namespace

bool OperatorVector::is_linear() const {
    return coeffs.tail<4>().cwiseAbs().maxCoeff() == 0.0;
}

OperatorVector OperatorVector::unit(Basis b) {
    OperatorVector v;
    v[b] = 1.0;
    return v;
}

OperatorVector OperatorVector::number() {
    OperatorVector v;
    v[Basis::I] = -0.5;
    v[Basis::XX] = 0.25;
    v[Basis::PP] = 0.25;
    return v;
}

Gate with_param(Gate g, GateParamName param, double value) {
    require(param_belongs(g.kind, param), "parameter does not belong to this gate");
    switch (param) {
    case GateParamName::R:
        g.r = value;
        break;
    case GateParamName::Alpha:
        g.alpha = value;
        break;
    case GateParamName::PhiAlpha:
    case GateParamName::Phi:
        g.phi = value;
        break;
    }
    return g;
}

double param_value(const Gate &g, GateParamName param) {
    require(param_belongs(g.kind, param), "parameter does not belong to this gate");
    switch (param) {
    case GateParamName::R:
        return g.r;
    case GateParamName::Alpha:
        return g.alpha;
    case GateParamName::PhiAlpha:
    case GateParamName::Phi:
        return g.phi;
    }
    return 0.0;
}

std::string_view to_string(GateParamName param) {
    switch (param) {
    case GateParamName::R:
        return "r";
    case GateParamName::Alpha:
        return "alpha";
    case GateParamName::PhiAlpha:
        return "phi_alpha";
    case GateParamName::Phi:
        return "phi";
    }
    return "?";
}

OperatorBasisMatrix gate_matrix(const Gate &g) {
    OperatorBasisMatrix m = OperatorBasisMatrix::Identity();
    switch (g.kind) {
    case GateKind::Squeeze: {
        // Shifted evaluations may pass through r < 0.
        m(idx(Basis::X), idx(Basis::X)) = std::exp(-g.r);
        m(idx(Basis::P), idx(Basis::P)) = std::exp(g.r);
        m(idx(Basis::XX), idx(Basis::XX)) = std::exp(-2.0 * g.r);
        m(idx(Basis::PP), idx(Basis::PP)) = std::exp(2.0 * g.r);
        break;
    }
    case GateKind::Displace: {
        const double a = g.alpha;
        const double c = std::cos(g.phi);
        const double s = std::sin(g.phi);
        m(idx(Basis::X), idx(Basis::I)) = 2.0 * a * c;
        m(idx(Basis::P), idx(Basis::I)) = 2.0 * a * s;
        m(idx(Basis::XX), idx(Basis::I)) = 4.0 * a * a * c * c;
        m(idx(Basis::XX), idx(Basis::X)) = 4.0 * a * c;
        m(idx(Basis::PP), idx(Basis::I)) = 4.0 * a * a * s * s;
        m(idx(Basis::PP), idx(Basis::P)) = 4.0 * a * s;
        for (Basis row : {Basis::XP, Basis::PX}) {
            m(idx(row), idx(Basis::I)) = 4.0 * a * a * c * s;
            m(idx(row), idx(Basis::X)) = 2.0 * a * s;
            m(idx(row), idx(Basis::P)) = 2.0 * a * c;
        }
        break;
    }
    case GateKind::Rotate: {
        const double c = std::cos(g.phi);
        const double s = std::sin(g.phi);
        const double cc = c * c;
        const double ss = s * s;
        const double cs = c * s;
        // R[X] = cX - sP, R[P] = sX + cP
        m(idx(Basis::X), idx(Basis::X)) = c;
        m(idx(Basis::X), idx(Basis::P)) = -s;
        m(idx(Basis::P), idx(Basis::X)) = s;
        m(idx(Basis::P), idx(Basis::P)) = c;
        m.block<4, 4>(3, 3) << cc, ss, -cs, -cs, //
            ss, cc, cs, cs,                      //
            cs, -cs, cc, -ss,                    //
            cs, -cs, -ss, cc;
        break;
    }
    }
    return m;
}

OperatorVector apply_operator_gate(const OperatorVector &op, const Gate &g) {
    OperatorVector out;
    out.coeffs = gate_matrix(g).transpose() * op.coeffs;
    return out;
}

ShiftRule shift_rule_for(GateKind kind, GateParamName param, OperatorBlock block, double s) {
    require(param_belongs(kind, param), "unsupported (gate, parameter) combination for a shift rule");
    using std::numbers::pi;
    ShiftRule rule{kind, param, block, 0.0, {}};
    switch (param) {
    case GateParamName::R: {
        require(s != 0.0 && std::isfinite(s), "squeeze shift rule needs a finite non-zero shift");
        rule.shift_scale = s;
        const double w = block == OperatorBlock::Linear ? 1.0 / (2.0 * std::sinh(s))
                                                        : 1.0 / std::sinh(2.0 * s);
        rule.terms = {{s, w}, {-s, -w}};
        break;
    }
    case GateParamName::Alpha: {
        require(s != 0.0 && std::isfinite(s), "displacement shift rule needs a finite non-zero shift");
        rule.shift_scale = s;
        const double w = 1.0 / (2.0 * s);
        rule.terms = {{s, w}, {-s, -w}};
        break;
    }
    case GateParamName::PhiAlpha:
        if (block == OperatorBlock::Linear) {
            rule.terms = {{pi / 2, 0.5}, {-pi / 2, -0.5}};
        } else {
            // pi/4 pair plus a weighted pi/2 pair; exact on first and second
            // harmonics.
            const double k = 0.5 * (1.0 - std::numbers::sqrt2);
            rule.terms = {{pi / 4, 1.0}, {-pi / 4, -1.0}, {pi / 2, k}, {-pi / 2, -k}};
        }
        break;
    case GateParamName::Phi:
        if (block == OperatorBlock::Linear) {
            rule.terms = {{pi / 2, 0.5}, {-pi / 2, -0.5}};
        } else {
            rule.terms = {{pi / 4, 1.0}, {-pi / 4, -1.0}};
        }
        break;
    }
    return rule;
}

OperatorBasisMatrix apply_shift_rule(const ShiftRule &rule, const Gate &g) {
    require(g.kind == rule.kind, "shift rule applied to a different gate kind");
    const double base = param_value(g, rule.param);
    OperatorBasisMatrix acc = OperatorBasisMatrix::Zero();
    for (const auto &term : rule.terms) {
        acc += term.weight * gate_matrix(with_param(g, rule.param, base + term.offset));
    }
    const auto [first, count] = block_rows(rule.block);
    OperatorBasisMatrix out = OperatorBasisMatrix::Zero();
    out.middleRows(first, count) = acc.middleRows(first, count);
    return out;
}

OperatorBasisMatrix shifted_matrix_derivative(const Gate &g, GateParamName param, double s) {
    return apply_shift_rule(shift_rule_for(g.kind, param, OperatorBlock::Linear, s), g) +
           apply_shift_rule(shift_rule_for(g.kind, param, OperatorBlock::Quadratic, s), g);
}

OperatorVector shifted_derivative(const OperatorVector &op, const Gate &g, GateParamName param,
                                  double s) {
    OperatorVector out;
    out.coeffs = shifted_matrix_derivative(g, param, s).transpose() * op.coeffs;
    return out;
}

OperatorVector multiply(const OperatorVector &a, const OperatorVector &b) {
    require(a.is_linear() && b.is_linear(),
            "operator product leaves the quadratic basis (a factor is already quadratic)");
    OperatorVector out;
    out[Basis::I] = a[Basis::I] * b[Basis::I];
    out[Basis::X] = a[Basis::I] * b[Basis::X] + a[Basis::X] * b[Basis::I];
    out[Basis::P] = a[Basis::I] * b[Basis::P] + a[Basis::P] * b[Basis::I];
    out[Basis::XX] = a[Basis::X] * b[Basis::X];
    out[Basis::PP] = a[Basis::P] * b[Basis::P];
    out[Basis::XP] = a[Basis::X] * b[Basis::P];
    out[Basis::PX] = a[Basis::P] * b[Basis::X];
    return out;
}

OperatorBasisMatrix product_rule_derivative(const Gate &g, GateParamName param, double s) {
    const OperatorBasisMatrix value = gate_matrix(g);
    const OperatorBasisMatrix d_lin =
        apply_shift_rule(shift_rule_for(g.kind, param, OperatorBlock::Linear, s), g);

    const OperatorVector gx = row_as_operator(value, Basis::X);
    const OperatorVector gp = row_as_operator(value, Basis::P);
    const OperatorVector dx = row_as_operator(d_lin, Basis::X);
    const OperatorVector dp = row_as_operator(d_lin, Basis::P);

    auto d_product = [](const OperatorVector &da, const OperatorVector &a, const OperatorVector &db,
                        const OperatorVector &b) {
        return (multiply(da, b).coeffs + multiply(a, db).coeffs).transpose();
    };

    OperatorBasisMatrix out = d_lin;
    out.row(idx(Basis::XX)) = d_product(dx, gx, dx, gx);
    out.row(idx(Basis::PP)) = d_product(dp, gp, dp, gp);
    out.row(idx(Basis::XP)) = d_product(dx, gx, dp, gp);
    out.row(idx(Basis::PX)) = d_product(dp, gp, dx, gx);
    return out;
}

std::complex<double> expectation(const OperatorVector &op, const GaussianState &state) {
    const double mx = state.mean()(0);
    const double mp = state.mean()(1);
    const double sym_xp = state.cov_xp() + mx * mp;
    using namespace std::complex_literals;
    return op[Basis::I] + op[Basis::X] * mx + op[Basis::P] * mp +
           op[Basis::XX] * (state.var_x() + mx * mx) + op[Basis::PP] * (state.var_p() + mp * mp) +
           op[Basis::XP] * (sym_xp + 1.0i) + op[Basis::PX] * (sym_xp - 1.0i);
}

} // namespace cvsense
