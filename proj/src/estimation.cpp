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
#include "cvsense/estimation.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cvsense/error.hpp"

namespace cvsense {

namespace {

using std::numbers::pi;

constexpr std::array<double, 5> kCostOffsets{0.0, pi / 2, -pi / 2, pi / 4, -pi / 4};

void check_variance(const MeasurementRecord &rec) {
    if (!(rec.sample_var > 0.0)) {
        std::ostringstream msg;
        msg << "degenerate sample variance " << rec.sample_var << " at phi_hd=" << rec.phi_hd_requested
            << ", phi_alpha=" << rec.phi_alpha_requested;
        fail(ErrorCode::Numerical, msg.str());
    }
}

// Statistics needed from one displacement setting: V, dmu/dphi, dV/dphi.
struct ShiftedStats {
    double var;
    double dmu_dphi;
    double dvar_dphi;
};

} // namespace

CostEstimate cost_from_records(const std::array<MeasurementRecord, 5> &records, Settings settings) {
    for (const auto &r : records) {
        check_variance(r);
    }
    CostEstimate est;
    est.records = records;
    est.settings = settings;
    const auto &rec = [&](CostBasis b) -> const MeasurementRecord & {
        return records[static_cast<std::size_t>(b)];
    };
    est.mu = rec(CostBasis::Center).sample_mean;
    est.var = rec(CostBasis::Center).sample_var;
    est.dmu_dphi = 0.5 * (rec(CostBasis::MinusHalfPi).sample_mean - rec(CostBasis::PlusHalfPi).sample_mean);
    est.dvar_dphi = rec(CostBasis::MinusQuarterPi).sample_var - rec(CostBasis::PlusQuarterPi).sample_var;
    est.fisher = fisher_from_moments(est.quadrature());
    if (est.fisher < kFisherFloor) {
        est.zero_fisher = true;
        est.cost = std::numeric_limits<double>::infinity();
    } else {
        est.cost = cost(est.fisher);
    }
    return est;
}

CostEstimate estimate_cost(VirtualBench &bench, double phi_hd, double phi_alpha, long long n_samples) {
    std::array<MeasurementRecord, 5> records;
    for (std::size_t i = 0; i < records.size(); ++i) {
        records[i] = bench.measure(phi_hd + kCostOffsets[i], phi_alpha, n_samples);
    }
    return cost_from_records(records, Settings{phi_hd, phi_alpha});
}

CostEstimate estimate_cost(VirtualBench &bench, double phi_hd, double phi_alpha) {
    return estimate_cost(bench, phi_hd, phi_alpha, bench.config().samples_per_measurement);
}

GradientEstimate estimate_gradient(VirtualBench &bench, const CostEstimate &base, long long n_samples,
                                   DisplacementGradientSchedule schedule) {
    require(!base.zero_fisher, "gradient requested at a point with zero Fisher information",
            ErrorCode::Numerical);
    GradientEstimate out;
    const double hd = base.settings.phi_hd;
    const double pa = base.settings.phi_alpha;

    auto measure = [&](const char *purpose, double phi_hd, double phi_alpha) {
        MeasurementRecord rec = bench.measure(phi_hd, phi_alpha, n_samples);
        check_variance(rec);
        out.audit.push_back({purpose, phi_hd, phi_alpha, false});
        out.records.push_back(rec);
        return rec;
    };

    for (std::size_t i = 0; i < base.records.size(); ++i) {
        out.audit.push_back({"cost", hd + kCostOffsets[i], pa, true});
    }

    // --- phi_hd: V' and V'' come from the cost records; mu'' needs mu(phi_hd +- pi).
    const auto &r = [&](CostBasis b) -> const MeasurementRecord & { return base.record(b); };
    const double v0 = r(CostBasis::Center).sample_var;
    const double v_dvar = r(CostBasis::PlusQuarterPi).sample_var - r(CostBasis::MinusQuarterPi).sample_var;
    const double v_second =
        r(CostBasis::PlusHalfPi).sample_var + r(CostBasis::MinusHalfPi).sample_var - 2.0 * v0;
    for (auto b : {CostBasis::Center, CostBasis::PlusHalfPi, CostBasis::MinusHalfPi,
                   CostBasis::PlusQuarterPi, CostBasis::MinusQuarterPi}) {
        out.audit.push_back({"phi_hd", hd + kCostOffsets[static_cast<std::size_t>(b)], pa, true});
    }
    const MeasurementRecord mu_plus_pi = measure("phi_hd", hd + pi, pa);
    const MeasurementRecord mu_minus_pi = measure("phi_hd", hd - pi, pa);
    const double mu_second =
        0.25 * (mu_plus_pi.sample_mean + mu_minus_pi.sample_mean - 2.0 * base.mu);
    out.reused_measurements_phi_hd = 5;
    out.new_measurements_phi_hd = 2;

    ControlDerivatives d_hd;
    d_hd.dvar = v_dvar;
    d_hd.d2mu_dphi = -mu_second;
    d_hd.d2var_dphi = -v_second;

    // --- phi_alpha: linear displacement-angle rule, +-pi/2 with weights +-1/2.
    auto stats_at = [&](double phi_alpha) {
        const MeasurementRecord plus_half = measure("phi_alpha", hd + pi / 2, phi_alpha);
        const MeasurementRecord minus_half = measure("phi_alpha", hd - pi / 2, phi_alpha);
        const MeasurementRecord plus_quarter = measure("phi_alpha", hd + pi / 4, phi_alpha);
        const MeasurementRecord minus_quarter = measure("phi_alpha", hd - pi / 4, phi_alpha);
        ShiftedStats s{};
        s.dmu_dphi = 0.5 * (minus_half.sample_mean - plus_half.sample_mean);
        s.dvar_dphi = minus_quarter.sample_var - plus_quarter.sample_var;
        if (schedule == DisplacementGradientSchedule::Full) {
            s.var = measure("phi_alpha", hd, phi_alpha).sample_var;
        } else {
            s.var = plus_quarter.sample_var + minus_quarter.sample_var -
                    0.5 * (plus_half.sample_var + minus_half.sample_var);
        }
        return s;
    };
    const ShiftedStats up = stats_at(pa + pi / 2);
    const ShiftedStats down = stats_at(pa - pi / 2);
    out.new_measurements_phi_alpha = schedule == DisplacementGradientSchedule::Full ? 10 : 8;

    ControlDerivatives d_pa;
    d_pa.dvar = 0.5 * (up.var - down.var);
    d_pa.d2mu_dphi = 0.5 * (up.dmu_dphi - down.dmu_dphi);
    d_pa.d2var_dphi = 0.5 * (up.dvar_dphi - down.dvar_dphi);

    FisherGradientInputs in{base.quadrature(), {d_hd, d_pa}};
    const std::vector<double> grad_f = fisher_gradient(in);
    const std::vector<double> grad_c = cost_gradient(base.fisher, grad_f);
    out.dF_dphi_hd = grad_f[0];
    out.dF_dphi_alpha = grad_f[1];
    out.dC_dphi_hd = grad_c[0];
    out.dC_dphi_alpha = grad_c[1];
    return out;
}

GradientEstimate estimate_gradient(VirtualBench &bench, const CostEstimate &base,
                                   DisplacementGradientSchedule schedule) {
    return estimate_gradient(bench, base, bench.config().samples_per_measurement, schedule);
}

namespace {
void check_orthogonal(const MeasurementRecord &x_basis, const MeasurementRecord &p_basis) {
    const double diff = std::remainder(p_basis.phi_hd_requested - x_basis.phi_hd_requested, pi);
    require(std::abs(std::abs(diff) - pi / 2) < 1e-9,
            "displacement estimators need records at two orthogonal bases");
}
} // namespace

double estimate_alpha(const MeasurementRecord &x_basis, const MeasurementRecord &p_basis) {
    check_orthogonal(x_basis, p_basis);
    return 0.5 * std::hypot(x_basis.sample_mean, p_basis.sample_mean);
}

double estimate_n(const MeasurementRecord &x_basis, const MeasurementRecord &p_basis) {
    check_orthogonal(x_basis, p_basis);
    const double x2 = x_basis.sample_var + x_basis.sample_mean * x_basis.sample_mean;
    const double p2 = p_basis.sample_var + p_basis.sample_mean * p_basis.sample_mean;
    return 0.25 * (x2 + p2 - 2.0);
}

} // namespace cvsense
