/*
 * Copyright 2026 The qospapc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

     http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.

*/

// Reference precoders: zero-forcing and sum-power WMMSE, each shrunk by a
// single common factor to meet the per-antenna budgets, and the proposed
// solver with QoS targets switched off.

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <qospapc/linalg.hpp>
#include <qospapc/model.hpp>
#include <qospapc/solver.hpp>
#include <qospapc/wmmse.hpp>

namespace qospapc {

class RankDeficientChannel : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pseudo-inverse of the stacked channel, d streams per user at equal
/// power, then one common scale so the most loaded antenna is at budget.
/// When N_r > d each user keeps the d pseudo-inverse directions that are
/// cheapest in transmit power.
inline PrecoderSet zf_normalized(const ChannelSet& ch, const ValidConfig& cfg)
{
    check_dimensions(ch, cfg);
    const int k_users = cfg.users();
    const int nr = cfg.nr();
    const int d = cfg.streams();
    const Eigen::Index rows = static_cast<Eigen::Index>(k_users) * nr;

    CMatrix stacked(rows, cfg.nt());
    for (int k = 0; k < k_users; ++k) stacked.middleRows(static_cast<Eigen::Index>(k) * nr, nr) = ch[k];

    Eigen::ColPivHouseholderQR<CMatrix> qr(stacked);
    if (rows > cfg.nt() || qr.rank() < rows) {
        throw RankDeficientChannel("zf_normalized: stacked channel does not have full row rank");
    }
    const CMatrix gram = stacked * stacked.adjoint();
    const CMatrix pinv = stacked.adjoint() * linalg::hpd_inverse(gram);

    PrecoderSet p;
    for (int k = 0; k < k_users; ++k) {
        const CMatrix block = pinv.middleCols(static_cast<Eigen::Index>(k) * nr, nr);
        CMatrix v;
        if (d == nr) {
            v = block;
        } else {
            // singular values come sorted descending; keep the d smallest
            Eigen::JacobiSVD<CMatrix> svd(block, Eigen::ComputeThinV);
            v = block * svd.matrixV().rightCols(d);
        }
        for (Eigen::Index c = 0; c < v.cols(); ++c) {
            const double n = v.col(c).norm();
            if (n > 0.0) v.col(c) /= n;
        }
        p.v.push_back(std::move(v));
    }
    scale_to_papc(p, cfg);
    return p;
}

struct SpcResult {
    PrecoderSet precoders;
    std::vector<double> objective_trace; // P2 objective after each precoder update
    std::vector<double> wsr_trace;       // bits
    int iterations = 0;
};

namespace detail {

/// argmin_V sum_k a_k Tr(W_k E_k) s.t. sum_k ||V_k||_F^2 <= total_power.
/// Diagonalizes A = sum_j a_j H_j^H U_j W_j U_j^H H_j once and bisects on
/// the single multiplier of the (monotone) total power.
inline PrecoderSet spc_precoder_update(const ChannelSet& ch, const std::vector<CMatrix>& u,
                                       const std::vector<CMatrix>& w, const ValidConfig& cfg, double total_power,
                                       double tol)
{
    const int k_users = cfg.users();
    const int d = cfg.streams();
    CMatrix a = CMatrix::Zero(cfg.nt(), cfg.nt());
    CMatrix b(cfg.nt(), static_cast<Eigen::Index>(k_users) * d);
    for (int j = 0; j < k_users; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const CMatrix hu = ch[j].adjoint() * u[ju];
        a.noalias() += cfg.weight(j) * hu * w[ju] * hu.adjoint();
        b.middleCols(static_cast<Eigen::Index>(j) * d, d) = cfg.weight(j) * hu * w[ju];
    }
    const linalg::HermitianEig eig = linalg::hermitian_eig(a);
    const CMatrix bt = eig.vectors.adjoint() * b;
    const RVector row_energy = bt.rowwise().squaredNorm();
    const double floor = 1e-12 * std::max(eig.values.maxCoeff(), 0.0);

    auto power = [&](double mu) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
            if (eig.values(i) <= floor) continue; // outside range(A): numerator vanishes
            const double den = eig.values(i) + mu;
            acc += row_energy(i) / (den * den);
        }
        return acc;
    };

    double mu = 0.0;
    if (power(0.0) > total_power) {
        double lo = 0.0;
        double hi = std::max(floor, 1e-300);
        while (power(hi) > total_power) {
            lo = hi;
            hi *= 2.0;
        }
        while (hi - lo > tol * hi) {
            const double mid = 0.5 * (lo + hi);
            (power(mid) > total_power ? lo : hi) = mid;
        }
        mu = hi;
    }
    RVector inv(eig.values.size());
    for (Eigen::Index i = 0; i < inv.size(); ++i) {
        inv(i) = eig.values(i) <= floor ? 0.0 : 1.0 / (eig.values(i) + mu);
    }
    const CMatrix v_all = eig.vectors * inv.asDiagonal() * bt;
    PrecoderSet p;
    for (int k = 0; k < k_users; ++k) p.v.push_back(v_all.middleCols(static_cast<Eigen::Index>(k) * d, d));
    return p;
}

inline double total_power(const PrecoderSet& p)
{
    double s = 0.0;
    for (const auto& v : p.v) s += v.squaredNorm();
    return s;
}

} // namespace detail

/// Classic weighted-MMSE under a sum-power constraint.
inline SpcResult wmmse_spc(const ChannelSet& ch, const ValidConfig& cfg, double total_power)
{
    if (!(total_power > 0.0)) throw std::invalid_argument("wmmse_spc: total_power must be positive");
    check_dimensions(ch, cfg);

    SpcResult out;
    PrecoderSet p = initialize_precoders(ch, cfg, InitStrategy::matched_filter, 0);
    const double init_power = detail::total_power(p);
    for (auto& v : p.v) v *= std::sqrt(total_power / init_power);

    SolverState s = SolverState::zeros(cfg);
    double prev = weighted_sum_rate(ch, p, cfg).weighted_sum_nats;
    for (int t = 0; t < cfg.raw().outer_max_iters; ++t) {
        s.receivers = update_receivers(ch, p, cfg.noise_power());
        s.weights = update_weights(s.receivers, ch, p);
        p = detail::spc_precoder_update(ch, s.receivers, s.weights, cfg, total_power, cfg.raw().bisection_tol);
        s.precoders = p;
        out.objective_trace.push_back(wmmse_objective(s, ch, cfg));
        const double wsr = weighted_sum_rate(ch, p, cfg).weighted_sum_nats;
        out.wsr_trace.push_back(nats_to_bits(wsr));
        out.iterations = t + 1;
        if (std::abs(wsr - prev) <= cfg.raw().outer_tol * std::max(std::abs(prev), 1e-300)) break;
        prev = wsr;
    }
    out.precoders = std::move(p);
    return out;
}

/// Sum-power WMMSE with the total of all antenna budgets, shrunk by one
/// common factor if any antenna exceeds its budget.
inline PrecoderSet wmmse_spc_normalized(const ChannelSet& ch, const ValidConfig& cfg)
{
    PrecoderSet p = wmmse_spc(ch, cfg, cfg.total_power()).precoders;
    if (max_antenna_ratio(p, cfg) > 1.0) scale_to_papc(p, cfg);
    return p;
}

/// The proposed solver with every QoS target at zero.
inline SolveResult papc_only(const ChannelSet& ch, const ValidConfig& cfg, const SolveOptions& options = {})
{
    const ValidConfig no_qos = with_targets(cfg, std::vector<double>(static_cast<std::size_t>(cfg.users()), 0.0));
    return solve(ch, no_qos, options);
}

} // namespace qospapc
