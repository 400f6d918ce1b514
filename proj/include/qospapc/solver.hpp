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

// Outer block-coordinate loop: receivers, weights, then the inner ADMM
// for the precoders, repeated until the weighted-MMSE objective settles.
//
// Per outer iteration the cost is dominated by the inner loop:
// one Gauss-Seidel sweep is O(N_t K^2 d^2), so an outer iteration costs
// O(K^2 N_r^2 N_t + K N_r^3 + L_i S (N_t K^2 d^2 + K^2 d^2 N_t)) with S
// sweeps per precoder step; at fixed K, N_r, d, L_i and S this is linear
// in N_t.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <qospapc/admm.hpp>
#include <qospapc/channel.hpp>
#include <qospapc/linalg.hpp>
#include <qospapc/model.hpp>
#include <qospapc/wmmse.hpp>

namespace qospapc {

enum class InitStrategy { matched_filter, random };

inline const char* to_string(InitStrategy s)
{
    return s == InitStrategy::matched_filter ? "matched_filter" : "random";
}

struct SolveOptions {
    InitStrategy init = InitStrategy::matched_filter;
    std::uint64_t seed = 0;                 // used by InitStrategy::random
    std::optional<double> outer_tol;        // overrides the config value
    std::optional<PrecoderSet> warm_start;  // replaces the initialization
    double relaxation_step = 0.5;           // see relax_unreachable_targets
    int report_every = 0;                   // 0 disables on_progress
    std::function<void(int iteration, double wsr_bits)> on_progress;
};

/// Largest per-antenna load ratio max_m P_m(V) / P_m.
inline double max_antenna_ratio(const PrecoderSet& p, const ValidConfig& cfg)
{
    const RVector pw = antenna_powers(p, cfg.nt());
    double worst = 0.0;
    for (int m = 0; m < cfg.nt(); ++m) worst = std::max(worst, pw(m) / cfg.budget(m));
    return worst;
}

/// Common scalar so that the most loaded antenna sits exactly at its budget.
inline void scale_to_papc(PrecoderSet& p, const ValidConfig& cfg)
{
    const double ratio = max_antenna_ratio(p, cfg);
    if (ratio > 0.0) {
        const double c = 1.0 / std::sqrt(ratio);
        for (auto& v : p.v) v *= c;
    }
}

inline PrecoderSet random_precoders(const ValidConfig& cfg, std::uint64_t seed)
{
    auto g = rng::make_stream(seed, rng::init, 0);
    PrecoderSet p;
    for (int k = 0; k < cfg.users(); ++k) {
        p.v.push_back(rng::complex_normal_matrix(g, cfg.nt(), cfg.streams()));
    }
    return p;
}

/// Feasible starting point. Matched filter: V_k = R_d S_d from the SVD
/// H_k = L S R^H (the channel's d strongest right-singular directions,
/// weighted by their gains). Either way the set is scaled by one common
/// factor so that max_m load/budget = 1.
inline PrecoderSet initialize_precoders(const ChannelSet& ch, const ValidConfig& cfg, InitStrategy strategy,
                                        std::uint64_t seed)
{
    check_dimensions(ch, cfg);
    PrecoderSet p;
    if (strategy == InitStrategy::matched_filter) {
        for (int k = 0; k < cfg.users(); ++k) {
            Eigen::JacobiSVD<CMatrix> svd(ch[k], Eigen::ComputeThinV);
            const auto d = cfg.streams();
            p.v.push_back(svd.matrixV().leftCols(d) * svd.singularValues().head(d).asDiagonal());
        }
        if (!(max_antenna_ratio(p, cfg) > 0.0)) {
            p = random_precoders(cfg, seed);
        }
    } else {
        p = random_precoders(cfg, seed);
    }
    scale_to_papc(p, cfg);
    return p;
}

struct SolveResult {
    PrecoderSet precoders;
    SolveReport report;
};

/// Fills rates and the satisfaction flags of a report from the precoders.
inline void finalize_report(SolveReport& rep, const PrecoderSet& p, const ChannelSet& ch, const ValidConfig& cfg)
{
    const RateBreakdown rates = weighted_sum_rate(ch, p, cfg);
    rep.per_user_rates_bits = rates.rates_bits();
    rep.qos_satisfied.clear();
    for (int k = 0; k < cfg.users(); ++k) {
        rep.qos_satisfied.push_back(rep.per_user_rates_bits[static_cast<std::size_t>(k)]
                                    >= cfg.raw().qos_targets_bits[static_cast<std::size_t>(k)] - kQosToleranceBits);
    }
    const RVector pw = antenna_powers(p, cfg.nt());
    rep.papc_satisfied.clear();
    for (int m = 0; m < cfg.nt(); ++m) {
        rep.papc_satisfied.push_back(pw(m) <= cfg.budget(m) * (1.0 + kPapcRelativeTolerance));
    }
}

namespace detail {

inline void require_finite(const std::vector<CMatrix>& ms, int iteration, const char* block)
{
    for (const auto& m : ms) {
        if (!m.allFinite()) {
            throw NumericalFailure(std::string("non-finite value in ") + block + " at outer iteration "
                                   + std::to_string(iteration));
        }
    }
}

} // namespace detail

/// For every user whose QoS surrogate budget is out of reach at the
/// current receivers and weights (e_k < -Tr W_k), lowers the budget's
/// target for this outer iteration to R_k + step (r_max - R_k), where R_k
/// is the current rate and r_max the largest target the surrogate can
/// express. Returns the affected users.
inline std::vector<int> relax_unreachable_targets(AdmmWorkspace& ws, const SolverState& s, const ValidConfig& cfg,
                                                  double step)
{
    std::vector<int> users;
    for (int k = 0; k < cfg.users(); ++k) {
        if (!qos_unreachable(ws, k, cfg.raw().bisection_tol)) continue;
        const auto ku = static_cast<std::size_t>(k);
        const double rate = linalg::logdet_hpd(s.weights[ku]);
        const double r_max = ws.slacks[ku] + ws.weight_traces[ku] + cfg.target_nats(k);
        const double relaxed = rate + step * std::max(0.0, r_max - rate);
        ws.slacks[ku] += cfg.target_nats(k) - relaxed;
        users.push_back(k);
    }
    return users;
}

inline SolveResult solve(const ChannelSet& ch, const ValidConfig& cfg, const SolveOptions& options = {})
{
    const auto t0 = std::chrono::steady_clock::now();
    check_dimensions(ch, cfg);

    SolverState s = SolverState::zeros(cfg);
    if (options.warm_start) {
        check_dimensions(*options.warm_start, cfg);
        s.precoders = *options.warm_start;
    } else {
        s.precoders = initialize_precoders(ch, cfg, options.init, options.seed);
    }

    const double outer_tol = options.outer_tol.value_or(cfg.raw().outer_tol);
    SolveResult out;
    SolveReport& rep = out.report;
    rep.status = SolveStatus::max_iters;

    double prev_objective = 0.0;
    for (int t = 0; t < cfg.raw().outer_max_iters; ++t) {
        s.receivers = update_receivers(ch, s.precoders, cfg.noise_power());
        detail::require_finite(s.receivers, t, "receivers");
        s.weights = update_weights(s.receivers, ch, s.precoders);
        detail::require_finite(s.weights, t, "weights");

        AdmmWorkspace ws = make_workspace(s.receivers, s.weights, ch, cfg);
        const std::vector<int> unreachable = relax_unreachable_targets(ws, s, cfg, options.relaxation_step);
        // warm start: consensus X at the new receivers, duals carried over
        s.aux = consensus_products(ws, s.precoders);

        const AdmmResult inner = run_admm(s, ws, cfg);
        if (inner.infeasible) {
            throw NumericalFailure("relaxed QoS budget still unreachable at outer iteration " + std::to_string(t));
        }
        rep.unreachable_trace.push_back(static_cast<int>(unreachable.size()));
        rep.infeasible_users = unreachable;
        detail::require_finite(s.precoders.v, t, "precoders");

        const double objective = wmmse_objective(s, ch, cfg);
        const double wsr = weighted_sum_rate(ch, s.precoders, cfg).weighted_sum_bits();
        if (!std::isfinite(objective) || !std::isfinite(wsr)) {
            throw NumericalFailure("non-finite objective at outer iteration " + std::to_string(t));
        }
        rep.objective_trace.push_back(objective);
        rep.wsr_trace.push_back(wsr);
        rep.primal_residual_trace.push_back(inner.trace.primal_residual.empty() ? 0.0
                                                                                : inner.trace.primal_residual.back());
        rep.dual_residual_trace.push_back(inner.trace.dual_residual.empty() ? 0.0 : inner.trace.dual_residual.back());
        rep.inner_iterations_trace.push_back(inner.iterations);
        rep.iterations_used = t + 1;

        if (options.on_progress && options.report_every > 0 && (t + 1) % options.report_every == 0) {
            options.on_progress(t + 1, wsr);
        }

        if (t > 0) {
            const double change = std::abs(objective - prev_objective) / std::max(std::abs(prev_objective), 1e-300);
            if (change < outer_tol && (inner.converged || !unreachable.empty())) {
                rep.status = SolveStatus::converged;
                break;
            }
        }
        prev_objective = objective;
    }

    if (!rep.infeasible_users.empty()) rep.status = SolveStatus::infeasible_qos;
    out.precoders = s.precoders;
    finalize_report(rep, out.precoders, ch, cfg);
    rep.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// ---------------------------------------------------------------------------

/// Constraint diagnostics of an arbitrary precoder set against the
/// original rate/power problem.
struct KktReport {
    std::vector<double> antenna_power_ratio;  // P_m(V) / P_m
    std::vector<double> rates_bits;
    std::vector<double> rate_minus_target_bits;
    std::vector<bool> papc_ok;
    std::vector<bool> qos_ok;
    double wsr_bits = 0.0;

    double max_ratio() const
    {
        double m = 0.0;
        for (double r : antenna_power_ratio) m = std::max(m, r);
        return m;
    }
};

inline KktReport kkt_report(const PrecoderSet& p, const ChannelSet& ch, const ValidConfig& cfg)
{
    check_dimensions(p, cfg);
    KktReport out;
    const RVector pw = antenna_powers(p, cfg.nt());
    for (int m = 0; m < cfg.nt(); ++m) {
        const double ratio = pw(m) / cfg.budget(m);
        out.antenna_power_ratio.push_back(ratio);
        out.papc_ok.push_back(ratio <= 1.0 + kPapcRelativeTolerance);
    }
    const RateBreakdown rates = weighted_sum_rate(ch, p, cfg);
    out.rates_bits = rates.rates_bits();
    out.wsr_bits = rates.weighted_sum_bits();
    for (int k = 0; k < cfg.users(); ++k) {
        const double gap = out.rates_bits[static_cast<std::size_t>(k)]
                           - cfg.raw().qos_targets_bits[static_cast<std::size_t>(k)];
        out.rate_minus_target_bits.push_back(gap);
        out.qos_ok.push_back(gap >= -kQosToleranceBits);
    }
    return out;
}

} // namespace qospapc
