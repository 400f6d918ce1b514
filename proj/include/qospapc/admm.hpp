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

// Inner ADMM for the precoder block at fixed receivers and weights.
//
// Splitting: X_{k,j} = U_k^H H_k V_j. The precoder block carries the
// per-antenna power constraints, the X block carries the QoS surrogate
// constraints, and the two are tied by scaled duals lambda_{k,j}:
//
//   L = sum_k a_k Tr(-W_k X_kk^H - W_k X_kk) + sum_{k,j} a_k Tr(W_k X_kj X_kj^H)
//       + rho/2 sum_{k,j} || U_k^H H_k V_j - X_kj + lambda_kj ||_F^2
//
//   lambda_kj <- lambda_kj + (U_k^H H_k V_j - X_kj)
//
// which is the unscaled update y <- y + rho r with y = rho lambda.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <qospapc/linalg.hpp>
#include <qospapc/model.hpp>
#include <qospapc/wmmse.hpp>

namespace qospapc {

/// Data that stays fixed while the inner loop runs.
struct AdmmWorkspace {
    std::vector<CMatrix> receivers;              // U_k
    std::vector<CMatrix> weights;                // W_k (Hermitian)
    std::vector<CMatrix> effective;              // U_k^H H_k, d x N_t
    std::vector<double> slacks;                  // e_k
    std::vector<double> weight_traces;           // Tr W_k
    RVector antenna_curvature;                   // q_m = rho sum_j ||U_j^H h_{j,m}||^2
    std::vector<linalg::HermitianEig> weight_eig; // W_k = D_k Lambda_k D_k^H
    double rho = 1.0;
};

inline AdmmWorkspace make_workspace(const std::vector<CMatrix>& receivers, const std::vector<CMatrix>& weights,
                                    const ChannelSet& ch, const ValidConfig& cfg)
{
    AdmmWorkspace ws;
    ws.rho = cfg.rho();
    ws.receivers = receivers;
    ws.antenna_curvature = RVector::Zero(cfg.nt());
    for (int k = 0; k < cfg.users(); ++k) {
        const auto ku = static_cast<std::size_t>(k);
        CMatrix w = linalg::hermitize(weights[ku]);
        ws.effective.push_back(receivers[ku].adjoint() * ch[k]);
        ws.antenna_curvature += ws.rho * ws.effective.back().colwise().squaredNorm().transpose();
        ws.slacks.push_back(qos_surrogate_slack(w, receivers[ku], cfg, k));
        ws.weight_traces.push_back(linalg::real_trace(w));
        ws.weight_eig.push_back(linalg::hermitian_eig(w));
        ws.weights.push_back(std::move(w));
    }
    return ws;
}

/// Consensus targets U_k^H H_k V_j for all pairs.
inline PairGrid consensus_products(const AdmmWorkspace& ws, const PrecoderSet& p)
{
    const int k_users = p.users();
    PairGrid out(k_users, p[0].cols());
    for (int k = 0; k < k_users; ++k) {
        for (int j = 0; j < k_users; ++j) {
            out(k, j) = ws.effective[static_cast<std::size_t>(k)] * p[j];
        }
    }
    return out;
}

/// sqrt(sum_{k,j} ||U_k^H H_k V_j - X_kj||_F^2)
inline double primal_residual(const AdmmWorkspace& ws, const SolverState& s)
{
    const PairGrid y = consensus_products(ws, s.precoders);
    double acc = 0.0;
    for (int k = 0; k < y.users(); ++k) {
        for (int j = 0; j < y.users(); ++j) {
            acc += (y(k, j) - s.aux(k, j)).squaredNorm();
        }
    }
    return std::sqrt(acc);
}

inline double augmented_lagrangian(const SolverState& s, const AdmmWorkspace& ws, const ValidConfig& cfg)
{
    const int k_users = cfg.users();
    const PairGrid y = consensus_products(ws, s.precoders);
    double value = 0.0;
    for (int k = 0; k < k_users; ++k) {
        const CMatrix& w = ws.weights[static_cast<std::size_t>(k)];
        const double a = cfg.weight(k);
        value += a * linalg::real_trace(-w * s.aux(k, k).adjoint() - w * s.aux(k, k));
        for (int j = 0; j < k_users; ++j) {
            value += a * linalg::real_trace(w * s.aux(k, j) * s.aux(k, j).adjoint());
            value += 0.5 * ws.rho * (y(k, j) - s.aux(k, j) + s.duals(k, j)).squaredNorm();
        }
    }
    return value;
}

// ---------------------------------------------------------------------------
// Precoder block

/// Multiplier of one antenna's power constraint: the root of
/// Tr(D) / (q + 2 mu)^2 = P, or 0 when the unconstrained rows fit.
inline double antenna_multiplier(double d_trace, double q, double budget)
{
    if (!(budget > 0.0)) {
        throw std::invalid_argument("antenna_multiplier: budget must be positive");
    }
    if (d_trace < 0.0 || q < 0.0) {
        throw std::invalid_argument("antenna_multiplier: d_trace and q must be non-negative");
    }
    return std::max(0.0, 0.5 * (std::sqrt(d_trace / budget) - q));
}

/// rho/2 sum_{k,j} ||U_k^H H_k V_j - X_kj + lambda_kj||^2
inline double v_subproblem_objective(const SolverState& s, const AdmmWorkspace& ws)
{
    const PairGrid y = consensus_products(ws, s.precoders);
    double acc = 0.0;
    for (int k = 0; k < y.users(); ++k) {
        for (int j = 0; j < y.users(); ++j) {
            acc += (y(k, j) - s.aux(k, j) + s.duals(k, j)).squaredNorm();
        }
    }
    return 0.5 * ws.rho * acc;
}

struct VSweepStats {
    int sweeps = 0;
    double last_relative_change = 0.0;
    std::vector<double> multipliers; // mu_m of the final sweep
};

/// Gauss-Seidel over antennas on the precoder block. Each antenna step
/// jointly re-solves row m of every V_u exactly (including its power
/// constraint), so no sweep increases v_subproblem_objective.
inline VSweepStats solve_v_subproblem(SolverState& s, const AdmmWorkspace& ws, const ValidConfig& cfg,
                                      int max_sweeps, double sweep_tol)
{
    const int k_users = cfg.users();
    const int nt = cfg.nt();
    const double rho = ws.rho;
    PrecoderSet& v = s.precoders;

    // R_{i,u} = A_i V_u - X_iu + lambda_iu
    PairGrid resid = consensus_products(ws, v);
    for (int i = 0; i < k_users; ++i) {
        for (int u = 0; u < k_users; ++u) {
            resid(i, u) += s.duals(i, u) - s.aux(i, u);
        }
    }

    VSweepStats stats;
    stats.multipliers.assign(static_cast<std::size_t>(nt), 0.0);
    std::vector<Eigen::RowVectorXcd> numer(static_cast<std::size_t>(k_users));

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double change = 0.0;
        for (int m = 0; m < nt; ++m) {
            const double q = ws.antenna_curvature(m);
            double d_trace = 0.0;
            for (int u = 0; u < k_users; ++u) {
                // -rho sum_i a_im^H (R_iu - a_im r_u)
                Eigen::RowVectorXcd acc = q * v[u].row(m);
                for (int i = 0; i < k_users; ++i) {
                    acc.noalias() -= rho * ws.effective[static_cast<std::size_t>(i)].col(m).adjoint() * resid(i, u);
                }
                d_trace += acc.squaredNorm();
                numer[static_cast<std::size_t>(u)] = std::move(acc);
            }
            const double mu = antenna_multiplier(d_trace, q, cfg.budget(m));
            const double denom = q + 2.0 * mu;
            stats.multipliers[static_cast<std::size_t>(m)] = mu;
            // denom == 0 only if q == 0, in which case every numerator is 0 too.
            const double scale = denom > 0.0 ? 1.0 / denom : 0.0;
            double power = d_trace * scale * scale;
            const double shrink = power > cfg.budget(m) ? std::sqrt(cfg.budget(m) / power) : 1.0;
            for (int u = 0; u < k_users; ++u) {
                const Eigen::RowVectorXcd row = numer[static_cast<std::size_t>(u)] * (scale * shrink);
                const Eigen::RowVectorXcd delta = row - v[u].row(m);
                change += delta.squaredNorm();
                v[u].row(m) = row;
                for (int i = 0; i < k_users; ++i) {
                    resid(i, u).noalias() += ws.effective[static_cast<std::size_t>(i)].col(m) * delta;
                }
            }
        }
        ++stats.sweeps;
        double norm = 0.0;
        for (const auto& vu : v.v) norm += vu.squaredNorm();
        stats.last_relative_change = norm > 0.0 ? std::sqrt(change / norm) : std::sqrt(change);
        if (stats.last_relative_change < sweep_tol) break;
    }
    return stats;
}

inline VSweepStats solve_v_subproblem(SolverState& s, const AdmmWorkspace& ws, const ValidConfig& cfg)
{
    return solve_v_subproblem(s, ws, cfg, cfg.raw().v_max_sweeps, cfg.raw().v_sweep_tol);
}

// ---------------------------------------------------------------------------
// X block

/// One user's QoS multiplier equation in the eigenbasis of W_k:
///   lhs(tau) = sum_m l_m c_m / (2(a + tau) l_m + rho)^2 - sum_m l_m
/// with c_m = [D^H Phi D]_mm + [G]_mm. Strictly decreasing in tau towards
/// -Tr(W_k) whenever some l_m c_m > 0.
struct QosEquation {
    RVector eigenvalues;   // Lambda_k
    RVector coefficients;  // c_m
    double weight = 1.0;   // a_k
    double rho = 1.0;

    double lhs(double tau) const
    {
        double acc = 0.0;
        for (Eigen::Index m = 0; m < eigenvalues.size(); ++m) {
            const double l = eigenvalues(m);
            if (l <= 0.0) continue; // clamped zero eigenvalue contributes nothing
            const double den = 2.0 * (weight + tau) * l + rho;
            acc += l * coefficients(m) / (den * den) - l;
        }
        return acc;
    }

    double limit() const
    {
        return -eigenvalues.sum();
    }
};

inline QosEquation qos_equation(const SolverState& s, const AdmmWorkspace& ws, const ValidConfig& cfg, int k)
{
    const auto ku = static_cast<std::size_t>(k);
    const auto& eig = ws.weight_eig[ku];
    const CMatrix& dk = eig.vectors;
    const CMatrix& a = ws.effective[ku];
    const Eigen::Index d = dk.rows();
    const double rho = ws.rho;

    CMatrix phi = CMatrix::Zero(d, d);
    for (int j = 0; j < cfg.users(); ++j) {
        if (j == k) continue;
        const CMatrix t = rho * (s.duals(k, j) + a * s.precoders[j]);
        phi.noalias() += t * t.adjoint();
    }
    const CMatrix t = s.duals(k, k) + a * s.precoders[k] - linalg::identity(d);
    const CMatrix g = rho * rho * dk.adjoint() * t * t.adjoint() * dk;
    const CMatrix phi_eig = dk.adjoint() * phi * dk;

    QosEquation eq;
    eq.eigenvalues = eig.values;
    eq.coefficients = (phi_eig.diagonal() + g.diagonal()).real();
    eq.weight = cfg.weight(k);
    eq.rho = rho;
    return eq;
}

inline constexpr int kMaxBracketDoublings = 200;

/// Positive root of lhs(tau) = rhs. Requires lhs(0) > rhs > limit().
/// The upper bracket starts at 1 and doubles; the returned tau is the
/// upper end of the final bracket, so lhs(tau) <= rhs.
inline double x_multiplier_bisection(const QosEquation& eq, double rhs, double tol)
{
    double lo = 0.0;
    double hi = 1.0;
    int doublings = 0;
    while (eq.lhs(hi) > rhs) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > kMaxBracketDoublings) {
            throw NumericalFailure("x_multiplier_bisection: no bracket after " + std::to_string(kMaxBracketDoublings)
                                   + " doublings (rhs " + std::to_string(rhs) + ", limit "
                                   + std::to_string(eq.limit()) + ")");
        }
    }
    const double scale = std::max(1.0, std::abs(rhs));
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = eq.lhs(mid);
        if (f > rhs) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= tol * std::max(1.0, hi) && std::abs(eq.lhs(hi) - rhs) <= tol * scale) break;
        if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
    }
    return hi;
}

/// Left side of user k's QoS surrogate constraint at the given X blocks:
///   Tr(W X_kk X_kk^H - W X_kk^H - W X_kk) + Tr(W sum_{j!=k} X_kj X_kj^H)
inline double qos_constraint_value(const PairGrid& x, const CMatrix& w, int k)
{
    double acc = linalg::real_trace(w * x(k, k) * x(k, k).adjoint() - w * x(k, k).adjoint() - w * x(k, k));
    for (int j = 0; j < x.users(); ++j) {
        if (j == k) continue;
        acc += linalg::real_trace(w * x(k, j) * x(k, j).adjoint());
    }
    return acc;
}

/// True if even X_kk = I, X_kj = 0 cannot reach the QoS budget e_k.
inline bool qos_unreachable(const AdmmWorkspace& ws, int k, double tol)
{
    const auto ku = static_cast<std::size_t>(k);
    return ws.slacks[ku] < -ws.weight_traces[ku] - tol;
}

/// X_kj(tau) for all j of user k, from the closed-form first-order conditions.
inline void x_candidates(PairGrid& x, const SolverState& s, const AdmmWorkspace& ws, const ValidConfig& cfg, int k,
                         double tau)
{
    const auto ku = static_cast<std::size_t>(k);
    const auto& eig = ws.weight_eig[ku];
    const CMatrix& w = ws.weights[ku];
    const CMatrix& a = ws.effective[ku];
    const double rho = ws.rho;
    const double c = 2.0 * (cfg.weight(k) + tau);
    // (2(a+tau) W + rho I)^{-1} = D diag(1 / (2(a+tau) l + rho)) D^H
    const RVector inv = (c * eig.values.array() + rho).inverse().matrix();
    const CMatrix m_inv = eig.vectors * inv.asDiagonal() * eig.vectors.adjoint();
    for (int j = 0; j < cfg.users(); ++j) {
        CMatrix rhs = rho * (a * s.precoders[j] + s.duals(k, j));
        if (j == k) rhs += c * w;
        x(k, j) = m_inv * rhs;
    }
}

struct XUpdate {
    std::vector<double> multipliers; // tau_k
    std::vector<int> infeasible_users;
};

/// Per-user X update. Users whose QoS budget is unreachable keep their
/// previous X blocks and are reported in infeasible_users.
inline XUpdate solve_x_subproblem(SolverState& s, const AdmmWorkspace& ws, const ValidConfig& cfg)
{
    const double tol = cfg.raw().bisection_tol;
    XUpdate out;
    out.multipliers.assign(static_cast<std::size_t>(cfg.users()), 0.0);
    for (int k = 0; k < cfg.users(); ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (qos_unreachable(ws, k, tol)) {
            out.infeasible_users.push_back(k);
            continue;
        }
        x_candidates(s.aux, s, ws, cfg, k, 0.0);
        const double rhs = ws.slacks[ku];
        if (qos_constraint_value(s.aux, ws.weights[ku], k) <= rhs) {
            continue;
        }
        const QosEquation eq = qos_equation(s, ws, cfg, k);
        if (rhs <= eq.limit()) {
            // Within tol of the unreachable edge: take the tau -> inf limit.
            const Eigen::Index d = ws.weights[ku].rows();
            for (int j = 0; j < cfg.users(); ++j) {
                s.aux(k, j) = j == k ? linalg::identity(d) : CMatrix::Zero(d, d);
            }
            out.multipliers[ku] = std::numeric_limits<double>::infinity();
            continue;
        }
        const double tau = x_multiplier_bisection(eq, rhs, tol);
        out.multipliers[ku] = tau;
        x_candidates(s.aux, s, ws, cfg, k, tau);
    }
    return out;
}

/// lambda_kj <- lambda_kj + (U_k^H H_k V_j - X_kj)
inline void update_duals(SolverState& s, const AdmmWorkspace& ws)
{
    const PairGrid y = consensus_products(ws, s.precoders);
    for (int k = 0; k < y.users(); ++k) {
        for (int j = 0; j < y.users(); ++j) {
            s.duals(k, j) += y(k, j) - s.aux(k, j);
        }
    }
}

// ---------------------------------------------------------------------------

struct AdmmTrace {
    std::vector<double> primal_residual;
    std::vector<double> dual_residual;
    std::vector<double> lagrangian;
    std::vector<int> v_sweeps;
};

struct AdmmResult {
    AdmmTrace trace;
    int iterations = 0;
    bool converged = false;
    bool infeasible = false;
    std::vector<int> infeasible_users;
};

/// Runs V-update, X-update and dual update until both residuals fall
/// below inner_tol * K * d or inner_max_iters iterations elapse. If any
/// user's QoS budget is unreachable the loop does not start and the
/// state is left untouched.
inline AdmmResult run_admm(SolverState& s, const AdmmWorkspace& ws, const ValidConfig& cfg, int max_iters,
                           double tol)
{
    AdmmResult out;
    for (int k = 0; k < cfg.users(); ++k) {
        if (qos_unreachable(ws, k, cfg.raw().bisection_tol)) out.infeasible_users.push_back(k);
    }
    if (!out.infeasible_users.empty()) {
        out.infeasible = true;
        return out;
    }

    const double threshold = tol * static_cast<double>(cfg.users() * cfg.streams());
    for (int it = 0; it < max_iters; ++it) {
        const VSweepStats vs = solve_v_subproblem(s, ws, cfg);
        const PairGrid x_prev = s.aux;
        const XUpdate xu = solve_x_subproblem(s, ws, cfg);
        if (!xu.infeasible_users.empty()) {
            out.infeasible = true;
            out.infeasible_users = xu.infeasible_users;
            return out;
        }
        update_duals(s, ws);

        double dx = 0.0;
        for (int k = 0; k < cfg.users(); ++k) {
            for (int j = 0; j < cfg.users(); ++j) dx += (s.aux(k, j) - x_prev(k, j)).squaredNorm();
        }
        const double r = primal_residual(ws, s);
        const double sres = ws.rho * std::sqrt(dx);
        out.trace.primal_residual.push_back(r);
        out.trace.dual_residual.push_back(sres);
        out.trace.lagrangian.push_back(augmented_lagrangian(s, ws, cfg));
        out.trace.v_sweeps.push_back(vs.sweeps);
        ++out.iterations;
        if (!std::isfinite(r) || !std::isfinite(sres)) {
            throw NumericalFailure("run_admm: non-finite residual at inner iteration " + std::to_string(it));
        }
        if (r < threshold && sres < threshold) {
            out.converged = true;
            break;
        }
    }
    return out;
}

inline AdmmResult run_admm(SolverState& s, const AdmmWorkspace& ws, const ValidConfig& cfg)
{
    return run_admm(s, ws, cfg, cfg.raw().inner_max_iters, cfg.raw().inner_tol);
}

} // namespace qospapc
