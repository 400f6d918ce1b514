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

// Problem description and the containers shared by every other module.
//
// Internally all rates are in nats (natural log). Public inputs and
// reports use bit/s/Hz; conversion happens once, in validate_config, and
// again when a report is produced.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <qospapc/linalg.hpp>

namespace qospapc {

inline constexpr double kLn2 = std::numbers::ln2;

inline double bits_to_nats(double bits) { return bits * kLn2; }
inline double nats_to_bits(double nats) { return nats / kLn2; }

/// P[W] = 10^(P_dBm / 10) / 1000
inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) / 1000.0; }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts * 1000.0); }

/// Tolerances used when a report flags constraint satisfaction.
inline constexpr double kQosToleranceBits = 1e-3;
inline constexpr double kPapcRelativeTolerance = 1e-9;

struct SystemConfig {
    int num_tx_antennas = 16;
    int num_rx_antennas = 2;
    int num_users = 4;
    int num_streams = 2;
    double noise_power = dbm_to_watts(-90.0);
    std::vector<double> antenna_power_budgets;
    std::vector<double> user_weights;
    std::vector<double> qos_targets_bits;
    double admm_penalty = 1.0;
    int outer_max_iters = 100;
    int inner_max_iters = 50;
    double outer_tol = 1e-5;
    double inner_tol = 1e-6;
    double bisection_tol = 1e-10;
    // Gauss-Seidel schedule of the precoder block inside one ADMM step.
    int v_max_sweeps = 50;
    double v_sweep_tol = 1e-8;

    bool operator==(const SystemConfig&) const = default;
};

/// A config with uniform per-antenna budgets total_power / N_t, unit
/// weights and zero QoS targets.
inline SystemConfig make_uniform_config(int nt, int nr, int k, int d, double total_power_w,
                                        double noise_power_w = dbm_to_watts(-90.0))
{
    SystemConfig c;
    c.num_tx_antennas = nt;
    c.num_rx_antennas = nr;
    c.num_users = k;
    c.num_streams = d;
    c.noise_power = noise_power_w;
    c.antenna_power_budgets.assign(static_cast<std::size_t>(std::max(nt, 0)),
                                   total_power_w / std::max(nt, 1));
    c.user_weights.assign(static_cast<std::size_t>(std::max(k, 0)), 1.0);
    c.qos_targets_bits.assign(static_cast<std::size_t>(std::max(k, 0)), 0.0);
    return c;
}

class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<std::string> issues)
        : std::invalid_argument(join(issues)), issues_(std::move(issues))
    {
    }

    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues)
    {
        std::string out = "invalid configuration:";
        for (const auto& s : issues) {
            out += "\n  - " + s;
        }
        return out;
    }

    std::vector<std::string> issues_;
};

/// Every violated invariant of the config, one message each. Empty if valid.
inline std::vector<std::string> check_config(const SystemConfig& c)
{
    std::vector<std::string> issues;
    auto positive_int = [&](int v, const char* name) {
        if (v <= 0) issues.push_back(std::string(name) + " must be a positive integer");
    };
    auto positive_real = [&](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) issues.push_back(std::string(name) + " must be a positive finite real");
    };

    positive_int(c.num_tx_antennas, "num_tx_antennas");
    positive_int(c.num_rx_antennas, "num_rx_antennas");
    positive_int(c.num_users, "num_users");
    positive_int(c.num_streams, "num_streams");
    positive_real(c.noise_power, "noise_power");
    positive_real(c.admm_penalty, "admm_penalty");
    positive_int(c.outer_max_iters, "outer_max_iters");
    positive_int(c.inner_max_iters, "inner_max_iters");
    positive_real(c.outer_tol, "outer_tol");
    positive_real(c.inner_tol, "inner_tol");
    positive_real(c.bisection_tol, "bisection_tol");
    positive_int(c.v_max_sweeps, "v_max_sweeps");
    positive_real(c.v_sweep_tol, "v_sweep_tol");

    if (c.num_streams > 0 && c.num_rx_antennas > 0 && c.num_tx_antennas > 0
        && c.num_streams > std::min(c.num_rx_antennas, c.num_tx_antennas)) {
        issues.push_back("num_streams exceeds min(num_rx_antennas, num_tx_antennas)");
    }
    if (c.num_users > 0 && c.num_streams > 0 && c.num_tx_antennas > 0
        && static_cast<long>(c.num_users) * c.num_streams > c.num_tx_antennas) {
        issues.push_back("K*d exceeds N_t (num_users * num_streams > num_tx_antennas)");
    }

    if (c.num_tx_antennas > 0
        && c.antenna_power_budgets.size() != static_cast<std::size_t>(c.num_tx_antennas)) {
        issues.push_back("antenna_power_budgets must have num_tx_antennas entries");
    }
    for (std::size_t m = 0; m < c.antenna_power_budgets.size(); ++m) {
        const double p = c.antenna_power_budgets[m];
        if (!(p > 0.0) || !std::isfinite(p)) {
            issues.push_back("antenna_power_budgets[" + std::to_string(m) + "] must be positive");
        }
    }
    if (c.num_users > 0 && c.user_weights.size() != static_cast<std::size_t>(c.num_users)) {
        issues.push_back("user_weights must have num_users entries");
    }
    for (std::size_t k = 0; k < c.user_weights.size(); ++k) {
        const double w = c.user_weights[k];
        if (!(w > 0.0) || !std::isfinite(w)) {
            issues.push_back("user_weights[" + std::to_string(k) + "] must be positive");
        }
    }
    if (c.num_users > 0 && c.qos_targets_bits.size() != static_cast<std::size_t>(c.num_users)) {
        issues.push_back("qos_targets_bits must have num_users entries");
    }
    for (std::size_t k = 0; k < c.qos_targets_bits.size(); ++k) {
        const double r = c.qos_targets_bits[k];
        if (!(r >= 0.0) || !std::isfinite(r)) {
            issues.push_back("qos_targets_bits[" + std::to_string(k) + "] must be non-negative");
        }
    }
    return issues;
}

/// A SystemConfig that passed validation, with QoS targets held in nats.
/// Immutable; only validate_config constructs one.
class ValidConfig {
public:
    const SystemConfig& raw() const noexcept { return cfg_; }

    int nt() const noexcept { return cfg_.num_tx_antennas; }
    int nr() const noexcept { return cfg_.num_rx_antennas; }
    int users() const noexcept { return cfg_.num_users; }
    int streams() const noexcept { return cfg_.num_streams; }
    double noise_power() const noexcept { return cfg_.noise_power; }
    double rho() const noexcept { return cfg_.admm_penalty; }
    double budget(int m) const { return cfg_.antenna_power_budgets[static_cast<std::size_t>(m)]; }
    double weight(int k) const { return cfg_.user_weights[static_cast<std::size_t>(k)]; }
    double target_nats(int k) const { return targets_nats_[static_cast<std::size_t>(k)]; }
    const std::vector<double>& targets_nats() const noexcept { return targets_nats_; }
    double total_power() const
    {
        double s = 0.0;
        for (double p : cfg_.antenna_power_budgets) s += p;
        return s;
    }

    bool operator==(const ValidConfig&) const = default;

private:
    friend ValidConfig validate_config(const SystemConfig& c);
    ValidConfig(SystemConfig c, std::vector<double> nats) : cfg_(std::move(c)), targets_nats_(std::move(nats)) {}

    SystemConfig cfg_;
    std::vector<double> targets_nats_;
};

/// Throws ConfigError listing every violated invariant.
inline ValidConfig validate_config(const SystemConfig& c)
{
    auto issues = check_config(c);
    if (!issues.empty()) {
        throw ConfigError(std::move(issues));
    }
    std::vector<double> nats;
    nats.reserve(c.qos_targets_bits.size());
    for (double r : c.qos_targets_bits) nats.push_back(bits_to_nats(r));
    return ValidConfig(c, std::move(nats));
}

/// Copy of a config with different QoS targets (bits), re-validated.
inline ValidConfig with_targets(const ValidConfig& cfg, std::vector<double> targets_bits)
{
    SystemConfig c = cfg.raw();
    c.qos_targets_bits = std::move(targets_bits);
    return validate_config(c);
}

// ---------------------------------------------------------------------------

/// The K downlink channels H_k, each N_r x N_t.
struct ChannelSet {
    std::vector<CMatrix> h;

    int users() const noexcept { return static_cast<int>(h.size()); }
    const CMatrix& operator[](int k) const { return h[static_cast<std::size_t>(k)]; }
};

/// The K precoders V_k, each N_t x d.
struct PrecoderSet {
    std::vector<CMatrix> v;

    int users() const noexcept { return static_cast<int>(v.size()); }
    const CMatrix& operator[](int k) const { return v[static_cast<std::size_t>(k)]; }
    CMatrix& operator[](int k) { return v[static_cast<std::size_t>(k)]; }

    static PrecoderSet zeros(int k, int nt, int d)
    {
        return PrecoderSet{std::vector<CMatrix>(static_cast<std::size_t>(k), CMatrix::Zero(nt, d))};
    }
};

/// Per-antenna transmit power sum_k [V_k V_k^H]_{m,m}.
inline RVector antenna_powers(const PrecoderSet& p, int nt)
{
    RVector out = RVector::Zero(nt);
    for (const auto& v : p.v) {
        out += v.rowwise().squaredNorm();
    }
    return out;
}

inline void check_dimensions(const ChannelSet& ch, const ValidConfig& cfg)
{
    if (ch.users() != cfg.users()) {
        throw std::invalid_argument("channel set has " + std::to_string(ch.users()) + " users, config has "
                                    + std::to_string(cfg.users()));
    }
    for (int k = 0; k < ch.users(); ++k) {
        if (ch[k].rows() != cfg.nr() || ch[k].cols() != cfg.nt()) {
            throw std::invalid_argument("channel " + std::to_string(k) + " has wrong dimensions");
        }
        if (!ch[k].allFinite()) {
            throw std::invalid_argument("channel " + std::to_string(k) + " has non-finite entries");
        }
    }
}

inline void check_dimensions(const PrecoderSet& p, const ValidConfig& cfg)
{
    if (p.users() != cfg.users()) {
        throw std::invalid_argument("precoder set has wrong number of users");
    }
    for (int k = 0; k < p.users(); ++k) {
        if (p[k].rows() != cfg.nt() || p[k].cols() != cfg.streams()) {
            throw std::invalid_argument("precoder " + std::to_string(k) + " has wrong dimensions");
        }
    }
}

/// K x K grid of d x d blocks indexed (k, j), used for X_{k,j} and lambda_{k,j}.
class PairGrid {
public:
    PairGrid() = default;
    PairGrid(int k, int d) : k_(k), blocks_(static_cast<std::size_t>(k * k), CMatrix::Zero(d, d)) {}

    CMatrix& operator()(int k, int j) { return blocks_[index(k, j)]; }
    const CMatrix& operator()(int k, int j) const { return blocks_[index(k, j)]; }
    int users() const noexcept { return k_; }
    std::size_t size() const noexcept { return blocks_.size(); }

    double squared_norm() const
    {
        double s = 0.0;
        for (const auto& b : blocks_) s += b.squaredNorm();
        return s;
    }

private:
    std::size_t index(int k, int j) const { return static_cast<std::size_t>(k * k_ + j); }

    int k_ = 0;
    std::vector<CMatrix> blocks_;
};

/// All iterates of the outer/inner loops.
struct SolverState {
    PrecoderSet precoders;       // V_k, N_t x d
    std::vector<CMatrix> receivers;  // U_k, N_r x d
    std::vector<CMatrix> weights;    // W_k, d x d Hermitian PSD
    PairGrid aux;                // X_{k,j} = U_k^H H_k V_j at consensus
    PairGrid duals;              // scaled duals lambda_{k,j}

    static SolverState zeros(const ValidConfig& cfg)
    {
        const int k = cfg.users();
        const int d = cfg.streams();
        SolverState s;
        s.precoders = PrecoderSet::zeros(k, cfg.nt(), d);
        s.receivers.assign(static_cast<std::size_t>(k), CMatrix::Zero(cfg.nr(), d));
        s.weights.assign(static_cast<std::size_t>(k), CMatrix::Identity(d, d));
        s.aux = PairGrid(k, d);
        s.duals = PairGrid(k, d);
        return s;
    }
};

enum class SolveStatus { converged, max_iters, infeasible_qos };

inline const char* to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::infeasible_qos: return "infeasible_qos";
    }
    return "unknown";
}

struct SolveReport {
    std::vector<double> objective_trace;       // P2 objective after each outer iteration (nats)
    std::vector<double> wsr_trace;             // weighted sum rate, bit/s/Hz
    std::vector<double> primal_residual_trace; // final inner primal residual per outer iteration
    std::vector<double> dual_residual_trace;
    std::vector<int> inner_iterations_trace;
    std::vector<int> unreachable_trace;        // number of users with an out-of-reach QoS budget
    std::vector<double> per_user_rates_bits;
    std::vector<bool> qos_satisfied;
    std::vector<bool> papc_satisfied;
    std::vector<int> infeasible_users; // users whose QoS subproblem was reported infeasible
    SolveStatus status = SolveStatus::max_iters;
    int iterations_used = 0;
    double wall_time_seconds = 0.0;

    bool all_qos_satisfied() const
    {
        for (bool b : qos_satisfied) {
            if (!b) return false;
        }
        return true;
    }
    bool all_papc_satisfied() const
    {
        for (bool b : papc_satisfied) {
            if (!b) return false;
        }
        return true;
    }
};

} // namespace qospapc
