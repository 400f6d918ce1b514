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

// Achievable rates, MSE matrices and the closed-form receiver / weight
// blocks of the weighted-MMSE reformulation. All logs are natural.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <qospapc/linalg.hpp>
#include <qospapc/model.hpp>

namespace qospapc {

/// I - U_k^H H_k V_k is (numerically) singular for some user.
class DegenerateGeometry : public NumericalFailure {
public:
    DegenerateGeometry(int user, double cond)
        : NumericalFailure("degenerate geometry for user " + std::to_string(user)
                           + ": I - U^H H V has condition number " + std::to_string(cond)),
          user_(user)
    {
    }

    int user() const noexcept { return user_; }

private:
    int user_;
};

inline constexpr double kWeightConditionLimit = 1e12;

namespace detail {

inline void require_noise(double noise_power)
{
    if (!(noise_power > 0.0)) {
        throw std::invalid_argument("noise power must be positive");
    }
}

/// sum_{j in users, j != skip} H_k V_j V_j^H H_k^H + sigma^2 I
inline CMatrix received_covariance(const ChannelSet& ch, const PrecoderSet& p, int k, double noise_power,
                                   int skip = -1)
{
    const CMatrix& h = ch[k];
    CMatrix c = noise_power * linalg::identity(h.rows());
    for (int j = 0; j < p.users(); ++j) {
        if (j == skip) continue;
        const CMatrix hv = h * p[j];
        c.noalias() += hv * hv.adjoint();
    }
    return c;
}

} // namespace detail

/// R_k = log det(I + H_k V_k V_k^H H_k^H C_k^{-1}), evaluated as
/// log det(C_k + H_k V_k V_k^H H_k^H) - log det(C_k).
inline double user_rate(const ChannelSet& ch, const PrecoderSet& p, int k, double noise_power)
{
    detail::require_noise(noise_power);
    if (k < 0 || k >= ch.users()) throw std::out_of_range("user_rate: bad user index");
    const CMatrix interference = detail::received_covariance(ch, p, k, noise_power, k);
    const CMatrix hv = ch[k] * p[k];
    const CMatrix total = interference + hv * hv.adjoint();
    return std::max(0.0, linalg::logdet_hpd(total) - linalg::logdet_hpd(interference));
}

struct RateBreakdown {
    double weighted_sum_nats = 0.0;
    std::vector<double> rates_nats;

    double weighted_sum_bits() const { return nats_to_bits(weighted_sum_nats); }
    std::vector<double> rates_bits() const
    {
        std::vector<double> out;
        out.reserve(rates_nats.size());
        for (double r : rates_nats) out.push_back(nats_to_bits(r));
        return out;
    }
};

inline RateBreakdown weighted_sum_rate(const ChannelSet& ch, const PrecoderSet& p, const ValidConfig& cfg)
{
    RateBreakdown out;
    out.rates_nats.reserve(static_cast<std::size_t>(cfg.users()));
    for (int k = 0; k < cfg.users(); ++k) {
        const double r = user_rate(ch, p, k, cfg.noise_power());
        out.rates_nats.push_back(r);
        out.weighted_sum_nats += cfg.weight(k) * r;
    }
    return out;
}

/// E_k = (I - U^H H V_k)(I - U^H H V_k)^H + s^2 U^H U + sum_{j!=k} U^H H V_j V_j^H H^H U
inline CMatrix mse_matrix(const ChannelSet& ch, const PrecoderSet& p, const CMatrix& receiver, int k,
                          double noise_power)
{
    const CMatrix& h = ch[k];
    const Eigen::Index d = receiver.cols();
    const CMatrix uh = receiver.adjoint() * h;
    const CMatrix err = linalg::identity(d) - uh * p[k];
    CMatrix e = err * err.adjoint() + noise_power * receiver.adjoint() * receiver;
    for (int j = 0; j < p.users(); ++j) {
        if (j == k) continue;
        const CMatrix x = uh * p[j];
        e.noalias() += x * x.adjoint();
    }
    return linalg::hermitize(e);
}

/// MMSE receivers U_k = (sum_j H_k V_j V_j^H H_k^H + s^2 I)^{-1} H_k V_k.
inline std::vector<CMatrix> update_receivers(const ChannelSet& ch, const PrecoderSet& p, double noise_power)
{
    detail::require_noise(noise_power);
    std::vector<CMatrix> out;
    out.reserve(static_cast<std::size_t>(ch.users()));
    for (int k = 0; k < ch.users(); ++k) {
        const CMatrix j = detail::received_covariance(ch, p, k, noise_power);
        out.push_back(linalg::hpd_solve(j, ch[k] * p[k]));
    }
    return out;
}

/// W_k = (I - U_k^H H_k V_k)^{-1}, Hermitian-symmetrized. With MMSE
/// receivers this is E_k^{-1}.
inline std::vector<CMatrix> update_weights(const std::vector<CMatrix>& receivers, const ChannelSet& ch,
                                           const PrecoderSet& p)
{
    std::vector<CMatrix> out;
    out.reserve(receivers.size());
    for (int k = 0; k < ch.users(); ++k) {
        const CMatrix& u = receivers[static_cast<std::size_t>(k)];
        const CMatrix m = linalg::identity(u.cols()) - u.adjoint() * ch[k] * p[k];
        const Eigen::JacobiSVD<CMatrix> svd(m);
        const auto& s = svd.singularValues();
        const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : INFINITY;
        if (!(cond < kWeightConditionLimit)) {
            throw DegenerateGeometry(k, cond);
        }
        out.push_back(linalg::hermitize(m.partialPivLu().solve(linalg::identity(u.cols()))));
    }
    return out;
}

/// sum_k a_k (Tr(W_k E_k) - log det W_k - d), E_k from the state's U and V.
inline double wmmse_objective(const SolverState& s, const ChannelSet& ch, const ValidConfig& cfg)
{
    double acc = 0.0;
    for (int k = 0; k < cfg.users(); ++k) {
        const CMatrix& w = s.weights[static_cast<std::size_t>(k)];
        const CMatrix e = mse_matrix(ch, s.precoders, s.receivers[static_cast<std::size_t>(k)], k,
                                     cfg.noise_power());
        double logdet_w = 0.0;
        try {
            logdet_w = linalg::logdet_hpd(w);
        } catch (const NumericalFailure&) {
            throw NumericalFailure("wmmse_objective: weight of user " + std::to_string(k)
                                   + " is not positive definite");
        }
        acc += cfg.weight(k) * (linalg::real_trace(w * e) - logdet_w - static_cast<double>(cfg.streams()));
    }
    return acc;
}

/// e_k = log det W_k + d - r_k - Tr(W_k + s^2 W_k U_k^H U_k), r_k in nats:
/// the budget left for the receiver-dependent part of the QoS surrogate.
inline double qos_surrogate_slack(const CMatrix& weight, const CMatrix& receiver, const ValidConfig& cfg, int k)
{
    const double logdet_w = linalg::logdet_hpd(weight);
    return logdet_w + static_cast<double>(cfg.streams()) - cfg.target_nats(k)
           - linalg::real_trace(weight + cfg.noise_power() * weight * receiver.adjoint() * receiver);
}

inline double qos_surrogate_slack(const SolverState& s, const ValidConfig& cfg, int k)
{
    return qos_surrogate_slack(s.weights[static_cast<std::size_t>(k)], s.receivers[static_cast<std::size_t>(k)],
                               cfg, k);
}

} // namespace qospapc
