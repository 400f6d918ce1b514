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

// Reference computations for the tests. These deliberately avoid the
// library's own code paths: determinants through LU instead of Cholesky,
// explicit inverses, plain bisection and projected gradient instead of
// closed forms, and a private RNG for random instances.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include <qospapc/qospapc.hpp>

namespace oracle {

using qospapc::CMatrix;
using qospapc::cplx;

/// Independent random source for test instances (std::normal_distribution
/// is fine here: tests only need variety, not cross-platform streams).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g_); }
    double normal() { return n_(g_); }

    CMatrix matrix(Eigen::Index r, Eigen::Index c, double scale = 1.0)
    {
        CMatrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * cplx(normal(), normal()) / std::sqrt(2.0);
        }
        return m;
    }

    CMatrix hpd(Eigen::Index n)
    {
        const CMatrix a = matrix(n, n);
        return a * a.adjoint() + 0.1 * CMatrix::Identity(n, n);
    }

    std::mt19937_64& engine() { return g_; }

private:
    std::mt19937_64 g_;
    std::normal_distribution<double> n_{0.0, 1.0};
};

inline double logdet_lu(const CMatrix& a) { return std::log(std::abs(a.fullPivLu().determinant())); }

inline CMatrix inverse_lu(const CMatrix& a) { return a.fullPivLu().inverse(); }

/// log det(I + H_k V_k V_k^H H_k^H C^{-1}) by LU determinant.
inline double rate(const std::vector<CMatrix>& h, const std::vector<CMatrix>& v, int k, double sigma2)
{
    const auto ku = static_cast<std::size_t>(k);
    const Eigen::Index nr = h[ku].rows();
    CMatrix c = sigma2 * CMatrix::Identity(nr, nr);
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (j == ku) continue;
        c += h[ku] * v[j] * v[j].adjoint() * h[ku].adjoint();
    }
    const CMatrix s = h[ku] * v[ku] * v[ku].adjoint() * h[ku].adjoint();
    return logdet_lu(CMatrix::Identity(nr, nr) + s * inverse_lu(c));
}

/// MMSE receiver via an explicit LU inverse.
inline CMatrix mmse_receiver(const std::vector<CMatrix>& h, const std::vector<CMatrix>& v, int k, double sigma2)
{
    const auto ku = static_cast<std::size_t>(k);
    const Eigen::Index nr = h[ku].rows();
    CMatrix j = sigma2 * CMatrix::Identity(nr, nr);
    for (const auto& vj : v) j += h[ku] * vj * vj.adjoint() * h[ku].adjoint();
    return inverse_lu(j) * h[ku] * v[ku];
}

/// E_k written out term by term.
inline CMatrix mse(const std::vector<CMatrix>& h, const std::vector<CMatrix>& v, const CMatrix& u, int k,
                   double sigma2)
{
    const auto ku = static_cast<std::size_t>(k);
    const Eigen::Index d = u.cols();
    const CMatrix i = CMatrix::Identity(d, d);
    CMatrix e = (i - u.adjoint() * h[ku] * v[ku]) * (i - u.adjoint() * h[ku] * v[ku]).adjoint();
    e += sigma2 * u.adjoint() * u;
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (j == ku) continue;
        e += u.adjoint() * h[ku] * v[j] * v[j].adjoint() * h[ku].adjoint() * u;
    }
    return e;
}

/// Positive root of f(x) = target for a decreasing f, by plain bisection
/// on [lo, hi] (hi doubled until f(hi) <= target).
inline double bisect_decreasing(const std::function<double(double)>& f, double target, double lo = 0.0,
                                double hi = 1.0, double tol = 1e-14)
{
    while (f(hi) > target) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 2000 && hi - lo > tol * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Secant iteration started from a bracket, for scalar roots of a smooth
/// function. Independent of the library's bisection.
inline double secant_root(const std::function<double(double)>& f, double a, double b, int iters = 200)
{
    double fa = f(a), fb = f(b);
    for (int i = 0; i < iters && std::abs(fb) > 1e-15; ++i) {
        if (fb == fa) break;
        const double c = b - fb * (b - a) / (fb - fa);
        a = b;
        fa = fb;
        b = c;
        fb = f(b);
    }
    return b;
}

/// rho/2 sum_{k,j} ||A_k V_j - X_kj + L_kj||^2 with A_k = U_k^H H_k.
inline double v_objective(const std::vector<CMatrix>& a, const std::vector<CMatrix>& v,
                          const std::vector<std::vector<CMatrix>>& x, const std::vector<std::vector<CMatrix>>& lam,
                          double rho)
{
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        for (std::size_t j = 0; j < v.size(); ++j) acc += (a[k] * v[j] - x[k][j] + lam[k][j]).squaredNorm();
    }
    return 0.5 * rho * acc;
}

/// Accelerated projected gradient on the precoder subproblem. The feasible
/// set is a product of balls, one per antenna row across all users.
inline std::vector<CMatrix> v_projected_gradient(const std::vector<CMatrix>& a, std::vector<CMatrix> v,
                                                 const std::vector<std::vector<CMatrix>>& x,
                                                 const std::vector<std::vector<CMatrix>>& lam, double rho,
                                                 const std::vector<double>& budgets, int iters = 20000)
{
    const Eigen::Index nt = a[0].cols();
    CMatrix gram = CMatrix::Zero(nt, nt);
    for (const auto& ak : a) gram += ak.adjoint() * ak;
    const double lip = rho * Eigen::SelfAdjointEigenSolver<CMatrix>(gram).eigenvalues().maxCoeff();
    const double step = 1.0 / lip;

    auto project = [&](std::vector<CMatrix>& w) {
        for (Eigen::Index m = 0; m < nt; ++m) {
            double p = 0.0;
            for (const auto& wj : w) p += wj.row(m).squaredNorm();
            const double b = budgets[static_cast<std::size_t>(m)];
            if (p > b) {
                const double s = std::sqrt(b / p);
                for (auto& wj : w) wj.row(m) *= s;
            }
        }
    };
    project(v);
    std::vector<CMatrix> y = v, prev = v;
    double t = 1.0;
    for (int it = 0; it < iters; ++it) {
        std::vector<CMatrix> next = y;
        for (std::size_t j = 0; j < v.size(); ++j) {
            CMatrix g = CMatrix::Zero(v[j].rows(), v[j].cols());
            for (std::size_t k = 0; k < a.size(); ++k) g += a[k].adjoint() * (a[k] * y[j] - x[k][j] + lam[k][j]);
            next[j] = y[j] - step * rho * g;
        }
        project(next);
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        for (std::size_t j = 0; j < v.size(); ++j) y[j] = next[j] + ((t - 1.0) / tn) * (next[j] - prev[j]);
        prev = next;
        t = tn;
    }
    return prev;
}

/// Rate of the single-user MISO optimum under per-antenna budgets:
/// every antenna at full power, co-phased with the channel,
/// log(1 + (sum_m |h_m| sqrt(P_m))^2 / sigma^2).
inline double miso_papc_rate(const CMatrix& h_row, const std::vector<double>& budgets, double sigma2)
{
    double amp = 0.0;
    for (Eigen::Index m = 0; m < h_row.cols(); ++m) amp += std::abs(h_row(0, m)) * std::sqrt(budgets[static_cast<std::size_t>(m)]);
    return std::log1p(amp * amp / sigma2);
}

/// A random validated config and matching channels / precoders.
struct Instance {
    qospapc::ValidConfig cfg;
    qospapc::ChannelSet ch;
    qospapc::PrecoderSet v;
};

inline Instance random_instance(Rng& rng, int nt, int k, int nr, int d, double sigma2 = 1.0)
{
    auto c = qospapc::make_uniform_config(nt, nr, k, d, static_cast<double>(nt), sigma2);
    for (auto& w : c.user_weights) w = rng.uniform(0.5, 2.0);
    Instance inst{qospapc::validate_config(c), {}, {}};
    for (int u = 0; u < k; ++u) {
        inst.ch.h.push_back(rng.matrix(nr, nt));
        inst.v.v.push_back(rng.matrix(nt, d, 0.7));
    }
    return inst;
}

} // namespace oracle
