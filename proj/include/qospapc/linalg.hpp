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

#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qospapc {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Raised when a computation produces a non-finite value or a
/// factorization that should have succeeded fails.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace linalg {

/// (A + A^H) / 2
inline CMatrix hermitize(const CMatrix& a)
{
    return (a + a.adjoint()) * 0.5;
}

inline CMatrix identity(Eigen::Index n)
{
    return CMatrix::Identity(n, n);
}

/// Inverse of a Hermitian positive definite matrix via Cholesky solve
/// against the identity. Throws if the matrix is not numerically PD.
inline CMatrix hpd_inverse(const CMatrix& a)
{
    Eigen::LLT<CMatrix> llt(hermitize(a));
    if (llt.info() != Eigen::Success) {
        throw NumericalFailure("hpd_inverse: matrix is not positive definite");
    }
    return llt.solve(identity(a.rows()));
}

/// Solves A X = B for Hermitian positive definite A.
inline CMatrix hpd_solve(const CMatrix& a, const CMatrix& b)
{
    Eigen::LLT<CMatrix> llt(hermitize(a));
    if (llt.info() != Eigen::Success) {
        throw NumericalFailure("hpd_solve: matrix is not positive definite");
    }
    return llt.solve(b);
}

/// log det of a Hermitian positive definite matrix, as the sum of the
/// logs of the squared Cholesky diagonal.
inline double logdet_hpd(const CMatrix& a)
{
    Eigen::LLT<CMatrix> llt(hermitize(a));
    if (llt.info() != Eigen::Success) {
        throw NumericalFailure("logdet_hpd: matrix is not positive definite");
    }
    const CMatrix& l = llt.matrixLLT();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        acc += 2.0 * std::log(l(i, i).real());
    }
    return acc;
}

/// Real trace of a product known to be Hermitian.
inline double real_trace(const CMatrix& a)
{
    return a.trace().real();
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues clamped
/// at zero when they fall below -clamp_tol (round-off).
struct HermitianEig {
    RVector values;
    CMatrix vectors;
};

inline HermitianEig hermitian_eig(const CMatrix& a, double clamp_tol = 1e-10)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(a));
    if (es.info() != Eigen::Success) {
        throw NumericalFailure("hermitian_eig: eigen-decomposition failed");
    }
    HermitianEig out{es.eigenvalues(), es.eigenvectors()};
    for (Eigen::Index i = 0; i < out.values.size(); ++i) {
        if (out.values(i) < 0.0) {
            if (out.values(i) < -clamp_tol * std::max(1.0, out.values.cwiseAbs().maxCoeff())) {
                throw NumericalFailure("hermitian_eig: matrix has a negative eigenvalue "
                                       + std::to_string(out.values(i)));
            }
            out.values(i) = 0.0;
        }
    }
    return out;
}

inline bool all_finite(const CMatrix& a)
{
    return a.allFinite();
}

} // namespace linalg
} // namespace qospapc
