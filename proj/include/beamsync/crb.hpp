// SPDX-License-Identifier: Apache-2.0
//
// beamsync: link-level simulator for over-the-air carrier synchronization
// Copyright (C) 2026 The beamsync authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Cramer-Rao bound on the offset estimate for the stage-II model
//   y_s(n) ~ CN(sqrt(rho) b x(n) e^{-j 2 pi n delta}, I),  n = 1..N, x real.
//
// Parameters are ordered theta = [b_R; b_I; delta] (length 2 Ms + 1). The
// stacked real observation has covariance I/2, which does not depend on
// theta, so the trace term of the Gaussian Fisher information vanishes and
// only the mean-derivative term is assembled.
//
// Two routes are provided and must agree: numerical assembly and inversion
// of the full FIM, and the closed form obtained by block inversion,
//   CRB = 1 / (8 pi^2 rho ||b||^2 (S2 - S1^2 / S0)),
//   Sk  = sum_n n^k x(n)^2.

#pragma once

#include "beamsync/common.hpp"
#include "beamsync/signal.hpp"

#include <Eigen/LU>

namespace beamsync {

struct FisherInfo {
    RMatrix matrix; // (2 Ms + 1) square, symmetric PSD

    Eigen::Index parameters() const { return matrix.rows(); }
};

/// Per-sample FIM J_n at 1-based time index n.
inline FisherInfo fim_single(int n, double x_n, const CVector& b, double rho)
{
    detail::require(n >= 1, "time index is 1-based");
    detail::require(rho > 0.0, "SNR must be positive");
    const Eigen::Index ms = b.size();
    detail::require(ms >= 1, "effective channel must have at least one entry");
    const RVector br = b.real();
    const RVector bi = b.imag();
    const double w = 2.0 * kPi * n;

    RMatrix j = RMatrix::Zero(2 * ms + 1, 2 * ms + 1);
    j.topLeftCorner(2 * ms, 2 * ms).setIdentity();
    j.block(0, 2 * ms, ms, 1) = w * bi;
    j.block(ms, 2 * ms, ms, 1) = -w * br;
    j.block(2 * ms, 0, 1, ms) = w * bi.transpose();
    j.block(2 * ms, ms, 1, ms) = -w * br.transpose();
    j(2 * ms, 2 * ms) = w * w * b.squaredNorm();
    j *= 2.0 * rho * x_n * x_n;
    return FisherInfo{std::move(j)};
}

/// J = sum_{n=1}^{N} J_n, waveform sample k paired with time index k+1.
inline FisherInfo fim_total(const SyncWaveform& x, const CVector& b, double rho)
{
    FisherInfo total{RMatrix::Zero(2 * b.size() + 1, 2 * b.size() + 1)};
    for (Eigen::Index k = 0; k < x.length(); ++k)
        total.matrix += fim_single(static_cast<int>(k + 1), x.samples()(k), b, rho).matrix;
    return total;
}

inline double crb_closed_form(const SyncWaveform& x, const CVector& b, double rho)
{
    detail::require(rho > 0.0, "SNR must be positive");
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (Eigen::Index k = 0; k < x.length(); ++k) {
        const double n = static_cast<double>(k + 1);
        const double e = x.samples()(k) * x.samples()(k);
        s0 += e;
        s1 += n * e;
        s2 += n * n * e;
    }
    const double b2 = b.squaredNorm();
    if (!(s0 > 0.0) || !(b2 > 0.0))
        throw IdentifiabilityError("offset not identifiable: zero waveform energy or zero effective channel");
    const double spread = s2 - s1 * s1 / s0;
    // spread is a weighted variance of n; a single nonzero sample gives 0 up to rounding
    if (!(spread > 1e-12 * s2))
        throw IdentifiabilityError("offset not identifiable: waveform energy concentrated in one sample");
    return 1.0 / (8.0 * kPi * kPi * rho * b2 * spread);
}

/// Lower-right element of J^{-1}, via an LU solve against the last unit vector.
inline double crb_numerical(const SyncWaveform& x, const CVector& b, double rho)
{
    const FisherInfo fim = fim_total(x, b, rho);
    Eigen::FullPivLU<RMatrix> lu(fim.matrix);
    if (!lu.isInvertible())
        throw IdentifiabilityError("offset not identifiable: Fisher information matrix is singular");
    const Eigen::Index p = fim.parameters();
    RVector e = RVector::Zero(p);
    e(p - 1) = 1.0;
    return lu.solve(e)(p - 1);
}

} // namespace beamsync
