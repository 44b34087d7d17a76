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

// Deterministic signal objects: stage-I pilot blocks, the stage-II sync
// burst and the per-sample frequency rotation.
//
// Time indexing: waveform samples are stored 0..N-1, rotations are indexed
// 1..tau. Waveform sample k is always paired with rotation index k+1.

#pragma once

#include "beamsync/common.hpp"

#include <string>

namespace beamsync {

/// tau_p x Ms block with orthonormal columns; column k is the pilot sent by
/// secondary antenna k, row n the snapshot at time n+1.
class PilotMatrix {
public:
    const CMatrix& entries() const { return entries_; }
    Eigen::Index length() const { return entries_.rows(); }
    Eigen::Index antennas() const { return entries_.cols(); }

    friend PilotMatrix make_orthonormal_pilots(int tau_p, int ms);

private:
    explicit PilotMatrix(CMatrix entries) : entries_(std::move(entries)) {}
    CMatrix entries_;
};

/// First Ms columns of the unitary tau_p-point DFT matrix.
inline PilotMatrix make_orthonormal_pilots(int tau_p, int ms)
{
    detail::require(ms >= 1, "pilot block needs at least one antenna");
    detail::require(tau_p >= ms, "pilot length " + std::to_string(tau_p) +
                                     " cannot excite " + std::to_string(ms) + " antennas");
    CMatrix phi(tau_p, ms);
    const double scale = 1.0 / std::sqrt(static_cast<double>(tau_p));
    for (int n = 0; n < tau_p; ++n)
        for (int k = 0; k < ms; ++k) {
            // reduce n*k mod tau_p so the phase argument stays small
            const auto nk = static_cast<double>((static_cast<long long>(n) * k) % tau_p);
            phi(n, k) = std::polar(scale, -kTwoPi * nk / tau_p);
        }
    return PilotMatrix(std::move(phi));
}

/// Real-valued synchronization burst.
class SyncWaveform {
public:
    const RVector& samples() const { return samples_; }
    Eigen::Index length() const { return samples_.size(); }
    int cycles() const { return cycles_; }
    /// Tone frequency in cycles per sample; zero for arbitrary sample sets.
    double frequency() const { return frequency_; }
    double energy() const { return samples_.squaredNorm(); }

    /// Wrap an arbitrary real sample vector (used by bound computations and tests).
    static SyncWaveform from_samples(RVector samples)
    {
        detail::require(samples.size() >= 2, "sync waveform needs at least 2 samples");
        detail::require(samples.allFinite(), "sync waveform samples must be finite");
        return SyncWaveform(std::move(samples), 0);
    }

    friend SyncWaveform make_sync_signal(int n, int cycles, bool pure_sinusoid);
    friend SyncWaveform make_sync_tone(int n, double frequency, bool pure_sinusoid);

private:
    SyncWaveform(RVector samples, int cycles, double frequency = 0.0)
        : samples_(std::move(samples)), cycles_(cycles), frequency_(frequency)
    {
    }
    RVector samples_;
    int cycles_;
    double frequency_;
};

/// x = [1, sin(2 pi f), ..., sin(2 pi f (N-1))] for an arbitrary tone
/// frequency 0 < f < 1/2. With pure_sinusoid the leading sample is sin(0) = 0.
inline SyncWaveform make_sync_tone(int n, double frequency, bool pure_sinusoid = false)
{
    detail::require(n >= 2, "sync length N must be at least 2, got " + std::to_string(n));
    detail::require(frequency > 0.0 && frequency < 0.5, "tone frequency must lie in (0, 1/2) cycles/sample");
    RVector x(n);
    x(0) = pure_sinusoid ? 0.0 : 1.0;
    for (int k = 1; k < n; ++k)
        x(k) = std::sin(kTwoPi * frequency * k);
    return SyncWaveform(std::move(x), 0, frequency);
}

/// Tone with f = cycles/N, i.e. `cycles` full periods over the burst.
inline SyncWaveform make_sync_signal(int n, int cycles = 4, bool pure_sinusoid = false)
{
    detail::require(n >= 2, "sync length N must be at least 2, got " + std::to_string(n));
    detail::require(cycles >= 1, "sync waveform needs at least one cycle");
    detail::require(2 * cycles < n, "cycles/N must be below 1/2 (got " + std::to_string(cycles) + "/" +
                                        std::to_string(n) + ")");
    SyncWaveform x = make_sync_tone(n, static_cast<double>(cycles) / n, pure_sinusoid);
    x.cycles_ = cycles;
    return x;
}

/// D_{delta,tau} = diag(e^{j 2 pi delta}, ..., e^{j 2 pi tau delta}), kept implicit.
class RotationDiag {
public:
    RotationDiag(double offset, Eigen::Index length) : offset_(offset), length_(length)
    {
        detail::require(length >= 1, "rotation length must be positive");
        detail::require(std::isfinite(offset), "rotation offset must be finite");
    }

    double offset() const { return offset_; }
    Eigen::Index length() const { return length_; }

    /// Entry n, 1-based.
    Complex entry(Eigen::Index n) const { return std::polar(1.0, kTwoPi * static_cast<double>(n) * offset_); }

    CVector materialize() const
    {
        CVector d(length_);
        for (Eigen::Index n = 1; n <= length_; ++n)
            d(n - 1) = entry(n);
        return d;
    }

private:
    double offset_;
    Eigen::Index length_;
};

inline RotationDiag rotation_diag(double offset, Eigen::Index length) { return RotationDiag(offset, length); }

/// block * D (or block * conj(D)); column c is scaled by exp(+-j 2 pi (c+1) delta).
inline CMatrix apply_rotation(const CMatrix& block, const RotationDiag& rot, bool conjugate = false)
{
    detail::require_dims(block.cols() == rot.length(),
                         "block has " + std::to_string(block.cols()) + " columns, rotation length is " +
                             std::to_string(rot.length()));
    CMatrix out(block.rows(), block.cols());
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
        Complex d = rot.entry(c + 1);
        if (conjugate)
            d = std::conj(d);
        out.col(c) = block.col(c) * d;
    }
    return out;
}

} // namespace beamsync
