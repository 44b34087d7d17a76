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

// The two protocol stages and the beam selection rules.
//
//   stage I : secondary sends orthonormal pilots, primary receives
//             Y_p = sqrt(rho) G Phi^H D_{delta,tau_p} + W_p            (Mp x tau_p)
//   stage II: primary beamforms the sync burst along a, secondary receives
//             Y_s = sqrt(rho) G^T a x^T conj(D_{delta,N}) + W_s         (Ms x N)
//
// Digital schemes pick a from the dominant left singular vector of Y_p (or of
// G for the genie variant). Analog schemes pick transmit/receive beams from a
// fixed DFT codebook by received power.

#pragma once

#include "beamsync/channel.hpp"
#include "beamsync/common.hpp"
#include "beamsync/random.hpp"
#include "beamsync/signal.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace beamsync {

/// Unit-norm complex beamforming weights.
class BeamVector {
public:
    explicit BeamVector(CVector weights) : weights_(std::move(weights))
    {
        detail::require(weights_.size() >= 1, "beam must have at least one element");
        detail::require(std::abs(weights_.norm() - 1.0) <= 1e-10, "beam weights must have unit norm");
    }

    static BeamVector normalized(const CVector& v)
    {
        const double n = v.norm();
        detail::require(n > 0.0 && std::isfinite(n), "cannot normalize a zero beam");
        return BeamVector(v / n);
    }

    const CVector& weights() const { return weights_; }
    Eigen::Index size() const { return weights_.size(); }
    BeamVector conjugate() const { return BeamVector(weights_.conjugate()); }

private:
    CVector weights_;
};

enum class Side { PrimaryReceived, SecondaryReceived };

struct ReceivedBlock {
    CMatrix entries;  // antennas x time
    double snr = 1.0; // linear rho
    Side side = Side::PrimaryReceived;

    Eigen::Index antennas() const { return entries.rows(); }
    Eigen::Index samples() const { return entries.cols(); }
};

enum class Scheme { BeamSync, BeamSyncGenie, Analog, AnalogGenie };

inline constexpr std::array<Scheme, 4> kAllSchemes{Scheme::BeamSync, Scheme::BeamSyncGenie, Scheme::Analog,
                                                   Scheme::AnalogGenie};

inline std::string_view scheme_name(Scheme s)
{
    switch (s) {
    case Scheme::BeamSync:
        return "BeamSync";
    case Scheme::BeamSyncGenie:
        return "BeamSyncGenie";
    case Scheme::Analog:
        return "Analog";
    case Scheme::AnalogGenie:
        return "AnalogGenie";
    }
    return "?";
}

inline std::optional<Scheme> parse_scheme(std::string_view name)
{
    for (auto s : kAllSchemes)
        if (scheme_name(s) == name)
            return s;
    return std::nullopt;
}

inline bool is_analog(Scheme s) { return s == Scheme::Analog || s == Scheme::AnalogGenie; }

struct SyncLinkState {
    double true_offset = 0.0; // cycles per sample
    Snr snr = Snr::from_linear(1.0);
    ChannelMatrix channel;
    Scheme scheme = Scheme::BeamSync;
    // Multiplies the unit-variance noise. 0 gives the noiseless model; the
    // noise realization is still drawn so stream consumption does not change.
    double noise_scale = 1.0;
};

inline ReceivedBlock stage1_receive(const SyncLinkState& link, const PilotMatrix& pilots, Rng& rng)
{
    const CMatrix& g = link.channel.gains;
    detail::require_dims(g.cols() == pilots.antennas(),
                         "channel has " + std::to_string(g.cols()) + " secondary antennas, pilots cover " +
                             std::to_string(pilots.antennas()));
    const double rho = link.snr.linear();
    CMatrix clean = std::sqrt(rho) * (g * pilots.entries().adjoint());
    CMatrix y = apply_rotation(clean, RotationDiag(link.true_offset, pilots.length()));
    y += link.noise_scale * complex_normal_matrix(g.rows(), pilots.length(), rng);
    return ReceivedBlock{std::move(y), rho, Side::PrimaryReceived};
}

namespace detail {

/// Rotate v so that its largest-magnitude entry (first on ties) is real and positive.
inline CVector canonical_phase(CVector v)
{
    Eigen::Index best = 0;
    double best_mag = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v(i));
        if (mag > best_mag) {
            best_mag = mag;
            best = i;
        }
    }
    if (best_mag > 0.0)
        v *= std::conj(v(best)) / best_mag;
    return v;
}

inline CVector dominant_left_singular_vector(const CMatrix& m)
{
    // left singular vectors of M are the eigenvectors of M M^H; the solver
    // sorts eigenvalues ascending
    const CMatrix gram = m * m.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram);
    CVector u = eig.eigenvectors().col(gram.rows() - 1);
    return canonical_phase(u / u.norm());
}

} // namespace detail

/// a = conj(u_p1), the dominant receive direction of the stage-I block.
inline BeamVector estimate_beam_direction(const ReceivedBlock& yp)
{
    detail::require(yp.entries.size() > 0, "empty stage-I block");
    detail::require(yp.entries.cwiseAbs2().sum() > 0.0, "stage-I block is identically zero");
    return BeamVector::normalized(detail::dominant_left_singular_vector(yp.entries).conjugate());
}

/// a = conj(u_1) of G; maximizes ||G^T a||^2 over unit vectors.
inline BeamVector genie_beam_direction(const ChannelMatrix& g)
{
    detail::require(g.gains.size() > 0 && g.gains.cwiseAbs2().sum() > 0.0, "channel is identically zero");
    return BeamVector::normalized(detail::dominant_left_singular_vector(g.gains).conjugate());
}

/// Effective channel seen by the secondary, b = G^T a.
inline CVector effective_channel(const ChannelMatrix& g, const BeamVector& beam)
{
    detail::require_dims(beam.size() == g.gains.rows(), "beam length must equal the primary antenna count");
    return g.gains.transpose() * beam.weights();
}

inline ReceivedBlock stage2_receive(const SyncLinkState& link, const BeamVector& beam, const SyncWaveform& x, Rng& rng)
{
    const CVector b = effective_channel(link.channel, beam);
    const double rho = link.snr.linear();
    const Eigen::Index n = x.length();
    CMatrix clean = std::sqrt(rho) * (b * x.samples().cast<Complex>().transpose());
    CMatrix y = apply_rotation(clean, RotationDiag(link.true_offset, n), /*conjugate=*/true);
    y += link.noise_scale * complex_normal_matrix(b.size(), n, rng);
    return ReceivedBlock{std::move(y), rho, Side::SecondaryReceived};
}

/// Beam k has entries exp(-j 2 pi k m / M) / sqrt(M), m = 0..M-1.
inline std::vector<BeamVector> dft_codebook(int m)
{
    detail::require(m >= 1, "codebook size must be positive");
    std::vector<BeamVector> beams;
    beams.reserve(m);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (int k = 0; k < m; ++k) {
        CVector w(m);
        for (int i = 0; i < m; ++i) {
            const auto km = static_cast<double>((static_cast<long long>(k) * i) % m);
            w(i) = std::polar(scale, -kTwoPi * km / m);
        }
        beams.push_back(BeamVector::normalized(w));
    }
    return beams;
}

struct AnalogSelection {
    std::size_t index = 0;
    BeamVector beam;
    double metric = 0.0;
};

namespace detail {

/// argmax_k ||f_k^H Y||^2, lowest index on ties.
inline std::pair<std::size_t, double> strongest_beam(const CMatrix& y, const std::vector<BeamVector>& codebook)
{
    require(!codebook.empty(), "codebook is empty");
    std::size_t best = 0;
    double best_metric = -1.0;
    for (std::size_t k = 0; k < codebook.size(); ++k) {
        require_dims(codebook[k].size() == y.rows(), "codebook beam length must match the block's antenna count");
        const double metric = (codebook[k].weights().adjoint() * y).squaredNorm();
        if (metric > best_metric) {
            best_metric = metric;
            best = k;
        }
    }
    return {best, best_metric};
}

} // namespace detail

/// Transmit beam a_p = conj(f_k) for the codebook beam receiving the most stage-I power.
inline AnalogSelection analog_select_tx(const ReceivedBlock& yp, const std::vector<BeamVector>& codebook)
{
    auto [k, metric] = detail::strongest_beam(yp.entries, codebook);
    return AnalogSelection{k, codebook[k].conjugate(), metric};
}

/// Receive beam a_s = f_l for the codebook beam receiving the most stage-II power.
inline AnalogSelection analog_select_rx(const ReceivedBlock& ys, const std::vector<BeamVector>& codebook)
{
    auto [l, metric] = detail::strongest_beam(ys.entries, codebook);
    return AnalogSelection{l, codebook[l], metric};
}

struct AnalogPair {
    std::size_t tx_index = 0;
    std::size_t rx_index = 0;
    BeamVector tx;  // a_p = conj(f_{p,k})
    BeamVector rx;  // a_s = conj(f_{s,l})
    double metric = 0.0;
};

/// Joint argmax over (k, l) of |f_{p,k}^H G f_{s,l}|^2, lexicographically lowest on ties.
///
/// The applied stage-II gain with a_p = conj(f_k) and receive beam a_s is
/// a_s^H G^T conj(f_k) = f_k^H G conj(a_s), so the receive beam returned is
/// conj(f_l): that is the beam for which the realized gain equals the metric.
inline AnalogPair analog_genie_select(const ChannelMatrix& g, const std::vector<BeamVector>& tx_codebook,
                                      const std::vector<BeamVector>& rx_codebook)
{
    detail::require(!tx_codebook.empty() && !rx_codebook.empty(), "codebooks must be nonempty");
    const CMatrix& gm = g.gains;
    CMatrix ftx(gm.rows(), tx_codebook.size());
    for (std::size_t k = 0; k < tx_codebook.size(); ++k) {
        detail::require_dims(tx_codebook[k].size() == gm.rows(), "transmit codebook does not match Mp");
        ftx.col(k) = tx_codebook[k].weights();
    }
    CMatrix frx(gm.cols(), rx_codebook.size());
    for (std::size_t l = 0; l < rx_codebook.size(); ++l) {
        detail::require_dims(rx_codebook[l].size() == gm.cols(), "receive codebook does not match Ms");
        frx.col(l) = rx_codebook[l].weights();
    }
    const RMatrix metric = (ftx.adjoint() * gm * frx).cwiseAbs2();
    std::size_t best_k = 0, best_l = 0;
    double best = -1.0;
    for (Eigen::Index k = 0; k < metric.rows(); ++k)
        for (Eigen::Index l = 0; l < metric.cols(); ++l)
            if (metric(k, l) > best) {
                best = metric(k, l);
                best_k = static_cast<std::size_t>(k);
                best_l = static_cast<std::size_t>(l);
            }
    return AnalogPair{best_k, best_l, tx_codebook[best_k].conjugate(), rx_codebook[best_l].conjugate(), best};
}

/// 1 x N block a_s^H Y_s. Noise stays CN(0,1) per sample since ||a_s|| = 1.
inline ReceivedBlock collapse_rx_beam(const ReceivedBlock& ys, const BeamVector& rx_beam)
{
    detail::require_dims(rx_beam.size() == ys.antennas(), "receive beam length must match the block's antennas");
    CMatrix y = rx_beam.weights().adjoint() * ys.entries;
    return ReceivedBlock{std::move(y), ys.snr, ys.side};
}

} // namespace beamsync
