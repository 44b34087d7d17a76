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

// Joint ML estimate of the offset and the effective channel from a stage-II
// block Y_s (antennas x N):
//
//   delta_hat = argmax_delta || Y_s D_{delta,N} x ||^2
//   b_hat     = Y_s D_{delta_hat,N} x / (sqrt(rho) ||x||^2)
//
// x is real so conj(x) = x. The objective is evaluated as a matched filter per
// antenna, z(delta) = sum_n y[:, n] x[n] e^{j 2 pi (n+1) delta}, never forming D.
//
// Search: the objective is sampled on a uniform coarse grid over
// [-halfwidth, +halfwidth), the strongest local maxima are refined by
// golden-section search inside their grid neighbours, and the best refined
// point wins.
//
// When the grid covers the full period with spacing 1/K (halfwidth 0.5), the
// grid samples are a K-point inverse DFT of y[:, n] x[n] (-1)^(n+1) and are
// computed with FFTW. Otherwise a precomputed N x K steering matrix is used.

#pragma once

#include "beamsync/common.hpp"
#include "beamsync/protocol.hpp"
#include "beamsync/signal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace beamsync {

struct EstimatorConfig {
    double search_halfwidth = 0.5;  // cycles/sample; 0.5 is the full unambiguous range
    int coarse_grid_points = 0;     // 0 selects 8N
    double refine_tolerance = 1e-9; // final bracket width, cycles/sample
    int refine_max_iters = 100;
    int refine_candidates = 4;      // local maxima of the coarse grid that get refined
};

namespace detail {

// The FFTW planner is not thread-safe; execution of an existing plan is.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)), size(n)
    {
        if (!data)
            throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    fftw_complex* data;
    std::size_t size;
};

/// Unnormalized K-point transform with e^{+j 2 pi n k / K} kernel.
class InverseDft {
public:
    explicit InverseDft(int k) : k_(k)
    {
        FftwBuffer in(k), out(k);
        std::lock_guard lock(fftw_planner_mutex());
        fftw_plan p = fftw_plan_dft_1d(k, in.data, out.data, FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!p)
            throw std::runtime_error("FFTW planning failed");
        plan_ = std::shared_ptr<fftw_plan_s>(p, [](fftw_plan q) {
            std::lock_guard guard(fftw_planner_mutex());
            fftw_destroy_plan(q);
        });
    }

    int size() const { return k_; }

    /// Buffers must come from fftw_alloc_complex so their alignment matches the plan.
    void execute(FftwBuffer& in, FftwBuffer& out) const { fftw_execute_dft(plan_.get(), in.data, out.data); }

private:
    int k_;
    std::shared_ptr<fftw_plan_s> plan_;
};

} // namespace detail

struct OffsetEstimate {
    double delta_hat = 0.0;
    CVector b_hat;
    double objective_value = 0.0;
    bool valid = false; // false for an all-zero block (flat objective)
};

namespace detail {

inline void check_block(const ReceivedBlock& ys, const SyncWaveform& x)
{
    require_dims(ys.samples() == x.length(), "block has " + std::to_string(ys.samples()) +
                                                 " samples, sync waveform has " + std::to_string(x.length()));
}

/// Y D_{delta,N} x for every antenna.
inline CVector matched_filter(const CMatrix& y, const RVector& x, double delta)
{
    CVector v(y.cols());
    for (Eigen::Index n = 0; n < y.cols(); ++n)
        v(n) = std::polar(x(n), kTwoPi * static_cast<double>(n + 1) * delta);
    return y * v;
}

} // namespace detail

inline double ml_objective(const ReceivedBlock& ys, const SyncWaveform& x, double delta)
{
    detail::check_block(ys, x);
    return detail::matched_filter(ys.entries, x.samples(), delta).squaredNorm();
}

inline CVector estimate_effective_channel(const ReceivedBlock& ys, const SyncWaveform& x, double delta, double rho)
{
    detail::check_block(ys, x);
    detail::require(rho > 0.0, "SNR must be positive");
    const double energy = x.energy();
    detail::require(energy > 0.0, "sync waveform has zero energy");
    return detail::matched_filter(ys.entries, x.samples(), delta) / (std::sqrt(rho) * energy);
}

/// Reusable estimator for a fixed waveform and search configuration. The
/// coarse-grid machinery (FFT plan or steering matrix) is built once and
/// shared across blocks; all methods are const and safe to call concurrently.
class OffsetEstimator {
public:
    OffsetEstimator(SyncWaveform x, EstimatorConfig cfg) : x_(std::move(x)), cfg_(cfg)
    {
        const auto n = x_.length();
        detail::require(n >= 2, "sync length must be at least 2");
        detail::require(cfg_.search_halfwidth > 0.0 && cfg_.search_halfwidth <= 0.5,
                        "search half-width must lie in (0, 0.5]");
        detail::require(cfg_.refine_tolerance > 0.0, "refine tolerance must be positive");
        detail::require(cfg_.refine_max_iters >= 1, "refine needs at least one iteration");
        detail::require(cfg_.refine_candidates >= 1, "at least one candidate must be refined");
        if (cfg_.coarse_grid_points == 0)
            cfg_.coarse_grid_points = static_cast<int>(8 * n);
        detail::require(cfg_.coarse_grid_points >= 2, "coarse grid needs at least 2 points");
        step_ = 2.0 * cfg_.search_halfwidth / cfg_.coarse_grid_points;
        detail::require(step_ <= 1.0 / (4.0 * static_cast<double>(n)) + 1e-15,
                        "coarse grid spacing must not exceed 1/(4N) to isolate the main lobe");

        if (cfg_.search_halfwidth == 0.5 && cfg_.coarse_grid_points > n) {
            dft_.emplace(cfg_.coarse_grid_points);
        } else {
            steering_.resize(n, cfg_.coarse_grid_points);
            for (int k = 0; k < cfg_.coarse_grid_points; ++k) {
                const double delta = grid_point(k);
                for (Eigen::Index i = 0; i < n; ++i)
                    steering_(i, k) = std::polar(x_.samples()(i), kTwoPi * static_cast<double>(i + 1) * delta);
            }
        }
    }

    const SyncWaveform& waveform() const { return x_; }
    const EstimatorConfig& config() const { return cfg_; }
    double grid_point(int k) const { return -cfg_.search_halfwidth + k * step_; }

    /// Objective on the coarse grid, one value per grid point.
    RVector coarse_objective(const ReceivedBlock& ys) const
    {
        detail::check_block(ys, x_);
        if (!dft_)
            return (ys.entries * steering_).colwise().squaredNorm().transpose();

        // grid point k is -1/2 + k/K, so e^{j 2 pi (n+1) delta_k} = (-1)^(n+1) e^{j 2 pi (n+1) k / K}
        const int k_total = dft_->size();
        detail::FftwBuffer in(k_total), out(k_total);
        RVector acc = RVector::Zero(k_total);
        const RVector& x = x_.samples();
        for (Eigen::Index m = 0; m < ys.antennas(); ++m) {
            std::fill_n(&in.data[0][0], 2 * static_cast<std::size_t>(k_total), 0.0);
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double sign = (i % 2 == 0) ? -1.0 : 1.0;
                const Complex c = ys.entries(m, i) * (sign * x(i));
                in.data[i + 1][0] = c.real();
                in.data[i + 1][1] = c.imag();
            }
            dft_->execute(in, out);
            for (int k = 0; k < k_total; ++k)
                acc(k) += out.data[k][0] * out.data[k][0] + out.data[k][1] * out.data[k][1];
        }
        return acc;
    }

    /// Coarse grid via the explicit steering product; independent of the FFT path.
    RVector coarse_objective_direct(const ReceivedBlock& ys) const
    {
        detail::check_block(ys, x_);
        RVector out(cfg_.coarse_grid_points);
        for (int k = 0; k < cfg_.coarse_grid_points; ++k)
            out(k) = detail::matched_filter(ys.entries, x_.samples(), grid_point(k)).squaredNorm();
        return out;
    }

    OffsetEstimate estimate(const ReceivedBlock& ys) const
    {
        const RVector coarse = coarse_objective(ys);
        OffsetEstimate out;
        const double peak = coarse.maxCoeff();
        if (!(peak > 0.0)) {
            out.b_hat = CVector::Zero(ys.antennas());
            return out;
        }

        const bool periodic = cfg_.search_halfwidth >= 0.5;
        const int k_total = cfg_.coarse_grid_points;
        std::vector<int> maxima;
        for (int k = 0; k < k_total; ++k) {
            int left = k - 1, right = k + 1;
            if (periodic) {
                left = (left + k_total) % k_total;
                right = right % k_total;
            }
            const double l = left >= 0 ? coarse(left) : -1.0;
            const double r = right < k_total ? coarse(right) : -1.0;
            // >= on the left and > on the right keeps exactly one index of a flat top
            if (coarse(k) >= l && coarse(k) > r)
                maxima.push_back(k);
        }
        if (maxima.empty())
            maxima.push_back(static_cast<int>(std::max_element(coarse.data(), coarse.data() + k_total) - coarse.data()));
        std::stable_sort(maxima.begin(), maxima.end(), [&](int a, int b) { return coarse(a) > coarse(b); });
        // A grid sample sits within 1/(16N) of its lobe peak and keeps >~90% of it,
        // so a lobe sampled below half of the best sample cannot hold the global peak.
        std::erase_if(maxima, [&](int k) { return coarse(k) < 0.5 * peak; });
        if (static_cast<int>(maxima.size()) > cfg_.refine_candidates)
            maxima.resize(cfg_.refine_candidates);

        double best_delta = grid_point(maxima.front());
        double best_value = coarse(maxima.front());
        for (int k : maxima) {
            double lo = grid_point(k) - step_;
            double hi = grid_point(k) + step_;
            if (!periodic) {
                lo = std::max(lo, -cfg_.search_halfwidth);
                hi = std::min(hi, cfg_.search_halfwidth);
            }
            const double d = golden_section(ys, lo, hi);
            const double v = ml_objective(ys, x_, d);
            if (v > best_value) {
                best_value = v;
                best_delta = d;
            }
        }

        out.delta_hat = periodic ? wrap_offset(best_delta) : best_delta;
        out.objective_value = ml_objective(ys, x_, out.delta_hat);
        out.b_hat = estimate_effective_channel(ys, x_, out.delta_hat, ys.snr);
        out.valid = true;
        return out;
    }

private:
    double golden_section(const ReceivedBlock& ys, double lo, double hi) const
    {
        constexpr double kInvPhi = 0.6180339887498949;
        double c = hi - kInvPhi * (hi - lo);
        double d = lo + kInvPhi * (hi - lo);
        double fc = ml_objective(ys, x_, c);
        double fd = ml_objective(ys, x_, d);
        for (int it = 0; it < cfg_.refine_max_iters && hi - lo > cfg_.refine_tolerance; ++it) {
            if (fc >= fd) {
                hi = d;
                d = c;
                fd = fc;
                c = hi - kInvPhi * (hi - lo);
                fc = ml_objective(ys, x_, c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + kInvPhi * (hi - lo);
                fd = ml_objective(ys, x_, d);
            }
        }
        return 0.5 * (lo + hi);
    }

    SyncWaveform x_;
    EstimatorConfig cfg_;
    double step_ = 0.0;
    std::optional<detail::InverseDft> dft_;
    CMatrix steering_; // N x K, entry (n, k) = x[n] e^{j 2 pi (n+1) delta_k}; only without dft_
};

inline OffsetEstimate estimate_offset(const ReceivedBlock& ys, const SyncWaveform& x, const EstimatorConfig& cfg = {})
{
    return OffsetEstimator(x, cfg).estimate(ys);
}

} // namespace beamsync
