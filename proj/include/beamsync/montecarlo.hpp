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

// Monte Carlo orchestration: single protocol rounds, RMSE-vs-SNR sweeps, the
// sequential multi-panel schedule and the drift / resync timeline.
//
// Reproducibility: every random draw comes from a stream derived from the
// master seed and the trial's coordinates, never from a shared generator.
//   channel + true offset : (master_seed, "channel", trial)
//   noise                 : (master_seed, "noise", scheme, snr index, trial)
// All schemes and SNR points therefore see the same channel and offset for a
// given trial index. Results are written to indexed slots and reduced in a
// fixed order, so the output does not depend on the worker count.

#pragma once

#include "beamsync/channel.hpp"
#include "beamsync/common.hpp"
#include "beamsync/config.hpp"
#include "beamsync/crb.hpp"
#include "beamsync/estimator.hpp"
#include "beamsync/protocol.hpp"
#include "beamsync/random.hpp"
#include "beamsync/signal.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace beamsync {

namespace stream_tag {
inline constexpr std::uint64_t kChannel = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kScheduleChannel = 3;
inline constexpr std::uint64_t kScheduleNoise = 4;
inline constexpr std::uint64_t kDriftChannel = 5;
inline constexpr std::uint64_t kDriftNoise = 6;
inline constexpr std::uint64_t kDriftWalk = 7;
} // namespace stream_tag

inline std::uint64_t scheme_id(Scheme s) { return static_cast<std::uint64_t>(s); }

struct TrialResult {
    Scheme scheme = Scheme::BeamSync;
    double snr_db = 0.0;
    double delta_true = 0.0;
    double delta_hat = 0.0;
    double squared_error = 0.0; // wrap-around distance on the unit offset circle
    double beam_alignment = 0.0;
    double crb = 0.0;           // CRB with the genie beam's effective channel
    double objective = 0.0;
    bool valid = true;
};

/// Per-trial draws that do not depend on the scheme.
struct LinkDraw {
    ChannelMatrix channel;
    double offset = 0.0;
};

/// Precomputed, immutable state shared by all trials of one configuration.
class TrialEngine {
public:
    explicit TrialEngine(ExperimentConfig cfg)
        : cfg_((validate_config(cfg), std::move(cfg))),
          pilots_(make_orthonormal_pilots(cfg_.pilot_length(), cfg_.ms)),
          estimator_(make_sync_signal(cfg_.n, cfg_.cycles, cfg_.pure_sinusoid), cfg_.estimator),
          tx_codebook_(dft_codebook(cfg_.mp)), rx_codebook_(dft_codebook(cfg_.ms))
    {
        if (cfg_.channel == ChannelKind::LineOfSight) {
            ChannelMatrix g = los_channel(cfg_.scene);
            los_ = cfg_.los_normalize ? normalize_energy(std::move(g)) : std::move(g);
        }
    }

    const ExperimentConfig& config() const { return cfg_; }
    const SyncWaveform& waveform() const { return estimator_.waveform(); }
    const OffsetEstimator& estimator() const { return estimator_; }
    const PilotMatrix& pilots() const { return pilots_; }

    LinkDraw draw_link(Rng& rng) const
    {
        LinkDraw d;
        if (los_)
            d.channel = *los_;
        else
            d.channel = rayleigh_channel(cfg_.mp, cfg_.ms, rng);
        if (cfg_.offset_model == OffsetModel::Fixed) {
            d.offset = cfg_.offset_value;
        } else {
            std::uniform_real_distribution<double> u(cfg_.offset_low, cfg_.offset_high);
            d.offset = cfg_.offset_low == cfg_.offset_high ? cfg_.offset_low : u(rng);
        }
        return d;
    }

    /// One protocol round for `scheme` on a given link. Noise comes from `noise_rng`.
    TrialResult run(Scheme scheme, double snr_db, const LinkDraw& link, Rng& noise_rng) const
    {
        return run_round(scheme, snr_db, link, noise_rng).result;
    }

    struct Round {
        TrialResult result;
        OffsetEstimate estimate;
    };

    Round run_round(Scheme scheme, double snr_db, const LinkDraw& link, Rng& noise_rng) const
    {
        SyncLinkState state{link.offset, Snr::from_db(snr_db), link.channel, scheme, cfg_.noise_scale};
        const BeamVector genie = genie_beam_direction(link.channel);
        const SyncWaveform& x = waveform();

        std::optional<BeamVector> tx;
        std::optional<BeamVector> rx;
        std::optional<ReceivedBlock> ys;
        switch (scheme) {
        case Scheme::BeamSync: {
            const ReceivedBlock yp = stage1_receive(state, pilots_, noise_rng);
            tx = estimate_beam_direction(yp);
            ys = stage2_receive(state, *tx, x, noise_rng);
            break;
        }
        case Scheme::BeamSyncGenie:
            tx = genie;
            ys = stage2_receive(state, *tx, x, noise_rng);
            break;
        case Scheme::Analog: {
            const ReceivedBlock yp = stage1_receive(state, pilots_, noise_rng);
            tx = analog_select_tx(yp, tx_codebook_).beam;
            const ReceivedBlock full = stage2_receive(state, *tx, x, noise_rng);
            rx = analog_select_rx(full, rx_codebook_).beam;
            ys = collapse_rx_beam(full, *rx);
            break;
        }
        case Scheme::AnalogGenie: {
            const AnalogPair pair = analog_genie_select(link.channel, tx_codebook_, rx_codebook_);
            tx = pair.tx;
            rx = pair.rx;
            ys = collapse_rx_beam(stage2_receive(state, *tx, x, noise_rng), *rx);
            break;
        }
        }

        OffsetEstimate est = estimator_.estimate(*ys);
        TrialResult r;
        r.scheme = scheme;
        r.snr_db = snr_db;
        r.delta_true = link.offset;
        r.delta_hat = est.delta_hat;
        const double err = wrap_offset(est.delta_hat - link.offset);
        r.squared_error = err * err;
        r.beam_alignment = std::min(1.0, std::abs(genie.weights().dot(tx->weights())));
        r.objective = est.objective_value;
        r.valid = est.valid;
        r.crb = crb_closed_form(x, effective_channel(link.channel, genie), state.snr.linear());
        return Round{r, std::move(est)};
    }

    /// Trial `trial` at SNR grid point `snr_index`, with streams derived from the master seed.
    TrialResult run_indexed(Scheme scheme, std::size_t snr_index, std::uint64_t trial) const
    {
        Rng chan = make_stream(cfg_.master_seed, {stream_tag::kChannel, trial});
        const LinkDraw link = draw_link(chan);
        Rng noise = make_stream(cfg_.master_seed, {stream_tag::kNoise, scheme_id(scheme), snr_index, trial});
        return run(scheme, cfg_.snr_db.at(snr_index), link, noise);
    }

private:
    ExperimentConfig cfg_;
    PilotMatrix pilots_;
    OffsetEstimator estimator_;
    std::vector<BeamVector> tx_codebook_;
    std::vector<BeamVector> rx_codebook_;
    std::optional<ChannelMatrix> los_;
};

inline TrialResult run_trial(const ExperimentConfig& cfg, Scheme scheme, std::size_t snr_index, std::uint64_t trial)
{
    return TrialEngine(cfg).run_indexed(scheme, snr_index, trial);
}

namespace detail {

/// Runs body(i) for i in [0, count) on `workers` threads. The first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t count, int workers, Body&& body)
{
    const std::size_t nthreads = std::min<std::size_t>(std::max(workers, 1), std::max<std::size_t>(count, 1));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                    next = count;
                }
            }
        });
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace detail

struct RmsePoint {
    Scheme scheme = Scheme::BeamSync;
    double snr_db = 0.0;
    int trials = 0;
    int failed = 0;           // degenerate estimates; kept in the RMSE with their raw error
    double rmse = 0.0;
    double crb_sqrt_avg = 0.0; // mean over trials of sqrt(CRB) for the genie beam
    double mean_alignment = 0.0;
};

struct RmseCurve {
    std::vector<RmsePoint> points; // scheme-major, in config scheme order then SNR order
    std::string config_fingerprint;

    /// Points for one scheme in SNR order.
    std::vector<RmsePoint> scheme_points(Scheme s) const
    {
        std::vector<RmsePoint> out;
        for (const auto& p : points)
            if (p.scheme == s)
                out.push_back(p);
        return out;
    }
};

/// FNV-1a over the canonical config snapshot, hex encoded.
inline std::string config_fingerprint(const ExperimentConfig& cfg)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : serialize_config(cfg))
        h = (h ^ ch) * 0x100000001b3ULL;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Every trial of the sweep, indexed [scheme][snr][trial] in config order.
inline std::vector<TrialResult> run_sweep_trials(const TrialEngine& engine, int workers)
{
    const auto& cfg = engine.config();
    const std::size_t ns = cfg.schemes.size();
    const std::size_t nsnr = cfg.snr_db.size();
    const auto nt = static_cast<std::size_t>(cfg.trials);
    std::vector<TrialResult> results(ns * nsnr * nt);
    detail::parallel_for(results.size(), workers, [&](std::size_t idx) {
        const std::size_t trial = idx % nt;
        const std::size_t snr = (idx / nt) % nsnr;
        const std::size_t scheme = idx / (nt * nsnr);
        results[idx] = engine.run_indexed(cfg.schemes[scheme], snr, trial);
    });
    return results;
}

inline RmseCurve run_sweep(const ExperimentConfig& cfg, std::optional<int> workers = std::nullopt)
{
    const TrialEngine engine(cfg);
    const auto results = run_sweep_trials(engine, workers.value_or(cfg.workers));
    const std::size_t nsnr = cfg.snr_db.size();
    const auto nt = static_cast<std::size_t>(cfg.trials);

    RmseCurve curve;
    curve.config_fingerprint = config_fingerprint(cfg);
    for (std::size_t s = 0; s < cfg.schemes.size(); ++s)
        for (std::size_t k = 0; k < nsnr; ++k) {
            RmsePoint p;
            p.scheme = cfg.schemes[s];
            p.snr_db = cfg.snr_db[k];
            p.trials = cfg.trials;
            double se = 0.0, crb = 0.0, align = 0.0;
            for (std::size_t t = 0; t < nt; ++t) {
                const TrialResult& r = results[(s * nsnr + k) * nt + t];
                se += r.squared_error;
                crb += std::sqrt(r.crb);
                align += r.beam_alignment;
                if (!r.valid)
                    ++p.failed;
            }
            p.rmse = std::sqrt(se / static_cast<double>(nt));
            p.crb_sqrt_avg = crb / static_cast<double>(nt);
            p.mean_alignment = align / static_cast<double>(nt);
            curve.points.push_back(p);
        }
    return curve;
}

inline void write_rmse_csv(std::ostream& os, const RmseCurve& curve)
{
    os << "scheme,snr_db,trials,rmse,crb_sqrt_avg\n";
    for (const auto& p : curve.points)
        os << scheme_name(p.scheme) << ',' << detail::fmt(p.snr_db) << ',' << p.trials << ','
           << detail::fmt(p.rmse) << ',' << detail::fmt(p.crb_sqrt_avg) << '\n';
}

// ---------------------------------------------------------------------------
// Multi-panel schedule and oscillator drift

/// Normalized carrier frequency of one panel's oscillator (cycles/sample
/// relative to nominal). The offset of a secondary is primary - secondary.
struct OscillatorState {
    int panel = 0;
    double frequency = 0.0;
};

inline double offset_between(const OscillatorState& primary, const OscillatorState& secondary)
{
    return primary.frequency - secondary.frequency;
}

struct PanelSyncResult {
    int panel = 0;            // 1-based secondary index
    double delta_true = 0.0;
    OffsetEstimate estimate;
    double residual = 0.0;    // wrap(delta_true - delta_hat) after compensation
};

/// BeamSync rounds for secondaries 1..Ns in order, each on its own channel and
/// offset. Panel i draws from streams keyed on (seed, schedule tag, i).
inline std::vector<PanelSyncResult> run_multi_panel_schedule(const ExperimentConfig& cfg, int panels,
                                                             std::uint64_t seed)
{
    detail::require(panels >= 1, "schedule needs at least one secondary panel");
    const TrialEngine engine(cfg);
    std::vector<PanelSyncResult> out;
    out.reserve(panels);
    for (int i = 1; i <= panels; ++i) {
        Rng chan = make_stream(seed, {stream_tag::kScheduleChannel, static_cast<std::uint64_t>(i)});
        const LinkDraw link = engine.draw_link(chan);
        Rng noise = make_stream(seed, {stream_tag::kScheduleNoise, static_cast<std::uint64_t>(i)});
        auto round = engine.run_round(Scheme::BeamSync, cfg.schedule_snr_db, link, noise);
        PanelSyncResult r;
        r.panel = i;
        r.delta_true = link.offset;
        r.estimate = std::move(round.estimate);
        r.residual = wrap_offset(link.offset - r.estimate.delta_hat);
        out.push_back(std::move(r));
    }
    return out;
}

enum class SyncEvent { None, ColdStart, Resync };

inline std::string_view event_name(SyncEvent e)
{
    switch (e) {
    case SyncEvent::None:
        return "none";
    case SyncEvent::ColdStart:
        return "cold_start";
    case SyncEvent::Resync:
        return "resync";
    }
    return "?";
}

struct DriftSlot {
    int slot = 0;
    double offset = 0.0;   // true oscillator offset primary - secondary
    double residual = 0.0; // offset left after compensation, end of slot
    SyncEvent event = SyncEvent::None;
};

struct DriftTimeline {
    std::vector<DriftSlot> slots;

    int sync_events() const
    {
        return static_cast<int>(
            std::count_if(slots.begin(), slots.end(), [](const DriftSlot& s) { return s.event != SyncEvent::None; }));
    }
};

/// Slot 0 is the cold-start BeamSync round. In every later slot the secondary
/// oscillator takes one random-walk step (mean drift_rate, std jitter); when
/// |residual| exceeds resync_threshold a BeamSync round runs in that slot and
/// the compensation is updated with its estimate.
inline DriftTimeline simulate_drift_timeline(const ExperimentConfig& cfg, double drift_rate, double resync_threshold,
                                             int slots, std::uint64_t seed)
{
    detail::require(slots >= 1, "timeline needs at least one slot");
    detail::require(resync_threshold > 0.0, "resync threshold must be positive");
    const TrialEngine engine(cfg);
    const double snr_db = cfg.drift_snr_db;

    Rng walk = make_stream(seed, {stream_tag::kDriftWalk});
    Rng first = make_stream(seed, {stream_tag::kDriftChannel, 0});
    const OscillatorState primary{0, 0.0};
    OscillatorState secondary{1, -engine.draw_link(first).offset};
    double compensation = 0.0;

    auto sync_round = [&](int slot) {
        Rng chan = make_stream(seed, {stream_tag::kDriftChannel, static_cast<std::uint64_t>(slot)});
        LinkDraw link = engine.draw_link(chan);
        // the secondary applies its current correction, so the round sees the residual
        link.offset = wrap_offset(offset_between(primary, secondary) - compensation);
        Rng noise = make_stream(seed, {stream_tag::kDriftNoise, static_cast<std::uint64_t>(slot)});
        const TrialResult r = engine.run(Scheme::BeamSync, snr_db, link, noise);
        compensation += r.delta_hat;
    };

    DriftTimeline tl;
    tl.slots.reserve(slots);
    std::normal_distribution<double> step(0.0, 1.0);
    for (int t = 0; t < slots; ++t) {
        SyncEvent ev = SyncEvent::None;
        if (t == 0) {
            sync_round(0);
            ev = SyncEvent::ColdStart;
        } else {
            const double z = step(walk);
            secondary.frequency -= drift_rate + cfg.drift_jitter * z;
            const double residual = wrap_offset(offset_between(primary, secondary) - compensation);
            if (std::abs(residual) > resync_threshold) {
                sync_round(t);
                ev = SyncEvent::Resync;
            }
        }
        DriftSlot s;
        s.slot = t;
        s.offset = offset_between(primary, secondary);
        s.residual = wrap_offset(s.offset - compensation);
        s.event = ev;
        tl.slots.push_back(s);
    }
    return tl;
}

inline void write_drift_csv(std::ostream& os, const DriftTimeline& tl)
{
    os << "slot,residual,event\n";
    for (const auto& s : tl.slots)
        os << s.slot << ',' << detail::fmt(s.residual) << ',' << event_name(s.event) << '\n';
}

} // namespace beamsync
