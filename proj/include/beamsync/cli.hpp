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

// Subcommand implementations behind tools/beamsync. Each returns the process
// exit status: 0 success, 1 configuration error, 2 runtime error.

#pragma once

#include "beamsync/config.hpp"
#include "beamsync/crb.hpp"
#include "beamsync/montecarlo.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace beamsync {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

/// Files staged in memory and published together. Each file is written to a
/// temporary name and renamed into place; if anything fails, every file of
/// the set (temporary or already renamed) is removed.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;
    ~OutputSet()
    {
        if (!committed_)
            cleanup();
    }

    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

    std::vector<std::string> names() const
    {
        std::vector<std::string> n;
        for (const auto& f : files_)
            n.push_back(f.first);
        return n;
    }

    void commit()
    {
        std::filesystem::create_directories(dir_);
        for (const auto& [name, content] : files_) {
            const auto tmp = dir_ / (name + ".tmp");
            std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
            os << content;
            os.close();
            if (!os)
                throw std::runtime_error("cannot write " + tmp.string());
        }
        for (const auto& [name, content] : files_)
            std::filesystem::rename(dir_ / (name + ".tmp"), dir_ / name);
        committed_ = true;
    }

private:
    void cleanup() noexcept
    {
        std::error_code ec;
        for (const auto& f : files_) {
            std::filesystem::remove(dir_ / (f.first + ".tmp"), ec);
            std::filesystem::remove(dir_ / f.first, ec);
        }
    }

    std::filesystem::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
    bool committed_ = false;
};

/// Config snapshot plus run metadata. The [manifest] section is ignored when
/// the file is parsed back, so `beamsync sweep manifest.cfg` replays the run.
inline std::string make_manifest(const ExperimentConfig& cfg, const std::string& command, double seconds,
                                 const std::vector<std::string>& outputs)
{
    std::ostringstream os;
    os << serialize_config(cfg);
    os << "\n[manifest]\n";
    os << "tool_version = " << kToolVersion << "\n";
    os << "command = " << command << "\n";
    os << "master_seed = " << cfg.master_seed << "\n";
    os << "config_fingerprint = " << config_fingerprint(cfg) << "\n";
    os << "wall_clock_seconds = " << detail::fmt(seconds) << "\n";
    os << "outputs = ";
    for (std::size_t i = 0; i < outputs.size(); ++i)
        os << (i ? ", " : "") << outputs[i];
    os << "\n";
    if (cfg.channel == ChannelKind::LineOfSight)
        os << "note = line-of-sight antenna and scene parameters are simulator defaults, not measured values\n";
    return os.str();
}

namespace detail {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn)
{
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IdentifiabilityError& e) {
        err << "identifiability error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

inline std::string scheme_summary(const RmseCurve& curve, Scheme s)
{
    std::ostringstream os;
    os << "scheme: " << scheme_name(s) << "\n";
    os << "config_fingerprint: " << curve.config_fingerprint << "\n";
    os << "snr_db  rmse  crb_sqrt_avg  rmse/crb_sqrt  mean_alignment  failed\n";
    for (const auto& p : curve.scheme_points(s)) {
        char line[160];
        std::snprintf(line, sizeof line, "%6.2f  %.6e  %.6e  %8.3f  %.4f  %d\n", p.snr_db, p.rmse, p.crb_sqrt_avg,
                      p.crb_sqrt_avg > 0 ? p.rmse / p.crb_sqrt_avg : 0.0, p.mean_alignment, p.failed);
        os << line;
    }
    return os.str();
}

} // namespace detail

inline int cmd_sweep(const std::string& config_path, const std::string& output_dir, std::ostream& out,
                     std::ostream& err, std::optional<int> workers = std::nullopt)
{
    return detail::guarded(err, [&] {
        const ExperimentConfig cfg = load_config(config_path);
        const auto start = std::chrono::steady_clock::now();
        const RmseCurve curve = run_sweep(cfg, workers);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        OutputSet files(output_dir);
        std::ostringstream csv;
        write_rmse_csv(csv, curve);
        files.add("rmse.csv", csv.str());
        for (auto s : cfg.schemes)
            files.add("summary_" + std::string(scheme_name(s)) + ".txt", detail::scheme_summary(curve, s));
        auto names = files.names();
        names.push_back("manifest.cfg");
        files.add("manifest.cfg", make_manifest(cfg, "sweep", seconds, names));
        files.commit();

        for (auto s : cfg.schemes)
            out << detail::scheme_summary(curve, s) << "\n";
        out << "wrote " << (std::filesystem::path(output_dir) / "rmse.csv").string() << "\n";
        return kExitOk;
    });
}

/// Effective channel for bound evaluation: genie beam on the first trial's
/// channel draw, or the unit vector e_1.
inline CVector crb_effective_channel(const ExperimentConfig& cfg)
{
    if (cfg.crb_source == CrbChannelSource::Unit) {
        CVector b = CVector::Zero(cfg.ms);
        b(0) = 1.0;
        return b;
    }
    const TrialEngine engine(cfg);
    Rng chan = make_stream(cfg.master_seed, {stream_tag::kChannel, 0});
    const LinkDraw link = engine.draw_link(chan);
    return effective_channel(link.channel, genie_beam_direction(link.channel));
}

inline int cmd_crb(const std::string& config_path, std::ostream& out, std::ostream& err)
{
    return detail::guarded(err, [&] {
        const ExperimentConfig cfg = load_config(config_path);
        const SyncWaveform x = make_sync_signal(cfg.n, cfg.cycles, cfg.pure_sinusoid);
        const CVector b = crb_effective_channel(cfg);
        out << "snr_db,crb_closed_form,crb_numerical,relative_deviation\n";
        double worst = 0.0;
        for (double db : cfg.snr_db) {
            const double rho = Snr::from_db(db).linear();
            const double closed = crb_closed_form(x, b, rho);
            const double numerical = crb_numerical(x, b, rho);
            const double dev = std::abs(numerical - closed) / closed;
            worst = std::max(worst, dev);
            out << detail::fmt(db) << ',' << detail::fmt(closed) << ',' << detail::fmt(numerical) << ','
                << detail::fmt(dev) << '\n';
        }
        out << "max_relative_deviation=" << detail::fmt(worst) << "\n";
        return kExitOk;
    });
}

struct TrialOptions {
    std::string scheme = "BeamSync";
    std::optional<double> snr_db;
    std::optional<std::uint64_t> seed;
    std::uint64_t trial = 0;
    std::string dump_channel; // CSV path, empty for none
};

inline int cmd_trial(const std::string& config_path, const TrialOptions& opt, std::ostream& out, std::ostream& err)
{
    return detail::guarded(err, [&] {
        ExperimentConfig cfg = load_config(config_path);
        const auto scheme = parse_scheme(opt.scheme);
        if (!scheme)
            throw ConfigError(0, "unknown scheme '" + opt.scheme + "'");
        if (opt.seed)
            cfg.master_seed = *opt.seed;
        std::size_t snr_index = 0;
        if (opt.snr_db) {
            // reuse the sweep's noise stream when the SNR is on the configured grid
            auto it = std::find(cfg.snr_db.begin(), cfg.snr_db.end(), *opt.snr_db);
            if (it != cfg.snr_db.end())
                snr_index = static_cast<std::size_t>(it - cfg.snr_db.begin());
            else
                cfg.snr_db = {*opt.snr_db};
        }
        if (opt.trial >= static_cast<std::uint64_t>(cfg.trials))
            cfg.trials = static_cast<int>(opt.trial + 1);
        const TrialEngine engine(cfg);
        const TrialResult r = engine.run_indexed(*scheme, snr_index, opt.trial);

        if (!opt.dump_channel.empty()) {
            Rng chan = make_stream(cfg.master_seed, {stream_tag::kChannel, opt.trial});
            std::ostringstream csv;
            write_channel_csv(csv, engine.draw_link(chan).channel);
            OutputSet files(std::filesystem::path(opt.dump_channel).parent_path());
            files.add(std::filesystem::path(opt.dump_channel).filename().string(), csv.str());
            files.commit();
        }

        using detail::fmt;
        out << "scheme=" << scheme_name(r.scheme) << "\n";
        out << "snr_db=" << fmt(r.snr_db) << "\n";
        out << "seed=" << cfg.master_seed << "\n";
        out << "trial=" << opt.trial << "\n";
        out << "delta_true=" << fmt(r.delta_true) << "\n";
        out << "delta_hat=" << fmt(r.delta_hat) << "\n";
        out << "abs_error=" << fmt(std::sqrt(r.squared_error)) << "\n";
        out << "beam_alignment=" << fmt(r.beam_alignment) << "\n";
        out << "objective=" << fmt(r.objective) << "\n";
        out << "crb=" << fmt(r.crb) << "\n";
        out << "valid=" << (r.valid ? "true" : "false") << "\n";
        return kExitOk;
    });
}

inline int cmd_drift(const std::string& config_path, const std::string& output_dir, std::ostream& out,
                     std::ostream& err)
{
    return detail::guarded(err, [&] {
        const ExperimentConfig cfg = load_config(config_path);
        const auto start = std::chrono::steady_clock::now();
        const DriftTimeline tl =
            simulate_drift_timeline(cfg, cfg.drift_rate, cfg.resync_threshold, cfg.drift_slots, cfg.master_seed);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        OutputSet files(output_dir);
        std::ostringstream csv;
        write_drift_csv(csv, tl);
        files.add("drift.csv", csv.str());
        files.add("manifest.cfg", make_manifest(cfg, "drift", seconds, {"drift.csv", "manifest.cfg"}));
        files.commit();

        out << "slots=" << tl.slots.size() << "\n";
        out << "sync_events=" << tl.sync_events() << "\n";
        out << "wrote " << (std::filesystem::path(output_dir) / "drift.csv").string() << "\n";
        return kExitOk;
    });
}

} // namespace beamsync
