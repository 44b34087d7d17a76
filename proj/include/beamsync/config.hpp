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

// Experiment configuration and its text format.
//
// The format is flat key = value text grouped under [section] headers. '#'
// and ';' start comments. Every key has a default (see ExperimentConfig and
// README.md); a config file only lists what it overrides. Unknown keys,
// duplicate keys and malformed values are rejected with the offending line.
//
// serialize_config() writes every key, so a snapshot parses back to the
// identical configuration. Sections other than the ones below (e.g. the
// [manifest] block appended to run manifests) are ignored by the parser.

#pragma once

#include "beamsync/channel.hpp"
#include "beamsync/common.hpp"
#include "beamsync/estimator.hpp"
#include "beamsync/protocol.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace beamsync {

class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& message) : ConfigError({}, line, message) {}
    ConfigError(const std::string& source, int line, const std::string& message)
        : std::runtime_error(compose(source, line, message)), line_(line), message_(message)
    {
    }
    int line() const { return line_; }
    const std::string& message() const { return message_; }

private:
    static std::string compose(const std::string& source, int line, const std::string& message)
    {
        std::string s = source;
        if (line > 0)
            s += (s.empty() ? "line " : ":") + std::to_string(line);
        return s.empty() ? message : s + ": " + message;
    }
    int line_;
    std::string message_;
};

enum class ChannelKind { Rayleigh, LineOfSight };
enum class OffsetModel { Uniform, Fixed };
enum class CrbChannelSource { Genie, Unit };

struct ExperimentConfig {
    // [experiment]
    std::uint64_t master_seed = 20260101;
    int trials = 1000;
    std::vector<double> snr_db = default_snr_grid();
    std::vector<Scheme> schemes{kAllSchemes.begin(), kAllSchemes.end()};
    int workers = 1;
    double noise_scale = 1.0; // 0 runs the noiseless model

    // [array]
    int mp = 16;
    int ms = 16;
    int tau_p = 0; // 0 means tau_p = ms

    // [waveform]
    int n = 100;
    int cycles = 4;
    bool pure_sinusoid = false;

    // [channel]
    ChannelKind channel = ChannelKind::Rayleigh;
    bool los_normalize = true;
    LosScene scene{};

    // [offset]
    OffsetModel offset_model = OffsetModel::Uniform;
    double offset_low = -0.1;
    double offset_high = 0.1;
    double offset_value = 0.0;

    // [estimator]
    EstimatorConfig estimator{};

    // [crb]
    CrbChannelSource crb_source = CrbChannelSource::Genie;

    // [schedule]
    int panels = 3;
    double schedule_snr_db = 10.0;

    // [drift]
    double drift_snr_db = 10.0;
    double drift_rate = 1e-4;      // mean offset change per slot, cycles/sample
    double drift_jitter = 0.0;     // std of the per-slot random-walk increment
    double resync_threshold = 1e-2; // +inf disables resync
    int drift_slots = 1000;

    int pilot_length() const { return tau_p == 0 ? ms : tau_p; }

    static std::vector<double> default_snr_grid()
    {
        std::vector<double> g;
        for (int db = -20; db <= 20; db += 2)
            g.push_back(db);
        return g;
    }

    bool operator==(const ExperimentConfig& other) const;
};

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(const std::string& v, int line)
{
    if (v == "inf" || v == "+inf")
        return std::numeric_limits<double>::infinity();
    if (v == "-inf")
        return -std::numeric_limits<double>::infinity();
    double out = 0.0;
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || v.empty() || std::isnan(out))
        throw ConfigError(line, "expected a number, got '" + v + "'");
    return out;
}

template <typename Int>
Int parse_int(const std::string& v, int line)
{
    Int out{};
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || v.empty())
        throw ConfigError(line, "expected an integer, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& v, int line)
{
    if (v == "true" || v == "yes" || v == "1")
        return true;
    if (v == "false" || v == "no" || v == "0")
        return false;
    throw ConfigError(line, "expected true/false, got '" + v + "'");
}

inline Vec3 parse_vec3(const std::string& v, int line)
{
    const auto parts = split(v, ',');
    if (parts.size() != 3)
        throw ConfigError(line, "expected three comma-separated numbers, got '" + v + "'");
    return {parse_double(parts[0], line), parse_double(parts[1], line), parse_double(parts[2], line)};
}

/// Comma list ("0, 3, 6") or inclusive range "start:step:stop".
inline std::vector<double> parse_snr_list(const std::string& v, int line)
{
    std::vector<double> out;
    if (v.find(':') != std::string::npos) {
        const auto parts = split(v, ':');
        if (parts.size() != 3)
            throw ConfigError(line, "SNR range must be start:step:stop");
        const double start = parse_double(parts[0], line);
        const double step = parse_double(parts[1], line);
        const double stop = parse_double(parts[2], line);
        if (!(step > 0.0) || stop < start)
            throw ConfigError(line, "SNR range needs a positive step and stop >= start");
        const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
        if (count > 100000)
            throw ConfigError(line, "SNR range has too many points");
        for (long i = 0; i < count; ++i)
            out.push_back(start + static_cast<double>(i) * step);
        return out;
    }
    if (trim(v).empty())
        return out;
    for (const auto& p : split(v, ','))
        out.push_back(parse_double(p, line));
    return out;
}

inline std::string fmt(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return format_double(v);
}

inline std::string fmt(const Vec3& v) { return fmt(v.x()) + "," + fmt(v.y()) + "," + fmt(v.z()); }

} // namespace detail

/// Cross-field checks run after parsing. `key_lines` maps "section.key" to the
/// line it was read from, so errors point at the offending key when it was set
/// explicitly; defaults report line 0.
inline void validate_config(const ExperimentConfig& c, const std::map<std::string, int>& key_lines = {})
{
    auto fail = [&](const std::string& what) {
        const std::string key = what.substr(0, what.find(' '));
        const auto it = key_lines.find(key);
        throw ConfigError(it == key_lines.end() ? 0 : it->second, what);
    };
    if (c.trials < 1)
        fail("experiment.trials must be >= 1");
    if (c.snr_db.empty())
        fail("experiment.snr_db must list at least one SNR");
    if (c.schemes.empty())
        fail("experiment.schemes must name at least one scheme");
    if (c.workers < 1)
        fail("experiment.workers must be >= 1");
    if (!(c.noise_scale >= 0.0))
        fail("experiment.noise_scale must be >= 0");
    if (c.mp < 1 || c.ms < 1)
        {
        if (c.mp < 1)
            fail("array.mp must be >= 1");
        fail("array.ms must be >= 1");
    }
    if (c.tau_p != 0 && c.tau_p < c.ms)
        fail("array.tau_p must be >= array.ms");
    if (c.n < 2)
        fail("waveform.n must be >= 2: the offset is not identifiable from fewer than 2 samples");
    if (c.cycles < 1 || 2 * c.cycles >= c.n)
        fail("waveform.cycles must satisfy 1 <= cycles < n/2");
    if (c.channel == ChannelKind::LineOfSight) {
        if (c.scene.antennas() != c.mp || c.scene.antennas() != c.ms)
            fail("channel.rows * channel.cols (line-of-sight grid) must equal array.mp and array.ms");
        if (!(c.scene.carrier_hz > 0.0) || !(c.scene.spacing_wavelengths > 0.0))
            fail(!(c.scene.carrier_hz > 0.0) ? "channel.carrier_hz must be positive" : "channel.spacing_wavelengths must be positive");
        if (std::abs(c.scene.primary_normal.norm() - 1.0) > 1e-9 ||
            std::abs(c.scene.secondary_normal.norm() - 1.0) > 1e-9)
            fail(std::abs(c.scene.primary_normal.norm() - 1.0) > 1e-9 ? "channel.primary_normal must be a unit vector" : "channel.secondary_normal must be a unit vector");
    }
    if (c.offset_model == OffsetModel::Uniform && !(c.offset_low <= c.offset_high))
        fail("offset.high must not be below offset.low");
    if (c.estimator.search_halfwidth <= 0.0 || c.estimator.search_halfwidth > 0.5)
        fail("estimator.search_halfwidth must lie in (0, 0.5]");
    if (c.estimator.coarse_grid_points != 0 &&
        2.0 * c.estimator.search_halfwidth / c.estimator.coarse_grid_points > 1.0 / (4.0 * c.n) + 1e-15)
        fail("estimator.coarse_grid_points too small: spacing must not exceed 1/(4N)");
    if (!(c.estimator.refine_tolerance > 0.0) || c.estimator.refine_max_iters < 1 ||
        c.estimator.refine_candidates < 1)
        fail(!(c.estimator.refine_tolerance > 0.0) ? "estimator.refine_tolerance must be positive" : c.estimator.refine_max_iters < 1 ? "estimator.refine_max_iters must be >= 1" : "estimator.refine_candidates must be >= 1");
    if (c.panels < 1)
        fail("schedule.panels must be >= 1");
    if (c.drift_slots < 1)
        fail("drift.slots must be >= 1");
    if (!(c.resync_threshold > 0.0))
        fail("drift.resync_threshold must be positive");
    if (!(c.drift_jitter >= 0.0))
        fail("drift.jitter must be >= 0");
}

namespace detail {

using Setter = std::function<void(ExperimentConfig&, const std::string&, int)>;

inline const std::map<std::string, Setter>& config_setters()
{
    static const std::map<std::string, Setter> setters = [] {
        std::map<std::string, Setter> s;
        s["experiment.master_seed"] = [](auto& c, auto& v, int l) { c.master_seed = parse_int<std::uint64_t>(v, l); };
        s["experiment.trials"] = [](auto& c, auto& v, int l) { c.trials = parse_int<int>(v, l); };
        s["experiment.snr_db"] = [](auto& c, auto& v, int l) { c.snr_db = parse_snr_list(v, l); };
        s["experiment.schemes"] = [](auto& c, auto& v, int l) {
            c.schemes.clear();
            if (trim(v).empty())
                return;
            for (const auto& name : split(v, ',')) {
                auto s = parse_scheme(name);
                if (!s)
                    throw ConfigError(l, "unknown scheme '" + name +
                                             "' (expected BeamSync, BeamSyncGenie, Analog or AnalogGenie)");
                c.schemes.push_back(*s);
            }
        };
        s["experiment.workers"] = [](auto& c, auto& v, int l) { c.workers = parse_int<int>(v, l); };
        s["experiment.noise_scale"] = [](auto& c, auto& v, int l) { c.noise_scale = parse_double(v, l); };
        s["array.mp"] = [](auto& c, auto& v, int l) { c.mp = parse_int<int>(v, l); };
        s["array.ms"] = [](auto& c, auto& v, int l) { c.ms = parse_int<int>(v, l); };
        s["array.tau_p"] = [](auto& c, auto& v, int l) { c.tau_p = parse_int<int>(v, l); };
        s["waveform.n"] = [](auto& c, auto& v, int l) { c.n = parse_int<int>(v, l); };
        s["waveform.cycles"] = [](auto& c, auto& v, int l) { c.cycles = parse_int<int>(v, l); };
        s["waveform.pure_sinusoid"] = [](auto& c, auto& v, int l) { c.pure_sinusoid = parse_bool(v, l); };
        s["channel.model"] = [](auto& c, auto& v, int l) {
            if (v == "rayleigh")
                c.channel = ChannelKind::Rayleigh;
            else if (v == "los")
                c.channel = ChannelKind::LineOfSight;
            else
                throw ConfigError(l, "channel.model must be 'rayleigh' or 'los', got '" + v + "'");
        };
        s["channel.los_normalize"] = [](auto& c, auto& v, int l) { c.los_normalize = parse_bool(v, l); };
        s["channel.room"] = [](auto& c, auto& v, int l) { c.scene.room = parse_vec3(v, l); };
        s["channel.primary_center"] = [](auto& c, auto& v, int l) { c.scene.primary_center = parse_vec3(v, l); };
        s["channel.primary_normal"] = [](auto& c, auto& v, int l) { c.scene.primary_normal = parse_vec3(v, l); };
        s["channel.secondary_center"] = [](auto& c, auto& v, int l) { c.scene.secondary_center = parse_vec3(v, l); };
        s["channel.secondary_normal"] = [](auto& c, auto& v, int l) { c.scene.secondary_normal = parse_vec3(v, l); };
        s["channel.rows"] = [](auto& c, auto& v, int l) { c.scene.rows = parse_int<int>(v, l); };
        s["channel.cols"] = [](auto& c, auto& v, int l) { c.scene.cols = parse_int<int>(v, l); };
        s["channel.spacing_wavelengths"] = [](auto& c, auto& v, int l) {
            c.scene.spacing_wavelengths = parse_double(v, l);
        };
        s["channel.carrier_hz"] = [](auto& c, auto& v, int l) { c.scene.carrier_hz = parse_double(v, l); };
        s["channel.patch_gain_dbi"] = [](auto& c, auto& v, int l) { c.scene.patch.max_gain_dbi = parse_double(v, l); };
        s["channel.patch_exponent"] = [](auto& c, auto& v, int l) {
            c.scene.patch.pattern_exponent = parse_double(v, l);
        };
        s["channel.patch_front_to_back_db"] = [](auto& c, auto& v, int l) {
            c.scene.patch.front_to_back_db = parse_double(v, l);
        };
        s["offset.model"] = [](auto& c, auto& v, int l) {
            if (v == "uniform")
                c.offset_model = OffsetModel::Uniform;
            else if (v == "fixed")
                c.offset_model = OffsetModel::Fixed;
            else
                throw ConfigError(l, "offset.model must be 'uniform' or 'fixed', got '" + v + "'");
        };
        s["offset.low"] = [](auto& c, auto& v, int l) { c.offset_low = parse_double(v, l); };
        s["offset.high"] = [](auto& c, auto& v, int l) { c.offset_high = parse_double(v, l); };
        s["offset.value"] = [](auto& c, auto& v, int l) { c.offset_value = parse_double(v, l); };
        s["estimator.search_halfwidth"] = [](auto& c, auto& v, int l) {
            c.estimator.search_halfwidth = parse_double(v, l);
        };
        s["estimator.coarse_grid_points"] = [](auto& c, auto& v, int l) {
            c.estimator.coarse_grid_points = parse_int<int>(v, l);
        };
        s["estimator.refine_tolerance"] = [](auto& c, auto& v, int l) {
            c.estimator.refine_tolerance = parse_double(v, l);
        };
        s["estimator.refine_max_iters"] = [](auto& c, auto& v, int l) {
            c.estimator.refine_max_iters = parse_int<int>(v, l);
        };
        s["estimator.refine_candidates"] = [](auto& c, auto& v, int l) {
            c.estimator.refine_candidates = parse_int<int>(v, l);
        };
        s["crb.b_source"] = [](auto& c, auto& v, int l) {
            if (v == "genie")
                c.crb_source = CrbChannelSource::Genie;
            else if (v == "unit")
                c.crb_source = CrbChannelSource::Unit;
            else
                throw ConfigError(l, "crb.b_source must be 'genie' or 'unit', got '" + v + "'");
        };
        s["schedule.panels"] = [](auto& c, auto& v, int l) { c.panels = parse_int<int>(v, l); };
        s["schedule.snr_db"] = [](auto& c, auto& v, int l) { c.schedule_snr_db = parse_double(v, l); };
        s["drift.snr_db"] = [](auto& c, auto& v, int l) { c.drift_snr_db = parse_double(v, l); };
        s["drift.rate"] = [](auto& c, auto& v, int l) { c.drift_rate = parse_double(v, l); };
        s["drift.jitter"] = [](auto& c, auto& v, int l) { c.drift_jitter = parse_double(v, l); };
        s["drift.resync_threshold"] = [](auto& c, auto& v, int l) { c.resync_threshold = parse_double(v, l); };
        s["drift.slots"] = [](auto& c, auto& v, int l) { c.drift_slots = parse_int<int>(v, l); };
        return s;
    }();
    return setters;
}

inline const std::set<std::string>& known_sections()
{
    static const std::set<std::string> s{"experiment", "array", "waveform", "channel", "offset",
                                         "estimator",  "crb",   "schedule", "drift"};
    return s;
}

} // namespace detail

inline ExperimentConfig parse_config(std::istream& in)
{
    ExperimentConfig cfg;
    std::string raw;
    std::string section;
    bool ignored_section = false;
    std::map<std::string, int> seen;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto cut = raw.find_first_of("#;");
        std::string text = detail::trim(std::string_view(raw).substr(0, cut));
        if (text.empty())
            continue;
        if (text.front() == '[') {
            if (text.back() != ']')
                throw ConfigError(line, "malformed section header '" + text + "'");
            section = detail::trim(std::string_view(text).substr(1, text.size() - 2));
            // foreign sections (e.g. [manifest]) are skipped wholesale
            ignored_section = !detail::known_sections().contains(section);
            continue;
        }
        if (ignored_section)
            continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line, "expected 'key = value', got '" + text + "'");
        if (section.empty())
            throw ConfigError(line, "key outside of any [section]");
        const std::string key = section + "." + detail::trim(std::string_view(text).substr(0, eq));
        const std::string value = detail::trim(std::string_view(text).substr(eq + 1));
        const auto& setters = detail::config_setters();
        auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError(line, "unknown key '" + key + "'");
        if (!seen.emplace(key, line).second)
            throw ConfigError(line, "duplicate key '" + key + "' (first set on line " + std::to_string(seen[key]) + ")");
        it->second(cfg, value, line);
    }
    validate_config(cfg, seen);
    return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path, 0, "cannot read config file");
    try {
        return parse_config(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path, e.line(), e.message());
    }
}

/// Canonical snapshot listing every key.
inline std::string serialize_config(const ExperimentConfig& c)
{
    using detail::fmt;
    std::ostringstream os;
    auto join = [](const auto& items, auto&& f) {
        std::string s;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i)
                s += ", ";
            s += f(items[i]);
        }
        return s;
    };
    os << "[experiment]\n";
    os << "master_seed = " << c.master_seed << "\n";
    os << "trials = " << c.trials << "\n";
    os << "snr_db = " << join(c.snr_db, [](double v) { return fmt(v); }) << "\n";
    os << "schemes = " << join(c.schemes, [](Scheme s) { return std::string(scheme_name(s)); }) << "\n";
    os << "workers = " << c.workers << "\n";
    os << "noise_scale = " << fmt(c.noise_scale) << "\n";
    os << "\n[array]\n";
    os << "mp = " << c.mp << "\nms = " << c.ms << "\ntau_p = " << c.tau_p << "\n";
    os << "\n[waveform]\n";
    os << "n = " << c.n << "\ncycles = " << c.cycles << "\npure_sinusoid = " << (c.pure_sinusoid ? "true" : "false")
       << "\n";
    os << "\n[channel]\n";
    os << "model = " << (c.channel == ChannelKind::Rayleigh ? "rayleigh" : "los") << "\n";
    os << "los_normalize = " << (c.los_normalize ? "true" : "false") << "\n";
    os << "room = " << fmt(c.scene.room) << "\n";
    os << "primary_center = " << fmt(c.scene.primary_center) << "\n";
    os << "primary_normal = " << fmt(c.scene.primary_normal) << "\n";
    os << "secondary_center = " << fmt(c.scene.secondary_center) << "\n";
    os << "secondary_normal = " << fmt(c.scene.secondary_normal) << "\n";
    os << "rows = " << c.scene.rows << "\ncols = " << c.scene.cols << "\n";
    os << "spacing_wavelengths = " << fmt(c.scene.spacing_wavelengths) << "\n";
    os << "carrier_hz = " << fmt(c.scene.carrier_hz) << "\n";
    os << "patch_gain_dbi = " << fmt(c.scene.patch.max_gain_dbi) << "\n";
    os << "patch_exponent = " << fmt(c.scene.patch.pattern_exponent) << "\n";
    os << "patch_front_to_back_db = " << fmt(c.scene.patch.front_to_back_db) << "\n";
    os << "\n[offset]\n";
    os << "model = " << (c.offset_model == OffsetModel::Uniform ? "uniform" : "fixed") << "\n";
    os << "low = " << fmt(c.offset_low) << "\nhigh = " << fmt(c.offset_high) << "\nvalue = " << fmt(c.offset_value)
       << "\n";
    os << "\n[estimator]\n";
    os << "search_halfwidth = " << fmt(c.estimator.search_halfwidth) << "\n";
    os << "coarse_grid_points = " << c.estimator.coarse_grid_points << "\n";
    os << "refine_tolerance = " << fmt(c.estimator.refine_tolerance) << "\n";
    os << "refine_max_iters = " << c.estimator.refine_max_iters << "\n";
    os << "refine_candidates = " << c.estimator.refine_candidates << "\n";
    os << "\n[crb]\n";
    os << "b_source = " << (c.crb_source == CrbChannelSource::Genie ? "genie" : "unit") << "\n";
    os << "\n[schedule]\n";
    os << "panels = " << c.panels << "\nsnr_db = " << fmt(c.schedule_snr_db) << "\n";
    os << "\n[drift]\n";
    os << "snr_db = " << fmt(c.drift_snr_db) << "\nrate = " << fmt(c.drift_rate) << "\njitter = "
       << fmt(c.drift_jitter) << "\nresync_threshold = " << fmt(c.resync_threshold) << "\nslots = " << c.drift_slots
       << "\n";
    return os.str();
}

inline bool ExperimentConfig::operator==(const ExperimentConfig& other) const
{
    return serialize_config(*this) == serialize_config(other);
}

} // namespace beamsync
