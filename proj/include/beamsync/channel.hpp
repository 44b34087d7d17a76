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

// Channel between the primary panel (rows) and one secondary panel (columns).
//
// Two generators are provided:
//  - i.i.d. Rayleigh fading, CN(0,1) per entry;
//  - a single-ray line-of-sight model: Friis free-space magnitude, geometric
//    phase and a cos^q patch element pattern on both ends.
//
// Stage I (secondary -> primary) uses G, stage II (primary -> secondary)
// uses G^T. The same matrix serves both directions.

#pragma once

#include "beamsync/common.hpp"
#include "beamsync/random.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace beamsync {

using Vec3 = Eigen::Vector3d;

inline constexpr double kSpeedOfLight = 299'792'458.0;

struct ChannelMatrix {
    CMatrix gains;            // Mp x Ms
    double wavelength = 0.0;  // metres; zero for stochastic models

    Eigen::Index primary_antennas() const { return gains.rows(); }
    Eigen::Index secondary_antennas() const { return gains.cols(); }
};

struct PanelGeometry {
    std::vector<Vec3> positions;  // row-major over the element grid
    Vec3 boresight = Vec3::UnitX();
    int rows = 1;
    int cols = 1;

    Eigen::Index size() const { return static_cast<Eigen::Index>(positions.size()); }
};

struct PatchAntennaParams {
    double max_gain_dbi = 6.0;
    double pattern_exponent = 2.0;  // q in cos^q(theta)
    double front_to_back_db = 20.0; // +inf gives a hard null behind the panel

    double max_gain_linear() const { return std::pow(10.0, max_gain_dbi / 10.0); }
    double back_level() const
    {
        return std::isinf(front_to_back_db) ? 0.0 : std::pow(10.0, -front_to_back_db / 10.0);
    }
};

inline ChannelMatrix rayleigh_channel(int mp, int ms, Rng& rng)
{
    detail::require(mp >= 1 && ms >= 1, "channel dimensions must be positive");
    return ChannelMatrix{complex_normal_matrix(mp, ms, rng), 0.0};
}

namespace detail {

inline void require_unit(const Vec3& v, const char* what)
{
    if (!(std::abs(v.norm() - 1.0) <= 1e-9))
        throw InvalidArgument(std::string(what) + " must be a unit vector");
}

} // namespace detail

/// Linear element gain toward `direction`.
/// In front of the panel: G_max * max(cos^q(theta), back); behind: G_max * back.
/// The two branches meet at theta = 90 degrees.
inline double patch_element_gain(const Vec3& direction, const PatchAntennaParams& params, const Vec3& boresight)
{
    detail::require_unit(direction, "direction");
    detail::require_unit(boresight, "boresight");
    detail::require(params.pattern_exponent >= 0.0, "pattern exponent must be nonnegative");
    const double c = std::clamp(direction.dot(boresight), -1.0, 1.0);
    const double back = params.back_level();
    double shape = back;
    if (c >= 0.0)
        shape = std::max(std::pow(c, params.pattern_exponent), back);
    return params.max_gain_linear() * shape;
}

/// Uniform rows x cols grid in the wall plane, centred on `center`.
/// Grid rows run along the in-plane vertical axis (projection of +z), columns
/// along the horizontal axis. Walls facing +-z use +x as the row axis instead.
inline PanelGeometry make_wall_panel(const Vec3& center, const Vec3& wall_normal, int rows, int cols, double spacing)
{
    detail::require(rows >= 1 && cols >= 1, "panel grid must be at least 1x1");
    detail::require(spacing > 0.0, "element spacing must be positive");
    detail::require_unit(wall_normal, "wall normal");

    Vec3 up = Vec3::UnitZ();
    if (std::abs(wall_normal.dot(up)) > 1.0 - 1e-9)
        up = Vec3::UnitX();
    const Vec3 horizontal = up.cross(wall_normal).normalized();
    const Vec3 vertical = wall_normal.cross(horizontal).normalized();

    PanelGeometry panel;
    panel.boresight = wall_normal.normalized();
    panel.rows = rows;
    panel.cols = cols;
    panel.positions.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double dv = (r - 0.5 * (rows - 1)) * spacing;
            const double dh = (c - 0.5 * (cols - 1)) * spacing;
            panel.positions.push_back(center + dv * vertical + dh * horizontal);
        }
    return panel;
}

inline ChannelMatrix los_channel(const PanelGeometry& primary, const PanelGeometry& secondary, double wavelength,
                                 const PatchAntennaParams& patch)
{
    detail::require(wavelength > 0.0, "wavelength must be positive");
    detail::require(primary.size() >= 1 && secondary.size() >= 1, "panels must have antennas");
    const Eigen::Index mp = primary.size();
    const Eigen::Index ms = secondary.size();
    CMatrix g(mp, ms);
    for (Eigen::Index m = 0; m < mp; ++m)
        for (Eigen::Index k = 0; k < ms; ++k) {
            const Vec3 ray = secondary.positions[k] - primary.positions[m];
            const double d = ray.norm();
            if (!(d > 0.0))
                throw InvalidArgument("co-located antennas: primary " + std::to_string(m) + ", secondary " +
                                      std::to_string(k));
            const Vec3 u = ray / d;
            const double g_tx = patch_element_gain(u, patch, primary.boresight);
            const double g_rx = patch_element_gain(-u, patch, secondary.boresight);
            const double amplitude = std::sqrt(g_tx * g_rx) * wavelength / (4.0 * kPi * d);
            // d/lambda reduced to its fractional part keeps the phase accurate at 1e3 wavelengths
            const double cycles = d / wavelength;
            g(m, k) = std::polar(amplitude, -kTwoPi * (cycles - std::floor(cycles)));
        }
    return ChannelMatrix{std::move(g), wavelength};
}

/// Room scenario for the line-of-sight model. Defaults: 100 m x 100 m x 10 m
/// room, primary panel centred on the x = 0 wall, secondary on the adjacent
/// y = 0 wall, both at 5 m height, 4x4 grids at half-wavelength spacing,
/// 3.5 GHz carrier.
struct LosScene {
    Vec3 room{100.0, 100.0, 10.0};
    Vec3 primary_center{0.0, 50.0, 5.0};
    Vec3 primary_normal{1.0, 0.0, 0.0};
    Vec3 secondary_center{50.0, 0.0, 5.0};
    Vec3 secondary_normal{0.0, 1.0, 0.0};
    int rows = 4;
    int cols = 4;
    double spacing_wavelengths = 0.5;
    double carrier_hz = 3.5e9;
    PatchAntennaParams patch{};

    double wavelength() const { return kSpeedOfLight / carrier_hz; }
    int antennas() const { return rows * cols; }
};

inline ChannelMatrix los_channel(const LosScene& scene)
{
    const double lambda = scene.wavelength();
    const double spacing = scene.spacing_wavelengths * lambda;
    const auto primary = make_wall_panel(scene.primary_center, scene.primary_normal, scene.rows, scene.cols, spacing);
    const auto secondary =
        make_wall_panel(scene.secondary_center, scene.secondary_normal, scene.rows, scene.cols, spacing);
    return los_channel(primary, secondary, lambda, scene.patch);
}

/// Rescale so that ||G||_F^2 = Mp * Ms, the ensemble energy of a unit-variance Rayleigh matrix.
inline ChannelMatrix normalize_energy(ChannelMatrix g)
{
    const double energy = g.gains.squaredNorm();
    detail::require(energy > 0.0, "cannot normalize a zero channel");
    const double target = static_cast<double>(g.gains.rows() * g.gains.cols());
    g.gains *= std::sqrt(target / energy);
    return g;
}

namespace detail {

inline std::string format_double(double v)
{
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

} // namespace detail

/// One line per primary antenna: re,im pairs for every secondary antenna.
inline void write_channel_csv(std::ostream& os, const ChannelMatrix& g)
{
    for (Eigen::Index m = 0; m < g.gains.rows(); ++m) {
        for (Eigen::Index k = 0; k < g.gains.cols(); ++k) {
            if (k)
                os << ',';
            os << detail::format_double(g.gains(m, k).real()) << ',' << detail::format_double(g.gains(m, k).imag());
        }
        os << '\n';
    }
}

} // namespace beamsync
