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

#include "beamsync/channel.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <Eigen/Geometry>

#include <limits>
#include <sstream>

using namespace beamsync;
using Catch::Approx;

namespace {

PatchAntennaParams isotropic()
{
    PatchAntennaParams p;
    p.max_gain_dbi = 0.0;
    p.pattern_exponent = 0.0;
    p.front_to_back_db = 0.0;
    return p;
}

PanelGeometry single(const Vec3& pos, const Vec3& normal)
{
    PanelGeometry g;
    g.positions = {pos};
    g.boresight = normal;
    return g;
}

PanelGeometry rotated(const PanelGeometry& p, const Eigen::Matrix3d& r, const Vec3& shift)
{
    PanelGeometry out = p;
    for (auto& x : out.positions)
        x = r * x + shift;
    out.boresight = r * p.boresight;
    return out;
}

} // namespace

TEST_CASE("rayleigh 1x1 is reproducible for a fixed seed", "[channel]")
{
    Rng a(123), b(123);
    const auto g1 = rayleigh_channel(1, 1, a);
    const auto g2 = rayleigh_channel(1, 1, b);
    REQUIRE(g1.gains.rows() == 1);
    REQUIRE(g1.gains(0, 0) == g2.gains(0, 0));
}

TEST_CASE("rayleigh shape contract", "[channel]")
{
    Rng rng(1);
    const auto g = rayleigh_channel(2, 3, rng);
    REQUIRE(g.gains.rows() == 2);
    REQUIRE(g.gains.cols() == 3);
    REQUIRE(g.primary_antennas() == 2);
    REQUIRE(g.secondary_antennas() == 3);
    REQUIRE_THROWS_AS(rayleigh_channel(0, 3, rng), InvalidArgument);
}

TEST_CASE("rayleigh 16x16 second moment over 1e4 draws", "[channel][statistics]")
{
    Rng rng(2024);
    double sum = 0.0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
        sum += rayleigh_channel(16, 16, rng).gains.cwiseAbs2().mean();
    const double mean = sum / draws;
    REQUIRE(mean >= 0.97);
    REQUIRE(mean <= 1.03);
}

TEST_CASE("rayleigh real/imag covariance is I/2 within 5 percent", "[channel][statistics]")
{
    Rng rng(77);
    const int draws = 40000;
    const int dim = 2 * 2 * 3;
    Eigen::MatrixXd samples(dim, draws);
    for (int i = 0; i < draws; ++i) {
        const auto g = rayleigh_channel(2, 3, rng);
        int k = 0;
        for (Eigen::Index c = 0; c < 3; ++c)
            for (Eigen::Index r = 0; r < 2; ++r) {
                samples(k++, i) = g.gains(r, c).real();
                samples(k++, i) = g.gains(r, c).imag();
            }
    }
    const Eigen::VectorXd mean = samples.rowwise().mean();
    const Eigen::MatrixXd centered = samples.colwise() - mean;
    const Eigen::MatrixXd cov = centered * centered.transpose() / (draws - 1);
    const Eigen::MatrixXd target = 0.5 * Eigen::MatrixXd::Identity(dim, dim);
    REQUIRE((cov - target).cwiseAbs().maxCoeff() <= 0.05 * 0.5);
    REQUIRE(mean.cwiseAbs().maxCoeff() <= 0.02);
}

TEST_CASE("patch gain at boresight is the peak gain", "[channel]")
{
    const PatchAntennaParams p;
    REQUIRE(patch_element_gain(Vec3::UnitX(), p, Vec3::UnitX()) == Approx(std::pow(10.0, 0.6)));
}

TEST_CASE("patch gain at the horizon is zero with infinite front-to-back", "[channel]")
{
    PatchAntennaParams p;
    p.front_to_back_db = std::numeric_limits<double>::infinity();
    for (double q : {0.5, 1.0, 2.0, 5.0}) {
        p.pattern_exponent = q;
        REQUIRE(patch_element_gain(Vec3::UnitY(), p, Vec3::UnitX()) == 0.0);
        REQUIRE(patch_element_gain(-Vec3::UnitX(), p, Vec3::UnitX()) == 0.0);
    }
}

TEST_CASE("patch gain at 60 degrees with q = 2 is a quarter of the peak", "[channel]")
{
    PatchAntennaParams p;
    p.pattern_exponent = 2.0;
    p.front_to_back_db = std::numeric_limits<double>::infinity();
    const double theta = oracle::kPi / 3.0;
    const Vec3 dir(std::cos(theta), std::sin(theta), 0.0);
    const double c = std::cos(theta);
    REQUIRE(patch_element_gain(dir, p, Vec3::UnitX()) == Approx(p.max_gain_linear() * c * c).epsilon(1e-12));
    REQUIRE(patch_element_gain(dir, p, Vec3::UnitX()) == Approx(p.max_gain_linear() * 0.25).epsilon(1e-12));
}

TEST_CASE("patch gain is nonnegative and continuous across the panel plane", "[channel][property]")
{
    const PatchAntennaParams p;
    double prev = patch_element_gain(Vec3::UnitX(), p, Vec3::UnitX());
    for (int i = 1; i <= 3600; ++i) {
        const double theta = oracle::kPi * i / 3600.0;
        const Vec3 dir(std::cos(theta), std::sin(theta), 0.0);
        const double g = patch_element_gain(dir, p, Vec3::UnitX());
        REQUIRE(g >= 0.0);
        REQUIRE(std::abs(g - prev) <= 0.01 * p.max_gain_linear());
        prev = g;
    }
    // behind the panel the floor equals the front-to-back level
    REQUIRE(patch_element_gain(-Vec3::UnitX(), p, Vec3::UnitX()) == Approx(p.max_gain_linear() * 0.01));
}

TEST_CASE("patch gain rejects non-unit vectors", "[channel][errors]")
{
    const PatchAntennaParams p;
    REQUIRE_THROWS_AS(patch_element_gain(Vec3(2, 0, 0), p, Vec3::UnitX()), InvalidArgument);
    REQUIRE_THROWS_AS(patch_element_gain(Vec3::UnitX(), p, Vec3(0, 0.5, 0)), InvalidArgument);
}

TEST_CASE("friis magnitude for isotropic antennas one wavelength apart", "[channel]")
{
    const double lambda = 0.1;
    const auto g = los_channel(single(Vec3::Zero(), Vec3::UnitX()), single(Vec3(lambda, 0, 0), -Vec3::UnitX()),
                               lambda, isotropic());
    REQUIRE(std::abs(g.gains(0, 0)) == Approx(1.0 / (4.0 * oracle::kPi)).epsilon(1e-12));
    REQUIRE(g.wavelength == lambda);
}

TEST_CASE("doubling every distance halves every magnitude", "[channel]")
{
    const double lambda = kSpeedOfLight / 3.5e9;
    const auto a = make_wall_panel(Vec3(0, 5, 2), Vec3::UnitX(), 2, 3, lambda / 2);
    const auto b = make_wall_panel(Vec3(7, 0, 3), Vec3::UnitY(), 3, 2, lambda / 2);
    PanelGeometry a2 = a, b2 = b;
    for (auto& p : a2.positions)
        p *= 2.0;
    for (auto& p : b2.positions)
        p *= 2.0;
    const auto g1 = los_channel(a, b, lambda, PatchAntennaParams{});
    const auto g2 = los_channel(a2, b2, lambda, PatchAntennaParams{});
    for (Eigen::Index m = 0; m < g1.gains.rows(); ++m)
        for (Eigen::Index k = 0; k < g1.gains.cols(); ++k)
            REQUIRE(std::abs(g2.gains(m, k)) == Approx(0.5 * std::abs(g1.gains(m, k))).epsilon(1e-12));
}

TEST_CASE("default room scene is dominated by one singular value", "[channel]")
{
    const LosScene scene;
    const auto g = los_channel(scene);
    REQUIRE(g.gains.rows() == 16);
    REQUIRE(g.gains.cols() == 16);
    const CMatrix gram = g.gains * g.gains.adjoint();
    const double top = oracle::largest_eigenvalue(gram);
    const double share = top / g.gains.squaredNorm();
    INFO("first singular value share of ||G||_F^2: " << share);
    REQUIRE(share > 0.9);
}

TEST_CASE("los entry phases follow the geometric path length", "[channel]")
{
    const LosScene scene;
    const double lambda = scene.wavelength();
    const auto p = make_wall_panel(scene.primary_center, scene.primary_normal, 4, 4, lambda / 2);
    const auto s = make_wall_panel(scene.secondary_center, scene.secondary_normal, 4, 4, lambda / 2);
    const auto g = los_channel(p, s, lambda, scene.patch);
    for (int m = 0; m < 16; ++m)
        for (int k = 0; k < 16; ++k) {
            const double dx = s.positions[k].x() - p.positions[m].x();
            const double dy = s.positions[k].y() - p.positions[m].y();
            const double dz = s.positions[k].z() - p.positions[m].z();
            const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
            const double expected = std::remainder(-2.0 * oracle::kPi * d / lambda, 2.0 * oracle::kPi);
            const double got = std::arg(g.gains(m, k));
            // d/lambda ~ 825 cycles, so double rounding in d limits agreement to ~1e-9 rad
            REQUIRE(std::abs(std::remainder(got - expected, 2.0 * oracle::kPi)) <= 1e-8);
        }
}

TEST_CASE("frobenius norm is invariant under rigid rotation of the scene", "[channel][property]")
{
    const LosScene scene;
    const double lambda = scene.wavelength();
    const auto p = make_wall_panel(scene.primary_center, scene.primary_normal, 4, 4, lambda / 2);
    const auto s = make_wall_panel(scene.secondary_center, scene.secondary_normal, 4, 4, lambda / 2);
    const double ref = los_channel(p, s, lambda, scene.patch).gains.norm();
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Quaterniond q(nd(rng), nd(rng), nd(rng), nd(rng));
        const Eigen::Matrix3d r = q.normalized().toRotationMatrix();
        const Vec3 shift(nd(rng), nd(rng), nd(rng));
        const double got = los_channel(rotated(p, r, shift), rotated(s, r, shift), lambda, scene.patch).gains.norm();
        REQUIRE(std::abs(got - ref) <= 1e-9 * ref);
    }
}

TEST_CASE("los channel rejects co-located antennas", "[channel][errors]")
{
    REQUIRE_THROWS_AS(los_channel(single(Vec3(1, 2, 3), Vec3::UnitX()), single(Vec3(1, 2, 3), -Vec3::UnitX()), 0.1,
                                  isotropic()),
                      InvalidArgument);
    REQUIRE_THROWS_AS(los_channel(single(Vec3::Zero(), Vec3::UnitX()), single(Vec3::UnitX(), -Vec3::UnitX()), 0.0,
                                  isotropic()),
                      InvalidArgument);
}

TEST_CASE("single-element panel sits at the centre", "[channel]")
{
    const Vec3 c(1.0, 2.0, 3.0);
    const auto p = make_wall_panel(c, Vec3::UnitY(), 1, 1, 0.05);
    REQUIRE(p.size() == 1);
    REQUIRE((p.positions[0] - c).norm() == 0.0);
    REQUIRE(p.boresight == Vec3::UnitY());
}

TEST_CASE("4x4 half-wavelength grid geometry", "[channel]")
{
    const double lambda = kSpeedOfLight / 3.5e9;
    const Vec3 c(0.0, 50.0, 5.0);
    const auto p = make_wall_panel(c, Vec3::UnitX(), 4, 4, lambda / 2);
    REQUIRE(p.size() == 16);
    REQUIRE(p.rows * p.cols == 16);
    double min_d = std::numeric_limits<double>::infinity();
    Vec3 centroid = Vec3::Zero();
    for (std::size_t i = 0; i < p.positions.size(); ++i) {
        centroid += p.positions[i];
        // every element lies in the wall plane
        REQUIRE(std::abs((p.positions[i] - c).dot(p.boresight)) <= 1e-12);
        for (std::size_t j = i + 1; j < p.positions.size(); ++j)
            min_d = std::min(min_d, (p.positions[i] - p.positions[j]).norm());
    }
    REQUIRE(min_d == Approx(lambda / 2).epsilon(1e-12));
    REQUIRE((centroid / 16.0 - c).norm() <= 1e-12);
    REQUIRE(std::abs(p.boresight.norm() - 1.0) <= 1e-12);
}

TEST_CASE("adjacent-wall panels have orthogonal boresights", "[channel]")
{
    const LosScene scene;
    const auto p = make_wall_panel(scene.primary_center, scene.primary_normal, 4, 4, 0.05);
    const auto s = make_wall_panel(scene.secondary_center, scene.secondary_normal, 4, 4, 0.05);
    REQUIRE(std::abs(p.boresight.dot(s.boresight)) <= 1e-12);
    // each panel faces into the room
    const Vec3 room_centre = 0.5 * scene.room;
    REQUIRE((room_centre - scene.primary_center).dot(p.boresight) > 0.0);
    REQUIRE((room_centre - scene.secondary_center).dot(s.boresight) > 0.0);
}

TEST_CASE("panel construction rejects invalid grids", "[channel][errors]")
{
    REQUIRE_THROWS_AS(make_wall_panel(Vec3::Zero(), Vec3::UnitX(), 0, 4, 0.1), InvalidArgument);
    REQUIRE_THROWS_AS(make_wall_panel(Vec3::Zero(), Vec3::UnitX(), 4, 4, 0.0), InvalidArgument);
    REQUIRE_THROWS_AS(make_wall_panel(Vec3::Zero(), Vec3(1, 1, 0), 4, 4, 0.1), InvalidArgument);
}

TEST_CASE("energy normalization targets Mp*Ms", "[channel]")
{
    const auto g = normalize_energy(los_channel(LosScene{}));
    REQUIRE(g.gains.squaredNorm() == Approx(256.0).epsilon(1e-12));
}

TEST_CASE("channel csv dump has re,im pairs per primary antenna", "[channel]")
{
    ChannelMatrix g{CMatrix(2, 2), 0.0};
    g.gains << Complex(1, -2), Complex(0.5, 0), Complex(-1, 0.25), Complex(3, 4);
    std::ostringstream os;
    write_channel_csv(os, g);
    REQUIRE(os.str() == "1,-2,0.5,0\n-1,0.25,3,4\n");
}
