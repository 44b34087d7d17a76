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

#include "beamsync/random.hpp"
#include "beamsync/signal.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace beamsync;
using Catch::Approx;

namespace {

double max_abs_diff(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("pilots 16x16 form a unitary matrix", "[signal]")
{
    const PilotMatrix phi = make_orthonormal_pilots(16, 16);
    REQUIRE(phi.length() == 16);
    REQUIRE(phi.antennas() == 16);
    const CMatrix gram = phi.entries().adjoint() * phi.entries();
    REQUIRE(max_abs_diff(gram, CMatrix::Identity(16, 16)) <= 1e-12);
    const CMatrix outer = phi.entries() * phi.entries().adjoint();
    REQUIRE(max_abs_diff(outer, CMatrix::Identity(16, 16)) <= 1e-12);
}

TEST_CASE("pilots 1x1 are the scalar one", "[signal]")
{
    const PilotMatrix phi = make_orthonormal_pilots(1, 1);
    REQUIRE(phi.entries().rows() == 1);
    REQUIRE(phi.entries().cols() == 1);
    REQUIRE(std::abs(phi.entries()(0, 0) - Complex(1.0, 0.0)) <= 1e-15);
}

TEST_CASE("pilots 4x2 are orthonormal by explicit inner products", "[signal]")
{
    const PilotMatrix phi = make_orthonormal_pilots(4, 2);
    REQUIRE(phi.entries().rows() == 4);
    REQUIRE(phi.entries().cols() == 2);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            Complex s = 0.0;
            for (int n = 0; n < 4; ++n)
                s += std::conj(phi.entries()(n, a)) * phi.entries()(n, b);
            REQUIRE(std::abs(s - Complex(a == b ? 1.0 : 0.0, 0.0)) <= 1e-12);
        }
}

TEST_CASE("pilot columns are unit norm and orthonormal for many shapes", "[signal][property]")
{
    for (int ms = 1; ms <= 20; ++ms)
        for (int tau = ms; tau <= ms + 7; ++tau) {
            const PilotMatrix phi = make_orthonormal_pilots(tau, ms);
            const CMatrix gram = phi.entries().adjoint() * phi.entries();
            REQUIRE(max_abs_diff(gram, CMatrix::Identity(ms, ms)) <= 1e-12);
            // constant-modulus entries
            REQUIRE(phi.entries().cwiseAbs().maxCoeff() == Approx(1.0 / std::sqrt(tau)).epsilon(1e-12));
        }
}

TEST_CASE("pilots are deterministic", "[signal]")
{
    REQUIRE(make_orthonormal_pilots(7, 3).entries() == make_orthonormal_pilots(7, 3).entries());
}

TEST_CASE("pilots reject tau_p < Ms", "[signal][errors]")
{
    REQUIRE_THROWS_AS(make_orthonormal_pilots(3, 4), InvalidArgument);
    REQUIRE_THROWS_AS(make_orthonormal_pilots(0, 0), InvalidArgument);
}

TEST_CASE("sync signal N=100, four cycles", "[signal]")
{
    const SyncWaveform x = make_sync_signal(100, 4);
    REQUIRE(x.length() == 100);
    REQUIRE(x.frequency() == Approx(0.04).epsilon(1e-15));
    REQUIRE(x.samples()(0) == 1.0);
    REQUIRE(std::abs(x.samples()(25)) <= 1e-12);
    REQUIRE(std::abs(x.samples()(1) - std::sin(0.08 * oracle::kPi)) <= 1e-15);
    for (int k = 1; k < 100; ++k)
        REQUIRE(std::abs(x.samples()(k) - std::sin(2.0 * oracle::kPi * 0.04 * k)) <= 1e-12);
}

TEST_CASE("sync tone at the minimal length N=2", "[signal]")
{
    for (double f : {0.01, 0.125, 0.3, 0.49}) {
        const SyncWaveform x = make_sync_tone(2, f);
        REQUIRE(x.length() == 2);
        REQUIRE(x.samples()(0) == 1.0);
        REQUIRE(x.samples()(1) == Approx(std::sin(2.0 * oracle::kPi * f)).margin(1e-15));
    }
}

TEST_CASE("sync signal energy equals the direct sum", "[signal][property]")
{
    for (int n : {3, 10, 64, 100, 257})
        for (int cycles = 1; 2 * cycles < n && cycles <= 8; ++cycles) {
            const SyncWaveform x = make_sync_signal(n, cycles);
            const double f = static_cast<double>(cycles) / n;
            double expected = 1.0;
            for (int k = 1; k < n; ++k)
                expected += std::pow(std::sin(2.0 * oracle::kPi * f * k), 2);
            REQUIRE(x.energy() == Approx(expected).epsilon(1e-12));
        }
}

TEST_CASE("pure sinusoid switch replaces the leading one", "[signal]")
{
    const SyncWaveform x = make_sync_signal(100, 4, true);
    REQUIRE(x.samples()(0) == 0.0);
    REQUIRE(x.samples()(1) == make_sync_signal(100, 4).samples()(1));
}

TEST_CASE("sync signal rejects invalid shapes", "[signal][errors]")
{
    REQUIRE_THROWS_AS(make_sync_signal(1, 1), InvalidArgument);
    REQUIRE_THROWS_AS(make_sync_signal(8, 4), InvalidArgument);  // f = 1/2
    REQUIRE_THROWS_AS(make_sync_signal(8, 5), InvalidArgument);
    REQUIRE_THROWS_AS(make_sync_signal(100, 0), InvalidArgument);
    REQUIRE_THROWS_AS(make_sync_tone(2, 0.5), InvalidArgument);
    REQUIRE_THROWS_AS(make_sync_tone(1, 0.1), InvalidArgument);
    REQUIRE_THROWS_AS(SyncWaveform::from_samples(RVector::Ones(1)), InvalidArgument);
}

TEST_CASE("rotation with zero offset is the identity", "[signal]")
{
    const CVector d = rotation_diag(0.0, 5).materialize();
    for (int i = 0; i < 5; ++i)
        REQUIRE(d(i) == Complex(1.0, 0.0));
}

TEST_CASE("quarter-cycle rotation", "[signal]")
{
    const RotationDiag r = rotation_diag(0.25, 2);
    REQUIRE(std::abs(r.entry(1) - Complex(0.0, 1.0)) <= 1e-15);
    REQUIRE(std::abs(r.entry(2) - Complex(-1.0, 0.0)) <= 1e-15);
}

TEST_CASE("rotation entries match direct exponentials", "[signal]")
{
    const CVector d = rotation_diag(0.1, 3).materialize();
    for (int n = 1; n <= 3; ++n) {
        const double a = 0.2 * oracle::kPi * n;
        REQUIRE(std::abs(d(n - 1) - Complex(std::cos(a), std::sin(a))) <= 1e-15);
        REQUIRE(std::abs(std::abs(d(n - 1)) - 1.0) <= 1e-12);
    }
}

TEST_CASE("rotation rejects empty length", "[signal][errors]")
{
    REQUIRE_THROWS_AS(rotation_diag(0.1, 0), InvalidArgument);
}

TEST_CASE("apply_rotation with zero offset leaves the block unchanged", "[signal]")
{
    Rng rng(4);
    const CMatrix b = complex_normal_matrix(3, 6, rng);
    REQUIRE(apply_rotation(b, rotation_diag(0.0, 6)) == b);
}

TEST_CASE("conjugate quarter-cycle rotation scales columns by -j and -1", "[signal]")
{
    CMatrix b(2, 2);
    b << Complex(1, 2), Complex(3, -1), Complex(-2, 0.5), Complex(0, 1);
    const CMatrix out = apply_rotation(b, rotation_diag(0.25, 2), true);
    REQUIRE(max_abs_diff(out.col(0), b.col(0) * Complex(0, -1)) <= 1e-15);
    REQUIRE(max_abs_diff(out.col(1), b.col(1) * Complex(-1, 0)) <= 1e-15);
}

TEST_CASE("apply_rotation equals dense diagonal multiplication", "[signal]")
{
    Rng rng(17);
    const CMatrix b = complex_normal_matrix(2, 3, rng);
    const CMatrix dense = oracle::dense_rotation(0.1, 3);
    REQUIRE(max_abs_diff(apply_rotation(b, rotation_diag(0.1, 3)), b * dense) <= 1e-14);
    REQUIRE(max_abs_diff(apply_rotation(b, rotation_diag(0.1, 3), true), b * dense.conjugate()) <= 1e-14);
}

TEST_CASE("rotation followed by its conjugate is the identity", "[signal][property]")
{
    Rng rng(99);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::uniform_int_distribution<int> len(1, 300);
    for (int trial = 0; trial < 200; ++trial) {
        const double delta = u(rng);
        const int tau = len(rng);
        const CMatrix b = complex_normal_matrix(4, tau, rng);
        const RotationDiag r = rotation_diag(delta, tau);
        const CMatrix back = apply_rotation(apply_rotation(b, r), r, true);
        REQUIRE(max_abs_diff(back, b) <= 1e-10);
    }
}

TEST_CASE("apply_rotation rejects a column-count mismatch", "[signal][errors]")
{
    const CMatrix b = CMatrix::Zero(2, 3);
    REQUIRE_THROWS_AS(apply_rotation(b, rotation_diag(0.1, 4)), DimensionMismatch);
}

TEST_CASE("wrap_offset maps onto [-0.5, 0.5)", "[signal]")
{
    REQUIRE(wrap_offset(0.5) == -0.5);
    REQUIRE(wrap_offset(-0.5) == -0.5);
    REQUIRE(wrap_offset(0.75) == Approx(-0.25));
    REQUIRE(wrap_offset(-1.2) == Approx(-0.2));
    REQUIRE(wrap_offset(0.1) == Approx(0.1));
}

TEST_CASE("snr conversions", "[signal]")
{
    REQUIRE(Snr::from_db(10.0).linear() == Approx(10.0));
    REQUIRE(Snr::from_db(3.0).linear() == Approx(std::pow(10.0, 0.3)));
    REQUIRE(Snr::from_linear(100.0).db() == Approx(20.0));
    REQUIRE_THROWS_AS(Snr::from_linear(0.0), InvalidArgument);
    REQUIRE_THROWS_AS(Snr::from_linear(-1.0), InvalidArgument);
}

TEST_CASE("stream derivation is keyed on every tag", "[random]")
{
    REQUIRE(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    REQUIRE(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    REQUIRE(derive_seed(1, {2, 3}) != derive_seed(2, {2, 3}));
    REQUIRE(derive_seed(1, {2}) != derive_seed(1, {2, 0}));
    Rng a = make_stream(5, {1, 2});
    Rng b = make_stream(5, {1, 2});
    REQUIRE(a() == b());
}
