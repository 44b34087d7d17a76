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

#pragma once

#include "beamsync/common.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace beamsync {

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Counter-based stream key: the same (master, tags...) always yields the same
/// seed, independent of how trials are scheduled across workers.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags)
{
    std::uint64_t h = detail::splitmix64(master);
    for (auto t : tags)
        h = detail::splitmix64(h ^ detail::splitmix64(t + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> tags)
{
    return Rng(derive_seed(master, tags));
}

/// One CN(0,1) draw: real and imaginary parts N(0, 1/2).
inline Complex complex_normal(Rng& rng)
{
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    const double re = nd(rng);
    const double im = nd(rng);
    return {re, im};
}

/// rows x cols matrix of i.i.d. CN(0, variance) entries, filled column-major.
inline CMatrix complex_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double variance = 1.0)
{
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5 * variance));
    CMatrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double re = nd(rng);
            const double im = nd(rng);
            m(r, c) = {re, im};
        }
    return m;
}

/// Uniformly distributed unit-norm complex vector.
inline CVector random_unit_vector(Eigen::Index n, Rng& rng)
{
    CVector v = complex_normal_matrix(n, 1, rng);
    return v / v.norm();
}

} // namespace beamsync
