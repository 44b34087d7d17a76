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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace beamsync {

using Complex = std::complex<double>;
using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using CVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kJ{0.0, 1.0};

// Precondition violated by caller-supplied sizes or values.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// Offset not identifiable: singular Fisher information or zero CRB denominator.
class IdentifiabilityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace detail {

inline void require(bool cond, const std::string& what)
{
    if (!cond)
        throw InvalidArgument(what);
}

inline void require_dims(bool cond, const std::string& what)
{
    if (!cond)
        throw DimensionMismatch(what);
}

} // namespace detail

/// Signal-to-noise ratio. Configs carry dB; the signal model uses the linear value.
class Snr {
public:
    static Snr from_db(double db) { return Snr(std::pow(10.0, db / 10.0)); }
    static Snr from_linear(double linear) { return Snr(linear); }

    double linear() const { return linear_; }
    double db() const { return 10.0 * std::log10(linear_); }

private:
    explicit Snr(double linear) : linear_(linear)
    {
        detail::require(linear > 0.0 && std::isfinite(linear), "SNR must be positive and finite");
    }
    double linear_;
};

/// Wrap a normalized offset difference onto [-0.5, 0.5).
inline double wrap_offset(double delta)
{
    double w = delta - std::floor(delta + 0.5);
    if (w >= 0.5)
        w -= 1.0;
    return w;
}

} // namespace beamsync
