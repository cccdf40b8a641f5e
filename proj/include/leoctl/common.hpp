// Copyright 2026 The leoctl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace leoctl {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

/// Simulation clock: integer nanoseconds since the scenario epoch. Integer
/// time keeps tick alignment and delivery arithmetic exact.
using SimTime = std::chrono::nanoseconds;

/// UTC instant with microsecond resolution.
using UtcTime = std::chrono::sys_time<std::chrono::microseconds>;

inline double to_seconds(SimTime t) { return static_cast<double>(t.count()) * 1e-9; }

inline SimTime from_seconds(double s)
{
    return SimTime{static_cast<std::int64_t>(std::llround(s * 1e9))};
}

/// Parse "YYYY-MM-DDTHH:MM:SS[.ffffff]Z". Throws std::invalid_argument.
UtcTime parse_utc(const std::string& text);
std::string format_utc(UtcTime t);

/// Julian date (UTC, no UT1 correction).
double julian_date(UtcTime t);

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
    friend constexpr Vec3 operator*(Vec3 v, double s) { return s * v; }
    friend constexpr bool operator==(Vec3, Vec3) = default;

    constexpr double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
};

inline double distance(Vec3 a, Vec3 b) { return (a - b).norm(); }

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent or out-of-range scenario/configuration input.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A numerical routine failed to converge.
class NonConvergence : public Error {
  public:
    using Error::Error;
};

/// Fewer synchronized members than the cluster quorum.
class QuorumNotMet : public Error {
  public:
    using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
  public:
    using Error::Error;
};

/// Term or version regression; always a programming error.
class InvariantViolation : public Error {
  public:
    using Error::Error;
};

}  // namespace leoctl
