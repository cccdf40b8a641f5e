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

#include "leoctl/common.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace leoctl::ephemeris {

inline constexpr double kEarthRadius = 6'371'000.0;         // m, spherical model
inline constexpr double kEarthMu = 3.986004418e14;          // m^3/s^2
inline constexpr double kEarthRotationRate = 7.2921159e-5;  // rad/s
inline constexpr double kJ2 = 1.08262668e-3;
inline constexpr double kJ2ReferenceRadius = 6'378'137.0;  // m, equatorial

/// Mean orbital elements. Angles in radians normalized to [0, 2*pi).
struct OrbitalElements {
    int sat_id = 0;
    UtcTime epoch{};
    double inclination = 0.0;
    double raan = 0.0;
    double eccentricity = 0.0;
    double arg_perigee = 0.0;
    double mean_anomaly = 0.0;
    double mean_motion = 0.0;  // rad/s

    double semi_major_axis() const;
    double period() const;
};

struct StateVector {
    int sat_id = 0;
    double time = 0.0;  // seconds since scenario epoch
    Vec3 position_eci;
    Vec3 position_ecef;
};

struct GroundStation {
    int gs_id = 0;
    double latitude_deg = 0.0;
    double longitude_deg = 0.0;
    double altitude_m = 0.0;
};

// ---------------------------------------------------------------------------
// TLE parsing

enum class TleErrorKind { ChecksumMismatch, MalformedLine };

struct TleIssue {
    TleErrorKind kind;
    std::size_t record_index;  // zero-based record position in the input
    std::size_t line_number;   // one-based line in the input
    std::string message;
};

class TleError : public Error {
  public:
    explicit TleError(TleIssue issue);
    const TleIssue& issue() const { return issue_; }

  private:
    TleIssue issue_;
};

enum class TleMode {
    Strict,   // first bad record throws TleError
    Lenient,  // bad records are skipped and reported
};

struct TleParseResult {
    std::vector<OrbitalElements> elements;
    std::vector<TleIssue> issues;
};

/// Parse 2-line or 3-line element records. Mean motion is converted from
/// rev/day to rad/s, the epoch from the YYDDD.DDDDDDDD field.
TleParseResult parse_tle(std::string_view text, TleMode mode = TleMode::Lenient);

/// Modulo-10 TLE checksum over the first 68 columns.
int tle_checksum(std::string_view line);

// ---------------------------------------------------------------------------
// Propagation

inline constexpr int kKeplerMaxIterations = 50;

/// Solve E - e sin E = M by Newton iteration, at most kKeplerMaxIterations
/// steps. The result satisfies |E - e sin E - M| < 1e-12 for e < 1.
double solve_kepler(double mean_anomaly, double eccentricity);

struct PropagationContext {
    UtcTime scenario_epoch{};
    double theta0 = 0.0;  // Earth rotation angle at the scenario epoch, rad
    bool j2 = false;      // secular J2 drift of RAAN and argument of perigee
};

/// ECI position at `dt` seconds after the element epoch (two-body).
Vec3 propagate_eci(const OrbitalElements& elements, double dt, bool j2 = false);

/// State at `t` seconds after the scenario epoch.
StateVector elements_to_state(const OrbitalElements& elements, double t,
                              const PropagationContext& ctx);

/// State at `t` seconds after the element epoch with theta0 = 0.
StateVector elements_to_state(const OrbitalElements& elements, double t);

std::vector<StateVector> propagate_all(std::span<const OrbitalElements> elements, double t,
                                       const PropagationContext& ctx);

/// Rotate an inertial vector into the Earth-fixed frame at time t.
Vec3 eci_to_ecef(Vec3 position_eci, double t, double theta0 = 0.0);

/// Simplified GMST (linear Meeus term, no T^2/T^3), radians in [0, 2*pi).
double gmst_angle(UtcTime t);

Vec3 ground_station_position(const GroundStation& gs);

/// Documented default set of 33 ground sites spread over inhabited latitudes.
std::vector<GroundStation> default_ground_stations();

/// CSV with header `gs_id,lat_deg,lon_deg,alt_m`. Throws ConfigError.
std::vector<GroundStation> parse_ground_stations_csv(std::string_view text);

// ---------------------------------------------------------------------------
// Walker-delta constellations

class InvalidWalker : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

struct WalkerSpec {
    int total_sats = 1;
    int planes = 1;
    int phasing = 0;
    double inclination_deg = 53.0;
    double altitude_km = 550.0;
};

/// Walker-delta i:T/P/F pattern with circular orbits. Satellite (plane p,
/// slot s) has RAAN p*360/P and mean anomaly s*360/S + p*F*360/T degrees,
/// S = T/P. Ids are first_id + p*S + s.
std::vector<OrbitalElements> generate_walker(const WalkerSpec& spec, UtcTime epoch,
                                             int first_id = 0);

double normalize_angle(double radians);

}  // namespace leoctl::ephemeris
