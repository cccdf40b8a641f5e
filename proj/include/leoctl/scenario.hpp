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

#include "leoctl/cluster.hpp"
#include "leoctl/common.hpp"
#include "leoctl/ephemeris.hpp"
#include "leoctl/fede2.hpp"
#include "leoctl/linkmap.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace leoctl::sim {

struct ConstellationSpec {
    enum class Kind { Walker, Shells, Tle, Starlink };
    Kind kind = Kind::Walker;
    std::vector<ephemeris::WalkerSpec> shells;  // Walker: exactly one
    std::filesystem::path tle_path;             // relative paths resolve against the scenario file
    // Starlink: the TLE file named by LEOCTL_TLE_SNAPSHOT, else the 7-shell surrogate
    bool strict_tle = false;
    std::optional<int> max_sats;                // keep the lowest ids
    std::vector<double> altitude_sweep_km;      // topology: one GSL ECDF per altitude
};

struct WindowSpec {
    UtcTime epoch{};
    double duration_s = 3600.0;
    double step_s = 60.0;

    /// Snapshots at k * step_s for k in [0, steps()).
    int steps() const;
};

struct StationSpec {
    enum class Kind { Default, Csv, Inline };
    Kind kind = Kind::Default;
    std::filesystem::path csv_path;
    std::vector<ephemeris::GroundStation> stations;  // Inline
};

struct ThresholdSpec {
    double isl_rtt_s = 0.010;  // ISLs kept in snapshots
    std::vector<double> degree_rtt_s{0.010, 0.100};
    double min_elevation_deg = 25.0;
    double grazing_altitude_m = 80e3;
    double episode_rtt_s = 0.010;
    double episode_min_duration_s = 60.0;
    double isl_sample_one_way_s = 0.010;
    int isl_sample_stride = 1;
    double histogram_bin_s = 60.0;
    std::optional<int> max_isl_per_sat;
};

struct ClusterSpec {
    int max_size = 8;
    double rtt_threshold_s = 0.010;
    int recluster_every_steps = 0;  // 0: only on quorum loss
    cluster::ScoreWeights weights;
    std::map<int, double> compute_avail;
    double default_compute_avail = 1.0;
    int staleness_cycles = 10;
};

struct LinkmapSpec {
    std::optional<int> capacity;  // messages per node per control cycle
    linkmap::Mode mode = linkmap::Mode::Normal;
};

enum class FaultKind { LinkDrop, NodeHalt, GslBlackout, CredentialRevoke };
std::string_view to_string(FaultKind k);

struct FaultEvent {
    double time_s = 0.0;
    FaultKind kind = FaultKind::NodeHalt;
    std::pair<int, int> pair{};   // LinkDrop
    int node = 0;                 // NodeHalt, CredentialRevoke
    std::vector<int> stations;    // GslBlackout
    double duration_s = 0.0;      // unused for CredentialRevoke
};

struct Injection {
    double time_s = 0.0;
    std::optional<int> node;       // deliver to this node
    std::optional<int> leader_of;  // or to the acting leader of this node's cluster
    std::string key;
    std::string value;
    bool is_signed = true;
    bool tampered = false;
};

enum class TraceMode { Compact, Full };

struct Scenario {
    std::string name = "scenario";
    ConstellationSpec constellation;
    WindowSpec window;
    StationSpec stations;
    ThresholdSpec thresholds;
    ClusterSpec cluster;
    fede2::ProtocolParams protocol;
    LinkmapSpec linkmap;
    std::vector<FaultEvent> faults;
    std::vector<Injection> injections;
    std::uint64_t seed = 1;
    double loss_rate = 0.0;
    bool j2 = false;
    TraceMode trace = TraceMode::Compact;
};

/// JSON scenario. Relative file paths resolve against base_dir. Throws
/// ConfigError naming the offending field.
Scenario parse_scenario(std::string_view json_text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& file);

/// Cross-field checks and file existence. Each diagnostic starts with the
/// field path. Empty result means valid.
std::vector<std::string> check_scenario(const Scenario& s);

/// Throws ConfigError with the first diagnostic.
void require_valid(const Scenario& s);

/// Seven circular shells approximating the late-2024 Starlink deployment
/// (6536 satellites). Used when no TLE snapshot is supplied.
std::vector<ephemeris::WalkerSpec> starlink_surrogate_shells();

struct Constellation {
    std::vector<ephemeris::OrbitalElements> elements;  // ascending sat_id
    std::vector<ephemeris::TleIssue> issues;
    std::string label;  // "walker", "tle:<file>", "surrogate:starlink-7-shell", ...
};

/// Elements for the scenario. altitude_override_km replaces the altitude of
/// every generated shell (ignored for TLE input).
Constellation build_constellation(const Scenario& s,
                                  std::optional<double> altitude_override_km = std::nullopt);

std::vector<ephemeris::GroundStation> build_stations(const Scenario& s);

}  // namespace leoctl::sim
