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
#include "leoctl/ephemeris.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace leoctl::topology {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

enum class LinkKind { Isl, Gsl };
std::string_view to_string(LinkKind kind);

/// A point-in-time link. For GSLs endpoint_a is the ground station id and
/// endpoint_b the satellite id.
struct Link {
    LinkKind kind = LinkKind::Isl;
    int endpoint_a = 0;
    int endpoint_b = 0;
    double distance = 0.0;       // m
    double one_way_delay = 0.0;  // s
    double rtt = 0.0;            // s

    static Link make(LinkKind kind, int a, int b, double distance);
    friend bool operator==(const Link&, const Link&) = default;
};

double one_way_delay(double distance);

/// Distance from the Earth's center to the closest point of segment p1-p2.
double segment_distance_to_origin(Vec3 p1, Vec3 p2);

/// True iff segment p1-p2 stays strictly above the grazing sphere of radius
/// kEarthRadius + grazing_altitude.
bool has_line_of_sight(Vec3 p1, Vec3 p2, double grazing_altitude);

/// Elevation of the satellite above the station's local horizon, degrees.
double elevation_angle(Vec3 gs_pos, Vec3 sat_pos);

enum class ThresholdKind { Rtt, OneWay };
std::string_view to_string(ThresholdKind kind);

/// Distance below which a link beats the delay threshold.
double threshold_range(double threshold_s, ThresholdKind kind);

/// Delay of `link` measured the way `kind` asks for.
inline double link_delay(const Link& link, ThresholdKind kind)
{
    return kind == ThresholdKind::Rtt ? link.rtt : link.one_way_delay;
}

struct SnapshotParams {
    double isl_rtt_threshold = 0.010;  // ISL kept iff rtt < threshold
    double grazing_altitude = 80e3;    // m
    double min_elevation_deg = 25.0;   // GSL kept iff elevation >= mask
    std::optional<int> max_isl_per_sat;
    bool prune = true;  // spatial cell hashing; output identical to brute force
    int threads = 1;
};

struct TopologySnapshot {
    double time = 0.0;
    std::vector<int> sat_ids;                      // ascending
    std::vector<std::vector<Link>> isl_adjacency;  // aligned with sat_ids, sorted by peer id
    std::vector<Link> gsl_links;                   // sorted by (station, satellite)

    std::optional<std::size_t> index_of(int sat_id) const;
    std::size_t isl_count() const;
    /// Undirected ISL pairs (min id, max id), ascending.
    std::vector<std::pair<int, int>> isl_pairs() const;
};

/// One candidate pair from enumerate_isl_pairs; i < j index the input.
struct PairCandidate {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    double distance = 0.0;
};

/// All index pairs with distance < max_range and line of sight, ordered by
/// (i, j). With `prune` the search uses a uniform grid with cells of the
/// range scale, which visits every pair within range.
std::vector<PairCandidate> enumerate_isl_pairs(std::span<const Vec3> positions, double max_range,
                                               double grazing_altitude, bool prune = true,
                                               int threads = 1);

/// States must share one time instant and have distinct satellite ids.
TopologySnapshot build_snapshot(std::span<const ephemeris::StateVector> states,
                                std::span<const ephemeris::GroundStation> stations,
                                const SnapshotParams& params);

// ---------------------------------------------------------------------------
// Visibility episodes

struct LinkEpisode {
    std::pair<int, int> pair;  // (min id, max id)
    int start_step = 0;
    int end_step = 0;
    double duration = 0.0;  // (end - start + 1) * step

    friend bool operator==(const LinkEpisode&, const LinkEpisode&) = default;
};

/// Sequential fold over uniformly spaced steps. A pair absent at any step
/// ends its current run.
class EpisodeTracker {
  public:
    explicit EpisodeTracker(double step_seconds);

    /// Steps must be strictly increasing; a skipped step index is a gap.
    void add_step(int step, std::span<const std::pair<int, int>> linked_pairs);

    /// Close open runs and return episodes lasting at least min_duration,
    /// ordered by (pair, start_step).
    std::vector<LinkEpisode> finish(double min_duration);

  private:
    struct Run {
        int start;
        int last;
    };
    static std::uint64_t key(std::pair<int, int> p);
    void close(std::uint64_t k, const Run& r);

    double step_;
    std::optional<int> last_step_;
    std::unordered_map<std::uint64_t, Run> open_;
    std::vector<LinkEpisode> closed_;
};

std::vector<LinkEpisode> track_link_episodes(std::span<const TopologySnapshot> snapshots,
                                             double min_duration, double step_seconds);

// ---------------------------------------------------------------------------
// Statistics

struct MeanStdPoint {
    double time = 0.0;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

struct DegreeSeries {
    double threshold = 0.0;
    ThresholdKind kind = ThresholdKind::Rtt;
    std::vector<MeanStdPoint> points;
};

/// Per threshold and snapshot: mean and standard deviation over satellites
/// of the number of ISL neighbors whose delay is below the threshold.
std::vector<DegreeSeries> degree_series(std::span<const TopologySnapshot> snapshots,
                                        std::span<const double> thresholds, ThresholdKind kind);

/// RTT of every visible station-satellite pair at every snapshot.
std::vector<double> gsl_rtt_samples(std::span<const TopologySnapshot> snapshots);

MeanStdPoint mean_std(double time, std::span<const int> counts);

// ---------------------------------------------------------------------------
// Streaming analysis for whole-constellation windows. Equivalent to
// build_snapshot + the batch statistics above, without materializing the
// adjacency at the widest threshold.

struct AnalysisConfig {
    double step_seconds = 60.0;
    double grazing_altitude = 80e3;
    double min_elevation_deg = 25.0;

    double episode_threshold = 0.010;
    ThresholdKind episode_kind = ThresholdKind::Rtt;
    double episode_min_duration = 60.0;

    std::vector<double> degree_thresholds{0.010, 0.100};
    ThresholdKind degree_kind = ThresholdKind::Rtt;

    double isl_sample_threshold = 0.010;
    ThresholdKind isl_sample_kind = ThresholdKind::OneWay;
    int isl_sample_stride = 1;  // keep ISL delay samples every n-th step

    bool prune = true;
    int threads = 1;
};

struct AnalysisResult {
    std::vector<LinkEpisode> episodes;
    std::vector<DegreeSeries> degree;
    std::vector<double> gsl_rtt;
    std::vector<double> isl_rtt;
    std::size_t steps = 0;
};

class TopologyAnalyzer {
  public:
    explicit TopologyAnalyzer(AnalysisConfig config);

    void add_step(int step, std::span<const ephemeris::StateVector> states,
                  std::span<const ephemeris::GroundStation> stations);
    AnalysisResult finish();

  private:
    AnalysisConfig config_;
    EpisodeTracker tracker_;
    AnalysisResult result_;
};

}  // namespace leoctl::topology
