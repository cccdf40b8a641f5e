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

#include "leoctl/topology.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace leoctl::topology {

using ephemeris::GroundStation;
using ephemeris::kEarthRadius;
using ephemeris::StateVector;

std::string_view to_string(LinkKind kind) { return kind == LinkKind::Isl ? "ISL" : "GSL"; }

std::string_view to_string(ThresholdKind kind)
{
    return kind == ThresholdKind::Rtt ? "rtt" : "one_way";
}

double one_way_delay(double distance) { return distance / kSpeedOfLight; }

Link Link::make(LinkKind kind, int a, int b, double distance)
{
    const double owd = topology::one_way_delay(distance);
    return Link{kind, a, b, distance, owd, 2.0 * owd};
}

double segment_distance_to_origin(Vec3 p1, Vec3 p2)
{
    const Vec3 d = p2 - p1;
    const double dd = d.norm2();
    if (dd == 0.0) {
        return p1.norm();
    }
    const double t = std::clamp(-p1.dot(d) / dd, 0.0, 1.0);
    return (p1 + t * d).norm();
}

bool has_line_of_sight(Vec3 p1, Vec3 p2, double grazing_altitude)
{
    return segment_distance_to_origin(p1, p2) > kEarthRadius + grazing_altitude;
}

double elevation_angle(Vec3 gs_pos, Vec3 sat_pos)
{
    const Vec3 v = sat_pos - gs_pos;
    const double vn = v.norm();
    const double gn = gs_pos.norm();
    if (vn == 0.0 || gn == 0.0) {
        return 90.0;
    }
    const double s = std::clamp(gs_pos.dot(v) / (gn * vn), -1.0, 1.0);
    return std::asin(s) * kRadToDeg;
}

double threshold_range(double threshold_s, ThresholdKind kind)
{
    return kind == ThresholdKind::Rtt ? threshold_s * kSpeedOfLight / 2.0
                                      : threshold_s * kSpeedOfLight;
}

std::optional<std::size_t> TopologySnapshot::index_of(int sat_id) const
{
    const auto it = std::lower_bound(sat_ids.begin(), sat_ids.end(), sat_id);
    if (it == sat_ids.end() || *it != sat_id) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - sat_ids.begin());
}

std::size_t TopologySnapshot::isl_count() const
{
    std::size_t n = 0;
    for (const auto& adj : isl_adjacency) {
        n += adj.size();
    }
    return n / 2;
}

std::vector<std::pair<int, int>> TopologySnapshot::isl_pairs() const
{
    std::vector<std::pair<int, int>> out;
    for (std::size_t i = 0; i < sat_ids.size(); ++i) {
        for (const Link& l : isl_adjacency[i]) {
            if (l.endpoint_a < l.endpoint_b) {
                out.emplace_back(l.endpoint_a, l.endpoint_b);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::int64_t kCellBias = 1 << 20;

std::uint64_t cell_key(std::int64_t cx, std::int64_t cy, std::int64_t cz)
{
    return (static_cast<std::uint64_t>(cx + kCellBias) << 42) |
           (static_cast<std::uint64_t>(cy + kCellBias) << 21) |
           static_cast<std::uint64_t>(cz + kCellBias);
}

void scan_range(std::span<const Vec3> pos, std::size_t begin, std::size_t end, double range2,
                double grazing, const std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>* grid,
                double cell, std::vector<PairCandidate>& out)
{
    std::vector<std::uint32_t> js;
    for (std::size_t i = begin; i < end; ++i) {
        const Vec3 p = pos[i];
        js.clear();
        if (grid == nullptr) {
            for (std::size_t j = i + 1; j < pos.size(); ++j) {
                if ((pos[j] - p).norm2() < range2) {
                    js.push_back(static_cast<std::uint32_t>(j));
                }
            }
        } else {
            const auto cx = static_cast<std::int64_t>(std::floor(p.x / cell));
            const auto cy = static_cast<std::int64_t>(std::floor(p.y / cell));
            const auto cz = static_cast<std::int64_t>(std::floor(p.z / cell));
            for (std::int64_t dx = -1; dx <= 1; ++dx) {
                for (std::int64_t dy = -1; dy <= 1; ++dy) {
                    for (std::int64_t dz = -1; dz <= 1; ++dz) {
                        const auto it = grid->find(cell_key(cx + dx, cy + dy, cz + dz));
                        if (it == grid->end()) {
                            continue;
                        }
                        for (std::uint32_t j : it->second) {
                            if (j > i && (pos[j] - p).norm2() < range2) {
                                js.push_back(j);
                            }
                        }
                    }
                }
            }
            std::sort(js.begin(), js.end());
        }
        for (std::uint32_t j : js) {
            if (has_line_of_sight(p, pos[j], grazing)) {
                out.push_back({static_cast<std::uint32_t>(i), j, distance(p, pos[j])});
            }
        }
    }
}

}  // namespace

std::vector<PairCandidate> enumerate_isl_pairs(std::span<const Vec3> positions, double max_range,
                                               double grazing_altitude, bool prune, int threads)
{
    std::vector<PairCandidate> out;
    if (positions.size() < 2 || !(max_range > 0.0)) {
        return out;
    }
    // Two points above the grazing sphere cannot see each other farther
    // apart than the sum of their tangent lengths.
    const double rg = kEarthRadius + grazing_altitude;
    double rmax = 0.0;
    for (const Vec3& p : positions) {
        rmax = std::max(rmax, p.norm());
    }
    double range = max_range;
    if (rmax > rg) {
        range = std::min(range, 2.0 * std::sqrt(rmax * rmax - rg * rg) * (1.0 + 1e-9));
    }
    const double range2 = range * range;

    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid;
    const bool use_grid = prune;
    if (use_grid) {
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const Vec3 p = positions[i];
            grid[cell_key(static_cast<std::int64_t>(std::floor(p.x / range)),
                          static_cast<std::int64_t>(std::floor(p.y / range)),
                          static_cast<std::int64_t>(std::floor(p.z / range)))]
                .push_back(static_cast<std::uint32_t>(i));
        }
    }
    const auto* grid_ptr = use_grid ? &grid : nullptr;

    const std::size_t n = positions.size();
    const int workers = std::clamp(threads, 1, 64);
    if (workers == 1 || n < 256) {
        scan_range(positions, 0, n, range2, grazing_altitude, grid_ptr, range, out);
        return out;
    }
    // Contiguous index blocks, concatenated in block order.
    std::vector<std::vector<PairCandidate>> parts(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        const std::size_t begin = n * static_cast<std::size_t>(w) / static_cast<std::size_t>(workers);
        const std::size_t end =
            n * static_cast<std::size_t>(w + 1) / static_cast<std::size_t>(workers);
        pool.emplace_back([&, w, begin, end] {
            scan_range(positions, begin, end, range2, grazing_altitude, grid_ptr, range,
                       parts[static_cast<std::size_t>(w)]);
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& part : parts) {
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

namespace {

std::vector<const StateVector*> sorted_states(std::span<const StateVector> states)
{
    std::vector<const StateVector*> order;
    order.reserve(states.size());
    for (const auto& s : states) {
        order.push_back(&s);
    }
    std::sort(order.begin(), order.end(),
              [](const StateVector* a, const StateVector* b) { return a->sat_id < b->sat_id; });
    for (std::size_t k = 1; k < order.size(); ++k) {
        if (order[k]->sat_id == order[k - 1]->sat_id) {
            throw std::invalid_argument("build_snapshot: duplicate satellite id " +
                                        std::to_string(order[k]->sat_id));
        }
        if (order[k]->time != order[0]->time) {
            throw std::invalid_argument("build_snapshot: states do not share one time instant");
        }
    }
    return order;
}

void apply_isl_cap(TopologySnapshot& snap, int cap)
{
    const std::size_t n = snap.sat_ids.size();
    std::vector<std::vector<int>> keep(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<const Link*> links;
        for (const Link& l : snap.isl_adjacency[i]) {
            links.push_back(&l);
        }
        std::sort(links.begin(), links.end(), [](const Link* a, const Link* b) {
            return a->distance != b->distance ? a->distance < b->distance
                                              : a->endpoint_b < b->endpoint_b;
        });
        for (std::size_t k = 0; k < links.size() && static_cast<int>(k) < cap; ++k) {
            keep[i].push_back(links[k]->endpoint_b);
        }
        std::sort(keep[i].begin(), keep[i].end());
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto& adj = snap.isl_adjacency[i];
        std::erase_if(adj, [&](const Link& l) {
            const std::size_t j = *snap.index_of(l.endpoint_b);
            return !std::binary_search(keep[i].begin(), keep[i].end(), l.endpoint_b) ||
                   !std::binary_search(keep[j].begin(), keep[j].end(), l.endpoint_a);
        });
    }
}

}  // namespace

TopologySnapshot build_snapshot(std::span<const StateVector> states,
                                std::span<const GroundStation> stations,
                                const SnapshotParams& params)
{
    TopologySnapshot snap;
    const auto order = sorted_states(states);
    snap.time = order.empty() ? 0.0 : order.front()->time;
    std::vector<Vec3> eci;
    eci.reserve(order.size());
    for (const StateVector* s : order) {
        snap.sat_ids.push_back(s->sat_id);
        eci.push_back(s->position_eci);
    }
    snap.isl_adjacency.resize(order.size());

    const double range = threshold_range(params.isl_rtt_threshold, ThresholdKind::Rtt) * (1.0 + 1e-9);
    for (const PairCandidate& c :
         enumerate_isl_pairs(eci, range, params.grazing_altitude, params.prune, params.threads)) {
        const int a = snap.sat_ids[c.i];
        const int b = snap.sat_ids[c.j];
        const Link l = Link::make(LinkKind::Isl, a, b, c.distance);
        if (l.rtt < params.isl_rtt_threshold) {
            snap.isl_adjacency[c.i].push_back(l);
            snap.isl_adjacency[c.j].push_back(Link::make(LinkKind::Isl, b, a, c.distance));
        }
    }
    for (auto& adj : snap.isl_adjacency) {
        std::sort(adj.begin(), adj.end(),
                  [](const Link& x, const Link& y) { return x.endpoint_b < y.endpoint_b; });
    }
    if (params.max_isl_per_sat) {
        apply_isl_cap(snap, *params.max_isl_per_sat);
    }

    std::vector<GroundStation> gs(stations.begin(), stations.end());
    std::sort(gs.begin(), gs.end(),
              [](const GroundStation& a, const GroundStation& b) { return a.gs_id < b.gs_id; });
    for (const GroundStation& g : gs) {
        const Vec3 gp = ephemeris::ground_station_position(g);
        for (const StateVector* s : order) {
            if (elevation_angle(gp, s->position_ecef) >= params.min_elevation_deg) {
                snap.gsl_links.push_back(
                    Link::make(LinkKind::Gsl, g.gs_id, s->sat_id, distance(gp, s->position_ecef)));
            }
        }
    }
    return snap;
}

// ---------------------------------------------------------------------------

EpisodeTracker::EpisodeTracker(double step_seconds) : step_(step_seconds)
{
    if (!(step_seconds > 0.0)) {
        throw std::invalid_argument("EpisodeTracker: step must be positive");
    }
}

std::uint64_t EpisodeTracker::key(std::pair<int, int> p)
{
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.first)) << 32) |
           static_cast<std::uint32_t>(p.second);
}

void EpisodeTracker::close(std::uint64_t k, const Run& r)
{
    LinkEpisode ep;
    ep.pair = {static_cast<int>(static_cast<std::uint32_t>(k >> 32)),
               static_cast<int>(static_cast<std::uint32_t>(k & 0xffffffffu))};
    ep.start_step = r.start;
    ep.end_step = r.last;
    ep.duration = (r.last - r.start + 1) * step_;
    closed_.push_back(ep);
}

void EpisodeTracker::add_step(int step, std::span<const std::pair<int, int>> linked_pairs)
{
    if (last_step_ && step <= *last_step_) {
        throw std::invalid_argument("EpisodeTracker: steps must increase");
    }
    for (auto p : linked_pairs) {
        if (p.first > p.second) {
            std::swap(p.first, p.second);
        }
        if (p.first == p.second) {
            throw std::invalid_argument("EpisodeTracker: self-link");
        }
        const std::uint64_t k = key(p);
        auto it = open_.find(k);
        if (it != open_.end() && it->second.last == step - 1) {
            it->second.last = step;
        } else if (it != open_.end() && it->second.last == step) {
            // duplicate in the same step
        } else {
            if (it != open_.end()) {
                close(k, it->second);
                open_.erase(it);
            }
            open_.emplace(k, Run{step, step});
        }
    }
    for (auto it = open_.begin(); it != open_.end();) {
        if (it->second.last != step) {
            close(it->first, it->second);
            it = open_.erase(it);
        } else {
            ++it;
        }
    }
    last_step_ = step;
}

std::vector<LinkEpisode> EpisodeTracker::finish(double min_duration)
{
    for (const auto& [k, r] : open_) {
        close(k, r);
    }
    open_.clear();
    std::vector<LinkEpisode> out;
    for (const LinkEpisode& ep : closed_) {
        if (ep.duration >= min_duration) {
            out.push_back(ep);
        }
    }
    std::sort(out.begin(), out.end(), [](const LinkEpisode& a, const LinkEpisode& b) {
        return a.pair != b.pair ? a.pair < b.pair : a.start_step < b.start_step;
    });
    return out;
}

std::vector<LinkEpisode> track_link_episodes(std::span<const TopologySnapshot> snapshots,
                                             double min_duration, double step_seconds)
{
    for (std::size_t k = 1; k < snapshots.size(); ++k) {
        const double dt = snapshots[k].time - snapshots[k - 1].time;
        if (std::abs(dt - step_seconds) > 1e-6 * step_seconds) {
            throw std::invalid_argument("track_link_episodes: snapshots are not uniformly spaced");
        }
    }
    EpisodeTracker tracker(step_seconds);
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        const auto pairs = snapshots[k].isl_pairs();
        tracker.add_step(static_cast<int>(k), pairs);
    }
    return tracker.finish(min_duration);
}

// ---------------------------------------------------------------------------

MeanStdPoint mean_std(double time, std::span<const int> counts)
{
    MeanStdPoint p{time, 0.0, 0.0};
    if (counts.empty()) {
        return p;
    }
    const double n = static_cast<double>(counts.size());
    double sum = 0.0;
    for (int c : counts) {
        sum += c;
    }
    p.mean = sum / n;
    double ss = 0.0;
    for (int c : counts) {
        ss += (c - p.mean) * (c - p.mean);
    }
    p.std = std::sqrt(ss / n);
    return p;
}

std::vector<DegreeSeries> degree_series(std::span<const TopologySnapshot> snapshots,
                                        std::span<const double> thresholds, ThresholdKind kind)
{
    if (snapshots.empty()) {
        throw std::invalid_argument("degree_series: no snapshots");
    }
    std::vector<DegreeSeries> out;
    for (double thr : thresholds) {
        DegreeSeries series{thr, kind, {}};
        for (const TopologySnapshot& snap : snapshots) {
            std::vector<int> counts(snap.sat_ids.size(), 0);
            for (std::size_t i = 0; i < snap.sat_ids.size(); ++i) {
                for (const Link& l : snap.isl_adjacency[i]) {
                    if (link_delay(l, kind) < thr) {
                        ++counts[i];
                    }
                }
            }
            series.points.push_back(mean_std(snap.time, counts));
        }
        out.push_back(std::move(series));
    }
    return out;
}

std::vector<double> gsl_rtt_samples(std::span<const TopologySnapshot> snapshots)
{
    std::vector<double> out;
    for (const TopologySnapshot& snap : snapshots) {
        for (const Link& l : snap.gsl_links) {
            out.push_back(l.rtt);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

TopologyAnalyzer::TopologyAnalyzer(AnalysisConfig config)
    : config_(std::move(config)), tracker_(config_.step_seconds)
{
    if (config_.isl_sample_stride < 1) {
        throw std::invalid_argument("TopologyAnalyzer: isl_sample_stride must be >= 1");
    }
    for (double thr : config_.degree_thresholds) {
        result_.degree.push_back({thr, config_.degree_kind, {}});
    }
}

void TopologyAnalyzer::add_step(int step, std::span<const StateVector> states,
                                std::span<const GroundStation> stations)
{
    const auto order = sorted_states(states);
    const double time = step * config_.step_seconds;
    std::vector<Vec3> eci;
    std::vector<int> ids;
    eci.reserve(order.size());
    ids.reserve(order.size());
    for (const StateVector* s : order) {
        eci.push_back(s->position_eci);
        ids.push_back(s->sat_id);
    }

    double range = threshold_range(config_.episode_threshold, config_.episode_kind);
    range = std::max(range, threshold_range(config_.isl_sample_threshold, config_.isl_sample_kind));
    for (double thr : config_.degree_thresholds) {
        range = std::max(range, threshold_range(thr, config_.degree_kind));
    }
    range *= 1.0 + 1e-9;

    const bool sample_isl = step % config_.isl_sample_stride == 0;
    std::vector<std::vector<int>> counts(config_.degree_thresholds.size(),
                                         std::vector<int>(ids.size(), 0));
    std::vector<std::pair<int, int>> episode_pairs;
    for (const PairCandidate& c : enumerate_isl_pairs(eci, range, config_.grazing_altitude,
                                                      config_.prune, config_.threads)) {
        const Link l = Link::make(LinkKind::Isl, ids[c.i], ids[c.j], c.distance);
        if (link_delay(l, config_.episode_kind) < config_.episode_threshold) {
            episode_pairs.emplace_back(l.endpoint_a, l.endpoint_b);
        }
        for (std::size_t t = 0; t < config_.degree_thresholds.size(); ++t) {
            if (link_delay(l, config_.degree_kind) < config_.degree_thresholds[t]) {
                ++counts[t][c.i];
                ++counts[t][c.j];
            }
        }
        if (sample_isl && link_delay(l, config_.isl_sample_kind) < config_.isl_sample_threshold) {
            result_.isl_rtt.push_back(l.rtt);
        }
    }
    tracker_.add_step(step, episode_pairs);
    for (std::size_t t = 0; t < counts.size(); ++t) {
        result_.degree[t].points.push_back(mean_std(time, counts[t]));
    }

    std::vector<GroundStation> gs(stations.begin(), stations.end());
    std::sort(gs.begin(), gs.end(),
              [](const GroundStation& a, const GroundStation& b) { return a.gs_id < b.gs_id; });
    for (const GroundStation& g : gs) {
        const Vec3 gp = ephemeris::ground_station_position(g);
        for (const StateVector* s : order) {
            if (elevation_angle(gp, s->position_ecef) >= config_.min_elevation_deg) {
                result_.gsl_rtt.push_back(2.0 * one_way_delay(distance(gp, s->position_ecef)));
            }
        }
    }
    ++result_.steps;
}

AnalysisResult TopologyAnalyzer::finish()
{
    result_.episodes = tracker_.finish(config_.episode_min_duration);
    return std::move(result_);
}

}  // namespace leoctl::topology
