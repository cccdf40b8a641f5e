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

// Acceptance run: one PASS/FAIL line per criterion. Optional arguments pick
// criteria by number, e.g. `acceptance 1 5 7`.

#include "leoctl/cli.hpp"
#include "leoctl/ephemeris.hpp"
#include "leoctl/linkmap.hpp"
#include "leoctl/simkernel.hpp"
#include "leoctl/topology.hpp"

#include "graphs.hpp"
#include "json.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace leoctl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

fs::path work_dir()
{
    const char* env = std::getenv("LEOCTL_ACCEPTANCE_DIR");
    const fs::path p = env && *env ? fs::path(env) : fs::temp_directory_path() / "leoctl_acceptance";
    fs::create_directories(p);
    return p;
}

// ---------------------------------------------------------------------------
// 1. Kepler solver and two-body propagation

Outcome kepler_and_propagation()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> mdist(-4.0 * std::numbers::pi, 4.0 * std::numbers::pi);
    std::uniform_real_distribution<double> edist(0.0, 0.99);
    double worst_residual = 0.0;
    double worst_oracle = 0.0;
    for (int i = 0; i < 10'000; ++i) {
        const double m = mdist(rng);
        const double e = edist(rng);
        const double big_e = ephemeris::solve_kepler(m, e);
        worst_residual = std::max(worst_residual, std::abs(big_e - e * std::sin(big_e) - m));
        worst_oracle = std::max(worst_oracle, std::abs(big_e - oracle::kepler_bisect(m, e)));
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_radius = 0.0;
    double worst_return = 0.0;
    for (int i = 0; i < 200; ++i) {
        ephemeris::OrbitalElements el;
        const double a = oracle::kR + 300e3 + 1700e3 * unit(rng);
        el.mean_motion = std::sqrt(ephemeris::kEarthMu / (a * a * a));
        el.inclination = std::numbers::pi * unit(rng);
        el.raan = 2.0 * std::numbers::pi * unit(rng);
        el.arg_perigee = 2.0 * std::numbers::pi * unit(rng);
        el.mean_anomaly = 2.0 * std::numbers::pi * unit(rng);
        for (int k = 0; k < 50; ++k) {
            const double r = ephemeris::propagate_eci(el, 200.0 * k * unit(rng)).norm();
            worst_radius = std::max(worst_radius, std::abs(r / a - 1.0));
        }
        el.eccentricity = 0.1 * unit(rng);
        const Vec3 p0 = ephemeris::propagate_eci(el, 0.0);
        const Vec3 p1 = ephemeris::propagate_eci(el, el.period());
        worst_return = std::max(worst_return, distance(p0, p1) / el.semi_major_axis());
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = worst_residual < 1e-12 && worst_oracle < 1e-9 && worst_radius < 1e-6 && worst_return < 1e-6 &&
             secs < 5.0;
    o.detail = fmt("max residual %.2e, max |E - bisection| %.2e, radius drift %.2e, period return %.2e, %.2f s",
                   worst_residual, worst_oracle, worst_radius, worst_return, secs);
    return o;
}

// ---------------------------------------------------------------------------
// 2. Ground-link delays

Outcome ground_link_delays()
{
    const ephemeris::GroundStation gs{0, 0.0, 0.0, 0.0};
    const Vec3 g = ephemeris::ground_station_position(gs);
    const std::map<double, double> nadir_ms{{180.0, 1.2008}, {550.0, 3.669}, {2000.0, 13.342}};
    Outcome o;
    std::string parts;
    for (const auto& [alt_km, want] : nadir_ms) {
        const Vec3 sat{ephemeris::kEarthRadius + alt_km * 1e3, 0.0, 0.0};
        const double rtt_ms = 2.0 * topology::one_way_delay(distance(g, sat)) * 1e3;
        o.pass = o.pass && std::abs(rtt_ms / want - 1.0) < 1e-3;
        parts += fmt("%.0f km %.4f ms, ", alt_km, rtt_ms);
    }

    // satellite at 2000 km on the horizon: bisect the central angle
    const double r = ephemeris::kEarthRadius + 2000e3;
    auto at = [&](double phi) { return Vec3{r * std::cos(phi), r * std::sin(phi), 0.0}; };
    double lo = 0.0;
    double hi = std::numbers::pi / 2.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (topology::elevation_angle(g, at(mid)) >= 0.0 ? lo : hi) = mid;
    }
    const double max_ms = 2.0 * topology::one_way_delay(distance(g, at(lo))) * 1e3;
    o.pass = o.pass && max_ms >= 35.0 && max_ms <= 38.0;
    o.detail = parts + fmt("horizon RTT at 2000 km %.2f ms", max_ms);
    return o;
}

// ---------------------------------------------------------------------------
// 3. Snapshots and episodes against the brute-force oracle

ephemeris::WalkerSpec random_walker(std::mt19937_64& rng, int max_sats)
{
    const int planes = std::uniform_int_distribution<int>(1, 10)(rng);
    const int per_plane = std::uniform_int_distribution<int>(1, max_sats / planes)(rng);
    ephemeris::WalkerSpec w;
    w.planes = planes;
    w.total_sats = planes * per_plane;
    w.phasing = std::uniform_int_distribution<int>(0, planes - 1)(rng);
    w.inclination_deg = std::uniform_real_distribution<double>(30.0, 100.0)(rng);
    w.altitude_km = std::uniform_real_distribution<double>(400.0, 1500.0)(rng);
    return w;
}

Outcome snapshots_match_oracle()
{
    const auto t0 = Clock::now();
    const auto epoch = parse_utc("2024-11-11T00:00:00Z");
    const auto stations = ephemeris::default_ground_stations();
    std::mt19937_64 rng(23);
    int mismatched_steps = 0;
    int mismatched_episode_sets = 0;
    std::size_t isl_total = 0;
    std::size_t gsl_total = 0;
    std::size_t episode_total = 0;
    for (int c = 0; c < 20; ++c) {
        const auto walker = random_walker(rng, 50);
        const auto sats = ephemeris::generate_walker(walker, epoch);
        const double theta0 = std::uniform_real_distribution<double>(0.0, 6.28)(rng);
        const ephemeris::PropagationContext ctx{epoch, theta0, c % 2 == 1};
        topology::SnapshotParams params;
        params.isl_rtt_threshold = std::array{0.005, 0.010, 0.020}[c % 3];
        params.min_elevation_deg = std::uniform_real_distribution<double>(0.0, 40.0)(rng);
        const double dt = 60.0;
        const int steps = 60;

        std::vector<topology::TopologySnapshot> snaps;
        std::vector<std::set<std::pair<int, int>>> linked;
        for (int k = 0; k < steps; ++k) {
            const auto states = ephemeris::propagate_all(sats, k * dt, ctx);
            snaps.push_back(topology::build_snapshot(states, stations, params));
            const auto ref = oracle::brute_snapshot(states, stations, params.isl_rtt_threshold,
                                                    params.grazing_altitude, params.min_elevation_deg);
            if (oracle::isl_set(snaps.back()) != ref.isl || oracle::gsl_set(snaps.back()) != ref.gsl) {
                ++mismatched_steps;
            }
            isl_total += ref.isl.size();
            gsl_total += ref.gsl.size();
            linked.push_back(ref.isl);
        }
        for (const double min_d : {0.0, 120.0, 600.0}) {
            const auto got = topology::track_link_episodes(snaps, min_d, dt);
            const auto want = oracle::brute_episodes(linked, min_d, dt);
            if (got != want) {
                ++mismatched_episode_sets;
            }
            episode_total += want.size();
        }
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = mismatched_steps == 0 && mismatched_episode_sets == 0 && secs < 30.0;
    o.detail = fmt("20 constellations x 60 steps: %d snapshot mismatches, %d episode mismatches "
                   "(%zu ISLs, %zu GSLs, %zu episodes compared), %.2f s",
                   mismatched_steps, mismatched_episode_sets, isl_total, gsl_total, episode_total, secs);
    return o;
}

// ---------------------------------------------------------------------------
// 4. Nested ISL sets across thresholds

Outcome nested_thresholds()
{
    const auto epoch = parse_utc("2024-11-11T00:00:00Z");
    const std::vector<double> thresholds{0.002, 0.005, 0.010, 0.020, 0.050, 0.100};
    std::mt19937_64 rng(31);
    int violations = 0;
    int comparisons = 0;
    for (int c = 0; c < 12; ++c) {
        const auto walker = c < 10 ? random_walker(rng, 50) : ephemeris::WalkerSpec{600, 24, 1, 53.0, 550.0};
        const auto sats = ephemeris::generate_walker(walker, epoch);
        for (int k = 0; k < 5; ++k) {
            const auto states = ephemeris::propagate_all(sats, 373.0 * k, {epoch, 0.0, false});
            std::set<std::pair<int, int>> previous;
            for (const double thr : thresholds) {
                topology::SnapshotParams params;
                params.isl_rtt_threshold = thr;
                const auto current = oracle::isl_set(topology::build_snapshot(states, {}, params));
                if (!std::includes(current.begin(), current.end(), previous.begin(), previous.end())) {
                    ++violations;
                }
                ++comparisons;
                previous = current;
            }
        }
    }
    Outcome o;
    o.pass = violations == 0;
    o.detail = fmt("%d threshold pairs checked over 12 constellations, %d not nested", comparisons, violations);
    return o;
}

// ---------------------------------------------------------------------------
// 5. FED-E2 safety and liveness on random cliques

struct Scenario5 {
    int n = 0;
    std::vector<std::vector<double>> owd;
    std::vector<sim::FaultEvent> faults;
};

bool halted_at(const std::vector<sim::FaultEvent>& faults, int node, SimTime t)
{
    for (const auto& f : faults) {
        if (f.kind == sim::FaultKind::NodeHalt && f.node == node && from_seconds(f.time_s) <= t &&
            t < from_seconds(f.time_s + f.duration_s)) {
            return true;
        }
    }
    return false;
}

bool dropped_at(const std::vector<sim::FaultEvent>& faults, int a, int b, SimTime t)
{
    for (const auto& f : faults) {
        if (f.kind == sim::FaultKind::LinkDrop && std::minmax(a, b) == std::minmax(f.pair.first, f.pair.second) &&
            from_seconds(f.time_s) <= t && t < from_seconds(f.time_s + f.duration_s)) {
            return true;
        }
    }
    return false;
}

/// Members reachable from `u` at time t over live nodes and non-dropped pairs,
/// with `excluded` treated as down. Returns the component.
std::vector<int> component(const Scenario5& sc, int u, SimTime t, int excluded = -1)
{
    std::vector<char> seen(static_cast<std::size_t>(sc.n), 0);
    std::vector<int> stack{u};
    std::vector<int> out;
    seen[static_cast<std::size_t>(u)] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        out.push_back(v);
        for (int w = 0; w < sc.n; ++w) {
            if (seen[static_cast<std::size_t>(w)] || w == excluded || halted_at(sc.faults, w, t) ||
                dropped_at(sc.faults, v, w, t)) {
                continue;
            }
            seen[static_cast<std::size_t>(w)] = 1;
            stack.push_back(w);
        }
    }
    return out;
}

double max_path_delay(const Scenario5& sc, const std::vector<int>& nodes, SimTime t)
{
    const std::size_t k = nodes.size();
    std::vector<std::vector<double>> d(k, std::vector<double>(k, std::numeric_limits<double>::infinity()));
    for (std::size_t i = 0; i < k; ++i) {
        d[i][i] = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (i != j && !dropped_at(sc.faults, nodes[i], nodes[j], t)) {
                d[i][j] = sc.owd[static_cast<std::size_t>(nodes[i])][static_cast<std::size_t>(nodes[j])];
            }
        }
    }
    for (std::size_t m = 0; m < k; ++m) {
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                d[i][j] = std::min(d[i][j], d[i][m] + d[m][j]);
            }
        }
    }
    double worst = 0.0;
    for (const auto& row : d) {
        worst = std::max(worst, *std::max_element(row.begin(), row.end()));
    }
    return worst;
}

sim::KernelConfig clique_config()
{
    sim::KernelConfig cfg;
    cfg.step = std::chrono::seconds(6);
    cfg.steps = 1;
    cfg.cluster.rtt_threshold_s = 0.05;
    cfg.cluster.max_size = 12;
    cfg.trace_mode = sim::TraceMode::Full;
    return cfg;
}

sim::SnapshotFn fixed(const Scenario5& sc)
{
    auto snap = graphs::clique(0, sc.n, [&](int a, int b) {
        return sc.owd[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    });
    return [snap = std::move(snap)](int) { return snap; };
}

Scenario5 random_clique(std::mt19937_64& rng)
{
    Scenario5 sc;
    sc.n = std::uniform_int_distribution<int>(4, 12)(rng);
    std::uniform_real_distribution<double> delay(0.005, 0.010);
    sc.owd.assign(static_cast<std::size_t>(sc.n), std::vector<double>(static_cast<std::size_t>(sc.n), 0.0));
    for (int a = 0; a < sc.n; ++a) {
        for (int b = a + 1; b < sc.n; ++b) {
            const double d = delay(rng);
            sc.owd[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = d;
            sc.owd[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = d;
        }
    }
    return sc;
}

Outcome fede2_safety()
{
    const auto t0 = Clock::now();
    constexpr int kScenarios = 1000;
    int two_leader_traces = 0;
    int failovers = 0;
    int failovers_checked = 0;
    int failovers_late = 0;
    SimTime worst_latency{};
    int below_quorum_actions = 0;
    int kernel_split_brain = 0;
    std::int64_t records = 0;
    std::set<int> sizes;

    for (int seed = 0; seed < kScenarios; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(5000 + seed));
        Scenario5 sc = random_clique(rng);
        sizes.insert(sc.n);

        // who leads after formation
        auto probe = clique_config();
        probe.step = std::chrono::milliseconds(200);
        const auto formed = sim::run_control(probe, fixed(sc));
        const int leader = formed.metrics.leaders.at(0).node;

        std::uniform_real_distribution<double> u(0.0, 1.0);
        sc.faults.push_back({0.3 + 1.7 * u(rng), sim::FaultKind::NodeHalt, {}, leader, {}, 0.5 + 2.5 * u(rng)});
        const int extra = std::uniform_int_distribution<int>(0, 3)(rng);
        for (int k = 0; k < extra; ++k) {
            const double at = 0.2 + 4.3 * u(rng);
            const double dur = 0.2 + 1.8 * u(rng);
            const int a = std::uniform_int_distribution<int>(0, sc.n - 1)(rng);
            if (u(rng) < 0.5) {
                sc.faults.push_back({at, sim::FaultKind::NodeHalt, {}, a, {}, dur});
            } else {
                int b = std::uniform_int_distribution<int>(0, sc.n - 2)(rng);
                b += b >= a ? 1 : 0;
                sc.faults.push_back({at, sim::FaultKind::LinkDrop, {a, b}, 0, {}, dur});
            }
        }

        auto cfg = clique_config();
        cfg.faults = sc.faults;
        cfg.seed = static_cast<std::uint64_t>(seed);
        std::ostringstream trace;
        cfg.trace = &trace;
        const auto r = sim::run_control(cfg, fixed(sc));
        kernel_split_brain += r.metrics.split_brain_violations;
        records += r.metrics.trace_records;

        const int quorum = sc.n / 2 + 1;
        const SimTime bound = (cfg.protocol.timeout_multiplier + 1) * cfg.protocol.cycle;
        const SimTime window = cfg.protocol.effective_vote_window();

        struct LeaderSighting {
            SimTime t;
            int node;
            int cluster;
            std::int64_t term;
        };
        std::vector<LeaderSighting> sightings;
        std::map<std::pair<int, std::int64_t>, std::set<int>> leaders_by_term;
        std::istringstream lines(trace.str());
        std::string line;
        while (std::getline(lines, line)) {
            const bool leader_line = line.find("\"role_after\":\"Leader\"") != std::string::npos;
            const bool scope_line = line.find("SendHeartbeat") != std::string::npos ||
                                    line.find("BroadcastSnapshot") != std::string::npos;
            if (!leader_line && !scope_line) {
                continue;
            }
            const auto j = nlohmann::json::parse(line);
            const SimTime t{j["t_ns"].get<std::int64_t>()};
            const int node = j["node"];
            if (leader_line) {
                const int cluster = j["cluster"];
                const std::int64_t term = j["term"];
                leaders_by_term[{cluster, term}].insert(node);
                sightings.push_back({t, node, cluster, term});
            }
            if (scope_line) {
                bool scoped = false;
                for (const auto& a : j["actions"]) {
                    const std::string s = a;
                    scoped = scoped || s.rfind("SendHeartbeat", 0) == 0 || s.rfind("BroadcastSnapshot", 0) == 0;
                }
                if (scoped && static_cast<int>(component(sc, node, t).size()) < quorum) {
                    ++below_quorum_actions;
                }
            }
        }
        for (const auto& [key, nodes] : leaders_by_term) {
            if (nodes.size() > 1) {
                ++two_leader_traces;
                break;
            }
        }

        for (const auto& f : r.metrics.failovers) {
            ++failovers;
            const SimTime h = f.halt_time;
            // quiet period around the halt: no other fault starts or ends
            bool quiet = true;
            for (const auto& e : sc.faults) {
                const SimTime begin = from_seconds(e.time_s);
                const SimTime end = from_seconds(e.time_s + e.duration_s);
                const bool own = e.kind == sim::FaultKind::NodeHalt && e.node == f.old_leader && begin == h;
                if (!own && begin >= h - 2 * bound && begin <= h + bound) {
                    quiet = false;
                }
                if (end >= h - 2 * bound && end <= h + bound) {
                    quiet = false;
                }
            }
            if (!quiet) {
                continue;
            }
            // largest surviving component must hold a quorum with short paths
            std::vector<int> best;
            for (int v = 0; v < sc.n; ++v) {
                if (v == f.old_leader || halted_at(sc.faults, v, h)) {
                    continue;
                }
                auto comp = component(sc, v, h, f.old_leader);
                if (comp.size() > best.size()) {
                    best = std::move(comp);
                }
            }
            if (static_cast<int>(best.size()) < quorum || max_path_delay(sc, best, h) > to_seconds(window)) {
                continue;
            }
            ++failovers_checked;
            std::optional<SimTime> latency;
            for (const auto& s : sightings) {
                if (s.t >= h && s.node != f.old_leader && s.term > f.old_term) {
                    latency = s.t - h;
                    break;
                }
            }
            if (!latency || *latency > bound) {
                ++failovers_late;
            } else {
                worst_latency = std::max(worst_latency, *latency);
            }
        }
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = two_leader_traces == 0 && kernel_split_brain == 0 && below_quorum_actions == 0 &&
             failovers_late == 0 && failovers_checked > 0 && secs < 60.0;
    o.detail = fmt("%d scenarios (cluster sizes %d-%d, %lld trace records): %d traces with two leaders in a term, "
                   "%d cluster-scope actions below quorum, %d/%d quorum-preserving failovers over the %.0f ms "
                   "bound (worst %.1f ms, %d leader halts total), %.1f s",
                   kScenarios, *sizes.begin(), *sizes.rbegin(), static_cast<long long>(records), two_leader_traces,
                   below_quorum_actions, failovers_late, failovers_checked,
                   to_seconds((clique_config().protocol.timeout_multiplier + 1) * clique_config().protocol.cycle) * 1e3,
                   to_seconds(worst_latency) * 1e3, failovers, secs);
    return o;
}

// ---------------------------------------------------------------------------
// 6. Unsigned and tampered updates

Outcome update_rejection()
{
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int injected_invalid = 0;
    int rejected_invalid = 0;
    int applied_invalid = 0;
    int version_changes = 0;
    int undelivered = 0;
    int valid = 0;
    for (int seed = 0; seed < 300; ++seed) {
        Scenario5 sc = random_clique(rng);
        auto cfg = clique_config();
        cfg.trace_mode = sim::TraceMode::Compact;
        cfg.seed = static_cast<std::uint64_t>(seed);
        const int drops = std::uniform_int_distribution<int>(0, 2)(rng);
        for (int k = 0; k < drops; ++k) {
            const int a = std::uniform_int_distribution<int>(0, sc.n - 1)(rng);
            const int b = (a + 1 + std::uniform_int_distribution<int>(0, sc.n - 2)(rng)) % sc.n;
            cfg.faults.push_back({0.2 + 4.0 * u(rng), sim::FaultKind::LinkDrop, {a, b}, 0, {}, 0.2 + 1.5 * u(rng)});
        }
        for (int k = 0; k < 6; ++k) {
            sim::Injection inj;
            inj.time_s = 0.5 + 5.0 * u(rng);
            inj.node = std::uniform_int_distribution<int>(0, sc.n - 1)(rng);
            inj.key = "policy/" + std::to_string(k);
            inj.value = std::to_string(seed);
            const double kind = u(rng);
            inj.is_signed = kind >= 0.35;
            inj.tampered = kind >= 0.35 && kind < 0.7;
            valid += inj.is_signed && !inj.tampered ? 1 : 0;
            cfg.injections.push_back(inj);
        }
        const auto r = sim::run_control(cfg, fixed(sc));
        injected_invalid += r.metrics.injected_invalid;
        rejected_invalid += r.metrics.rejected_invalid;
        applied_invalid += r.metrics.applied_invalid;
        version_changes += r.metrics.invalid_version_changes;
        undelivered += r.metrics.undelivered_injections;
    }
    Outcome o;
    o.pass = injected_invalid > 0 && rejected_invalid == injected_invalid && applied_invalid == 0 &&
             version_changes == 0 && undelivered == 0;
    o.detail = fmt("300 scenarios: %d/%d invalid updates rejected, %d applied, %d version changes "
                   "(%d valid updates alongside, %d undelivered)",
                   rejected_invalid, injected_invalid, applied_invalid, version_changes, valid, undelivered);
    return o;
}

// ---------------------------------------------------------------------------
// 7. Link mapping and scheduling, exhaustive

struct ClassRule {
    double budget;
    bool isl;
    bool gsl;
};

ClassRule rule(linkmap::InterfaceClass c)
{
    using linkmap::InterfaceClass;
    switch (c) {
    case InterfaceClass::F1: return {0.010, true, true};
    case InterfaceClass::NG: return {0.100, false, true};
    case InterfaceClass::E2: return {0.020, true, true};
    case InterfaceClass::O1: return {1.0, false, true};
    case InterfaceClass::A1: return {1.0, false, true};
    case InterfaceClass::AUTH: return {0.020, true, true};
    }
    return {0.0, false, false};
}

int priority(linkmap::InterfaceClass c)
{
    using linkmap::InterfaceClass;
    constexpr std::array order{InterfaceClass::AUTH, InterfaceClass::E2, InterfaceClass::F1,
                               InterfaceClass::NG,   InterfaceClass::A1, InterfaceClass::O1};
    return static_cast<int>(std::find(order.begin(), order.end(), c) - order.begin());
}

bool same_link(const std::optional<topology::Link>& a, const topology::Link* b)
{
    if (!a || !b) {
        return !a && !b;
    }
    return a->kind == b->kind && a->endpoint_a == b->endpoint_a && a->endpoint_b == b->endpoint_b;
}

Outcome linkmap_exhaustive()
{
    using topology::Link;
    using topology::LinkKind;
    const std::vector<double> delays{0.004, 0.010, 0.015, 0.020, 0.100, 0.5, 1.0, 1.5};
    std::vector<Link> types;
    for (const LinkKind kind : {LinkKind::Isl, LinkKind::Gsl}) {
        for (const double d : delays) {
            Link l;
            l.kind = kind;
            l.one_way_delay = d;
            l.rtt = 2.0 * d;
            l.distance = d * topology::kSpeedOfLight;
            types.push_back(l);
        }
    }
    const auto key = [](const Link& l) {
        return std::make_tuple(l.one_way_delay, l.kind == LinkKind::Isl ? 0 : 1, l.endpoint_a, l.endpoint_b);
    };

    long decisions = 0;
    long mismatches = 0;
    long degraded_with_qualifying = 0;
    long e2_on_gsl = 0;
    std::vector<Link> links;
    std::function<void(int)> recurse = [&](int depth) {
        for (const auto cls : linkmap::kAllClasses) {
            const ClassRule cr = rule(cls);
            const Link* best_ok = nullptr;
            const Link* best_ok_isl = nullptr;
            const Link* best_any = nullptr;
            for (const Link& l : links) {
                const bool allowed = l.kind == LinkKind::Isl ? cr.isl : cr.gsl;
                if (!allowed) {
                    continue;
                }
                if (!best_any || key(l) < key(*best_any)) {
                    best_any = &l;
                }
                if (l.one_way_delay <= cr.budget) {
                    if (!best_ok || key(l) < key(*best_ok)) {
                        best_ok = &l;
                    }
                    if (l.kind == LinkKind::Isl && (!best_ok_isl || key(l) < key(*best_ok_isl))) {
                        best_ok_isl = &l;
                    }
                }
            }
            const Link* want = cls == linkmap::InterfaceClass::E2 && best_ok_isl ? best_ok_isl : best_ok;
            const bool want_degraded = !want && best_any;
            if (!want) {
                want = best_any;
            }
            linkmap::ControlMessage msg;
            msg.cls = cls;
            const auto d = linkmap::select_link(msg, links);
            ++decisions;
            if (best_ok && d.degraded) {
                ++degraded_with_qualifying;
            }
            if (cls == linkmap::InterfaceClass::E2 && best_ok_isl && d.chosen && d.chosen->kind == LinkKind::Gsl) {
                ++e2_on_gsl;
            }
            if (!same_link(d.chosen, want) || (want && d.degraded != want_degraded)) {
                ++mismatches;
            }
        }
        if (depth == 4) {
            return;
        }
        for (const Link& t : types) {
            Link l = t;
            l.endpoint_a = depth;
            l.endpoint_b = 100 + depth;
            links.push_back(l);
            recurse(depth + 1);
            links.pop_back();
        }
    };
    recurse(0);

    // schedule against a brute-force priority sort
    using linkmap::ControlMessage;
    long schedules = 0;
    long schedule_mismatches = 0;
    const auto check = [&](const std::vector<ControlMessage>& queue) {
        for (const auto mode : {linkmap::Mode::Normal, linkmap::Mode::Congested, linkmap::Mode::Eclipse}) {
            std::vector<ControlMessage> want;
            for (const auto& m : queue) {
                const bool held = mode != linkmap::Mode::Normal &&
                                  (m.cls == linkmap::InterfaceClass::A1 || m.cls == linkmap::InterfaceClass::O1);
                if (!held) {
                    want.push_back(m);
                }
            }
            std::sort(want.begin(), want.end(), [](const ControlMessage& a, const ControlMessage& b) {
                return std::make_tuple(priority(a.cls), a.created_at, a.msg_id) <
                       std::make_tuple(priority(b.cls), b.created_at, b.msg_id);
            });
            for (int cap = 0; cap <= static_cast<int>(queue.size()) + 1; ++cap) {
                const auto got = linkmap::schedule(queue, cap, mode);
                const std::size_t n = std::min<std::size_t>(want.size(), static_cast<std::size_t>(cap));
                bool ok = got.size() == n;
                for (std::size_t i = 0; ok && i < n; ++i) {
                    ok = got[i].msg_id == want[i].msg_id;
                }
                ++schedules;
                schedule_mismatches += ok ? 0 : 1;
            }
        }
    };
    std::vector<ControlMessage> queue;
    std::function<void(int)> queues = [&](int depth) {
        check(queue);
        if (depth == 5) {
            return;
        }
        for (const auto cls : linkmap::kAllClasses) {
            ControlMessage m;
            m.cls = cls;
            m.msg_id = 50 - depth;
            m.created_at = 0.001 * ((depth * 7) % 3);
            queue.push_back(m);
            queues(depth + 1);
            queue.pop_back();
        }
    };
    queues(0);
    std::mt19937_64 rng(71);
    for (int k = 0; k < 2000; ++k) {
        std::vector<ControlMessage> q(std::uniform_int_distribution<std::size_t>(0, 30)(rng));
        for (std::size_t i = 0; i < q.size(); ++i) {
            q[i].cls = linkmap::kAllClasses[std::uniform_int_distribution<std::size_t>(0, 5)(rng)];
            q[i].msg_id = std::uniform_int_distribution<int>(0, 1000)(rng);
            q[i].created_at = 0.01 * std::uniform_int_distribution<int>(0, 4)(rng);
        }
        check(q);
    }

    Outcome o;
    o.pass = mismatches == 0 && degraded_with_qualifying == 0 && e2_on_gsl == 0 && schedule_mismatches == 0;
    o.detail = fmt("%ld link decisions over all link lists up to 4: %ld degraded with a qualifying link, "
                   "%ld E2 on GSL despite a qualifying ISL, %ld oracle mismatches; %ld schedules, %ld mismatches",
                   decisions, degraded_with_qualifying, e2_on_gsl, mismatches, schedules, schedule_mismatches);
    return o;
}

// ---------------------------------------------------------------------------
// 8. Determinism of run outputs

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Compares every file of two run directories except manifest.json, whose
/// wall-clock field differs by design; for the manifest only that field may differ.
int differing_files(const fs::path& a, const fs::path& b, const std::vector<std::string>& files, int& compared)
{
    int diff = 0;
    for (const auto& f : files) {
        ++compared;
        if (f == "manifest.json") {
            auto ja = nlohmann::json::parse(slurp(a / f));
            auto jb = nlohmann::json::parse(slurp(b / f));
            ja.erase("wall_time_s");
            jb.erase("wall_time_s");
            diff += ja == jb ? 0 : 1;
        } else {
            diff += slurp(a / f) == slurp(b / f) ? 0 : 1;
        }
    }
    return diff;
}

Outcome determinism(const fs::path& scenarios)
{
    const fs::path root = work_dir() / "determinism";
    fs::remove_all(root);
    int compared = 0;
    int diff = 0;
    std::size_t trace_bytes = 0;

    const auto halt = cli::read_scenario(scenarios / "leader_halt.json");
    std::vector<std::string> files;
    for (const char* run : {"a", "b"}) {
        cli::RunOptions opt;
        opt.out = root / "cluster" / run;
        files = cli::cluster_sim(halt, opt).files;
    }
    diff += differing_files(root / "cluster" / "a", root / "cluster" / "b", files, compared);
    trace_bytes = fs::file_size(root / "cluster" / "a" / "trace.jsonl");

    // same scenario with random loss and the full trace
    auto lossy = halt;
    lossy.scenario.loss_rate = 0.02;
    lossy.scenario.trace = sim::TraceMode::Full;
    for (const char* run : {"a", "b"}) {
        cli::RunOptions opt;
        opt.out = root / "lossy" / run;
        opt.threads = run[0] == 'a' ? 1 : 2;
        files = cli::cluster_sim(lossy, opt).files;
    }
    diff += differing_files(root / "lossy" / "a", root / "lossy" / "b", files, compared);

    const auto walker = cli::read_scenario(scenarios / "walker_small.json");
    for (const char* run : {"a", "b"}) {
        cli::RunOptions opt;
        opt.out = root / "topology" / run;
        files = cli::topology(walker, opt).files;
    }
    diff += differing_files(root / "topology" / "a", root / "topology" / "b", files, compared);
    for (const char* run : {"a", "b"}) {
        cli::RunOptions opt;
        opt.out = root / "linkmap" / run;
        files = cli::linkmap_eval(halt, opt).files;
    }
    diff += differing_files(root / "linkmap" / "a", root / "linkmap" / "b", files, compared);

    Outcome o;
    o.pass = diff == 0 && trace_bytes > 0;
    o.detail = fmt("%d output files compared across reruns (cluster-sim, lossy cluster-sim with 1 vs 2 threads, "
                   "topology, linkmap-eval), %d differ; trace %zu bytes",
                   compared, diff, trace_bytes);
    return o;
}

// ---------------------------------------------------------------------------
// 9-11. Constellation-scale statistics

struct FigureRun {
    cli::TopologyReport report;
    double seconds = 0.0;
    std::string error;
};

FigureRun figure_run(const fs::path& scenarios)
{
    FigureRun fr;
    const auto t0 = Clock::now();
    try {
        const auto in = cli::read_scenario(scenarios / "starlink_12h.json");
        cli::RunOptions opt;
        opt.out = work_dir() / "starlink-12h-topology";
        opt.allow_large = true;
        fr.report = cli::topology(in, opt);
    } catch (const std::exception& e) {
        fr.error = e.what();
    }
    fr.seconds = seconds_since(t0);
    return fr;
}

double pct(const metrics::Percentiles& p, double which)
{
    for (std::size_t i = 0; i < p.p.size(); ++i) {
        if (p.p[i] == which) {
            return p.value[i];
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

Outcome episode_durations(const FigureRun& fr)
{
    Outcome o;
    if (!fr.error.empty()) {
        return {false, "topology run failed: " + fr.error};
    }
    const auto& r = fr.report;
    const bool mode_ok = r.duration_mode_s >= 180.0 && r.duration_mode_s <= 420.0;
    const bool median_ok = r.duration_median_s >= 180.0 && r.duration_median_s <= 420.0;
    o.pass = (mode_ok || median_ok) && r.episodes_over_hour > 0;
    o.detail = fmt("%s, %zu satellites: %zu episodes, mode %.1f min, median %.1f min, %zu over 60 min "
                   "(longest %.1f min)",
                   r.constellation.c_str(), r.satellites, r.episodes, r.duration_mode_s / 60.0,
                   r.duration_median_s / 60.0, r.episodes_over_hour, r.duration_max_s / 60.0);
    return o;
}

Outcome rtt_percentiles(const FigureRun& fr)
{
    Outcome o;
    if (!fr.error.empty()) {
        return {false, "topology run failed: " + fr.error};
    }
    const auto& r = fr.report;
    if (!r.isl_rtt || !r.gsl_rtt) {
        return {false, "no ISL or GSL samples"};
    }
    const std::array ps{5.0, 50.0, 95.0};
    const std::array isl_ref{4.0, 14.7, 21.7};
    const std::array gsl_ref{5.0, 12.3, 16.7};
    std::string parts;
    bool ok = true;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double isl = pct(*r.isl_rtt, ps[i]) * 1e3;
        const double gsl = pct(*r.gsl_rtt, ps[i]) * 1e3;
        ok = ok && std::abs(isl / isl_ref[i] - 1.0) <= 0.3 && std::abs(gsl / gsl_ref[i] - 1.0) <= 0.3;
        parts += fmt("P%.0f ISL %.2f (ref %.1f) GSL %.2f (ref %.1f) ms; ", ps[i], isl, isl_ref[i], gsl, gsl_ref[i]);
    }
    o.pass = ok && fr.seconds < 15.0 * 60.0;
    o.detail = parts + fmt("%s, run %.0f s", r.constellation.c_str(), fr.seconds);
    return o;
}

Outcome isl_degree(const FigureRun& fr)
{
    Outcome o;
    if (!fr.error.empty()) {
        return {false, "topology run failed: " + fr.error};
    }
    const auto it = fr.report.mean_degree.find(0.010);
    if (it == fr.report.mean_degree.end()) {
        return {false, "no 10 ms degree series"};
    }
    const double mean = it->second;
    o.pass = mean >= 100.0;
    o.detail = fmt("mean qualifying-ISL count at 10 ms RTT %.1f (%s)", mean, fr.report.constellation.c_str());
    if (const auto wide = fr.report.mean_degree.find(0.020); wide != fr.report.mean_degree.end()) {
        o.detail += fmt("; 20 ms RTT, not gated: %.1f", wide->second);
    }
    return o;
}

}  // namespace

int main(int argc, char** argv)
{
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        only.insert(std::atoi(argv[i]));
    }
    const auto want = [&](int k) { return only.empty() || only.count(k) > 0; };
    const fs::path scenarios = fs::path(LEOCTL_SOURCE_DIR) / "scenarios";

    int failed = 0;
    const auto report = [&](int k, const char* name, const std::function<Outcome()>& fn) {
        if (!want(k)) {
            return;
        }
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << k << "] " << name << ": " << o.detail << std::endl;
    };

    report(1, "kepler solver and propagation", kepler_and_propagation);
    report(2, "ground-link delays", ground_link_delays);
    report(3, "snapshots and episodes match brute force", snapshots_match_oracle);
    report(4, "ISL sets nested across thresholds", nested_thresholds);
    report(5, "FED-E2 safety and failover", fede2_safety);
    report(6, "unsigned and tampered updates rejected", update_rejection);
    report(7, "link mapping and scheduling", linkmap_exhaustive);
    report(8, "deterministic outputs", [&] { return determinism(scenarios); });

    if (want(9) || want(10) || want(11)) {
        const FigureRun fr = figure_run(scenarios);
        report(9, "ISL episode durations", [&] { return episode_durations(fr); });
        report(10, "ISL and GSL RTT percentiles", [&] { return rtt_percentiles(fr); });
        report(11, "qualifying ISL count at 10 ms", [&] { return isl_degree(fr); });
    }
    return failed == 0 ? 0 : 1;
}
