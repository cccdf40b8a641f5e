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
#include "leoctl/fede2.hpp"
#include "leoctl/linkmap.hpp"
#include "leoctl/scenario.hpp"
#include "leoctl/topology.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace leoctl::sim {

// ---------------------------------------------------------------------------
// Delivery rule

enum class DeliveryStatus { Delivered, Dropped };

struct DeliveryOutcome {
    DeliveryStatus status = DeliveryStatus::Dropped;
    SimTime at{};  // arrival time when delivered
    std::string reason;
};

inline constexpr std::string_view kDropNoLink = "no link";
inline constexpr std::string_view kDropLostInFlight = "link lost in flight";

/// Arrival = send_time + expected_delay, rounded to the nanosecond.
/// Dropped when nothing was chosen or the route is gone at either end.
DeliveryOutcome deliver(SimTime send_time, const linkmap::LinkMapDecision& decision,
                        bool present_at_send, bool present_at_arrival);

// ---------------------------------------------------------------------------
// Control-plane run

struct KernelConfig {
    SimTime step{60'000'000'000};  // topology snapshot period, multiple of the cycle
    int steps = 1;
    ClusterSpec cluster;
    fede2::ProtocolParams protocol;
    LinkmapSpec linkmap;
    std::vector<FaultEvent> faults;
    std::vector<Injection> injections;
    std::uint64_t seed = 1;
    double loss_rate = 0.0;
    TraceMode trace_mode = TraceMode::Compact;
    std::ostream* trace = nullptr;  // JSON-lines sink, optional
};

struct FailoverRecord {
    SimTime halt_time{};
    int cluster_id = 0;
    int old_leader = 0;
    std::int64_t old_term = 0;
    SimTime leader_since{};       // when old_leader took office
    bool followers_aligned = false;  // every live member followed old_leader at old_term
    int valid_survivors = 0;      // live members other than old_leader with valid credentials
    std::optional<int> new_leader;
    std::optional<SimTime> latency;  // first new Leader of that cluster minus halt_time
};

struct QuorumLossInterval {
    int cluster_id = 0;
    SimTime start{};
    std::optional<SimTime> end;
};

struct LeaderRecord {
    SimTime time{};
    int cluster_id = 0;
    std::int64_t term = 0;
    int node = 0;
};

struct RunMetrics {
    int formation_elections = 0;  // leaders installed by cluster formation
    int protocol_elections = 0;   // leaders produced by voting
    int reclusterings = 0;
    std::vector<FailoverRecord> failovers;
    std::vector<QuorumLossInterval> quorum_loss;
    std::vector<LeaderRecord> leaders;
    std::vector<SimTime> connectivity_changes;

    int injected_updates = 0;
    int injected_invalid = 0;         // unsigned or tampered
    int rejected_updates = 0;         // RejectUpdate answers to injected updates
    int rejected_invalid = 0;
    int applied_invalid = 0;          // must stay zero
    int invalid_version_changes = 0;  // must stay zero
    int undelivered_injections = 0;   // target halted or unknown

    std::int64_t messages_sent = 0;
    std::int64_t messages_delivered = 0;
    std::map<std::string, std::int64_t> messages_dropped;  // by reason
    int split_brain_violations = 0;
    int conflicting_leader_alerts = 0;
    std::int64_t trace_records = 0;
};

struct ClusterRow {
    double time_s = 0.0;
    int cluster_id = 0;
    int node_id = 0;
    fede2::Role role = fede2::Role::Follower;
    std::int64_t term = 0;
};

struct RunResult {
    RunMetrics metrics;
    std::vector<ClusterRow> cluster_rows;  // membership at every step boundary
};

using SnapshotFn = std::function<topology::TopologySnapshot(int step)>;

/// Event-driven control-plane simulation over the snapshots returned by
/// `snapshot(k)` for k in [0, steps). Deterministic for a given config.
/// Throws ConfigError before any stepping.
RunResult run_control(const KernelConfig& config, const SnapshotFn& snapshot);

/// Full scenario: propagate, snapshot and run the control plane.
RunResult run(const Scenario& scenario, std::ostream* trace = nullptr, int threads = 1);

KernelConfig kernel_config(const Scenario& scenario);

/// Snapshot source for a scenario's constellation and stations.
SnapshotFn scenario_snapshots(const Scenario& scenario, const Constellation& constellation,
                              const std::vector<ephemeris::GroundStation>& stations, int threads);

// ---------------------------------------------------------------------------
// Route candidates

/// Candidate links for a control message from src to dst over one snapshot:
/// the shortest ISL path restricted to `allowed` nodes (as one ISL-kind link
/// whose distance is the path length), and the best single-station ground
/// relay (as one GSL-kind link). `allowed` empty means all satellites.
std::vector<topology::Link> route_candidates(const topology::TopologySnapshot& snap, int src, int dst,
                                             const std::vector<int>& allowed = {});

}  // namespace leoctl::sim
