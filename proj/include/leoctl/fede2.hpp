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

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

namespace leoctl::fede2 {

using namespace std::chrono_literals;

enum class Role { Leader, Follower, Candidate, Rejoining, LocalOnly };
std::string_view to_string(Role role);

struct ProtocolParams {
    SimTime cycle = 100ms;
    int timeout_multiplier = 3;
    SimTime vote_window = SimTime::zero();  // zero means cycle / 2
    std::size_t telemetry_buffer = 32;

    SimTime effective_vote_window() const { return vote_window > SimTime::zero() ? vote_window : cycle / 2; }
    /// cycle within [10 ms, 1 s], multiplier >= 1, window < cycle. ConfigError.
    void validate() const;
};

/// Token registry shared by the nodes of one scenario. The kernel revokes
/// tokens in place; the state machine only reads it.
class CredentialRegistry {
  public:
    void grant(const std::string& token) { valid_.insert(token); }
    void revoke(const std::string& token) { valid_.erase(token); }
    bool ok(const std::string& token) const { return valid_.count(token) != 0; }

  private:
    std::unordered_set<std::string> valid_;
};

using Replica = std::map<std::string, std::string>;

struct Telemetry {
    int source = 0;
    std::int64_t seq = 0;
    std::string payload;
    friend bool operator==(const Telemetry&, const Telemetry&) = default;
};

/// Candidacy ordering: higher version, then higher score, then lower id.
struct Candidacy {
    int node = 0;
    std::int64_t version = 0;
    double score = 0.0;
    bool beats(const Candidacy& o) const;
    friend bool operator==(const Candidacy&, const Candidacy&) = default;
};

struct VoteWindow {
    std::int64_t term = 0;
    SimTime closes_at{};
    Candidacy best;
    friend bool operator==(const VoteWindow&, const VoteWindow&) = default;
};

struct NodeState {
    int node_id = 0;
    int cluster_id = 0;
    std::vector<int> members;  // full membership, ascending, includes self
    Role role = Role::Follower;
    std::int64_t term = 0;
    std::int64_t state_version = 0;
    Replica replica;
    std::optional<int> leader_id;
    SimTime last_heartbeat_seen{};  // send time of the newest accepted heartbeat
    SimTime timer_reset{};          // timeouts count from max(last_heartbeat_seen, timer_reset)
    SimTime last_heartbeat_sent{-1};
    std::deque<Telemetry> buffered_telemetry;
    std::string credential;  // own token
    std::shared_ptr<const CredentialRegistry> registry;
    double score = 0.0;

    std::int64_t voted_term = 0;
    std::optional<int> voted_for;
    std::optional<VoteWindow> window;
    std::int64_t election_term = 0;  // term of own candidacy
    std::set<int> votes;

    std::int64_t max_peer_version = 0;
    bool partitioned = false;
    std::set<int> unreachable;
    std::int64_t heartbeat_seq = 0;

    int quorum() const { return cluster::quorum_size(members.size()); }
    bool credential_ok(const std::string& token) const { return registry && registry->ok(token); }
};

// ---------------------------------------------------------------------------
// Events

/// Carried by every inter-node event.
struct Envelope {
    int cluster_id = 0;
    std::int64_t term = 0;
    std::string credential;
    int sender = 0;
};

namespace ev {
struct HeartbeatReceived {
    std::int64_t version = 0;
    SimTime sent_at{};
    std::optional<Telemetry> telemetry;
};
struct HeartbeatTimeout {};
struct ElectionCall {
    std::int64_t version = 0;
    double score = 0.0;
};
struct VoteGranted {
    int voter = 0;
};
struct ElectionWon {
    SimTime sent_at{};
};
struct SyncRequest {
    std::int64_t version = 0;
};
struct SyncSnapshot {
    std::int64_t version = 0;
    Replica replica;
};
struct PolicyUpdate {
    bool is_signed = false;
    std::string credential;
    std::string key;
    std::string value;
};
struct LinkDown {
    int peer = 0;
};
struct LinkUp {
    int peer = 0;
};
struct QuorumLost {};
struct QuorumRestored {};
struct IntegrityAlarm {
    int subject = 0;
};
/// Timer: the vote window opened for `term` has closed.
struct VoteWindowClosed {
    std::int64_t term = 0;
};
}  // namespace ev

using EventBody =
    std::variant<ev::HeartbeatReceived, ev::HeartbeatTimeout, ev::ElectionCall, ev::VoteGranted,
                 ev::ElectionWon, ev::SyncRequest, ev::SyncSnapshot, ev::PolicyUpdate, ev::LinkDown,
                 ev::LinkUp, ev::QuorumLost, ev::QuorumRestored, ev::IntegrityAlarm,
                 ev::VoteWindowClosed>;

struct ProtocolEvent {
    std::optional<Envelope> envelope;  // set for inter-node events
    EventBody body;
};

std::string_view event_name(const EventBody& body);

// ---------------------------------------------------------------------------
// Actions

namespace act {
struct SendHeartbeat {
    std::int64_t term = 0;
    std::int64_t version = 0;
};
struct StartElection {
    std::int64_t term = 0;
    std::int64_t version = 0;
    double score = 0.0;
};
struct CastVote {
    std::int64_t term = 0;
    int candidate = 0;
};
struct BroadcastSnapshot {
    std::int64_t version = 0;
};
struct ApplySnapshot {
    std::int64_t version = 0;
};
struct RejectUpdate {
    std::string reason;
};
struct DisableReconfiguration {};
struct EmitAlert {
    std::string message;
};
struct NoOp {};
struct RequestSync {
    std::int64_t version = 0;
};
struct ApplyUpdate {
    std::int64_t version = 0;
};
}  // namespace act

using Action = std::variant<act::SendHeartbeat, act::StartElection, act::CastVote,
                            act::BroadcastSnapshot, act::ApplySnapshot, act::RejectUpdate,
                            act::DisableReconfiguration, act::EmitAlert, act::NoOp,
                            act::RequestSync, act::ApplyUpdate>;

std::string describe(const Action& a);

/// SendHeartbeat and BroadcastSnapshot speak for the whole cluster.
bool is_cluster_scope(const Action& a);

struct Transition {
    NodeState state;
    std::vector<Action> actions;
};

// ---------------------------------------------------------------------------

/// Pure transition function. Throws InvariantViolation if the result would
/// lower the term or the state version.
Transition handle_event(NodeState state, const ProtocolEvent& event, SimTime now,
                        const ProtocolParams& params);

/// Leader: a new control cycle started since the last heartbeat.
/// Follower, Rejoining, Candidate: multiplier cycles passed without a heartbeat.
bool heartbeat_due(const NodeState& state, SimTime now, SimTime cycle, int timeout_multiplier = 3);

/// Periodic driver: heartbeats for the leader, timeouts for the others.
Transition tick(NodeState state, SimTime now, const ProtocolParams& params);

struct PromotionCandidate {
    int node_id = 0;
    cluster::NodeMetrics metrics;
    std::string credential;
};

/// elect_leader restricted to candidates whose credential passes. Quorum is
/// taken against the cluster's full membership. Throws QuorumNotMet.
int promote_follower(cluster::Cluster& cluster, const std::vector<PromotionCandidate>& candidates,
                     const CredentialRegistry& registry, const cluster::ScoreWeights& w);

/// Write buffered telemetry into the replica, oldest first. Bumps the
/// version if anything changed.
void replay_telemetry(NodeState& state);

}  // namespace leoctl::fede2
