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

#include "leoctl/fede2.hpp"

#include <algorithm>
#include <stdexcept>

namespace leoctl::fede2 {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string fmt_score(double s)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", s);
    return buf;
}

}  // namespace

std::string_view to_string(Role role)
{
    switch (role) {
    case Role::Leader:
        return "Leader";
    case Role::Follower:
        return "Follower";
    case Role::Candidate:
        return "Candidate";
    case Role::Rejoining:
        return "Rejoining";
    case Role::LocalOnly:
        return "LocalOnly";
    }
    return "?";
}

void ProtocolParams::validate() const
{
    if (cycle < 10ms || cycle > 1s) {
        throw ConfigError("protocol.cycle_ms must lie in [10, 1000]");
    }
    if (timeout_multiplier < 1) {
        throw ConfigError("protocol.timeout_multiplier must be >= 1");
    }
    if (vote_window < SimTime::zero() || effective_vote_window() >= cycle) {
        throw ConfigError("protocol.vote_window_ms must be positive and below the cycle");
    }
    if (telemetry_buffer == 0) {
        throw ConfigError("protocol.telemetry_buffer must be >= 1");
    }
}

bool Candidacy::beats(const Candidacy& o) const
{
    if (version != o.version) {
        return version > o.version;
    }
    if (score != o.score) {
        return score > o.score;
    }
    return node < o.node;
}

std::string_view event_name(const EventBody& body)
{
    return std::visit(
        overloaded{
            [](const ev::HeartbeatReceived&) { return "HeartbeatReceived"; },
            [](const ev::HeartbeatTimeout&) { return "HeartbeatTimeout"; },
            [](const ev::ElectionCall&) { return "ElectionCall"; },
            [](const ev::VoteGranted&) { return "VoteGranted"; },
            [](const ev::ElectionWon&) { return "ElectionWon"; },
            [](const ev::SyncRequest&) { return "SyncRequest"; },
            [](const ev::SyncSnapshot&) { return "SyncSnapshot"; },
            [](const ev::PolicyUpdate&) { return "PolicyUpdate"; },
            [](const ev::LinkDown&) { return "LinkDown"; },
            [](const ev::LinkUp&) { return "LinkUp"; },
            [](const ev::QuorumLost&) { return "QuorumLost"; },
            [](const ev::QuorumRestored&) { return "QuorumRestored"; },
            [](const ev::IntegrityAlarm&) { return "IntegrityAlarm"; },
            [](const ev::VoteWindowClosed&) { return "VoteWindowClosed"; },
        },
        body);
}

std::string describe(const Action& a)
{
    return std::visit(
        overloaded{
            [](const act::SendHeartbeat& x) {
                return "SendHeartbeat(term=" + std::to_string(x.term) +
                       ",v=" + std::to_string(x.version) + ")";
            },
            [](const act::StartElection& x) {
                return "StartElection(term=" + std::to_string(x.term) +
                       ",v=" + std::to_string(x.version) + ",score=" + fmt_score(x.score) + ")";
            },
            [](const act::CastVote& x) {
                return "CastVote(term=" + std::to_string(x.term) +
                       ",candidate=" + std::to_string(x.candidate) + ")";
            },
            [](const act::BroadcastSnapshot& x) {
                return "BroadcastSnapshot(v=" + std::to_string(x.version) + ")";
            },
            [](const act::ApplySnapshot& x) {
                return "ApplySnapshot(v=" + std::to_string(x.version) + ")";
            },
            [](const act::RejectUpdate& x) { return "RejectUpdate(" + x.reason + ")"; },
            [](const act::DisableReconfiguration&) { return std::string("DisableReconfiguration"); },
            [](const act::EmitAlert& x) { return "EmitAlert(" + x.message + ")"; },
            [](const act::NoOp&) { return std::string("NoOp"); },
            [](const act::RequestSync& x) {
                return "RequestSync(v=" + std::to_string(x.version) + ")";
            },
            [](const act::ApplyUpdate& x) {
                return "ApplyUpdate(v=" + std::to_string(x.version) + ")";
            },
        },
        a);
}

bool is_cluster_scope(const Action& a)
{
    return std::holds_alternative<act::SendHeartbeat>(a) ||
           std::holds_alternative<act::BroadcastSnapshot>(a);
}

void replay_telemetry(NodeState& s)
{
    bool changed = false;
    for (const Telemetry& t : s.buffered_telemetry) {
        std::string& slot = s.replica["telemetry/" + std::to_string(t.source)];
        if (slot != t.payload) {
            slot = t.payload;
            changed = true;
        }
    }
    s.buffered_telemetry.clear();
    if (changed) {
        ++s.state_version;
    }
}

// ---------------------------------------------------------------------------

namespace {

class Machine {
  public:
    Machine(NodeState& s, SimTime now, const ProtocolParams& p) : s_(s), now_(now), p_(p) {}

    std::vector<Action> run(const ProtocolEvent& e)
    {
        const Envelope* env = e.envelope ? &*e.envelope : nullptr;
        if (env) {
            if (env->cluster_id != s_.cluster_id) {
                return {act::NoOp{}};
            }
            if (env->term < s_.term) {
                return {act::RejectUpdate{"stale term"}};
            }
            if (!s_.credential_ok(env->credential)) {
                return {act::RejectUpdate{"credential"}};
            }
        }
        return std::visit([&](const auto& body) { return on(body, env); }, e.body);
    }

    std::vector<Action> on_tick()
    {
        switch (s_.role) {
        case Role::Leader:
            if (heartbeat_due(s_, now_, p_.cycle, p_.timeout_multiplier)) {
                return send_heartbeat();
            }
            return {};
        case Role::Follower:
        case Role::Rejoining:
        case Role::Candidate:
            if (heartbeat_due(s_, now_, p_.cycle, p_.timeout_multiplier)) {
                return on(ev::HeartbeatTimeout{}, nullptr);
            }
            return {};
        case Role::LocalOnly:
            return {};
        }
        return {};
    }

  private:
    SimTime lease() const { return p_.cycle * p_.timeout_multiplier; }

    std::vector<Action> send_heartbeat()
    {
        ++s_.heartbeat_seq;
        s_.last_heartbeat_sent = now_;
        s_.last_heartbeat_seen = now_;
        return {act::SendHeartbeat{s_.term, s_.state_version}};
    }

    void clear_election()
    {
        s_.window.reset();
        s_.votes.clear();
    }

    void follow(int leader, std::int64_t term)
    {
        if (s_.role == Role::Candidate || s_.role == Role::Leader) {
            s_.role = Role::Follower;
        }
        s_.term = term;
        s_.leader_id = leader;
        clear_election();
    }

    void record_heartbeat(SimTime sent_at, const std::optional<Telemetry>& t)
    {
        s_.last_heartbeat_seen = std::max(s_.last_heartbeat_seen, sent_at);
        if (t) {
            s_.buffered_telemetry.push_back(*t);
            while (s_.buffered_telemetry.size() > p_.telemetry_buffer) {
                s_.buffered_telemetry.pop_front();
            }
        }
    }

    std::vector<Action> maybe_win()
    {
        if (s_.role != Role::Candidate || static_cast<int>(s_.votes.size()) < s_.quorum()) {
            return {};
        }
        s_.role = Role::Leader;
        s_.term = s_.election_term;
        s_.leader_id = s_.node_id;
        s_.voted_term = std::max(s_.voted_term, s_.election_term);
        s_.voted_for = s_.node_id;
        s_.partitioned = false;
        clear_election();
        replay_telemetry(s_);
        std::vector<Action> out = send_heartbeat();
        out.push_back(act::BroadcastSnapshot{s_.state_version});
        return out;
    }

    // -- events --------------------------------------------------------------

    std::vector<Action> on(const ev::HeartbeatTimeout&, const Envelope*)
    {
        if (s_.role != Role::Follower && s_.role != Role::Rejoining && s_.role != Role::Candidate) {
            return {act::NoOp{}};
        }
        if (!s_.credential_ok(s_.credential)) {
            s_.timer_reset = now_;
            return {act::NoOp{}};
        }
        std::int64_t t = std::max(s_.term, s_.voted_term);
        if (s_.window) {
            t = std::max(t, s_.window->term);
        }
        ++t;
        s_.role = Role::Candidate;
        s_.election_term = t;
        s_.votes.clear();
        s_.leader_id.reset();
        s_.timer_reset = now_;
        s_.window = VoteWindow{t, now_ + p_.effective_vote_window(),
                               Candidacy{s_.node_id, s_.state_version, s_.score}};
        return {act::StartElection{t, s_.state_version, s_.score}};
    }

    std::vector<Action> on(const ev::ElectionCall& e, const Envelope* env)
    {
        if (!env) {
            return {act::NoOp{}};
        }
        const std::int64_t t = env->term;
        const Candidacy cand{env->sender, e.version, e.score};
        if (s_.voted_term == t && s_.voted_for == env->sender) {
            return {act::CastVote{t, env->sender}};
        }
        const bool lease_active = (s_.role == Role::Follower || s_.role == Role::Rejoining) &&
                                  now_ - s_.last_heartbeat_seen < lease();
        if (s_.role == Role::Leader || s_.role == Role::LocalOnly || lease_active ||
            s_.voted_term >= t || e.version < s_.state_version ||
            (s_.window && s_.window->term > t)) {
            return {act::NoOp{}};
        }
        if (!s_.window || s_.window->term < t) {
            if (s_.role == Role::Candidate) {
                s_.votes.clear();  // own candidacy is for an older term
            }
            s_.window = VoteWindow{t, now_ + p_.effective_vote_window(), cand};
        } else if (cand.beats(s_.window->best)) {
            s_.window->best = cand;
        }
        return {act::NoOp{}};
    }

    std::vector<Action> on(const ev::VoteWindowClosed& e, const Envelope*)
    {
        if (!s_.window || s_.window->term != e.term) {
            return {act::NoOp{}};
        }
        const Candidacy best = s_.window->best;
        s_.window.reset();
        if (s_.voted_term >= e.term) {
            return {act::NoOp{}};
        }
        s_.voted_term = e.term;
        s_.voted_for = best.node;
        std::vector<Action> out{act::CastVote{e.term, best.node}};
        if (best.node == s_.node_id) {
            if (s_.role == Role::Candidate && s_.election_term == e.term) {
                s_.votes.insert(s_.node_id);
                const auto won = maybe_win();
                out.insert(out.end(), won.begin(), won.end());
            }
        } else {
            if (s_.role == Role::Candidate) {
                s_.role = Role::Follower;
                s_.votes.clear();
            }
            s_.timer_reset = now_;
        }
        return out;
    }

    std::vector<Action> on(const ev::VoteGranted& e, const Envelope* env)
    {
        if (!env || env->sender != e.voter || s_.role != Role::Candidate ||
            env->term != s_.election_term) {
            return {act::NoOp{}};
        }
        s_.votes.insert(e.voter);
        auto won = maybe_win();
        if (won.empty()) {
            won.push_back(act::NoOp{});
        }
        return won;
    }

    std::vector<Action> leader_contact(const Envelope& env, std::int64_t version, SimTime sent_at,
                                       const std::optional<Telemetry>& telemetry)
    {
        switch (s_.role) {
        case Role::Leader:
            if (env.term == s_.term) {
                return {act::RejectUpdate{"conflicting leader"},
                        act::EmitAlert{"two leaders claim term " + std::to_string(s_.term)}};
            }
            follow(env.sender, env.term);
            s_.timer_reset = now_;
            break;
        case Role::Candidate:
        case Role::Follower:
            follow(env.sender, env.term);
            break;
        case Role::Rejoining:
            s_.term = env.term;
            s_.leader_id = env.sender;
            if (version <= s_.state_version) {
                s_.role = Role::Follower;
            }
            break;
        case Role::LocalOnly:
            s_.term = env.term;
            s_.leader_id = env.sender;
            record_heartbeat(sent_at, telemetry);
            return {act::NoOp{}};
        }
        record_heartbeat(sent_at, telemetry);
        if (version > s_.state_version) {
            return {act::RequestSync{s_.state_version}};
        }
        return {act::NoOp{}};
    }

    std::vector<Action> on(const ev::HeartbeatReceived& e, const Envelope* env)
    {
        if (!env) {
            return {act::NoOp{}};
        }
        return leader_contact(*env, e.version, e.sent_at, e.telemetry);
    }

    std::vector<Action> on(const ev::ElectionWon& e, const Envelope* env)
    {
        if (!env) {
            return {act::NoOp{}};
        }
        return leader_contact(*env, s_.state_version, e.sent_at, std::nullopt);
    }

    std::vector<Action> on(const ev::SyncRequest& e, const Envelope*)
    {
        if (s_.role != Role::Leader) {
            return {act::NoOp{}};
        }
        s_.max_peer_version = std::max(s_.max_peer_version, e.version);
        if (s_.max_peer_version > s_.state_version) {
            // a peer holds a newer version than ours; restamp so ours wins
            s_.state_version = s_.max_peer_version + 1;
        }
        return {act::BroadcastSnapshot{s_.state_version}};
    }

    std::vector<Action> on(const ev::SyncSnapshot& e, const Envelope* env)
    {
        if (!env) {
            return {act::NoOp{}};
        }
        switch (s_.role) {
        case Role::LocalOnly:
            return {act::RejectUpdate{"reconfiguration disabled"}};
        case Role::Leader:
            if (env->term == s_.term) {
                return {act::RejectUpdate{"conflicting leader"}};
            }
            follow(env->sender, env->term);
            s_.timer_reset = now_;
            break;
        case Role::Rejoining:
            s_.term = env->term;
            s_.leader_id = env->sender;
            s_.role = Role::Follower;
            if (e.version >= s_.state_version) {
                s_.replica = e.replica;
                s_.state_version = e.version;
                return {act::ApplySnapshot{e.version}};
            }
            return {act::RejectUpdate{"stale version"}};
        case Role::Candidate:
        case Role::Follower:
            follow(env->sender, env->term);
            break;
        }
        if (e.version > s_.state_version) {
            s_.replica = e.replica;
            s_.state_version = e.version;
            return {act::ApplySnapshot{e.version}};
        }
        if (e.version < s_.state_version) {
            return {act::RejectUpdate{"stale version"}};
        }
        return {act::NoOp{}};
    }

    std::vector<Action> on(const ev::PolicyUpdate& e, const Envelope*)
    {
        if (!e.is_signed || !s_.credential_ok(e.credential)) {
            return {act::RejectUpdate{"credential"}};
        }
        if (s_.role == Role::LocalOnly) {
            return {act::RejectUpdate{"reconfiguration disabled"}};
        }
        if (s_.role != Role::Leader) {
            return {act::RejectUpdate{"not leader"}};
        }
        s_.state_version = std::max(s_.state_version, s_.max_peer_version) + 1;
        s_.replica[e.key] = e.value;
        return {act::ApplyUpdate{s_.state_version}, act::BroadcastSnapshot{s_.state_version}};
    }

    std::vector<Action> on(const ev::LinkDown& e, const Envelope*)
    {
        s_.unreachable.insert(e.peer);
        return {act::NoOp{}};
    }

    std::vector<Action> on(const ev::LinkUp& e, const Envelope*)
    {
        s_.unreachable.erase(e.peer);
        if (!s_.partitioned || s_.role == Role::LocalOnly) {
            return {act::NoOp{}};
        }
        s_.partitioned = false;
        s_.role = Role::Rejoining;
        s_.timer_reset = now_;
        clear_election();
        return {act::RequestSync{s_.state_version}};
    }

    std::vector<Action> on(const ev::QuorumLost&, const Envelope*)
    {
        s_.partitioned = true;
        if (s_.role == Role::LocalOnly) {
            return {act::NoOp{}};
        }
        s_.role = Role::LocalOnly;
        clear_election();
        return {act::DisableReconfiguration{}};
    }

    std::vector<Action> on(const ev::QuorumRestored&, const Envelope*)
    {
        if (s_.role != Role::LocalOnly) {
            return {act::NoOp{}};
        }
        s_.role = Role::Follower;
        s_.timer_reset = now_;
        return {act::NoOp{}};
    }

    std::vector<Action> on(const ev::IntegrityAlarm& e, const Envelope*)
    {
        if (e.subject == s_.node_id && s_.role == Role::Leader) {
            s_.role = Role::Follower;
            s_.leader_id.reset();
            s_.timer_reset = now_;
            return {act::EmitAlert{"integrity alarm on acting leader; stepped down"}};
        }
        return {act::EmitAlert{"integrity alarm for node " + std::to_string(e.subject)}};
    }

    NodeState& s_;
    SimTime now_;
    const ProtocolParams& p_;
};

void check_monotone(const NodeState& s, std::int64_t term, std::int64_t version)
{
    if (s.term < term) {
        throw InvariantViolation("node " + std::to_string(s.node_id) + ": term regressed from " +
                                 std::to_string(term) + " to " + std::to_string(s.term));
    }
    if (s.state_version < version) {
        throw InvariantViolation("node " + std::to_string(s.node_id) +
                                 ": state version regressed from " + std::to_string(version) +
                                 " to " + std::to_string(s.state_version));
    }
}

}  // namespace

Transition handle_event(NodeState state, const ProtocolEvent& event, SimTime now,
                        const ProtocolParams& params)
{
    const auto term = state.term;
    const auto version = state.state_version;
    Machine m(state, now, params);
    auto actions = m.run(event);
    check_monotone(state, term, version);
    return {std::move(state), std::move(actions)};
}

bool heartbeat_due(const NodeState& state, SimTime now, SimTime cycle, int timeout_multiplier)
{
    switch (state.role) {
    case Role::Leader:
        return state.last_heartbeat_sent < SimTime::zero() ||
               now.count() / cycle.count() > state.last_heartbeat_sent.count() / cycle.count();
    case Role::Follower:
    case Role::Rejoining:
    case Role::Candidate:
        return now - std::max(state.last_heartbeat_seen, state.timer_reset) >=
               cycle * timeout_multiplier;
    case Role::LocalOnly:
        return false;
    }
    return false;
}

Transition tick(NodeState state, SimTime now, const ProtocolParams& params)
{
    const auto term = state.term;
    const auto version = state.state_version;
    Machine m(state, now, params);
    auto actions = m.on_tick();
    check_monotone(state, term, version);
    return {std::move(state), std::move(actions)};
}

int promote_follower(cluster::Cluster& cluster, const std::vector<PromotionCandidate>& candidates,
                     const CredentialRegistry& registry, const cluster::ScoreWeights& w)
{
    cluster::Cluster work = cluster;
    work.synchronized.clear();
    std::map<int, cluster::NodeMetrics> metrics;
    for (const auto& c : candidates) {
        if (!registry.ok(c.credential) ||
            !std::binary_search(cluster.members.begin(), cluster.members.end(), c.node_id)) {
            continue;
        }
        work.synchronized.push_back(c.node_id);
        metrics[c.node_id] = c.metrics;
    }
    std::sort(work.synchronized.begin(), work.synchronized.end());
    work.synchronized.erase(std::unique(work.synchronized.begin(), work.synchronized.end()),
                            work.synchronized.end());
    work.quorum_size = cluster::quorum_size(cluster.members.size());
    const int leader = cluster::elect_leader(work, metrics, w);
    cluster.leader = leader;
    cluster.term = work.term;
    return leader;
}

}  // namespace leoctl::fede2
