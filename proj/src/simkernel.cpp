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

#include "leoctl/simkernel.hpp"

#include "json.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <queue>
#include <random>
#include <set>
#include <unordered_map>
#include <variant>

namespace leoctl::sim {

using fede2::Role;
using linkmap::InterfaceClass;
using topology::Link;
using topology::LinkKind;
using topology::TopologySnapshot;

DeliveryOutcome deliver(SimTime send_time, const linkmap::LinkMapDecision& decision,
                        bool present_at_send, bool present_at_arrival)
{
    if (!decision.chosen || !present_at_send) {
        return {DeliveryStatus::Dropped, {}, std::string(kDropNoLink)};
    }
    if (!present_at_arrival) {
        return {DeliveryStatus::Dropped, {}, std::string(kDropLostInFlight)};
    }
    const auto ns = static_cast<std::int64_t>(std::llround(decision.expected_delay * 1e9));
    return {DeliveryStatus::Delivered, send_time + SimTime{ns}, {}};
}

namespace {

std::uint64_t pair_key(int a, int b)
{
    if (a > b) {
        std::swap(a, b);
    }
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

// Snapshot plus lookup tables.
struct Geometry {
    TopologySnapshot snap;
    std::unordered_map<std::uint64_t, double> edges;
    std::unordered_map<int, std::vector<std::pair<int, double>>> stations_of;  // sat -> (gs, m)

    explicit Geometry(TopologySnapshot s) : snap(std::move(s))
    {
        for (std::size_t i = 0; i < snap.sat_ids.size(); ++i) {
            for (const Link& l : snap.isl_adjacency[i]) {
                if (l.endpoint_a < l.endpoint_b) {
                    edges.emplace(pair_key(l.endpoint_a, l.endpoint_b), l.distance);
                }
            }
        }
        for (const Link& l : snap.gsl_links) {
            stations_of[l.endpoint_b].emplace_back(l.endpoint_a, l.distance);
        }
        for (auto& [_, v] : stations_of) {
            std::sort(v.begin(), v.end());
        }
    }

    const std::vector<std::pair<int, double>>& stations(int sat) const
    {
        static const std::vector<std::pair<int, double>> none;
        const auto it = stations_of.find(sat);
        return it == stations_of.end() ? none : it->second;
    }

    std::optional<double> edge(int a, int b) const
    {
        const auto it = edges.find(pair_key(a, b));
        if (it == edges.end()) {
            return std::nullopt;
        }
        return it->second;
    }
};

struct Route {
    LinkKind kind = LinkKind::Isl;
    std::vector<int> path;  // ISL: src ... dst
    int station = -1;       // GSL relay
    Link link;
};

// Shortest ISL path and best single-station relay between src and dst.
template <class NodeOk, class EdgeOk, class StationOk>
std::vector<Route> find_routes(const Geometry& g, int src, int dst, NodeOk node_ok, EdgeOk edge_ok,
                               StationOk station_ok)
{
    std::vector<Route> out;
    const auto si = g.snap.index_of(src);
    const auto di = g.snap.index_of(dst);
    if (!si || !di || src == dst) {
        return out;
    }
    // Dijkstra over satellite indices; ties settle on the lower index.
    const std::size_t n = g.snap.sat_ids.size();
    std::unordered_map<std::size_t, double> dist;
    std::unordered_map<std::size_t, std::size_t> prev;
    using QItem = std::pair<double, std::size_t>;
    std::priority_queue<QItem, std::vector<QItem>, std::greater<>> pq;
    dist[*si] = 0.0;
    pq.push({0.0, *si});
    bool found = false;
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) {
            continue;
        }
        if (u == *di) {
            found = true;
            break;
        }
        const int uid = g.snap.sat_ids[u];
        for (const Link& l : g.snap.isl_adjacency[u]) {
            const int vid = l.endpoint_b;
            if (!node_ok(vid) || !edge_ok(uid, vid)) {
                continue;
            }
            const std::size_t v = *g.snap.index_of(vid);
            const double nd = d + l.distance;
            const auto it = dist.find(v);
            if (it == dist.end() || nd < it->second) {
                dist[v] = nd;
                prev[v] = u;
                pq.push({nd, v});
            }
        }
    }
    (void)n;
    if (found) {
        Route r;
        r.kind = LinkKind::Isl;
        for (std::size_t v = *di;; v = prev.at(v)) {
            r.path.push_back(g.snap.sat_ids[v]);
            if (v == *si) {
                break;
            }
        }
        std::reverse(r.path.begin(), r.path.end());
        r.link = Link::make(LinkKind::Isl, src, dst, dist.at(*di));
        out.push_back(std::move(r));
    }
    const auto& a = g.stations(src);
    const auto& b = g.stations(dst);
    std::optional<std::pair<double, int>> best;
    std::size_t j = 0;
    for (const auto& [gs, da] : a) {
        while (j < b.size() && b[j].first < gs) {
            ++j;
        }
        if (j < b.size() && b[j].first == gs && station_ok(gs)) {
            const double total = da + b[j].second;
            if (!best || total < best->first) {
                best = std::make_pair(total, gs);
            }
        }
    }
    if (best) {
        Route r;
        r.kind = LinkKind::Gsl;
        r.station = best->second;
        r.link = Link::make(LinkKind::Gsl, src, dst, best->first);
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------

struct Message {
    std::uint64_t id = 0;
    int src = 0;
    int dst = 0;
    InterfaceClass cls = InterfaceClass::E2;
    SimTime sent{};
    Route route;
    fede2::ProtocolEvent event;
    int injection = -1;  // index into the injection list
};

enum class ItemKind { Step, FaultEnd, FaultBegin, Inject, Control, Deliver, WindowClose, Tick };

struct Item {
    SimTime at{};
    int node = -1;  // -1: kernel
    int prio = 0;
    std::uint64_t seq = 0;
    ItemKind kind = ItemKind::Tick;
    int index = 0;               // step, fault or injection index
    std::int64_t term = 0;       // WindowClose
    std::shared_ptr<Message> msg;                 // Deliver, and Control for injections
    std::shared_ptr<fede2::ProtocolEvent> event;  // Control
};

struct ItemAfter {
    bool operator()(const Item& a, const Item& b) const
    {
        return std::tie(a.at, a.node, a.prio, a.seq) > std::tie(b.at, b.node, b.prio, b.seq);
    }
};

int item_prio(ItemKind k)
{
    switch (k) {
    case ItemKind::Step:
        return 0;
    case ItemKind::FaultEnd:
        return 1;
    case ItemKind::FaultBegin:
        return 2;
    case ItemKind::Inject:
        return 3;
    case ItemKind::Control:
        return 0;
    case ItemKind::Deliver:
        return 1;
    case ItemKind::WindowClose:
        return 2;
    case ItemKind::Tick:
        return 3;
    }
    return 9;
}

struct Node {
    fede2::NodeState st;
    int halt_depth = 0;
    std::set<int> reach;  // live cluster peers reachable now
    bool has_quorum = true;
    SimTime leader_since{};
    std::int64_t cycle_index = -1;
    int sent_in_cycle = 0;

    bool halted() const { return halt_depth > 0; }
};

std::string token_for(int node) { return "node-" + std::to_string(node); }

constexpr const char* kSmoToken = "smo";

class Kernel {
  public:
    Kernel(const KernelConfig& cfg, const SnapshotFn& fn) : cfg_(cfg), snapshot_fn_(fn), rng_(cfg.seed)
    {
    }

    RunResult run()
    {
        validate_config();
        end_ = cfg_.step * cfg_.steps;
        geo_ = std::make_unique<Geometry>(snapshot_fn_(0));
        validate_ids();
        init_nodes();
        recluster(all_ids(), SimTime::zero(), false);
        record_rows(SimTime::zero());
        for (int k = 1; k < cfg_.steps; ++k) {
            push_kernel(cfg_.step * k, ItemKind::Step, k);
        }
        for (std::size_t i = 0; i < cfg_.faults.size(); ++i) {
            const auto& f = cfg_.faults[i];
            push_kernel(from_seconds(f.time_s), ItemKind::FaultBegin, static_cast<int>(i));
            if (f.kind != FaultKind::CredentialRevoke) {
                push_kernel(from_seconds(f.time_s + f.duration_s), ItemKind::FaultEnd, static_cast<int>(i));
            }
        }
        for (std::size_t i = 0; i < cfg_.injections.size(); ++i) {
            push_kernel(from_seconds(cfg_.injections[i].time_s), ItemKind::Inject, static_cast<int>(i));
        }
        for (const auto& [id, _] : nodes_) {
            push_node(SimTime::zero(), id, ItemKind::Tick);
        }
        while (!queue_.empty() && queue_.top().at < end_) {
            Item it = queue_.top();
            queue_.pop();
            dispatch(it);
        }
        for (auto& q : result_.metrics.quorum_loss) {
            if (!q.end) {
                q.end = end_;
            }
        }
        return std::move(result_);
    }

  private:
    // -- setup -------------------------------------------------------------

    void validate_config() const
    {
        cfg_.protocol.validate();
        cfg_.cluster.weights.validate();
        if (cfg_.steps < 1) {
            throw ConfigError("kernel: steps must be >= 1");
        }
        if (cfg_.step <= SimTime::zero() || cfg_.step.count() % cfg_.protocol.cycle.count() != 0) {
            throw ConfigError("kernel: step must be a positive multiple of the control cycle");
        }
        if (cfg_.cluster.max_size < 1) {
            throw ConfigError("cluster.max_size: must be >= 1");
        }
        if (!(cfg_.loss_rate >= 0.0 && cfg_.loss_rate < 1.0)) {
            throw ConfigError("loss_rate: must lie in [0, 1)");
        }
        if (cfg_.linkmap.capacity && *cfg_.linkmap.capacity < 0) {
            throw ConfigError("linkmap.capacity: must be >= 0");
        }
    }

    void validate_ids() const
    {
        auto known = [&](int id) { return geo_->snap.index_of(id).has_value(); };
        for (std::size_t i = 0; i < cfg_.faults.size(); ++i) {
            const auto& f = cfg_.faults[i];
            const std::string p = "faults[" + std::to_string(i) + "]";
            if ((f.kind == FaultKind::NodeHalt || f.kind == FaultKind::CredentialRevoke) && !known(f.node)) {
                throw ConfigError(p + ".node: unknown satellite " + std::to_string(f.node));
            }
            if (f.kind == FaultKind::LinkDrop && (!known(f.pair.first) || !known(f.pair.second))) {
                throw ConfigError(p + ".pair: unknown satellite");
            }
            if (f.kind != FaultKind::CredentialRevoke && !(f.duration_s > 0.0)) {
                throw ConfigError(p + ".duration_s: must be > 0");
            }
        }
        for (std::size_t i = 0; i < cfg_.injections.size(); ++i) {
            const auto& in = cfg_.injections[i];
            const int target = in.node ? *in.node : in.leader_of.value_or(-1);
            if (!known(target)) {
                throw ConfigError("injections[" + std::to_string(i) + "]: unknown satellite " +
                                  std::to_string(target));
            }
        }
    }

    std::vector<int> all_ids() const { return geo_->snap.sat_ids; }

    void init_nodes()
    {
        registry_ = std::make_shared<fede2::CredentialRegistry>();
        registry_->grant(kSmoToken);
        for (int id : geo_->snap.sat_ids) {
            registry_->grant(token_for(id));
            Node n;
            n.st.node_id = id;
            n.st.credential = token_for(id);
            n.st.registry = registry_;
            nodes_.emplace(id, std::move(n));
        }
    }

    // -- queue -------------------------------------------------------------

    void push(Item it)
    {
        it.prio = item_prio(it.kind);
        it.seq = seq_++;
        queue_.push(std::move(it));
    }

    void push_kernel(SimTime at, ItemKind kind, int index)
    {
        Item it;
        it.at = at;
        it.node = -1;
        it.kind = kind;
        it.index = index;
        push(std::move(it));
    }

    void push_node(SimTime at, int node, ItemKind kind)
    {
        Item it;
        it.at = at;
        it.node = node;
        it.kind = kind;
        push(std::move(it));
    }

    void push_control(SimTime at, int node, fede2::EventBody body)
    {
        Item it;
        it.at = at;
        it.node = node;
        it.kind = ItemKind::Control;
        it.event = std::make_shared<fede2::ProtocolEvent>(fede2::ProtocolEvent{std::nullopt, std::move(body)});
        push(std::move(it));
    }

    void dispatch(const Item& it)
    {
        switch (it.kind) {
        case ItemKind::Step:
            on_step(it.at, it.index);
            break;
        case ItemKind::FaultBegin:
            on_fault(it.at, it.index, true);
            break;
        case ItemKind::FaultEnd:
            on_fault(it.at, it.index, false);
            break;
        case ItemKind::Inject:
            on_inject(it.at, it.index);
            break;
        case ItemKind::Control:
            handle(it.node, it.at, it.event.get(), it.msg.get(), false);
            break;
        case ItemKind::Deliver:
            on_deliver(it);
            break;
        case ItemKind::WindowClose: {
            const fede2::ProtocolEvent ev{std::nullopt, fede2::ev::VoteWindowClosed{it.term}};
            handle(it.node, it.at, &ev, nullptr, false);
            break;
        }
        case ItemKind::Tick:
            handle(it.node, it.at, nullptr, nullptr, true);
            if (it.at + cfg_.protocol.cycle < end_) {
                push_node(it.at + cfg_.protocol.cycle, it.node, ItemKind::Tick);
            }
            break;
        }
    }

    // -- connectivity ------------------------------------------------------

    bool edge_up(int a, int b) const { return !dropped_.count(pair_key(a, b)); }
    bool station_up(int gs) const { return !blackout_.count(gs); }

    bool live(int id) const { return !nodes_.at(id).halted(); }

    // Reachable live peers of every live member of `members`.
    std::map<int, std::set<int>> reach_of(const std::vector<int>& members) const
    {
        std::map<int, std::set<int>> out;
        std::set<int> in;
        for (int m : members) {
            if (live(m)) {
                in.insert(m);
            }
        }
        // ISL components inside the member set
        std::map<int, int> comp;
        int next = 0;
        for (int s : in) {
            if (comp.count(s)) {
                continue;
            }
            std::vector<int> stack{s};
            comp[s] = next;
            while (!stack.empty()) {
                const int u = stack.back();
                stack.pop_back();
                const auto ui = geo_->snap.index_of(u);
                for (const Link& l : geo_->snap.isl_adjacency[*ui]) {
                    const int v = l.endpoint_b;
                    if (in.count(v) && !comp.count(v) && edge_up(u, v)) {
                        comp[v] = next;
                        stack.push_back(v);
                    }
                }
            }
            ++next;
        }
        std::map<int, std::set<int>> seen_by;  // station -> live members seeing it
        for (int m : in) {
            for (const auto& [gs, _] : geo_->stations(m)) {
                if (station_up(gs)) {
                    seen_by[gs].insert(m);
                }
            }
        }
        for (int u : in) {
            auto& r = out[u];
            for (int v : in) {
                if (v != u && comp.at(v) == comp.at(u)) {
                    r.insert(v);
                }
            }
            for (const auto& [gs, _] : geo_->stations(u)) {
                if (station_up(gs)) {
                    for (int v : seen_by[gs]) {
                        if (v != u) {
                            r.insert(v);
                        }
                    }
                }
            }
        }
        return out;
    }

    bool cluster_has_quorum(int cid) const
    {
        const auto& c = clusters_.at(cid);
        for (int m : c.members) {
            const Node& n = nodes_.at(m);
            if (!n.halted() && n.has_quorum) {
                return true;
            }
        }
        return false;
    }

    void update_quorum_interval(int cid, SimTime now)
    {
        const bool ok = cluster_has_quorum(cid);
        auto open = open_loss_.find(cid);
        if (!ok && open == open_loss_.end()) {
            open_loss_[cid] = result_.metrics.quorum_loss.size();
            result_.metrics.quorum_loss.push_back({cid, now, std::nullopt});
        } else if (ok && open != open_loss_.end()) {
            result_.metrics.quorum_loss[open->second].end = now;
            open_loss_.erase(open);
        }
    }

    // Recompute reachability; queue LinkDown, Quorum*, LinkUp per node.
    void refresh(SimTime now)
    {
        ++conn_version_;
        route_cache_.clear();
        result_.metrics.connectivity_changes.push_back(now);
        for (const auto& [cid, c] : clusters_) {
            const auto r = reach_of(c.members);
            const int q = cluster::quorum_size(c.members.size());
            for (int m : c.members) {
                Node& n = nodes_.at(m);
                if (n.halted()) {
                    continue;
                }
                const std::set<int>& now_reach = r.at(m);
                const bool has_q = static_cast<int>(now_reach.size()) + 1 >= q;
                for (int p : n.reach) {
                    if (!now_reach.count(p)) {
                        push_control(now, m, fede2::ev::LinkDown{p});
                    }
                }
                if (has_q != n.has_quorum) {
                    if (has_q) {
                        push_control(now, m, fede2::ev::QuorumRestored{});
                    } else {
                        push_control(now, m, fede2::ev::QuorumLost{});
                    }
                }
                for (int p : now_reach) {
                    if (!n.reach.count(p)) {
                        push_control(now, m, fede2::ev::LinkUp{p});
                    }
                }
                n.reach = now_reach;
                n.has_quorum = has_q;
            }
            update_quorum_interval(cid, now);
        }
    }

    // -- clusters ----------------------------------------------------------

    double freshness(const Node& n, SimTime now) const
    {
        const double horizon = to_seconds(cfg_.protocol.cycle) * cfg_.cluster.staleness_cycles;
        const SimTime last = std::max(n.st.last_heartbeat_seen, n.st.timer_reset);
        return cluster::telemetry_freshness(std::max(0.0, to_seconds(now - last)), horizon);
    }

    double compute_of(int id) const
    {
        const auto it = cfg_.cluster.compute_avail.find(id);
        return it == cfg_.cluster.compute_avail.end() ? cfg_.cluster.default_compute_avail : it->second;
    }

    std::map<int, cluster::NodeMetrics> metrics_for(const cluster::Cluster& c, const TopologySnapshot& g,
                                                    SimTime now) const
    {
        const auto deg = cluster::degree_norm(c, g, cfg_.cluster.rtt_threshold_s);
        std::map<int, cluster::NodeMetrics> out;
        for (int m : c.members) {
            out[m] = cluster::NodeMetrics{m, deg.at(m), compute_of(m), freshness(nodes_.at(m), now)};
        }
        return out;
    }

    void rescore(SimTime now)
    {
        for (const auto& [cid, c] : clusters_) {
            const auto m = metrics_for(c, geo_->snap, now);
            for (const auto& [id, x] : m) {
                nodes_.at(id).st.score = cluster::node_score(x, cfg_.cluster.weights);
            }
        }
    }

    void install(const cluster::Cluster& c, std::optional<int> leader, SimTime now)
    {
        for (int m : c.members) {
            Node& n = nodes_.at(m);
            auto& s = n.st;
            s.cluster_id = c.cluster_id;
            s.members = c.members;
            s.term = std::max(s.term, c.term);
            s.role = (leader && *leader == m) ? Role::Leader : Role::Follower;
            s.leader_id = leader;
            s.voted_term = std::max(s.voted_term, s.term);
            s.voted_for = leader;
            s.window.reset();
            s.votes.clear();
            s.election_term = 0;
            s.partitioned = false;
            s.unreachable.clear();
            s.max_peer_version = 0;
            s.timer_reset = now;
            s.last_heartbeat_seen = std::max(s.last_heartbeat_seen, now);
            s.last_heartbeat_sent = SimTime{-1};
            if (s.role == Role::Leader) {
                n.leader_since = now;
                result_.metrics.leaders.push_back({now, c.cluster_id, s.term, m});
                ++result_.metrics.formation_elections;
            }
        }
    }

    void recluster(std::vector<int> ids, SimTime now, bool count)
    {
        std::sort(ids.begin(), ids.end());
        for (int id : ids) {
            const int old = nodes_.at(id).st.cluster_id;
            if (clusters_.count(old)) {
                auto& mem = clusters_.at(old).members;
                mem.erase(std::remove(mem.begin(), mem.end(), id), mem.end());
                if (mem.empty()) {
                    if (auto o = open_loss_.find(old); o != open_loss_.end()) {
                        result_.metrics.quorum_loss[o->second].end = now;
                        open_loss_.erase(o);
                    }
                    clusters_.erase(old);
                }
            }
        }
        // live nodes over the current, fault-masked geometry
        TopologySnapshot sub;
        sub.time = geo_->snap.time;
        std::set<int> live_set;
        for (int id : ids) {
            if (live(id)) {
                live_set.insert(id);
            }
        }
        for (int id : live_set) {
            sub.sat_ids.push_back(id);
            std::vector<Link> adj;
            for (const Link& l : geo_->snap.isl_adjacency[*geo_->snap.index_of(id)]) {
                if (live_set.count(l.endpoint_b) && edge_up(id, l.endpoint_b)) {
                    adj.push_back(l);
                }
            }
            sub.isl_adjacency.push_back(std::move(adj));
        }
        std::vector<cluster::Cluster> formed =
            cluster::form_clusters(sub, cfg_.cluster.max_size, cfg_.cluster.rtt_threshold_s, next_cluster_id_);
        next_cluster_id_ += static_cast<int>(formed.size());
        for (int id : ids) {
            if (!live(id)) {
                formed.push_back(cluster::Cluster::make(next_cluster_id_++, {id}));
            }
        }
        for (auto& c : formed) {
            std::int64_t term = 0;
            for (int m : c.members) {
                term = std::max(term, nodes_.at(m).st.term);
            }
            c.term = term;
            std::vector<fede2::PromotionCandidate> cands;
            const auto metrics = metrics_for(c, sub.sat_ids.empty() ? geo_->snap : sub, now);
            for (int m : c.members) {
                if (live(m)) {
                    cands.push_back({m, metrics.at(m), nodes_.at(m).st.credential});
                }
            }
            std::optional<int> leader;
            try {
                leader = fede2::promote_follower(c, cands, *registry_, cfg_.cluster.weights);
            } catch (const QuorumNotMet&) {
                c.term = term + 1;
            }
            install(c, leader, now);
            for (int m : c.members) {
                nodes_.at(m).st.score = cluster::node_score(metrics.at(m), cfg_.cluster.weights);
            }
            // reachability of the new cluster, without events
            const auto r = reach_of(c.members);
            const int q = cluster::quorum_size(c.members.size());
            for (int m : c.members) {
                Node& n = nodes_.at(m);
                n.reach = r.count(m) ? r.at(m) : std::set<int>{};
                n.has_quorum = !n.halted() && static_cast<int>(n.reach.size()) + 1 >= q;
            }
            const int cid = c.cluster_id;
            clusters_.emplace(cid, std::move(c));
            update_quorum_interval(cid, now);
        }
        if (count) {
            ++result_.metrics.reclusterings;
        }
        ++conn_version_;
        route_cache_.clear();
        trace_kernel(now, "Recluster", "nodes=" + std::to_string(ids.size()) +
                                           " clusters=" + std::to_string(formed.size()));
    }

    void record_rows(SimTime now)
    {
        for (const auto& [id, n] : nodes_) {
            result_.cluster_rows.push_back({to_seconds(now), n.st.cluster_id, id, n.st.role, n.st.term});
        }
    }

    // -- kernel events -----------------------------------------------------

    void on_step(SimTime now, int k)
    {
        geo_ = std::make_unique<Geometry>(snapshot_fn_(k));
        trace_kernel(now, "Step", "step=" + std::to_string(k) + " isl=" +
                                      std::to_string(geo_->snap.isl_count()) +
                                      " gsl=" + std::to_string(geo_->snap.gsl_links.size()));
        rescore(now);
        std::vector<int> redo;
        const bool epoch = cfg_.cluster.recluster_every_steps > 0 && k % cfg_.cluster.recluster_every_steps == 0;
        if (epoch) {
            redo = all_ids();
        } else {
            for (const auto& [cid, c] : clusters_) {
                const auto r = reach_of(c.members);
                const int q = cluster::quorum_size(c.members.size());
                bool any = false;
                bool ok = false;
                for (const auto& [m, peers] : r) {
                    any = true;
                    ok = ok || static_cast<int>(peers.size()) + 1 >= q;
                }
                if (any && !ok) {
                    redo.insert(redo.end(), c.members.begin(), c.members.end());
                }
            }
        }
        if (!redo.empty()) {
            recluster(redo, now, true);
        }
        refresh(now);
        record_rows(now);
    }

    void on_fault(SimTime now, int idx, bool begin)
    {
        const FaultEvent& f = cfg_.faults[static_cast<std::size_t>(idx)];
        std::string detail;
        switch (f.kind) {
        case FaultKind::LinkDrop:
            if (begin) {
                dropped_.insert(pair_key(f.pair.first, f.pair.second));
            } else {
                dropped_.erase(dropped_.find(pair_key(f.pair.first, f.pair.second)));
            }
            detail = "pair=" + std::to_string(f.pair.first) + "-" + std::to_string(f.pair.second);
            trace_kernel(now, begin ? "LinkDrop" : "LinkDropEnd", detail);
            refresh(now);
            break;
        case FaultKind::GslBlackout:
            for (int gs : f.stations) {
                if (begin) {
                    blackout_.insert(gs);
                } else {
                    blackout_.erase(blackout_.find(gs));
                }
            }
            trace_kernel(now, begin ? "GslBlackout" : "GslBlackoutEnd",
                         "stations=" + std::to_string(f.stations.size()));
            refresh(now);
            break;
        case FaultKind::NodeHalt: {
            Node& n = nodes_.at(f.node);
            detail = "node=" + std::to_string(f.node);
            if (begin) {
                if (n.halt_depth++ == 0) {
                    if (n.st.role == Role::Leader) {
                        open_failover(f.node, now);
                    }
                    n.reach.clear();
                    n.has_quorum = false;
                    trace_kernel(now, "NodeHalt", detail);
                    refresh(now);
                }
            } else if (--n.halt_depth == 0) {
                trace_kernel(now, "NodeResume", detail);
                n.reach.clear();
                n.has_quorum = false;
                push_control(now, f.node, fede2::ev::QuorumLost{});
                refresh(now);
            }
            break;
        }
        case FaultKind::CredentialRevoke: {
            registry_->revoke(token_for(f.node));
            trace_kernel(now, "CredentialRevoke", "node=" + std::to_string(f.node));
            const auto& members = nodes_.at(f.node).st.members;
            for (int m : members) {
                if (live(m)) {
                    push_control(now, m, fede2::ev::IntegrityAlarm{f.node});
                }
            }
            break;
        }
        }
    }

    void open_failover(int leader, SimTime now)
    {
        const Node& ln = nodes_.at(leader);
        FailoverRecord r;
        r.halt_time = now;
        r.cluster_id = ln.st.cluster_id;
        r.old_leader = leader;
        r.old_term = ln.st.term;
        r.leader_since = ln.leader_since;
        r.followers_aligned = true;
        for (int m : ln.st.members) {
            if (m == leader || !live(m)) {
                continue;
            }
            const auto& s = nodes_.at(m).st;
            if (s.role != Role::Follower || s.leader_id != leader || s.term != ln.st.term) {
                r.followers_aligned = false;
            }
            if (registry_->ok(s.credential)) {
                ++r.valid_survivors;
            }
        }
        result_.metrics.failovers.push_back(r);
    }

    void on_inject(SimTime now, int idx)
    {
        const Injection& in = cfg_.injections[static_cast<std::size_t>(idx)];
        auto& m = result_.metrics;
        ++m.injected_updates;
        const bool invalid = !in.is_signed || in.tampered;
        m.injected_invalid += invalid;
        std::optional<int> target = in.node;
        if (in.leader_of) {
            for (int x : nodes_.at(*in.leader_of).st.members) {
                if (live(x) && nodes_.at(x).st.role == Role::Leader) {
                    target = x;
                    break;
                }
            }
        }
        trace_kernel(now, "Inject",
                     "index=" + std::to_string(idx) +
                         (target ? " target=" + std::to_string(*target) : std::string(" target=none")));
        if (!target || !live(*target)) {
            ++m.undelivered_injections;
            return;
        }
        auto msg = std::make_shared<Message>();
        msg->id = next_msg_id_++;
        msg->src = -1;
        msg->dst = *target;
        msg->cls = InterfaceClass::A1;
        msg->sent = now;
        msg->injection = idx;
        msg->event = fede2::ProtocolEvent{
            std::nullopt, fede2::ev::PolicyUpdate{in.is_signed, in.tampered ? "smo-tampered" : kSmoToken,
                                                  in.key, in.value}};
        Item it;
        it.at = now;
        it.node = *target;
        it.kind = ItemKind::Control;
        it.event = std::make_shared<fede2::ProtocolEvent>(msg->event);
        it.msg = std::move(msg);
        push(std::move(it));
    }

    // -- messages ----------------------------------------------------------

    bool route_present(const Message& msg) const
    {
        const Route& r = msg.route;
        if (r.kind == LinkKind::Isl) {
            for (std::size_t i = 0; i + 1 < r.path.size(); ++i) {
                if (!geo_->edge(r.path[i], r.path[i + 1]) || !edge_up(r.path[i], r.path[i + 1])) {
                    return false;
                }
                if (i > 0 && !live(r.path[i])) {
                    return false;
                }
            }
            return true;
        }
        if (!station_up(r.station)) {
            return false;
        }
        auto sees = [&](int sat) {
            const auto& v = geo_->stations(sat);
            return std::any_of(v.begin(), v.end(), [&](const auto& p) { return p.first == r.station; });
        };
        return sees(msg.src) && sees(msg.dst);
    }

    void drop(const std::string& reason) { ++result_.metrics.messages_dropped[reason]; }

    void on_deliver(const Item& it)
    {
        Message& msg = *it.msg;
        const Node& dst = nodes_.at(msg.dst);
        if (dst.halted()) {
            drop("receiver halted");
            trace_drop(it.at, msg, "receiver halted");
            return;
        }
        linkmap::LinkMapDecision d;
        d.chosen = msg.route.link;
        d.expected_delay = msg.route.link.one_way_delay;
        const auto out = deliver(msg.sent, d, true, route_present(msg));
        if (out.status == DeliveryStatus::Dropped) {
            drop(out.reason);
            trace_drop(it.at, msg, out.reason);
            return;
        }
        ++result_.metrics.messages_delivered;
        handle(msg.dst, it.at, &msg.event, &msg, false);
    }

    const std::vector<Route>& routes(int src, int dst)
    {
        const std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(src)) << 32) |
                                  static_cast<std::uint32_t>(dst);
        auto it = route_cache_.find(key);
        if (it != route_cache_.end()) {
            return it->second;
        }
        const auto& members = nodes_.at(src).st.members;
        auto node_ok = [&](int v) {
            return std::binary_search(members.begin(), members.end(), v) && live(v);
        };
        auto edge_ok = [&](int a, int b) { return edge_up(a, b); };
        auto station_ok = [&](int gs) { return station_up(gs); };
        return route_cache_[key] = find_routes(*geo_, src, dst, node_ok, edge_ok, station_ok);
    }

    struct Outgoing {
        int dst;
        InterfaceClass cls;
        fede2::ProtocolEvent event;
    };

    void send_all(int src, SimTime now, std::vector<Outgoing> out)
    {
        if (out.empty()) {
            return;
        }
        Node& n = nodes_.at(src);
        std::vector<std::size_t> order(out.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            order[i] = i;
        }
        if (cfg_.linkmap.capacity) {
            const std::int64_t cycle = now.count() / cfg_.protocol.cycle.count();
            if (cycle != n.cycle_index) {
                n.cycle_index = cycle;
                n.sent_in_cycle = 0;
            }
            std::vector<linkmap::ControlMessage> q;
            for (std::size_t i = 0; i < out.size(); ++i) {
                linkmap::ControlMessage cm;
                cm.msg_id = static_cast<std::int64_t>(i);
                cm.cls = out[i].cls;
                cm.src = src;
                cm.dst = out[i].dst;
                cm.created_at = to_seconds(now);
                q.push_back(cm);
            }
            const int remaining = std::max(0, *cfg_.linkmap.capacity - n.sent_in_cycle);
            const auto picked = linkmap::schedule(q, remaining, cfg_.linkmap.mode);
            order.clear();
            for (const auto& cm : picked) {
                order.push_back(static_cast<std::size_t>(cm.msg_id));
            }
            for (std::size_t i = 0; i < out.size(); ++i) {
                if (std::find(order.begin(), order.end(), i) == order.end()) {
                    ++result_.metrics.messages_sent;
                    drop(linkmap::withheld(out[i].cls, cfg_.linkmap.mode) ? "withheld" : "capacity");
                }
            }
            n.sent_in_cycle += static_cast<int>(order.size());
        }
        for (std::size_t i : order) {
            Outgoing& o = out[i];
            ++result_.metrics.messages_sent;
            auto msg = std::make_shared<Message>();
            msg->id = next_msg_id_++;
            msg->src = src;
            msg->dst = o.dst;
            msg->cls = o.cls;
            msg->sent = now;
            msg->event = std::move(o.event);
            const auto& rs = routes(src, o.dst);
            std::vector<Link> links;
            for (const auto& r : rs) {
                links.push_back(r.link);
            }
            linkmap::ControlMessage cm;
            cm.msg_id = static_cast<std::int64_t>(msg->id);
            cm.cls = o.cls;
            cm.src = src;
            cm.dst = o.dst;
            cm.created_at = to_seconds(now);
            const auto decision = linkmap::select_link(cm, links);
            const auto outcome = deliver(now, decision, decision.chosen.has_value(), true);
            if (outcome.status == DeliveryStatus::Dropped) {
                drop(outcome.reason);
                trace_drop(now, *msg, outcome.reason);
                continue;
            }
            for (const auto& r : rs) {
                if (r.kind == decision.chosen->kind) {
                    msg->route = r;
                }
            }
            if (cfg_.loss_rate > 0.0) {
                const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
                if (u < cfg_.loss_rate) {
                    drop("random loss");
                    trace_drop(now, *msg, "random loss");
                    continue;
                }
            }
            Item it;
            it.at = outcome.at;
            it.node = o.dst;
            it.kind = ItemKind::Deliver;
            it.msg = std::move(msg);
            push(std::move(it));
        }
    }

    std::vector<Outgoing> messages_for(int src, SimTime now, const std::vector<fede2::Action>& actions)
    {
        Node& n = nodes_.at(src);
        const auto& s = n.st;
        std::vector<Outgoing> out;
        auto envelope = [&](std::int64_t term) {
            return fede2::Envelope{s.cluster_id, term, s.credential, src};
        };
        auto to_peers = [&](InterfaceClass cls, const fede2::ProtocolEvent& ev) {
            for (int m : s.members) {
                if (m != src) {
                    out.push_back({m, cls, ev});
                }
            }
        };
        for (const auto& a : actions) {
            if (const auto* hb = std::get_if<fede2::act::SendHeartbeat>(&a)) {
                fede2::Telemetry t{src, s.heartbeat_seq, "seq=" + std::to_string(s.heartbeat_seq)};
                to_peers(InterfaceClass::E2,
                         {envelope(hb->term), fede2::ev::HeartbeatReceived{hb->version, now, t}});
            } else if (const auto* se = std::get_if<fede2::act::StartElection>(&a)) {
                to_peers(InterfaceClass::AUTH,
                         {envelope(se->term), fede2::ev::ElectionCall{se->version, se->score}});
            } else if (const auto* cv = std::get_if<fede2::act::CastVote>(&a)) {
                if (cv->candidate != src) {
                    out.push_back({cv->candidate, InterfaceClass::AUTH,
                                   {envelope(cv->term), fede2::ev::VoteGranted{src}}});
                }
            } else if (const auto* bs = std::get_if<fede2::act::BroadcastSnapshot>(&a)) {
                to_peers(InterfaceClass::E2,
                         {envelope(s.term), fede2::ev::SyncSnapshot{bs->version, s.replica}});
            } else if (const auto* rq = std::get_if<fede2::act::RequestSync>(&a)) {
                const fede2::ProtocolEvent ev{envelope(s.term), fede2::ev::SyncRequest{rq->version}};
                if (s.leader_id && *s.leader_id != src) {
                    out.push_back({*s.leader_id, InterfaceClass::E2, ev});
                } else {
                    to_peers(InterfaceClass::E2, ev);
                }
            }
        }
        (void)now;
        return out;
    }

    // -- node handling -----------------------------------------------------

    void handle(int id, SimTime now, const fede2::ProtocolEvent* ev, const Message* msg, bool is_tick)
    {
        Node& n = nodes_.at(id);
        if (n.halted()) {
            if (msg && msg->injection >= 0) {
                ++result_.metrics.undelivered_injections;
            }
            return;
        }
        const Role role_before = n.st.role;
        const std::int64_t version_before = n.st.state_version;
        const std::optional<fede2::VoteWindow> window_before = n.st.window;
        fede2::Transition t = is_tick ? fede2::tick(std::move(n.st), now, cfg_.protocol)
                                      : fede2::handle_event(std::move(n.st), *ev, now, cfg_.protocol);
        n.st = std::move(t.state);
        auto& s = n.st;
        auto& met = result_.metrics;

        if (s.role == Role::Leader && role_before != Role::Leader) {
            n.leader_since = now;
            met.leaders.push_back({now, s.cluster_id, s.term, id});
            ++met.protocol_elections;
            for (auto& f : met.failovers) {
                if (!f.new_leader && f.cluster_id == s.cluster_id && s.term > f.old_term) {
                    f.new_leader = id;
                    f.latency = now - f.halt_time;
                }
            }
        }
        for (const auto& a : t.actions) {
            if (fede2::is_cluster_scope(a) && !n.has_quorum) {
                ++met.split_brain_violations;
            }
            if (const auto* r = std::get_if<fede2::act::RejectUpdate>(&a); r && r->reason == "conflicting leader") {
                ++met.conflicting_leader_alerts;
            }
        }
        if (msg && msg->injection >= 0) {
            const Injection& in = cfg_.injections[static_cast<std::size_t>(msg->injection)];
            const bool invalid = !in.is_signed || in.tampered;
            for (const auto& a : t.actions) {
                if (std::holds_alternative<fede2::act::RejectUpdate>(a)) {
                    ++met.rejected_updates;
                    met.rejected_invalid += invalid;
                }
                if (std::holds_alternative<fede2::act::ApplyUpdate>(a) && invalid) {
                    ++met.applied_invalid;
                }
            }
            if (invalid && s.state_version != version_before) {
                ++met.invalid_version_changes;
            }
        }
        if (s.window && (!window_before || window_before->term != s.window->term ||
                         window_before->closes_at != s.window->closes_at)) {
            Item it;
            it.at = s.window->closes_at;
            it.node = id;
            it.kind = ItemKind::WindowClose;
            it.term = s.window->term;
            push(std::move(it));
        }

        trace_node(now, id, is_tick ? std::string_view("Tick") : fede2::event_name(ev->body),
                   ev && ev->envelope ? std::optional<int>(ev->envelope->sender) : std::nullopt, role_before,
                   s, t.actions);
        send_all(id, now, messages_for(id, now, t.actions));
    }

    // -- trace -------------------------------------------------------------

    void emit(const nlohmann::ordered_json& j)
    {
        ++result_.metrics.trace_records;
        if (cfg_.trace) {
            *cfg_.trace << j.dump() << '\n';
        }
    }

    void trace_kernel(SimTime now, std::string_view event, const std::string& detail)
    {
        nlohmann::ordered_json j;
        j["t_ns"] = now.count();
        j["seq"] = trace_seq_++;
        j["node"] = -1;
        j["event"] = event;
        j["detail"] = detail;
        emit(j);
    }

    void trace_drop(SimTime now, const Message& msg, const std::string& reason)
    {
        if (cfg_.trace_mode != TraceMode::Full) {
            return;
        }
        nlohmann::ordered_json j;
        j["t_ns"] = now.count();
        j["seq"] = trace_seq_++;
        j["node"] = msg.dst;
        j["event"] = "Dropped";
        j["from"] = msg.src;
        j["detail"] = std::string(fede2::event_name(msg.event.body)) + ": " + reason;
        emit(j);
    }

    void trace_node(SimTime now, int id, std::string_view event, std::optional<int> from, Role before,
                    const fede2::NodeState& s, const std::vector<fede2::Action>& actions)
    {
        const bool quiet = std::all_of(actions.begin(), actions.end(), [](const fede2::Action& a) {
            return std::holds_alternative<fede2::act::NoOp>(a) ||
                   std::holds_alternative<fede2::act::SendHeartbeat>(a);
        });
        const bool routine = before == s.role && quiet && (event == "Tick" || event == "HeartbeatReceived");
        if (event == "Tick" && actions.empty() && before == s.role) {
            return;
        }
        if (routine && cfg_.trace_mode == TraceMode::Compact) {
            return;
        }
        nlohmann::ordered_json j;
        j["t_ns"] = now.count();
        j["seq"] = trace_seq_++;
        j["node"] = id;
        j["event"] = event;
        if (from) {
            j["from"] = *from;
        }
        j["cluster"] = s.cluster_id;
        j["term"] = s.term;
        j["version"] = s.state_version;
        j["role_before"] = fede2::to_string(before);
        j["role_after"] = fede2::to_string(s.role);
        auto arr = nlohmann::ordered_json::array();
        for (const auto& a : actions) {
            arr.push_back(fede2::describe(a));
        }
        j["actions"] = std::move(arr);
        emit(j);
    }

    // -- state -------------------------------------------------------------

    const KernelConfig& cfg_;
    const SnapshotFn& snapshot_fn_;
    std::mt19937_64 rng_;
    SimTime end_{};
    std::unique_ptr<Geometry> geo_;
    std::map<int, Node> nodes_;
    std::map<int, cluster::Cluster> clusters_;
    std::shared_ptr<fede2::CredentialRegistry> registry_;
    std::multiset<std::uint64_t> dropped_;
    std::multiset<int> blackout_;
    std::priority_queue<Item, std::vector<Item>, ItemAfter> queue_;
    std::unordered_map<std::uint64_t, std::vector<Route>> route_cache_;
    std::map<int, std::size_t> open_loss_;
    std::uint64_t seq_ = 0;
    std::uint64_t trace_seq_ = 0;
    std::uint64_t next_msg_id_ = 0;
    std::uint64_t conn_version_ = 0;
    int next_cluster_id_ = 0;
    RunResult result_;
};

}  // namespace

RunResult run_control(const KernelConfig& config, const SnapshotFn& snapshot)
{
    Kernel k(config, snapshot);
    return k.run();
}

KernelConfig kernel_config(const Scenario& s)
{
    KernelConfig k;
    k.step = from_seconds(s.window.step_s);
    k.steps = s.window.steps();
    k.cluster = s.cluster;
    k.protocol = s.protocol;
    k.linkmap = s.linkmap;
    k.faults = s.faults;
    k.injections = s.injections;
    k.seed = s.seed;
    k.loss_rate = s.loss_rate;
    k.trace_mode = s.trace;
    return k;
}

SnapshotFn scenario_snapshots(const Scenario& s, const Constellation& c,
                              const std::vector<ephemeris::GroundStation>& stations, int threads)
{
    ephemeris::PropagationContext ctx;
    ctx.scenario_epoch = s.window.epoch;
    ctx.theta0 = ephemeris::gmst_angle(s.window.epoch);
    ctx.j2 = s.j2;
    topology::SnapshotParams p;
    p.isl_rtt_threshold = s.thresholds.isl_rtt_s;
    p.grazing_altitude = s.thresholds.grazing_altitude_m;
    p.min_elevation_deg = s.thresholds.min_elevation_deg;
    p.max_isl_per_sat = s.thresholds.max_isl_per_sat;
    p.threads = threads;
    const double step = s.window.step_s;
    return [elements = c.elements, stations, ctx, p, step](int k) {
        const auto states = ephemeris::propagate_all(elements, k * step, ctx);
        return topology::build_snapshot(states, stations, p);
    };
}

RunResult run(const Scenario& scenario, std::ostream* trace, int threads)
{
    require_valid(scenario);
    const auto c = build_constellation(scenario);
    const auto stations = build_stations(scenario);
    auto cfg = kernel_config(scenario);
    cfg.trace = trace;
    const auto fn = scenario_snapshots(scenario, c, stations, threads);
    return run_control(cfg, fn);
}

std::vector<Link> route_candidates(const TopologySnapshot& snap, int src, int dst, const std::vector<int>& allowed)
{
    const Geometry g(snap);
    std::vector<int> sorted = allowed;
    std::sort(sorted.begin(), sorted.end());
    auto node_ok = [&](int v) { return sorted.empty() || std::binary_search(sorted.begin(), sorted.end(), v); };
    auto yes = [](auto...) { return true; };
    std::vector<Link> out;
    for (const auto& r : find_routes(g, src, dst, node_ok, yes, yes)) {
        out.push_back(r.link);
    }
    return out;
}

}  // namespace leoctl::sim
