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

#include "leoctl/cluster.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <string>

namespace leoctl::cluster {

void NodeMetrics::validate() const
{
    for (double v : {isl_degree_norm, compute_avail, telemetry_freshness}) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("node " + std::to_string(node_id) +
                                        ": metric outside [0, 1]");
        }
    }
}

void ScoreWeights::validate() const
{
    if (w_conn < 0.0 || w_comp < 0.0 || w_fresh < 0.0) {
        throw ConfigError("score weights must be nonnegative");
    }
    if (std::abs(w_conn + w_comp + w_fresh - 1.0) > 1e-9) {
        throw ConfigError("score weights must sum to 1");
    }
}

int quorum_size(std::size_t members) { return static_cast<int>(members / 2 + 1); }

Cluster Cluster::make(int cluster_id, std::vector<int> members)
{
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    Cluster c;
    c.cluster_id = cluster_id;
    c.quorum_size = cluster::quorum_size(members.size());
    c.synchronized = members;
    c.members = std::move(members);
    return c;
}

std::vector<Cluster> form_clusters(const topology::TopologySnapshot& graph, int max_size,
                                   double rtt_threshold, int first_id)
{
    if (max_size < 1) {
        throw std::invalid_argument("form_clusters: max_size must be >= 1");
    }
    const std::size_t n = graph.sat_ids.size();
    std::vector<bool> assigned(n, false);
    std::vector<Cluster> out;
    int next_id = first_id;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (assigned[seed]) {
            continue;
        }
        std::vector<int> members;
        std::deque<std::size_t> frontier{seed};
        assigned[seed] = true;
        while (!frontier.empty() && static_cast<int>(members.size()) < max_size) {
            const std::size_t u = frontier.front();
            frontier.pop_front();
            members.push_back(graph.sat_ids[u]);
            // adjacency is sorted by peer id
            for (const auto& l : graph.isl_adjacency[u]) {
                if (!(l.rtt < rtt_threshold)) {
                    continue;
                }
                const std::size_t v = *graph.index_of(l.endpoint_b);
                if (!assigned[v] &&
                    static_cast<int>(members.size() + frontier.size()) < max_size) {
                    assigned[v] = true;
                    frontier.push_back(v);
                }
            }
        }
        out.push_back(Cluster::make(next_id++, std::move(members)));
    }
    return out;
}

double node_score(const NodeMetrics& m, const ScoreWeights& w)
{
    return w.w_conn * m.isl_degree_norm + w.w_comp * m.compute_avail +
           w.w_fresh * m.telemetry_freshness;
}

int elect_leader(Cluster& cluster, const std::map<int, NodeMetrics>& metrics,
                 const ScoreWeights& w)
{
    if (static_cast<int>(cluster.synchronized.size()) < cluster.quorum_size) {
        throw QuorumNotMet("cluster " + std::to_string(cluster.cluster_id) + ": " +
                           std::to_string(cluster.synchronized.size()) + " synchronized, quorum " +
                           std::to_string(cluster.quorum_size));
    }
    std::optional<int> best;
    double best_score = 0.0;
    for (int id : cluster.synchronized) {
        const auto it = metrics.find(id);
        if (it == metrics.end()) {
            throw std::invalid_argument("elect_leader: no metrics for node " + std::to_string(id));
        }
        const double s = node_score(it->second, w);
        if (!best || s > best_score) {
            best = id;
            best_score = s;
        }
    }
    cluster.leader = *best;
    ++cluster.term;
    return *best;
}

bool check_quorum(const Cluster& cluster)
{
    return static_cast<int>(cluster.synchronized.size()) >= quorum_size(cluster.members.size());
}

std::map<int, double> degree_norm(const Cluster& cluster, const topology::TopologySnapshot& graph,
                                  double rtt_threshold)
{
    std::map<int, int> degree;
    int max_degree = 0;
    for (int id : cluster.members) {
        int d = 0;
        if (const auto idx = graph.index_of(id)) {
            for (const auto& l : graph.isl_adjacency[*idx]) {
                d += l.rtt < rtt_threshold;
            }
        }
        degree[id] = d;
        max_degree = std::max(max_degree, d);
    }
    std::map<int, double> out;
    for (const auto& [id, d] : degree) {
        out[id] = max_degree == 0 ? 0.0 : static_cast<double>(d) / max_degree;
    }
    return out;
}

double telemetry_freshness(double age, double horizon)
{
    if (!(horizon > 0.0)) {
        throw std::invalid_argument("telemetry_freshness: horizon must be positive");
    }
    return std::max(0.0, 1.0 - age / horizon);
}

}  // namespace leoctl::cluster
