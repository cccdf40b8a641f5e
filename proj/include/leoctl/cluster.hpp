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

#include "leoctl/topology.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace leoctl::cluster {

struct NodeMetrics {
    int node_id = 0;
    double isl_degree_norm = 0.0;
    double compute_avail = 0.0;
    double telemetry_freshness = 0.0;

    /// Throws std::invalid_argument unless all three lie in [0, 1].
    void validate() const;
};

struct ScoreWeights {
    double w_conn = 1.0 / 3.0;
    double w_comp = 1.0 / 3.0;
    double w_fresh = 1.0 / 3.0;

    /// Nonnegative and summing to 1 within 1e-9, else ConfigError.
    void validate() const;
};

struct Cluster {
    int cluster_id = 0;
    std::vector<int> members;  // ascending
    std::optional<int> leader;
    std::int64_t term = 0;
    int quorum_size = 1;
    std::vector<int> synchronized;  // ascending, subset of members

    /// Cluster over `members` with every member synchronized.
    static Cluster make(int cluster_id, std::vector<int> members);
    friend bool operator==(const Cluster&, const Cluster&) = default;
};

/// floor(n / 2) + 1
int quorum_size(std::size_t members);

/// Greedy growth: seed from the lowest unassigned id, breadth-first over
/// ISLs with rtt < rtt_threshold visiting neighbors in ascending id order,
/// stop at max_size. Cluster ids are first_id, first_id + 1, ...
std::vector<Cluster> form_clusters(const topology::TopologySnapshot& graph, int max_size,
                                   double rtt_threshold, int first_id = 0);

double node_score(const NodeMetrics& m, const ScoreWeights& w);

/// Argmax of node_score over synchronized members, lowest id on ties.
/// Sets cluster.leader and increments cluster.term. Throws QuorumNotMet.
int elect_leader(Cluster& cluster, const std::map<int, NodeMetrics>& metrics,
                 const ScoreWeights& w);

bool check_quorum(const Cluster& cluster);

/// Qualifying degree over the cluster's largest qualifying degree; all
/// zero if no member has a qualifying link.
std::map<int, double> degree_norm(const Cluster& cluster, const topology::TopologySnapshot& graph,
                                  double rtt_threshold);

/// max(0, 1 - age / horizon)
double telemetry_freshness(double age, double horizon);

}  // namespace leoctl::cluster
