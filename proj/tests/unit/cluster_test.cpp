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

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace leoctl;
using namespace leoctl::cluster;
using leoctl::topology::Link;
using leoctl::topology::LinkKind;
using leoctl::topology::TopologySnapshot;

namespace {

// Synthetic graph: edges carry the given rtt.
TopologySnapshot graph(int n, const std::vector<std::tuple<int, int, double>>& edges)
{
    TopologySnapshot g;
    for (int i = 0; i < n; ++i) {
        g.sat_ids.push_back(i + 1);
    }
    g.isl_adjacency.resize(static_cast<std::size_t>(n));
    for (auto [a, b, rtt] : edges) {
        const double d = rtt / 2 * topology::kSpeedOfLight;
        g.isl_adjacency[static_cast<std::size_t>(a - 1)].push_back(Link::make(LinkKind::Isl, a, b, d));
        g.isl_adjacency[static_cast<std::size_t>(b - 1)].push_back(Link::make(LinkKind::Isl, b, a, d));
    }
    for (auto& adj : g.isl_adjacency) {
        std::sort(adj.begin(), adj.end(),
                  [](const Link& x, const Link& y) { return x.endpoint_b < y.endpoint_b; });
    }
    return g;
}

std::vector<std::vector<int>> members_of(const std::vector<Cluster>& cs)
{
    std::vector<std::vector<int>> out;
    for (const auto& c : cs) {
        out.push_back(c.members);
    }
    return out;
}

std::map<int, NodeMetrics> metrics_for(const std::vector<std::array<double, 3>>& m)
{
    std::map<int, NodeMetrics> out;
    for (std::size_t k = 0; k < m.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        out[id] = NodeMetrics{id, m[k][0], m[k][1], m[k][2]};
    }
    return out;
}

}  // namespace

TEST(FormClusters, Examples)
{
    EXPECT_EQ(members_of(form_clusters(graph(3, {}), 4, 0.010)),
              (std::vector<std::vector<int>>{{1}, {2}, {3}}));

    const auto clique = graph(4, {{1, 2, 0.005}, {1, 3, 0.005}, {1, 4, 0.005},
                                  {2, 3, 0.005}, {2, 4, 0.005}, {3, 4, 0.005}});
    EXPECT_EQ(members_of(form_clusters(clique, 4, 0.010)), (std::vector<std::vector<int>>{{1, 2, 3, 4}}));

    // path 1-2-3-4-5, hand-run of the greedy BFS
    const auto path = graph(5, {{1, 2, 0.005}, {2, 3, 0.005}, {3, 4, 0.005}, {4, 5, 0.005}});
    const auto cs = form_clusters(path, 3, 0.010);
    EXPECT_EQ(members_of(cs), (std::vector<std::vector<int>>{{1, 2, 3}, {4, 5}}));
    EXPECT_EQ(cs[0].cluster_id, 0);
    EXPECT_EQ(cs[1].cluster_id, 1);
    EXPECT_EQ(cs[0].quorum_size, 2);
}

TEST(FormClusters, IgnoresEdgesAboveThreshold)
{
    const auto g = graph(3, {{1, 2, 0.005}, {2, 3, 0.015}});
    EXPECT_EQ(members_of(form_clusters(g, 8, 0.010)), (std::vector<std::vector<int>>{{1, 2}, {3}}));
    EXPECT_THROW(form_clusters(g, 0, 0.010), std::invalid_argument);
}

TEST(FormClusters, PartitionAndConnectivityOnRandomGraphs)
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 30);
        std::vector<std::tuple<int, int, double>> edges;
        for (int a = 1; a <= n; ++a) {
            for (int b = a + 1; b <= n; ++b) {
                if (rng() % 5 == 0) {
                    edges.emplace_back(a, b, (rng() % 2) ? 0.004 : 0.030);
                }
            }
        }
        const auto g = graph(n, edges);
        const int max_size = 1 + static_cast<int>(rng() % 8);
        const auto cs = form_clusters(g, max_size, 0.010);
        EXPECT_EQ(cs, form_clusters(g, max_size, 0.010));
        std::multiset<int> seen;
        for (const auto& c : cs) {
            EXPECT_LE(static_cast<int>(c.members.size()), max_size);
            seen.insert(c.members.begin(), c.members.end());
            // connected in the qualifying subgraph
            std::set<int> in(c.members.begin(), c.members.end());
            std::set<int> reached{c.members.front()};
            std::vector<int> stack{c.members.front()};
            while (!stack.empty()) {
                const int u = stack.back();
                stack.pop_back();
                for (const auto& l : g.isl_adjacency[static_cast<std::size_t>(u - 1)]) {
                    if (l.rtt < 0.010 && in.count(l.endpoint_b) && reached.insert(l.endpoint_b).second) {
                        stack.push_back(l.endpoint_b);
                    }
                }
            }
            EXPECT_EQ(reached, in);
        }
        std::multiset<int> all;
        for (int i = 1; i <= n; ++i) {
            all.insert(i);
        }
        EXPECT_EQ(seen, all);
    }
}

TEST(Score, Examples)
{
    const ScoreWeights eq;
    EXPECT_NEAR(node_score({1, 1.0, 1.0, 1.0}, eq), 1.0, 1e-15);
    EXPECT_NEAR(node_score({1, 0.6, 0.9, 0.3}, eq), 0.6, 1e-15);
    EXPECT_NEAR(node_score({1, 0.4, 0.8, 0.0}, {0.5, 0.25, 0.25}), 0.4, 1e-15);
}

TEST(Score, WeightValidation)
{
    EXPECT_NO_THROW(ScoreWeights{}.validate());
    EXPECT_THROW((ScoreWeights{0.5, 0.5, 0.5}.validate()), ConfigError);
    EXPECT_THROW((ScoreWeights{1.2, -0.1, -0.1}.validate()), ConfigError);
    EXPECT_THROW((NodeMetrics{1, 1.5, 0, 0}.validate()), std::invalid_argument);
}

TEST(ElectLeader, Examples)
{
    auto single = Cluster::make(0, {7});
    std::map<int, NodeMetrics> m{{7, NodeMetrics{7, 0.1, 0.1, 0.1}}};
    EXPECT_EQ(elect_leader(single, m, {}), 7);
    EXPECT_EQ(single.term, 1);

    auto c = Cluster::make(1, {1, 2, 3});
    const auto m3 = metrics_for({{0.9, 0.9, 0.9}, {0.5, 0.5, 0.5}, {0.2, 0.2, 0.2}});
    EXPECT_EQ(elect_leader(c, m3, {}), 1);
    const auto tie = metrics_for({{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}});
    auto c2 = Cluster::make(2, {3, 2, 1});
    EXPECT_EQ(elect_leader(c2, tie, {}), 1);
    EXPECT_EQ(c2.leader, 1);
}

TEST(ElectLeader, QuorumNotMet)
{
    auto c = Cluster::make(0, {1, 2, 3, 4, 5});
    c.synchronized = {1, 2};
    EXPECT_THROW(elect_leader(c, metrics_for({{1, 1, 1}, {1, 1, 1}}), {}), QuorumNotMet);
    EXPECT_EQ(c.term, 0);
}

TEST(ElectLeader, ScalingAndMonotonicity)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 9);
        std::vector<int> ids;
        std::map<int, NodeMetrics> m;
        for (int i = 1; i <= n; ++i) {
            ids.push_back(i);
            m[i] = NodeMetrics{i, u(rng), u(rng), u(rng)};
        }
        ScoreWeights w{u(rng), 0.0, 0.0};
        w.w_comp = (1.0 - w.w_conn) * u(rng);
        w.w_fresh = 1.0 - w.w_conn - w.w_comp;
        auto c = Cluster::make(0, ids);
        const int leader = elect_leader(c, m, w);

        auto scaled = m;
        const double k = 0.25 + 0.5 * u(rng);
        for (auto& [id, x] : scaled) {
            x.isl_degree_norm *= k;
            x.compute_avail *= k;
            x.telemetry_freshness *= k;
        }
        auto c2 = Cluster::make(0, ids);
        const int leader2 = elect_leader(c2, scaled, w);
        // exact ties may resolve differently after rounding; only compare clear winners
        double runner_up = -1.0;
        for (const auto& [id, x] : m) {
            if (id != leader) {
                runner_up = std::max(runner_up, node_score(x, w));
            }
        }
        if (node_score(m[leader], w) - runner_up > 1e-12) {
            EXPECT_EQ(leader2, leader);
        }

        auto boosted = m;
        boosted[leader].compute_avail = std::min(1.0, boosted[leader].compute_avail + 0.3);
        auto c3 = Cluster::make(0, ids);
        EXPECT_EQ(elect_leader(c3, boosted, w), leader);
    }
}

TEST(Quorum, Examples)
{
    auto c = Cluster::make(0, {1, 2, 3, 4, 5});
    c.synchronized = {1, 2, 3};
    EXPECT_TRUE(check_quorum(c));
    c.synchronized = {1, 2};
    EXPECT_FALSE(check_quorum(c));
    EXPECT_TRUE(check_quorum(Cluster::make(0, {9})));
    EXPECT_EQ(quorum_size(4), 3);
    EXPECT_EQ(quorum_size(12), 7);
}

TEST(Helpers, DegreeNormAndFreshness)
{
    const auto g = graph(4, {{1, 2, 0.005}, {1, 3, 0.005}, {2, 3, 0.005}, {3, 4, 0.030}});
    const auto c = Cluster::make(0, {1, 2, 3, 4});
    const auto d = degree_norm(c, g, 0.010);
    EXPECT_DOUBLE_EQ(d.at(1), 1.0);
    EXPECT_DOUBLE_EQ(d.at(4), 0.0);
    const auto none = degree_norm(Cluster::make(0, {4}), graph(4, {}), 0.010);
    EXPECT_DOUBLE_EQ(none.at(4), 0.0);
    EXPECT_DOUBLE_EQ(telemetry_freshness(0.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(telemetry_freshness(0.25, 1.0), 0.75);
    EXPECT_DOUBLE_EQ(telemetry_freshness(3.0, 1.0), 0.0);
}
