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

#include "leoctl/metrics.hpp"
#include "leoctl/scenario.hpp"
#include "leoctl/simkernel.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace leoctl::cli {

inline constexpr std::string_view kVersion = "0.1.0";

/// Constellations above this size need --allow-large.
inline constexpr std::size_t kLargeConstellation = 1000;

/// Scenario plus the text it came from, copied into every run directory.
struct ScenarioInput {
    sim::Scenario scenario;
    std::string text;
    std::filesystem::path path;  // empty for in-memory scenarios
};

ScenarioInput read_scenario(const std::filesystem::path& file);
ScenarioInput scenario_from_text(std::string text, const std::filesystem::path& base_dir = {});

struct RunOptions {
    std::optional<std::filesystem::path> out;  // run directory; default <root>/<name>-<command>
    int threads = 1;
    bool strict_tle = false;
    bool allow_large = false;
};

/// --out if given, else $LEOCTL_OUTPUT_ROOT (default "runs") / <name>-<command>.
std::filesystem::path run_directory(const sim::Scenario& s, std::string_view command, const RunOptions& opt);

// ---------------------------------------------------------------------------

struct TopologyReport {
    std::string constellation;  // label, names the TLE snapshot when one is used
    std::size_t satellites = 0;
    std::size_t steps = 0;

    std::size_t episodes = 0;
    double duration_mode_s = 0.0;  // centre of the densest histogram bin
    double duration_median_s = 0.0;
    double duration_max_s = 0.0;
    std::size_t episodes_over_hour = 0;

    std::optional<metrics::Percentiles> isl_rtt;  // s
    std::optional<metrics::Percentiles> gsl_rtt;  // s
    std::map<double, double> mean_degree;         // threshold -> time-averaged mean
    std::map<double, metrics::Percentiles> gsl_rtt_by_altitude;  // km -> percentiles

    std::filesystem::path directory;
    std::vector<std::string> files;
};

TopologyReport topology(const ScenarioInput& in, const RunOptions& opt);

struct ClusterSimReport {
    sim::RunResult run;
    std::filesystem::path directory;
    std::vector<std::string> files;
};

ClusterSimReport cluster_sim(const ScenarioInput& in, const RunOptions& opt);

struct ClassSummary {
    std::string cls;
    std::size_t messages = 0;
    std::size_t isl = 0;
    std::size_t gsl = 0;
    std::size_t none = 0;
    std::size_t degraded = 0;
    double mean_delay_s = 0.0;  // over chosen links
};

struct LinkmapReport {
    std::vector<ClassSummary> classes;
    std::filesystem::path directory;
    std::vector<std::string> files;
};

LinkmapReport linkmap_eval(const ScenarioInput& in, const RunOptions& opt);

/// Diagnostics for a scenario file; empty when valid.
std::vector<std::string> validate(const std::filesystem::path& file);

/// Command-line entry. Exit codes: 0 success, 1 configuration error,
/// 2 runtime error.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace leoctl::cli
