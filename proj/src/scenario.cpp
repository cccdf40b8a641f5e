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

#include "leoctl/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace leoctl::sim {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(FaultKind k)
{
    switch (k) {
    case FaultKind::LinkDrop:
        return "link_drop";
    case FaultKind::NodeHalt:
        return "node_halt";
    case FaultKind::GslBlackout:
        return "gsl_blackout";
    case FaultKind::CredentialRevoke:
        return "credential_revoke";
    }
    return "?";
}

int WindowSpec::steps() const
{
    if (!(step_s > 0.0) || !(duration_s > 0.0)) {
        return 0;
    }
    return static_cast<int>(std::floor(duration_s / step_s + 1e-9));
}

namespace {

// Field access with the JSON path carried along for error messages.
class Obj {
  public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) {
            throw ConfigError(path_ + ": expected an object");
        }
    }

    void allow(std::initializer_list<const char*> keys) const
    {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, _] : j_.items()) {
            if (!ok.count(k)) {
                throw ConfigError(sub(k) + ": unknown key");
            }
        }
    }

    bool has(const char* key) const { return j_.contains(key); }
    const json& raw(const char* key) const { return j_.at(key); }
    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double num(const char* key, double def) const
    {
        if (!has(key)) {
            return def;
        }
        const json& v = j_.at(key);
        if (!v.is_number()) {
            throw ConfigError(sub(key) + ": expected a number");
        }
        return v.get<double>();
    }

    int integer(const char* key, int def) const
    {
        if (!has(key)) {
            return def;
        }
        const json& v = j_.at(key);
        if (!v.is_number_integer()) {
            throw ConfigError(sub(key) + ": expected an integer");
        }
        return v.get<int>();
    }

    bool boolean(const char* key, bool def) const
    {
        if (!has(key)) {
            return def;
        }
        const json& v = j_.at(key);
        if (!v.is_boolean()) {
            throw ConfigError(sub(key) + ": expected true or false");
        }
        return v.get<bool>();
    }

    std::string str(const char* key, const std::string& def) const
    {
        if (!has(key)) {
            return def;
        }
        const json& v = j_.at(key);
        if (!v.is_string()) {
            throw ConfigError(sub(key) + ": expected a string");
        }
        return v.get<std::string>();
    }

    std::vector<double> nums(const char* key, std::vector<double> def) const
    {
        if (!has(key)) {
            return def;
        }
        const json& v = j_.at(key);
        if (!v.is_array()) {
            throw ConfigError(sub(key) + ": expected an array of numbers");
        }
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) {
                throw ConfigError(sub(key) + ": expected an array of numbers");
            }
            out.push_back(x.get<double>());
        }
        return out;
    }

    std::vector<int> ints(const char* key) const
    {
        std::vector<int> out;
        if (!has(key)) {
            return out;
        }
        const json& v = j_.at(key);
        if (!v.is_array()) {
            throw ConfigError(sub(key) + ": expected an array of integers");
        }
        for (const auto& x : v) {
            if (!x.is_number_integer()) {
                throw ConfigError(sub(key) + ": expected an array of integers");
            }
            out.push_back(x.get<int>());
        }
        return out;
    }

  private:
    const json& j_;
    std::string path_;
};

fs::path resolve(const fs::path& base, const std::string& p)
{
    fs::path path(p);
    if (path.is_relative() && !base.empty()) {
        return base / path;
    }
    return path;
}

ephemeris::WalkerSpec parse_walker(const json& j, const std::string& path)
{
    Obj o(j, path);
    o.allow({"total_sats", "planes", "phasing", "inclination_deg", "altitude_km"});
    ephemeris::WalkerSpec w;
    w.total_sats = o.integer("total_sats", w.total_sats);
    w.planes = o.integer("planes", w.planes);
    w.phasing = o.integer("phasing", w.phasing);
    w.inclination_deg = o.num("inclination_deg", w.inclination_deg);
    w.altitude_km = o.num("altitude_km", w.altitude_km);
    return w;
}

ConstellationSpec parse_constellation(const json& j, const fs::path& base)
{
    Obj o(j, "constellation");
    o.allow({"walker", "shells", "tle", "starlink", "max_sats", "altitude_sweep_km"});
    ConstellationSpec c;
    const int sources = o.has("walker") + o.has("shells") + o.has("tle") + o.has("starlink");
    if (sources != 1) {
        throw ConfigError("constellation: exactly one of walker, shells, tle, starlink is required");
    }
    if (o.has("walker")) {
        c.kind = ConstellationSpec::Kind::Walker;
        c.shells.push_back(parse_walker(o.raw("walker"), "constellation.walker"));
    } else if (o.has("shells")) {
        c.kind = ConstellationSpec::Kind::Shells;
        const json& arr = o.raw("shells");
        if (!arr.is_array() || arr.empty()) {
            throw ConfigError("constellation.shells: expected a nonempty array");
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            c.shells.push_back(parse_walker(arr[i], "constellation.shells[" + std::to_string(i) + "]"));
        }
    } else if (o.has("tle")) {
        c.kind = ConstellationSpec::Kind::Tle;
        Obj t(o.raw("tle"), "constellation.tle");
        t.allow({"path", "strict"});
        if (!t.has("path")) {
            throw ConfigError("constellation.tle.path: required");
        }
        c.tle_path = resolve(base, t.str("path", ""));
        c.strict_tle = t.boolean("strict", false);
    } else {
        c.kind = ConstellationSpec::Kind::Starlink;
        Obj t(o.raw("starlink"), "constellation.starlink");
        t.allow({"strict"});
        c.strict_tle = t.boolean("strict", false);
    }
    if (o.has("max_sats")) {
        c.max_sats = o.integer("max_sats", 0);
    }
    c.altitude_sweep_km = o.nums("altitude_sweep_km", {});
    return c;
}

WindowSpec parse_window(const json& j)
{
    Obj o(j, "window");
    o.allow({"epoch", "duration_s", "step_s"});
    WindowSpec w;
    const std::string epoch = o.str("epoch", "2024-11-11T00:00:00Z");
    try {
        w.epoch = parse_utc(epoch);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("window.epoch: " + std::string(e.what()));
    }
    w.duration_s = o.num("duration_s", w.duration_s);
    w.step_s = o.num("step_s", w.step_s);
    return w;
}

StationSpec parse_stations(const json& j, const fs::path& base)
{
    StationSpec s;
    if (j.is_string()) {
        if (j.get<std::string>() != "default") {
            throw ConfigError("stations: expected \"default\", {\"csv\": path} or an array");
        }
        return s;
    }
    if (j.is_object()) {
        Obj o(j, "stations");
        o.allow({"csv"});
        s.kind = StationSpec::Kind::Csv;
        s.csv_path = resolve(base, o.str("csv", ""));
        return s;
    }
    if (!j.is_array()) {
        throw ConfigError("stations: expected \"default\", {\"csv\": path} or an array");
    }
    s.kind = StationSpec::Kind::Inline;
    for (std::size_t i = 0; i < j.size(); ++i) {
        Obj o(j[i], "stations[" + std::to_string(i) + "]");
        o.allow({"gs_id", "lat_deg", "lon_deg", "alt_m"});
        ephemeris::GroundStation gs;
        gs.gs_id = o.integer("gs_id", static_cast<int>(i));
        gs.latitude_deg = o.num("lat_deg", 0.0);
        gs.longitude_deg = o.num("lon_deg", 0.0);
        gs.altitude_m = o.num("alt_m", 0.0);
        s.stations.push_back(gs);
    }
    return s;
}

ThresholdSpec parse_thresholds(const json& j)
{
    Obj o(j, "thresholds");
    o.allow({"isl_rtt_s", "degree_rtt_s", "min_elevation_deg", "grazing_altitude_m", "episode_rtt_s",
             "episode_min_duration_s", "isl_sample_one_way_s", "isl_sample_stride", "histogram_bin_s",
             "max_isl_per_sat"});
    ThresholdSpec t;
    t.isl_rtt_s = o.num("isl_rtt_s", t.isl_rtt_s);
    t.degree_rtt_s = o.nums("degree_rtt_s", t.degree_rtt_s);
    t.min_elevation_deg = o.num("min_elevation_deg", t.min_elevation_deg);
    t.grazing_altitude_m = o.num("grazing_altitude_m", t.grazing_altitude_m);
    t.episode_rtt_s = o.num("episode_rtt_s", t.episode_rtt_s);
    t.episode_min_duration_s = o.num("episode_min_duration_s", t.episode_min_duration_s);
    t.isl_sample_one_way_s = o.num("isl_sample_one_way_s", t.isl_sample_one_way_s);
    t.isl_sample_stride = o.integer("isl_sample_stride", t.isl_sample_stride);
    t.histogram_bin_s = o.num("histogram_bin_s", t.histogram_bin_s);
    if (o.has("max_isl_per_sat")) {
        t.max_isl_per_sat = o.integer("max_isl_per_sat", 0);
    }
    return t;
}

ClusterSpec parse_cluster(const json& j)
{
    Obj o(j, "cluster");
    o.allow({"max_size", "rtt_threshold_s", "recluster_every_steps", "weights", "compute_avail",
             "default_compute_avail", "staleness_cycles"});
    ClusterSpec c;
    c.max_size = o.integer("max_size", c.max_size);
    c.rtt_threshold_s = o.num("rtt_threshold_s", c.rtt_threshold_s);
    c.recluster_every_steps = o.integer("recluster_every_steps", c.recluster_every_steps);
    c.default_compute_avail = o.num("default_compute_avail", c.default_compute_avail);
    c.staleness_cycles = o.integer("staleness_cycles", c.staleness_cycles);
    if (o.has("weights")) {
        Obj w(o.raw("weights"), "cluster.weights");
        w.allow({"conn", "comp", "fresh"});
        c.weights.w_conn = w.num("conn", c.weights.w_conn);
        c.weights.w_comp = w.num("comp", c.weights.w_comp);
        c.weights.w_fresh = w.num("fresh", c.weights.w_fresh);
    }
    if (o.has("compute_avail")) {
        const json& m = o.raw("compute_avail");
        if (!m.is_object()) {
            throw ConfigError("cluster.compute_avail: expected an object of node id -> value");
        }
        for (const auto& [k, v] : m.items()) {
            int id = 0;
            try {
                std::size_t used = 0;
                id = std::stoi(k, &used);
                if (used != k.size()) {
                    throw std::invalid_argument(k);
                }
            } catch (const std::exception&) {
                throw ConfigError("cluster.compute_avail." + k + ": key must be a node id");
            }
            if (!v.is_number()) {
                throw ConfigError("cluster.compute_avail." + k + ": expected a number");
            }
            c.compute_avail[id] = v.get<double>();
        }
    }
    return c;
}

fede2::ProtocolParams parse_protocol(const json& j)
{
    Obj o(j, "protocol");
    o.allow({"cycle_ms", "timeout_multiplier", "vote_window_ms", "telemetry_buffer"});
    fede2::ProtocolParams p;
    p.cycle = from_seconds(o.num("cycle_ms", 100.0) * 1e-3);
    p.timeout_multiplier = o.integer("timeout_multiplier", p.timeout_multiplier);
    p.vote_window = from_seconds(o.num("vote_window_ms", 0.0) * 1e-3);
    const int k = o.integer("telemetry_buffer", static_cast<int>(p.telemetry_buffer));
    if (k < 0) {
        throw ConfigError("protocol.telemetry_buffer: must be >= 0");
    }
    p.telemetry_buffer = static_cast<std::size_t>(k);
    return p;
}

LinkmapSpec parse_linkmap(const json& j)
{
    Obj o(j, "linkmap");
    o.allow({"capacity", "mode"});
    LinkmapSpec l;
    if (o.has("capacity")) {
        l.capacity = o.integer("capacity", 0);
    }
    l.mode = linkmap::mode_from_string(o.str("mode", "normal"));
    return l;
}

FaultEvent parse_fault(const json& j, const std::string& path)
{
    Obj o(j, path);
    o.allow({"time_s", "kind", "pair", "node", "stations", "duration_s"});
    FaultEvent f;
    f.time_s = o.num("time_s", 0.0);
    const std::string kind = o.str("kind", "");
    if (kind == "link_drop") {
        f.kind = FaultKind::LinkDrop;
        const auto p = o.ints("pair");
        if (p.size() != 2) {
            throw ConfigError(o.sub("pair") + ": expected two node ids");
        }
        f.pair = {std::min(p[0], p[1]), std::max(p[0], p[1])};
    } else if (kind == "node_halt") {
        f.kind = FaultKind::NodeHalt;
        f.node = o.integer("node", 0);
    } else if (kind == "gsl_blackout") {
        f.kind = FaultKind::GslBlackout;
        f.stations = o.ints("stations");
    } else if (kind == "credential_revoke") {
        f.kind = FaultKind::CredentialRevoke;
        f.node = o.integer("node", 0);
    } else {
        throw ConfigError(o.sub("kind") +
                          ": expected link_drop, node_halt, gsl_blackout or credential_revoke");
    }
    f.duration_s = o.num("duration_s", f.kind == FaultKind::CredentialRevoke ? 0.0 : -1.0);
    return f;
}

Injection parse_injection(const json& j, const std::string& path)
{
    Obj o(j, path);
    o.allow({"time_s", "node", "to_leader_of", "key", "value", "signed", "tampered"});
    Injection in;
    in.time_s = o.num("time_s", 0.0);
    if (o.has("node")) {
        in.node = o.integer("node", 0);
    }
    if (o.has("to_leader_of")) {
        in.leader_of = o.integer("to_leader_of", 0);
    }
    in.key = o.str("key", "policy");
    in.value = o.str("value", "");
    in.is_signed = o.boolean("signed", true);
    in.tampered = o.boolean("tampered", false);
    return in;
}

}  // namespace

Scenario parse_scenario(std::string_view json_text, const fs::path& base_dir)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
    }
    Obj o(root, "");
    o.allow({"name", "constellation", "window", "stations", "thresholds", "cluster", "protocol",
             "linkmap", "faults", "injections", "seed", "loss_rate", "propagation", "trace"});
    Scenario s;
    s.name = o.str("name", s.name);
    if (!o.has("constellation")) {
        throw ConfigError("constellation: required");
    }
    s.constellation = parse_constellation(o.raw("constellation"), base_dir);
    if (!o.has("window")) {
        throw ConfigError("window: required");
    }
    s.window = parse_window(o.raw("window"));
    if (o.has("stations")) {
        s.stations = parse_stations(o.raw("stations"), base_dir);
    }
    if (o.has("thresholds")) {
        s.thresholds = parse_thresholds(o.raw("thresholds"));
    }
    if (o.has("cluster")) {
        s.cluster = parse_cluster(o.raw("cluster"));
    }
    if (o.has("protocol")) {
        s.protocol = parse_protocol(o.raw("protocol"));
    }
    if (o.has("linkmap")) {
        s.linkmap = parse_linkmap(o.raw("linkmap"));
    }
    if (o.has("faults")) {
        const json& arr = o.raw("faults");
        if (!arr.is_array()) {
            throw ConfigError("faults: expected an array");
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            s.faults.push_back(parse_fault(arr[i], "faults[" + std::to_string(i) + "]"));
        }
    }
    if (o.has("injections")) {
        const json& arr = o.raw("injections");
        if (!arr.is_array()) {
            throw ConfigError("injections: expected an array");
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            s.injections.push_back(parse_injection(arr[i], "injections[" + std::to_string(i) + "]"));
        }
    }
    if (o.has("seed")) {
        const json& v = o.raw("seed");
        if (!v.is_number_unsigned()) {
            throw ConfigError("seed: expected a nonnegative integer");
        }
        s.seed = v.get<std::uint64_t>();
    }
    s.loss_rate = o.num("loss_rate", s.loss_rate);
    if (o.has("propagation")) {
        Obj p(o.raw("propagation"), "propagation");
        p.allow({"j2"});
        s.j2 = p.boolean("j2", false);
    }
    const std::string trace = o.str("trace", "compact");
    if (trace == "compact") {
        s.trace = TraceMode::Compact;
    } else if (trace == "full") {
        s.trace = TraceMode::Full;
    } else {
        throw ConfigError("trace: expected \"compact\" or \"full\"");
    }
    return s;
}

Scenario load_scenario(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw ConfigError("scenario: cannot open " + file.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), file.parent_path());
}

namespace {

void check_walker(const ephemeris::WalkerSpec& w, const std::string& path, std::vector<std::string>& out)
{
    if (w.total_sats < 1) {
        out.push_back(path + ".total_sats: must be >= 1");
    }
    if (w.planes < 1) {
        out.push_back(path + ".planes: must be >= 1");
    } else if (w.total_sats >= 1 && w.total_sats % w.planes != 0) {
        out.push_back(path + ".planes: " + std::to_string(w.total_sats) +
                      " satellites cannot be split evenly into " + std::to_string(w.planes) +
                      " planes");
    }
    if (w.planes >= 1 && (w.phasing < 0 || w.phasing >= w.planes)) {
        out.push_back(path + ".phasing: must satisfy 0 <= phasing < planes");
    }
    if (!(w.altitude_km > 0.0)) {
        out.push_back(path + ".altitude_km: must be positive");
    }
    if (!(w.inclination_deg >= 0.0 && w.inclination_deg <= 180.0)) {
        out.push_back(path + ".inclination_deg: must lie in [0, 180]");
    }
}

}  // namespace

std::vector<std::string> check_scenario(const Scenario& s)
{
    std::vector<std::string> out;
    const auto& c = s.constellation;
    switch (c.kind) {
    case ConstellationSpec::Kind::Walker:
        check_walker(c.shells.at(0), "constellation.walker", out);
        break;
    case ConstellationSpec::Kind::Shells:
        for (std::size_t i = 0; i < c.shells.size(); ++i) {
            check_walker(c.shells[i], "constellation.shells[" + std::to_string(i) + "]", out);
        }
        break;
    case ConstellationSpec::Kind::Tle:
        if (!fs::is_regular_file(c.tle_path)) {
            out.push_back("constellation.tle.path: file not found: " + c.tle_path.string());
        }
        break;
    case ConstellationSpec::Kind::Starlink:
        if (const char* env = std::getenv("LEOCTL_TLE_SNAPSHOT"); env && *env && !fs::is_regular_file(env)) {
            out.push_back(std::string("constellation.starlink: LEOCTL_TLE_SNAPSHOT file not found: ") + env);
        }
        break;
    }
    if (c.max_sats && *c.max_sats < 1) {
        out.push_back("constellation.max_sats: must be >= 1");
    }
    for (double a : c.altitude_sweep_km) {
        if (!(a > 0.0)) {
            out.push_back("constellation.altitude_sweep_km: altitudes must be positive");
            break;
        }
    }

    const auto& w = s.window;
    if (!(w.step_s > 0.0)) {
        out.push_back("window.step_s: must be > 0");
    }
    if (!(w.duration_s > 0.0)) {
        out.push_back("window.duration_s: must be > 0");
    } else if (w.step_s > 0.0 && w.steps() < 1) {
        out.push_back("window.duration_s: shorter than one step");
    }

    if (s.stations.kind == StationSpec::Kind::Csv && !fs::is_regular_file(s.stations.csv_path)) {
        out.push_back("stations.csv: file not found: " + s.stations.csv_path.string());
    }
    if (s.stations.kind == StationSpec::Kind::Inline) {
        std::set<int> ids;
        for (const auto& g : s.stations.stations) {
            if (!ids.insert(g.gs_id).second) {
                out.push_back("stations: duplicate gs_id " + std::to_string(g.gs_id));
            }
            if (std::abs(g.latitude_deg) > 90.0) {
                out.push_back("stations: gs_id " + std::to_string(g.gs_id) + " latitude outside [-90, 90]");
            }
        }
    }

    const auto& t = s.thresholds;
    if (!(t.isl_rtt_s > 0.0)) {
        out.push_back("thresholds.isl_rtt_s: must be > 0");
    }
    for (double d : t.degree_rtt_s) {
        if (!(d > 0.0)) {
            out.push_back("thresholds.degree_rtt_s: thresholds must be > 0");
            break;
        }
    }
    if (!(t.min_elevation_deg >= 0.0 && t.min_elevation_deg < 90.0)) {
        out.push_back("thresholds.min_elevation_deg: must lie in [0, 90)");
    }
    if (!(t.grazing_altitude_m >= 0.0)) {
        out.push_back("thresholds.grazing_altitude_m: must be >= 0");
    }
    if (!(t.episode_rtt_s > 0.0)) {
        out.push_back("thresholds.episode_rtt_s: must be > 0");
    }
    if (!(t.episode_min_duration_s >= 0.0)) {
        out.push_back("thresholds.episode_min_duration_s: must be >= 0");
    }
    if (!(t.isl_sample_one_way_s > 0.0)) {
        out.push_back("thresholds.isl_sample_one_way_s: must be > 0");
    }
    if (t.isl_sample_stride < 1) {
        out.push_back("thresholds.isl_sample_stride: must be >= 1");
    }
    if (!(t.histogram_bin_s > 0.0)) {
        out.push_back("thresholds.histogram_bin_s: must be > 0");
    }
    if (t.max_isl_per_sat && *t.max_isl_per_sat < 1) {
        out.push_back("thresholds.max_isl_per_sat: must be >= 1");
    }

    const auto& cl = s.cluster;
    if (cl.max_size < 1) {
        out.push_back("cluster.max_size: must be >= 1");
    }
    if (!(cl.rtt_threshold_s > 0.0)) {
        out.push_back("cluster.rtt_threshold_s: must be > 0");
    }
    if (cl.recluster_every_steps < 0) {
        out.push_back("cluster.recluster_every_steps: must be >= 0");
    }
    if (cl.staleness_cycles < 1) {
        out.push_back("cluster.staleness_cycles: must be >= 1");
    }
    try {
        cl.weights.validate();
    } catch (const ConfigError& e) {
        out.push_back(std::string("cluster.weights: ") + e.what());
    }
    if (!(cl.default_compute_avail >= 0.0 && cl.default_compute_avail <= 1.0)) {
        out.push_back("cluster.default_compute_avail: must lie in [0, 1]");
    }
    for (const auto& [id, v] : cl.compute_avail) {
        if (!(v >= 0.0 && v <= 1.0)) {
            out.push_back("cluster.compute_avail." + std::to_string(id) + ": must lie in [0, 1]");
        }
    }

    try {
        s.protocol.validate();
    } catch (const ConfigError& e) {
        out.push_back(std::string("protocol: ") + e.what());
    }
    if (w.step_s > 0.0 && s.protocol.cycle.count() > 0) {
        const SimTime step = from_seconds(w.step_s);
        if (step.count() % s.protocol.cycle.count() != 0) {
            out.push_back("window.step_s: must be a multiple of protocol.cycle_ms");
        }
    }
    if (s.linkmap.capacity && *s.linkmap.capacity < 0) {
        out.push_back("linkmap.capacity: must be >= 0");
    }

    for (std::size_t i = 0; i < s.faults.size(); ++i) {
        const auto& f = s.faults[i];
        const std::string p = "faults[" + std::to_string(i) + "]";
        if (!(f.time_s >= 0.0 && f.time_s < w.duration_s)) {
            out.push_back(p + ".time_s: must lie inside the window");
        }
        if (f.kind != FaultKind::CredentialRevoke && !(f.duration_s > 0.0)) {
            out.push_back(p + ".duration_s: must be > 0");
        }
        if (f.kind == FaultKind::LinkDrop && f.pair.first == f.pair.second) {
            out.push_back(p + ".pair: endpoints must differ");
        }
        if (f.kind == FaultKind::GslBlackout && f.stations.empty()) {
            out.push_back(p + ".stations: must name at least one station");
        }
    }
    for (std::size_t i = 0; i < s.injections.size(); ++i) {
        const auto& in = s.injections[i];
        const std::string p = "injections[" + std::to_string(i) + "]";
        if (in.node.has_value() == in.leader_of.has_value()) {
            out.push_back(p + ": exactly one of node, to_leader_of is required");
        }
        if (!(in.time_s >= 0.0 && in.time_s < w.duration_s)) {
            out.push_back(p + ".time_s: must lie inside the window");
        }
    }
    if (!(s.loss_rate >= 0.0 && s.loss_rate < 1.0)) {
        out.push_back("loss_rate: must lie in [0, 1)");
    }
    return out;
}

void require_valid(const Scenario& s)
{
    const auto d = check_scenario(s);
    if (!d.empty()) {
        throw ConfigError(d.front());
    }
}

std::vector<ephemeris::WalkerSpec> starlink_surrogate_shells()
{
    // inclination, altitude, planes x slots
    return {
        {1584, 72, 1, 53.0, 550.0}, {1584, 72, 1, 53.2, 540.0}, {720, 36, 1, 70.0, 570.0},
        {348, 6, 1, 97.6, 560.0},   {172, 4, 1, 97.6, 560.0},   {1064, 28, 1, 43.0, 530.0},
        {1064, 28, 1, 43.0, 525.0},
    };
}

namespace {

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + p.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<ephemeris::OrbitalElements> generate_shells(std::vector<ephemeris::WalkerSpec> shells,
                                                        UtcTime epoch, std::optional<double> altitude,
                                                        bool offset_shells)
{
    std::vector<ephemeris::OrbitalElements> out;
    int next_id = 0;
    for (std::size_t k = 0; k < shells.size(); ++k) {
        auto w = shells[k];
        if (altitude) {
            w.altitude_km = *altitude;
        }
        auto els = ephemeris::generate_walker(w, epoch, next_id);
        if (offset_shells && k > 0) {
            // co-planar shells would otherwise stack satellites on one point
            for (auto& e : els) {
                e.raan = ephemeris::normalize_angle(e.raan + static_cast<double>(k) * 7.3 * kDegToRad);
                e.mean_anomaly =
                    ephemeris::normalize_angle(e.mean_anomaly + static_cast<double>(k) * 3.1 * kDegToRad);
            }
        }
        next_id += w.total_sats;
        out.insert(out.end(), els.begin(), els.end());
    }
    return out;
}

}  // namespace

Constellation build_constellation(const Scenario& s, std::optional<double> altitude_override_km)
{
    const auto& c = s.constellation;
    Constellation out;
    auto load_tle = [&](const fs::path& p, bool strict) {
        auto parsed = ephemeris::parse_tle(read_file(p), strict ? ephemeris::TleMode::Strict
                                                                : ephemeris::TleMode::Lenient);
        out.elements = std::move(parsed.elements);
        out.issues = std::move(parsed.issues);
        out.label = "tle:" + p.filename().string();
    };
    switch (c.kind) {
    case ConstellationSpec::Kind::Walker:
    case ConstellationSpec::Kind::Shells:
        out.elements = generate_shells(c.shells, s.window.epoch, altitude_override_km, true);
        out.label = c.kind == ConstellationSpec::Kind::Walker ? "walker" : "shells";
        break;
    case ConstellationSpec::Kind::Tle:
        load_tle(c.tle_path, c.strict_tle);
        break;
    case ConstellationSpec::Kind::Starlink:
        if (const char* env = std::getenv("LEOCTL_TLE_SNAPSHOT"); env && *env) {
            load_tle(env, c.strict_tle);
        } else {
            out.elements = generate_shells(starlink_surrogate_shells(), s.window.epoch,
                                           altitude_override_km, true);
            out.label = "surrogate:starlink-7-shell";
        }
        break;
    }
    std::sort(out.elements.begin(), out.elements.end(),
              [](const auto& a, const auto& b) { return a.sat_id < b.sat_id; });
    // duplicate catalog numbers in a TLE file: keep the first record
    out.elements.erase(std::unique(out.elements.begin(), out.elements.end(),
                                   [](const auto& a, const auto& b) { return a.sat_id == b.sat_id; }),
                       out.elements.end());
    if (c.max_sats && static_cast<int>(out.elements.size()) > *c.max_sats) {
        out.elements.resize(static_cast<std::size_t>(*c.max_sats));
    }
    if (out.elements.empty()) {
        throw ConfigError("constellation: no satellites");
    }
    return out;
}

std::vector<ephemeris::GroundStation> build_stations(const Scenario& s)
{
    switch (s.stations.kind) {
    case StationSpec::Kind::Default:
        return ephemeris::default_ground_stations();
    case StationSpec::Kind::Csv:
        return ephemeris::parse_ground_stations_csv(read_file(s.stations.csv_path));
    case StationSpec::Kind::Inline:
        return s.stations.stations;
    }
    return {};
}

}  // namespace leoctl::sim
