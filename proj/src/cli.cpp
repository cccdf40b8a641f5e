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

#include "leoctl/cli.hpp"

#include "leoctl/topology.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

namespace leoctl::cli {

namespace fs = std::filesystem;
using metrics::format_number;

namespace {

const std::vector<double> kPercentiles{5.0, 50.0, 95.0};
constexpr std::size_t kEcdfPoints = 5000;

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw ConfigError("scenario: cannot open " + p.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Output directory with a manifest and the file list.
class RunDir {
  public:
    RunDir(const fs::path& dir, std::string command) : dir_(dir), command_(std::move(command))
    {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) {
            throw IoError("cannot create " + dir_.string() + ": " + ec.message());
        }
    }

    std::ofstream open(const std::string& name)
    {
        std::ofstream os(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!os) {
            throw IoError("cannot write " + (dir_ / name).string());
        }
        files_.push_back(name);
        return os;
    }

    void close(std::ofstream& os, const std::string& name)
    {
        os.close();
        if (!os) {
            throw IoError("write failed: " + (dir_ / name).string());
        }
    }

    template <class Fn>
    void write(const std::string& name, Fn fn)
    {
        auto os = open(name);
        fn(os);
        close(os, name);
    }

    void finish(const ScenarioInput& in, const std::string& constellation, std::size_t sats, int threads,
                double wall_s)
    {
        write("scenario.json", [&](std::ostream& os) { os << in.text; });
        nlohmann::ordered_json m;
        m["tool"] = "leoctl";
        m["version"] = std::string(kVersion);
        m["command"] = command_;
        m["scenario"] = in.scenario.name;
        if (!in.path.empty()) {
            m["scenario_source"] = in.path.string();
        }
        m["seed"] = in.scenario.seed;
        m["constellation"] = constellation;
        m["satellites"] = sats;
        m["epoch"] = format_utc(in.scenario.window.epoch);
        m["duration_s"] = in.scenario.window.duration_s;
        m["step_s"] = in.scenario.window.step_s;
        m["threads"] = threads;
        m["wall_time_s"] = wall_s;
        m["outputs"] = files_;
        std::ofstream os(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
        os << m.dump(2) << '\n';
        if (!os) {
            throw IoError("cannot write " + (dir_ / "manifest.json").string());
        }
    }

    const std::vector<std::string>& files() const { return files_; }

  private:
    fs::path dir_;
    std::string command_;
    std::vector<std::string> files_;
};

double elapsed_s(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

sim::Scenario effective(const ScenarioInput& in, const RunOptions& opt)
{
    sim::Scenario s = in.scenario;
    s.constellation.strict_tle = s.constellation.strict_tle || opt.strict_tle;
    sim::require_valid(s);
    return s;
}

void gate_size(std::size_t n, const RunOptions& opt)
{
    if (n > kLargeConstellation && !opt.allow_large) {
        throw ConfigError("constellation: " + std::to_string(n) + " satellites; runs this size take minutes, pass "
                          "--allow-large to proceed");
    }
}

ephemeris::PropagationContext context(const sim::Scenario& s)
{
    ephemeris::PropagationContext ctx;
    ctx.scenario_epoch = s.window.epoch;
    ctx.theta0 = ephemeris::gmst_angle(s.window.epoch);
    ctx.j2 = s.j2;
    return ctx;
}

std::string ms_label(double seconds) { return format_number(seconds * 1e3) + "ms"; }

void summary_row(std::ostream& os, const std::string& k, double v) { os << k << ',' << format_number(v) << '\n'; }

void summary_row(std::ostream& os, const std::string& k, std::int64_t v) { os << k << ',' << v << '\n'; }

// RTTs of every visible station-satellite pair; no ISL work.
std::vector<double> gsl_only(const std::vector<ephemeris::OrbitalElements>& els,
                             const std::vector<ephemeris::GroundStation>& stations, const sim::Scenario& s)
{
    const auto ctx = context(s);
    std::vector<Vec3> gp;
    for (const auto& g : stations) {
        gp.push_back(ephemeris::ground_station_position(g));
    }
    std::vector<double> out;
    for (int k = 0; k < s.window.steps(); ++k) {
        const auto states = ephemeris::propagate_all(els, k * s.window.step_s, ctx);
        for (const Vec3& g : gp) {
            for (const auto& st : states) {
                if (topology::elevation_angle(g, st.position_ecef) >= s.thresholds.min_elevation_deg) {
                    out.push_back(2.0 * topology::one_way_delay(distance(g, st.position_ecef)));
                }
            }
        }
    }
    return out;
}

void write_distribution(RunDir& dir, const std::string& stem, const std::vector<double>& samples,
                        std::optional<metrics::Percentiles>& pct)
{
    if (samples.empty()) {
        return;
    }
    const auto e = metrics::decimate(metrics::ecdf(samples), kEcdfPoints);
    dir.write(stem + "_ecdf.csv", [&](std::ostream& os) { metrics::write_ecdf_csv(os, e); });
    pct = metrics::percentiles(samples, kPercentiles);
    dir.write(stem + "_percentiles.csv", [&](std::ostream& os) { metrics::write_percentiles_csv(os, *pct); });
}

}  // namespace

ScenarioInput read_scenario(const fs::path& file)
{
    ScenarioInput in;
    in.text = slurp(file);
    in.scenario = sim::parse_scenario(in.text, file.parent_path());
    in.path = file;
    return in;
}

ScenarioInput scenario_from_text(std::string text, const fs::path& base_dir)
{
    ScenarioInput in;
    in.scenario = sim::parse_scenario(text, base_dir);
    in.text = std::move(text);
    return in;
}

fs::path run_directory(const sim::Scenario& s, std::string_view command, const RunOptions& opt)
{
    if (opt.out) {
        return *opt.out;
    }
    const char* root = std::getenv("LEOCTL_OUTPUT_ROOT");
    const fs::path base = root && *root ? fs::path(root) : fs::path("runs");
    return base / (s.name + "-" + std::string(command));
}

// ---------------------------------------------------------------------------

TopologyReport topology(const ScenarioInput& in, const RunOptions& opt)
{
    const auto t0 = std::chrono::steady_clock::now();
    const sim::Scenario s = effective(in, opt);
    const auto c = sim::build_constellation(s);
    gate_size(c.elements.size(), opt);
    const auto stations = sim::build_stations(s);
    const auto& th = s.thresholds;

    topology::AnalysisConfig ac;
    ac.step_seconds = s.window.step_s;
    ac.grazing_altitude = th.grazing_altitude_m;
    ac.min_elevation_deg = th.min_elevation_deg;
    ac.episode_threshold = th.episode_rtt_s;
    ac.episode_kind = topology::ThresholdKind::Rtt;
    ac.episode_min_duration = th.episode_min_duration_s;
    ac.degree_thresholds = th.degree_rtt_s;
    ac.degree_kind = topology::ThresholdKind::Rtt;
    ac.isl_sample_threshold = th.isl_sample_one_way_s;
    ac.isl_sample_kind = topology::ThresholdKind::OneWay;
    ac.isl_sample_stride = th.isl_sample_stride;
    ac.threads = opt.threads;
    topology::TopologyAnalyzer an(ac);
    const auto ctx = context(s);
    for (int k = 0; k < s.window.steps(); ++k) {
        const auto states = ephemeris::propagate_all(c.elements, k * s.window.step_s, ctx);
        an.add_step(k, states, stations);
    }
    const auto res = an.finish();

    TopologyReport rep;
    rep.constellation = c.label;
    rep.satellites = c.elements.size();
    rep.steps = res.steps;
    rep.directory = run_directory(s, "topology", opt);
    RunDir dir(rep.directory, "topology");

    std::vector<double> durations;
    durations.reserve(res.episodes.size());
    for (const auto& e : res.episodes) {
        durations.push_back(e.duration);
    }
    rep.episodes = durations.size();
    const auto hist = metrics::histogram_pdf(durations, th.histogram_bin_s);
    dir.write("isl_duration_pdf.csv", [&](std::ostream& os) { metrics::write_histogram_csv(os, hist); });
    if (!durations.empty()) {
        const auto top = std::max_element(hist.density.begin(), hist.density.end());
        const auto i = static_cast<std::size_t>(top - hist.density.begin());
        rep.duration_mode_s = 0.5 * (hist.edges[i] + hist.edges[i + 1]);
        const double med[] = {50.0};
        rep.duration_median_s = metrics::percentiles(durations, med).value[0];
        rep.duration_max_s = *std::max_element(durations.begin(), durations.end());
        rep.episodes_over_hour = static_cast<std::size_t>(
            std::count_if(durations.begin(), durations.end(), [](double d) { return d > 3600.0; }));
    }

    for (const auto& series : res.degree) {
        dir.write("isl_degree_" + ms_label(series.threshold) + ".csv",
                  [&](std::ostream& os) { metrics::write_mean_std_csv(os, series); });
        double sum = 0.0;
        for (const auto& p : series.points) {
            sum += p.mean;
        }
        rep.mean_degree[series.threshold] = series.points.empty() ? 0.0 : sum / series.points.size();
    }

    write_distribution(dir, "gsl_rtt", res.gsl_rtt, rep.gsl_rtt);
    write_distribution(dir, "isl_rtt", res.isl_rtt, rep.isl_rtt);

    for (double alt : s.constellation.altitude_sweep_km) {
        const auto ca = sim::build_constellation(s, alt);
        const auto samples = gsl_only(ca.elements, stations, s);
        std::optional<metrics::Percentiles> p;
        write_distribution(dir, "gsl_rtt_" + format_number(alt) + "km", samples, p);
        if (p) {
            rep.gsl_rtt_by_altitude[alt] = *p;
        }
    }

    dir.write("summary.csv", [&](std::ostream& os) {
        os << "metric,value\n";
        summary_row(os, "satellites", static_cast<std::int64_t>(rep.satellites));
        summary_row(os, "steps", static_cast<std::int64_t>(rep.steps));
        summary_row(os, "episodes", static_cast<std::int64_t>(rep.episodes));
        summary_row(os, "duration_mode_s", rep.duration_mode_s);
        summary_row(os, "duration_median_s", rep.duration_median_s);
        summary_row(os, "duration_max_s", rep.duration_max_s);
        summary_row(os, "episodes_over_1h", static_cast<std::int64_t>(rep.episodes_over_hour));
        for (const auto& [thr, mean] : rep.mean_degree) {
            summary_row(os, "mean_degree_" + ms_label(thr), mean);
        }
        auto pct = [&](const std::string& stem, const std::optional<metrics::Percentiles>& p) {
            if (!p) {
                return;
            }
            for (std::size_t i = 0; i < p->p.size(); ++i) {
                summary_row(os, stem + "_p" + format_number(p->p[i]) + "_s", p->value[i]);
            }
        };
        pct("isl_rtt", rep.isl_rtt);
        pct("gsl_rtt", rep.gsl_rtt);
    });
    rep.files = dir.files();
    dir.finish(in, c.label, c.elements.size(), opt.threads, elapsed_s(t0));
    return rep;
}

// ---------------------------------------------------------------------------

ClusterSimReport cluster_sim(const ScenarioInput& in, const RunOptions& opt)
{
    const auto t0 = std::chrono::steady_clock::now();
    const sim::Scenario s = effective(in, opt);
    const auto c = sim::build_constellation(s);
    gate_size(c.elements.size(), opt);
    const auto stations = sim::build_stations(s);

    ClusterSimReport rep;
    rep.directory = run_directory(s, "cluster-sim", opt);
    RunDir dir(rep.directory, "cluster-sim");
    {
        auto trace = dir.open("trace.jsonl");
        auto cfg = sim::kernel_config(s);
        cfg.trace = &trace;
        rep.run = sim::run_control(cfg, sim::scenario_snapshots(s, c, stations, opt.threads));
        dir.close(trace, "trace.jsonl");
    }
    const auto& m = rep.run.metrics;

    dir.write("summary.csv", [&](std::ostream& os) {
        os << "metric,value\n";
        summary_row(os, "formation_elections", std::int64_t{m.formation_elections});
        summary_row(os, "protocol_elections", std::int64_t{m.protocol_elections});
        summary_row(os, "reclusterings", std::int64_t{m.reclusterings});
        summary_row(os, "failovers", static_cast<std::int64_t>(m.failovers.size()));
        std::vector<double> lat;
        for (const auto& f : m.failovers) {
            if (f.latency) {
                lat.push_back(to_seconds(*f.latency));
            }
        }
        summary_row(os, "failovers_completed", static_cast<std::int64_t>(lat.size()));
        summary_row(os, "failover_latency_max_s", lat.empty() ? 0.0 : *std::max_element(lat.begin(), lat.end()));
        summary_row(os, "failover_latency_mean_s",
                    lat.empty() ? 0.0 : std::accumulate(lat.begin(), lat.end(), 0.0) / lat.size());
        double lost = 0.0;
        for (const auto& q : m.quorum_loss) {
            lost += to_seconds(q.end.value_or(q.start) - q.start);
        }
        summary_row(os, "quorum_loss_intervals", static_cast<std::int64_t>(m.quorum_loss.size()));
        summary_row(os, "quorum_loss_total_s", lost);
        summary_row(os, "injected_updates", std::int64_t{m.injected_updates});
        summary_row(os, "injected_invalid", std::int64_t{m.injected_invalid});
        summary_row(os, "rejected_updates", std::int64_t{m.rejected_updates});
        summary_row(os, "rejected_invalid", std::int64_t{m.rejected_invalid});
        summary_row(os, "applied_invalid", std::int64_t{m.applied_invalid});
        summary_row(os, "invalid_version_changes", std::int64_t{m.invalid_version_changes});
        summary_row(os, "undelivered_injections", std::int64_t{m.undelivered_injections});
        summary_row(os, "messages_sent", m.messages_sent);
        summary_row(os, "messages_delivered", m.messages_delivered);
        for (const auto& [reason, n] : m.messages_dropped) {
            std::string key = reason;
            std::replace(key.begin(), key.end(), ' ', '_');
            summary_row(os, "dropped_" + key, n);
        }
        summary_row(os, "split_brain_violations", std::int64_t{m.split_brain_violations});
        summary_row(os, "conflicting_leader_alerts", std::int64_t{m.conflicting_leader_alerts});
        summary_row(os, "trace_records", m.trace_records);
    });
    dir.write("failovers.csv", [&](std::ostream& os) {
        os << "halt_time_s,cluster_id,old_leader,old_term,new_leader,latency_s\n";
        for (const auto& f : m.failovers) {
            os << format_number(to_seconds(f.halt_time)) << ',' << f.cluster_id << ',' << f.old_leader << ','
               << f.old_term << ',' << (f.new_leader ? std::to_string(*f.new_leader) : std::string()) << ','
               << (f.latency ? format_number(to_seconds(*f.latency)) : std::string()) << '\n';
        }
    });
    dir.write("quorum_loss.csv", [&](std::ostream& os) {
        os << "cluster_id,start_s,end_s,duration_s\n";
        for (const auto& q : m.quorum_loss) {
            const SimTime end = q.end.value_or(q.start);
            os << q.cluster_id << ',' << format_number(to_seconds(q.start)) << ','
               << format_number(to_seconds(end)) << ',' << format_number(to_seconds(end - q.start)) << '\n';
        }
    });
    dir.write("leaders.csv", [&](std::ostream& os) {
        os << "time_s,cluster_id,term,node_id\n";
        for (const auto& l : m.leaders) {
            os << format_number(to_seconds(l.time)) << ',' << l.cluster_id << ',' << l.term << ',' << l.node
               << '\n';
        }
    });
    dir.write("clusters.csv", [&](std::ostream& os) {
        os << "time_s,cluster_id,node_id,role,term\n";
        for (const auto& r : rep.run.cluster_rows) {
            os << format_number(r.time_s) << ',' << r.cluster_id << ',' << r.node_id << ','
               << fede2::to_string(r.role) << ',' << r.term << '\n';
        }
    });
    rep.files = dir.files();
    dir.finish(in, c.label, c.elements.size(), opt.threads, elapsed_s(t0));
    return rep;
}

// ---------------------------------------------------------------------------

LinkmapReport linkmap_eval(const ScenarioInput& in, const RunOptions& opt)
{
    const auto t0 = std::chrono::steady_clock::now();
    const sim::Scenario s = effective(in, opt);
    const auto c = sim::build_constellation(s);
    gate_size(c.elements.size(), opt);
    const auto stations = sim::build_stations(s);
    const auto snapshot = sim::scenario_snapshots(s, c, stations, opt.threads);

    // every member reports to its cluster leader once per class and step
    std::vector<metrics::DecisionRecord> rows;
    std::int64_t next_id = 0;
    for (int k = 0; k < s.window.steps(); ++k) {
        const auto snap = snapshot(k);
        auto clusters = cluster::form_clusters(snap, s.cluster.max_size, s.cluster.rtt_threshold_s);
        for (auto& cl : clusters) {
            if (cl.members.size() < 2) {
                continue;
            }
            const auto deg = cluster::degree_norm(cl, snap, s.cluster.rtt_threshold_s);
            std::map<int, cluster::NodeMetrics> nm;
            for (int id : cl.members) {
                const auto it = s.cluster.compute_avail.find(id);
                nm[id] = {id, deg.at(id),
                          it == s.cluster.compute_avail.end() ? s.cluster.default_compute_avail : it->second, 1.0};
            }
            const int leader = cluster::elect_leader(cl, nm, s.cluster.weights);
            for (int id : cl.members) {
                if (id == leader) {
                    continue;
                }
                const auto links = sim::route_candidates(snap, id, leader, cl.members);
                for (auto cls : linkmap::kAllClasses) {
                    linkmap::ControlMessage msg;
                    msg.msg_id = next_id++;
                    msg.cls = cls;
                    msg.src = id;
                    msg.dst = leader;
                    msg.created_at = snap.time;
                    rows.push_back({snap.time, msg, linkmap::select_link(msg, links)});
                }
            }
        }
    }

    LinkmapReport rep;
    for (auto cls : linkmap::kAllClasses) {
        ClassSummary cs;
        cs.cls = std::string(linkmap::to_string(cls));
        double sum = 0.0;
        for (const auto& r : rows) {
            if (r.msg.cls != cls) {
                continue;
            }
            ++cs.messages;
            if (!r.decision.chosen) {
                ++cs.none;
                continue;
            }
            (r.decision.chosen->kind == topology::LinkKind::Isl ? cs.isl : cs.gsl) += 1;
            cs.degraded += r.decision.degraded;
            sum += r.decision.expected_delay;
        }
        const std::size_t chosen = cs.isl + cs.gsl;
        cs.mean_delay_s = chosen ? sum / static_cast<double>(chosen) : 0.0;
        rep.classes.push_back(cs);
    }
    rep.directory = run_directory(s, "linkmap-eval", opt);
    RunDir dir(rep.directory, "linkmap-eval");
    dir.write("decisions.csv", [&](std::ostream& os) { metrics::write_decisions_csv(os, rows); });
    dir.write("class_summary.csv", [&](std::ostream& os) {
        os << "class,messages,isl,gsl,none,degraded,mean_delay_s\n";
        for (const auto& cs : rep.classes) {
            os << cs.cls << ',' << cs.messages << ',' << cs.isl << ',' << cs.gsl << ',' << cs.none << ','
               << cs.degraded << ',' << format_number(cs.mean_delay_s) << '\n';
        }
    });
    rep.files = dir.files();
    dir.finish(in, c.label, c.elements.size(), opt.threads, elapsed_s(t0));
    return rep;
}

// ---------------------------------------------------------------------------

std::vector<std::string> validate(const fs::path& file)
{
    sim::Scenario s;
    try {
        s = read_scenario(file).scenario;
    } catch (const ConfigError& e) {
        return {e.what()};
    }
    auto d = sim::check_scenario(s);
    if (d.empty()) {
        try {
            (void)sim::build_constellation(s);
            (void)sim::build_stations(s);
        } catch (const Error& e) {
            d.emplace_back(e.what());
        }
    }
    return d;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"LEO constellation topology and control-plane simulator", "leoctl"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    fs::path scenario;
    RunOptions opt;
    std::string out_dir;
    auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("--scenario", scenario, "scenario JSON file")->required();
        sub->add_option("--out", out_dir, "run directory (default $LEOCTL_OUTPUT_ROOT/<name>-<command>)");
        sub->add_option("--threads", opt.threads, "worker threads for geometry")->check(CLI::Range(1, 256));
        sub->add_flag("--strict-tle", opt.strict_tle, "reject the whole TLE file on the first bad record");
        sub->add_flag("--allow-large", opt.allow_large, "accept constellations over 1000 satellites");
    };
    auto* topo = app.add_subcommand("topology", "ISL durations, degrees and RTT distributions");
    add_run_flags(topo);
    auto* csim = app.add_subcommand("cluster-sim", "control-plane run with faults; trace and summary");
    add_run_flags(csim);
    auto* leval = app.add_subcommand("linkmap-eval", "interface-to-link decisions per class");
    add_run_flags(leval);
    auto* val = app.add_subcommand("validate", "parse and cross-check a scenario");
    val->add_option("--scenario", scenario, "scenario JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }
    if (!out_dir.empty()) {
        opt.out = out_dir;
    }

    try {
        if (val->parsed()) {
            const auto d = validate(scenario);
            for (const auto& line : d) {
                err << line << '\n';
            }
            if (d.empty()) {
                out << "ok: " << scenario.string() << '\n';
            }
            return d.empty() ? 0 : 1;
        }
        const auto in = read_scenario(scenario);
        if (topo->parsed()) {
            const auto r = topology(in, opt);
            out << "topology: " << r.satellites << " satellites (" << r.constellation << "), " << r.steps
                << " steps, " << r.episodes << " episodes -> " << r.directory.string() << '\n';
        } else if (csim->parsed()) {
            const auto r = cluster_sim(in, opt);
            const auto& m = r.run.metrics;
            out << "cluster-sim: " << m.formation_elections + m.protocol_elections << " elections, "
                << m.failovers.size() << " failovers, " << m.rejected_updates << " rejected updates -> "
                << r.directory.string() << '\n';
        } else if (leval->parsed()) {
            const auto r = linkmap_eval(in, opt);
            out << "linkmap-eval: " << r.classes.size() << " classes -> " << r.directory.string() << '\n';
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace leoctl::cli
