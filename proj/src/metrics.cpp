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

#include "leoctl/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace leoctl::metrics {

Histogram histogram_pdf(std::span<const double> samples, double bin_width)
{
    if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
        throw std::invalid_argument("histogram_pdf: bin width must be positive");
    }
    Histogram h;
    h.bin_width = bin_width;
    if (samples.empty()) {
        return h;
    }
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const auto k0 = static_cast<long long>(std::floor(*lo_it / bin_width));
    const auto k1 = static_cast<long long>(std::floor(*hi_it / bin_width));
    const auto nbins = static_cast<std::size_t>(k1 - k0 + 1);
    std::vector<std::size_t> counts(nbins, 0);
    for (double x : samples) {
        auto k = static_cast<long long>(std::floor(x / bin_width)) - k0;
        k = std::clamp<long long>(k, 0, static_cast<long long>(nbins) - 1);
        ++counts[static_cast<std::size_t>(k)];
    }
    const double n = static_cast<double>(samples.size());
    for (std::size_t k = 0; k <= nbins; ++k) {
        h.edges.push_back(static_cast<double>(k0 + static_cast<long long>(k)) * bin_width);
    }
    for (std::size_t c : counts) {
        h.density.push_back(static_cast<double>(c) / (n * bin_width));
    }
    return h;
}

Ecdf ecdf(std::span<const double> samples)
{
    if (samples.empty()) {
        throw EmptyInput("ecdf: no samples");
    }
    std::vector<double> v(samples.begin(), samples.end());
    std::sort(v.begin(), v.end());
    Ecdf e;
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i + 1 < v.size() && v[i + 1] == v[i]) {
            continue;
        }
        e.x.push_back(v[i]);
        e.F.push_back(static_cast<double>(i + 1) / n);
    }
    return e;
}

double ecdf_at(const Ecdf& e, double x)
{
    const auto it = std::upper_bound(e.x.begin(), e.x.end(), x);
    if (it == e.x.begin()) {
        return 0.0;
    }
    return e.F[static_cast<std::size_t>(it - e.x.begin()) - 1];
}

Ecdf decimate(const Ecdf& e, std::size_t max_points)
{
    if (max_points < 2 || e.x.size() <= max_points) {
        return e;
    }
    Ecdf out;
    const std::size_t n = e.x.size();
    for (std::size_t k = 0; k < max_points; ++k) {
        const std::size_t i = k * (n - 1) / (max_points - 1);
        out.x.push_back(e.x[i]);
        out.F.push_back(e.F[i]);
    }
    return out;
}

double percentile_sorted(std::span<const double> sorted, double p)
{
    if (sorted.empty()) {
        throw EmptyInput("percentile: no samples");
    }
    if (!(p >= 0.0 && p <= 100.0)) {
        throw std::invalid_argument("percentile: p must lie in [0, 100]");
    }
    const double h = static_cast<double>(sorted.size() - 1) * p / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0) {
        return sorted[lo];
    }
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Percentiles percentiles(std::span<const double> samples, std::span<const double> ps)
{
    if (samples.empty()) {
        throw EmptyInput("percentiles: no samples");
    }
    std::vector<double> v(samples.begin(), samples.end());
    std::sort(v.begin(), v.end());
    Percentiles out;
    for (double p : ps) {
        out.p.push_back(p);
        out.value.push_back(percentile_sorted(v, p));
    }
    return out;
}

std::string format_number(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    if (v == 0.0) {
        return "0";  // no "-0"
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
    return std::string(buf, res.ptr);
}

void write_histogram_csv(std::ostream& os, const Histogram& h)
{
    os << "bin_left,bin_right,density\n";
    for (std::size_t k = 0; k < h.density.size(); ++k) {
        os << format_number(h.edges[k]) << ',' << format_number(h.edges[k + 1]) << ','
           << format_number(h.density[k]) << '\n';
    }
}

void write_ecdf_csv(std::ostream& os, const Ecdf& e)
{
    os << "x,F\n";
    for (std::size_t k = 0; k < e.x.size(); ++k) {
        os << format_number(e.x[k]) << ',' << format_number(e.F[k]) << '\n';
    }
}

void write_percentiles_csv(std::ostream& os, const Percentiles& p)
{
    os << "p,value\n";
    for (std::size_t k = 0; k < p.p.size(); ++k) {
        os << format_number(p.p[k]) << ',' << format_number(p.value[k]) << '\n';
    }
}

void write_mean_std_csv(std::ostream& os, const topology::DegreeSeries& s)
{
    os << "time_s,mean,std\n";
    for (const auto& pt : s.points) {
        os << format_number(pt.time) << ',' << format_number(pt.mean) << ','
           << format_number(pt.std) << '\n';
    }
}

void write_episodes_csv(std::ostream& os, std::span<const topology::LinkEpisode> eps,
                        double step_seconds)
{
    os << "sat_a,sat_b,start_s,end_s,duration_s\n";
    for (const auto& e : eps) {
        os << e.pair.first << ',' << e.pair.second << ',' << format_number(e.start_step * step_seconds)
           << ',' << format_number((e.end_step + 1) * step_seconds) << ','
           << format_number(e.duration) << '\n';
    }
}

void write_snapshot_csv(std::ostream& os, const topology::TopologySnapshot& snap)
{
    os << "time_s,sat_a,sat_b,distance_m,owd_s\n";
    for (std::size_t i = 0; i < snap.sat_ids.size(); ++i) {
        for (const auto& l : snap.isl_adjacency[i]) {
            if (l.endpoint_a < l.endpoint_b) {
                os << format_number(snap.time) << ',' << l.endpoint_a << ',' << l.endpoint_b << ','
                   << format_number(l.distance) << ',' << format_number(l.one_way_delay) << '\n';
            }
        }
    }
}

void write_decisions_csv(std::ostream& os, std::span<const DecisionRecord> rows)
{
    os << "time_s,msg_id,class,chosen_kind,expected_delay_s,degraded\n";
    for (const auto& r : rows) {
        os << format_number(r.time) << ',' << r.msg.msg_id << ',' << linkmap::to_string(r.msg.cls)
           << ','
           << (r.decision.chosen ? topology::to_string(r.decision.chosen->kind)
                                 : std::string_view("NONE"))
           << ',' << format_number(r.decision.expected_delay) << ','
           << (r.decision.degraded ? "true" : "false") << '\n';
    }
}

}  // namespace leoctl::metrics
