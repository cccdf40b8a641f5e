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

#include "leoctl/common.hpp"
#include "leoctl/linkmap.hpp"
#include "leoctl/topology.hpp"

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace leoctl::metrics {

class EmptyInput : public Error {
  public:
    using Error::Error;
};

struct Histogram {
    double bin_width = 0.0;
    std::vector<double> edges;    // size density.size() + 1, multiples of bin_width
    std::vector<double> density;  // sum(density) * bin_width == 1
};

/// Bins [k*w, (k+1)*w). Empty input gives an empty histogram.
Histogram histogram_pdf(std::span<const double> samples, double bin_width);

struct Ecdf {
    std::vector<double> x;  // distinct sample values, ascending
    std::vector<double> F;  // fraction of samples <= x
};

/// Throws EmptyInput.
Ecdf ecdf(std::span<const double> samples);

/// Right-continuous step evaluation.
double ecdf_at(const Ecdf& e, double x);

/// Keep at most max_points steps, always including the last one.
Ecdf decimate(const Ecdf& e, std::size_t max_points);

struct Percentiles {
    std::vector<double> p;
    std::vector<double> value;
};

/// Linear interpolation at rank h = (n - 1) p / 100. Throws EmptyInput, and
/// std::invalid_argument for p outside [0, 100].
Percentiles percentiles(std::span<const double> samples, std::span<const double> ps);
double percentile_sorted(std::span<const double> sorted, double p);

/// Locale-independent, 6 significant digits, shortest form.
std::string format_number(double v);

// CSV writers. Headers are fixed per file type.
void write_histogram_csv(std::ostream& os, const Histogram& h);           // bin_left,bin_right,density
void write_ecdf_csv(std::ostream& os, const Ecdf& e);                     // x,F
void write_percentiles_csv(std::ostream& os, const Percentiles& p);       // p,value
void write_mean_std_csv(std::ostream& os, const topology::DegreeSeries& s);  // time_s,mean,std
void write_episodes_csv(std::ostream& os, std::span<const topology::LinkEpisode> eps,
                        double step_seconds);  // sat_a,sat_b,start_s,end_s,duration_s
void write_snapshot_csv(std::ostream& os, const topology::TopologySnapshot& snap);
// time_s,sat_a,sat_b,distance_m,owd_s

struct DecisionRecord {
    double time = 0.0;
    linkmap::ControlMessage msg;
    linkmap::LinkMapDecision decision;
};
void write_decisions_csv(std::ostream& os, std::span<const DecisionRecord> rows);
// time_s,msg_id,class,chosen_kind,expected_delay_s,degraded

}  // namespace leoctl::metrics
