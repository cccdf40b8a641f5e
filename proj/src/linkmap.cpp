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

#include "leoctl/linkmap.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace leoctl::linkmap {

using topology::Link;
using topology::LinkKind;

std::string_view to_string(InterfaceClass c)
{
    switch (c) {
    case InterfaceClass::F1:
        return "F1";
    case InterfaceClass::NG:
        return "NG";
    case InterfaceClass::E2:
        return "E2";
    case InterfaceClass::O1:
        return "O1";
    case InterfaceClass::A1:
        return "A1";
    case InterfaceClass::AUTH:
        return "AUTH";
    }
    return "?";
}

InterfaceClass class_from_string(std::string_view s)
{
    for (InterfaceClass c : kAllClasses) {
        if (to_string(c) == s) {
            return c;
        }
    }
    throw ConfigError("unknown interface class '" + std::string(s) + "'");
}

const ClassSpec& class_spec(InterfaceClass c)
{
    // rank: AUTH > E2 > F1 > NG > A1 > O1
    static const ClassSpec f1{0.010, 0.010, true, true, 2};
    static const ClassSpec ng{0.100, 0.100, false, true, 3};
    static const ClassSpec e2{0.020, 0.010, true, true, 1};
    static const ClassSpec o1{1.0, 1.0, false, true, 5};
    static const ClassSpec a1{1.0, 1.0, false, true, 4};
    static const ClassSpec auth{0.020, 0.010, true, true, 0};
    switch (c) {
    case InterfaceClass::F1:
        return f1;
    case InterfaceClass::NG:
        return ng;
    case InterfaceClass::E2:
        return e2;
    case InterfaceClass::O1:
        return o1;
    case InterfaceClass::A1:
        return a1;
    case InterfaceClass::AUTH:
        return auth;
    }
    throw std::invalid_argument("class_spec: bad class");
}

bool allows(InterfaceClass c, LinkKind kind)
{
    const ClassSpec& s = class_spec(c);
    return kind == LinkKind::Isl ? s.allows_isl : s.allows_gsl;
}

namespace {

auto link_order_key(const Link& l)
{
    return std::make_tuple(l.one_way_delay, l.kind == LinkKind::Isl ? 0 : 1, l.endpoint_a,
                           l.endpoint_b);
}

}  // namespace

LinkMapDecision select_link(const ControlMessage& msg, std::span<const Link> available)
{
    const ClassSpec& spec = class_spec(msg.cls);
    LinkMapDecision d;
    d.msg_id = msg.msg_id;
    // E2 fast loops stay on ISLs whenever an ISL meets the budget, even if
    // a ground path happens to be quicker.
    bool isl_only = false;
    if (msg.cls == InterfaceClass::E2) {
        isl_only = std::any_of(available.begin(), available.end(), [&](const Link& l) {
            return l.kind == LinkKind::Isl && l.one_way_delay <= spec.latency_target;
        });
    }
    const Link* best_ok = nullptr;
    const Link* best_any = nullptr;
    for (const Link& l : available) {
        if (!allows(msg.cls, l.kind)) {
            continue;
        }
        if (!best_any || link_order_key(l) < link_order_key(*best_any)) {
            best_any = &l;
        }
        if (isl_only && l.kind != LinkKind::Isl) {
            continue;
        }
        if (l.one_way_delay <= spec.latency_target &&
            (!best_ok || link_order_key(l) < link_order_key(*best_ok))) {
            best_ok = &l;
        }
    }
    if (best_ok) {
        d.chosen = *best_ok;
        d.expected_delay = best_ok->one_way_delay;
        d.degraded = false;
        d.reason = kReasonWithinTarget;
    } else if (best_any) {
        d.chosen = *best_any;
        d.expected_delay = best_any->one_way_delay;
        d.degraded = true;
        d.reason = kReasonFallback;
    } else {
        d.expected_delay = std::numeric_limits<double>::infinity();
        d.degraded = true;
        d.reason = kReasonNoLink;
    }
    return d;
}

std::string_view to_string(Mode m)
{
    switch (m) {
    case Mode::Normal:
        return "normal";
    case Mode::Congested:
        return "congested";
    case Mode::Eclipse:
        return "eclipse";
    }
    return "?";
}

Mode mode_from_string(std::string_view s)
{
    for (Mode m : {Mode::Normal, Mode::Congested, Mode::Eclipse}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw ConfigError("unknown linkmap mode '" + std::string(s) + "'");
}

bool withheld(InterfaceClass c, Mode mode)
{
    return mode != Mode::Normal && (c == InterfaceClass::A1 || c == InterfaceClass::O1);
}

std::vector<ControlMessage> schedule(std::span<const ControlMessage> queue, int capacity, Mode mode)
{
    if (capacity < 0) {
        throw std::invalid_argument("schedule: negative capacity");
    }
    std::vector<ControlMessage> out;
    if (capacity == 0) {
        return out;
    }
    for (const ControlMessage& m : queue) {
        if (!withheld(m.cls, mode)) {
            out.push_back(m);
        }
    }
    std::sort(out.begin(), out.end(), [](const ControlMessage& a, const ControlMessage& b) {
        return std::make_tuple(class_spec(a.cls).rank, a.created_at, a.msg_id) <
               std::make_tuple(class_spec(b.cls).rank, b.created_at, b.msg_id);
    });
    if (out.size() > static_cast<std::size_t>(capacity)) {
        out.resize(static_cast<std::size_t>(capacity));
    }
    return out;
}

std::string_view to_string(UploadMode m)
{
    return m == UploadMode::FullUpload ? "FullUpload" : "DifferentialUpdate";
}

UploadMode gate_model_update(double anomaly_score, double threshold)
{
    if (!(anomaly_score >= 0.0 && anomaly_score <= 1.0 && threshold >= 0.0 && threshold <= 1.0)) {
        throw std::invalid_argument("gate_model_update: arguments must lie in [0, 1]");
    }
    return anomaly_score >= threshold ? UploadMode::FullUpload : UploadMode::DifferentialUpdate;
}

}  // namespace leoctl::linkmap
