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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace leoctl::linkmap {

enum class InterfaceClass { F1, NG, E2, O1, A1, AUTH };
inline constexpr std::array<InterfaceClass, 6> kAllClasses{
    InterfaceClass::F1, InterfaceClass::NG, InterfaceClass::E2,
    InterfaceClass::O1, InterfaceClass::A1, InterfaceClass::AUTH};

std::string_view to_string(InterfaceClass c);
InterfaceClass class_from_string(std::string_view s);  // throws ConfigError

struct ClassSpec {
    double latency_target = 0.0;    // one-way budget, s
    double preferred_target = 0.0;  // informational; equals the budget except for E2
    bool allows_isl = false;
    bool allows_gsl = false;
    int rank = 0;  // 0 is served first
};

const ClassSpec& class_spec(InterfaceClass c);
bool allows(InterfaceClass c, topology::LinkKind kind);

struct ControlMessage {
    std::int64_t msg_id = 0;
    InterfaceClass cls = InterfaceClass::E2;
    int src = 0;
    int dst = 0;
    int size = 1;  // bytes
    double created_at = 0.0;
    std::string credential;
    std::int64_t term = 0;
};

struct LinkMapDecision {
    std::int64_t msg_id = 0;
    std::optional<topology::Link> chosen;
    double expected_delay = 0.0;  // one-way, s; infinity when nothing is chosen
    bool degraded = false;
    std::string reason;
};

inline constexpr std::string_view kReasonWithinTarget = "within target";
inline constexpr std::string_view kReasonFallback = "fallback to slower control";
inline constexpr std::string_view kReasonNoLink = "no allowed link";

/// Fastest allowed link meeting the class budget (ties: ISL before GSL,
/// then lowest endpoints). Otherwise the fastest allowed link, degraded.
LinkMapDecision select_link(const ControlMessage& msg, std::span<const topology::Link> available);

enum class Mode { Normal, Congested, Eclipse };
std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);  // throws ConfigError

/// True if the class is withheld in `mode`.
bool withheld(InterfaceClass c, Mode mode);

/// Strict priority AUTH > E2 > F1 > NG > A1 > O1, FIFO by (created_at,
/// msg_id) within a class, truncated to `capacity`. Withheld classes are
/// dropped from the tick without consuming capacity.
std::vector<ControlMessage> schedule(std::span<const ControlMessage> queue, int capacity, Mode mode);

enum class UploadMode { FullUpload, DifferentialUpdate };
std::string_view to_string(UploadMode m);

/// FullUpload iff anomaly_score >= threshold.
UploadMode gate_model_update(double anomaly_score, double threshold);

}  // namespace leoctl::linkmap
