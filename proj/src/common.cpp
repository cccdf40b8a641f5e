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

#include "leoctl/common.hpp"

#include <cstdio>

namespace leoctl {

UtcTime parse_utc(const std::string& text)
{
    int year = 0;
    unsigned month = 0;
    unsigned day = 0;
    int hour = 0;
    int minute = 0;
    double second = 0.0;
    char zone = '\0';
    const int n = std::sscanf(text.c_str(), "%d-%u-%uT%d:%d:%lf%c", &year, &month, &day, &hour,
                              &minute, &second, &zone);
    if (n != 7 || zone != 'Z') {
        throw std::invalid_argument("expected UTC timestamp YYYY-MM-DDTHH:MM:SSZ, got '" + text + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                          std::chrono::day{day}};
    if (!ymd.ok() || hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0.0 ||
        second >= 61.0) {
        throw std::invalid_argument("invalid UTC timestamp '" + text + "'");
    }
    const auto micros = std::chrono::microseconds{std::llround(second * 1e6)};
    return std::chrono::sys_days{ymd} + std::chrono::hours{hour} + std::chrono::minutes{minute} +
           micros;
}

std::string format_utc(UtcTime t)
{
    const auto days = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::year_month_day ymd{days};
    const auto rem = t - days;
    const auto h = std::chrono::duration_cast<std::chrono::hours>(rem);
    const auto m = std::chrono::duration_cast<std::chrono::minutes>(rem - h);
    const auto us = rem - h - m;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%09.6fZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(h.count()), static_cast<int>(m.count()),
                  static_cast<double>(us.count()) * 1e-6);
    return buf;
}

double julian_date(UtcTime t)
{
    // 1970-01-01T00:00:00Z is JD 2440587.5.
    const double seconds = static_cast<double>(t.time_since_epoch().count()) * 1e-6;
    return 2440587.5 + seconds / 86400.0;
}

}  // namespace leoctl
