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

#include "leoctl/ephemeris.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>

namespace leoctl::ephemeris {

double normalize_angle(double radians)
{
    double a = std::fmod(radians, kTwoPi);
    if (a < 0.0) {
        a += kTwoPi;
    }
    // fmod of a tiny negative value can round up to exactly 2*pi.
    return a >= kTwoPi ? 0.0 : a;
}

double OrbitalElements::semi_major_axis() const
{
    return std::cbrt(kEarthMu / (mean_motion * mean_motion));
}

double OrbitalElements::period() const { return kTwoPi / mean_motion; }

// ---------------------------------------------------------------------------
// TLE

namespace {

std::string describe(TleErrorKind kind)
{
    return kind == TleErrorKind::ChecksumMismatch ? "checksum mismatch" : "malformed line";
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::string_view rtrim(std::string_view s)
{
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

struct FieldError {
    std::string what;
};

// 1-based inclusive column range, as printed in the format description.
std::string_view columns(std::string_view line, std::size_t first, std::size_t last)
{
    return line.substr(first - 1, last - first + 1);
}

double parse_double(std::string_view field, const char* name)
{
    const std::string_view f = trim(field);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
    if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size()) {
        throw FieldError{std::string("bad ") + name + " field '" + std::string(field) + "'"};
    }
    return value;
}

int parse_int(std::string_view field, const char* name)
{
    const std::string_view f = trim(field);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
    if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size()) {
        throw FieldError{std::string("bad ") + name + " field '" + std::string(field) + "'"};
    }
    return value;
}

// Catalog number, including the Alpha-5 extension (A0000 = 100000).
int parse_catalog_number(std::string_view field)
{
    const std::string_view f = trim(field);
    if (!f.empty() && f.front() >= 'A' && f.front() <= 'Z') {
        const char c = f.front();
        if (c == 'I' || c == 'O') {
            throw FieldError{"bad alpha-5 catalog number '" + std::string(field) + "'"};
        }
        int letter = c - 'A' + 10;
        if (c > 'I') {
            --letter;
        }
        if (c > 'O') {
            --letter;
        }
        return letter * 10000 + parse_int(f.substr(1), "catalog number");
    }
    return parse_int(f, "catalog number");
}

UtcTime decode_epoch(int two_digit_year, double day_of_year)
{
    const int year = two_digit_year < 57 ? 2000 + two_digit_year : 1900 + two_digit_year;
    const std::chrono::sys_days jan1{std::chrono::year{year} / std::chrono::January / 1};
    const auto offset = std::chrono::microseconds{std::llround((day_of_year - 1.0) * 86400.0e6)};
    return UtcTime{jan1} + offset;
}

struct Record {
    std::string_view line1;
    std::string_view line2;
    std::size_t line_number;  // of line 1
};

OrbitalElements decode_record(const Record& rec, std::size_t index)
{
    auto fail = [&](TleErrorKind kind, std::size_t line_no, const std::string& why) {
        return TleError(TleIssue{kind, index, line_no, why});
    };
    const std::string_view lines[2] = {rec.line1, rec.line2};
    for (int k = 0; k < 2; ++k) {
        const std::size_t line_no = rec.line_number + k;
        const std::string_view line = lines[k];
        if (line.size() != 69) {
            throw fail(TleErrorKind::MalformedLine, line_no,
                       "line " + std::to_string(k + 1) + " has " + std::to_string(line.size()) +
                           " characters, expected 69");
        }
        if (line[0] != static_cast<char>('1' + k) || line[1] != ' ') {
            throw fail(TleErrorKind::MalformedLine, line_no,
                       "line " + std::to_string(k + 1) + " has wrong line number");
        }
        const char check = line[68];
        if (check < '0' || check > '9') {
            throw fail(TleErrorKind::MalformedLine, line_no, "checksum column is not a digit");
        }
        const int expected = tle_checksum(line);
        if (expected != check - '0') {
            throw fail(TleErrorKind::ChecksumMismatch, line_no,
                       "line " + std::to_string(k + 1) + " checksum " + std::string(1, check) +
                           ", computed " + std::to_string(expected));
        }
    }

    std::size_t line_no = rec.line_number;
    try {
        OrbitalElements el;
        el.sat_id = parse_catalog_number(columns(rec.line1, 3, 7));
        const int yy = parse_int(columns(rec.line1, 19, 20), "epoch year");
        const double day = parse_double(columns(rec.line1, 21, 32), "epoch day");
        if (day < 1.0 || day >= 367.0) {
            throw FieldError{"epoch day out of range"};
        }
        el.epoch = decode_epoch(yy, day);

        line_no = rec.line_number + 1;
        if (parse_catalog_number(columns(rec.line2, 3, 7)) != el.sat_id) {
            throw FieldError{"catalog numbers of line 1 and line 2 differ"};
        }
        el.inclination = normalize_angle(parse_double(columns(rec.line2, 9, 16), "inclination") *
                                         kDegToRad);
        el.raan = normalize_angle(parse_double(columns(rec.line2, 18, 25), "RAAN") * kDegToRad);
        const std::string ecc = "0." + std::string(trim(columns(rec.line2, 27, 33)));
        el.eccentricity = parse_double(ecc, "eccentricity");
        el.arg_perigee =
            normalize_angle(parse_double(columns(rec.line2, 35, 42), "argument of perigee") *
                            kDegToRad);
        el.mean_anomaly =
            normalize_angle(parse_double(columns(rec.line2, 44, 51), "mean anomaly") * kDegToRad);
        const double rev_per_day = parse_double(columns(rec.line2, 53, 63), "mean motion");
        if (!(rev_per_day > 0.0)) {
            throw FieldError{"mean motion must be positive"};
        }
        el.mean_motion = rev_per_day * kTwoPi / 86400.0;
        if (!(el.eccentricity >= 0.0 && el.eccentricity < 1.0)) {
            throw FieldError{"eccentricity outside [0, 1)"};
        }
        return el;
    } catch (const FieldError& e) {
        throw fail(TleErrorKind::MalformedLine, line_no, e.what);
    }
}

}  // namespace

TleError::TleError(TleIssue issue)
    : Error("TLE record " + std::to_string(issue.record_index) + " (line " +
            std::to_string(issue.line_number) + "): " + describe(issue.kind) + ": " +
            issue.message),
      issue_(std::move(issue))
{
}

int tle_checksum(std::string_view line)
{
    int sum = 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(68, line.size()); ++i) {
        const char c = line[i];
        if (c >= '0' && c <= '9') {
            sum += c - '0';
        } else if (c == '-') {
            sum += 1;
        }
    }
    return sum % 10;
}

TleParseResult parse_tle(std::string_view text, TleMode mode)
{
    std::vector<std::pair<std::string_view, std::size_t>> lines;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        const std::string_view raw = text.substr(0, nl);
        ++line_no;
        const std::string_view line = rtrim(raw);
        if (!trim(line).empty()) {
            lines.emplace_back(line, line_no);
        }
        if (nl == std::string_view::npos) {
            break;
        }
        text.remove_prefix(nl + 1);
    }

    auto is_line = [](std::string_view l, char which) {
        return l.size() >= 2 && l[0] == which && l[1] == ' ';
    };

    TleParseResult result;
    std::size_t record_index = 0;
    std::size_t i = 0;
    while (i < lines.size()) {
        const std::size_t index = record_index++;
        const std::size_t first = is_line(lines[i].first, '1') ? i : i + 1;
        try {
            if (first + 1 >= lines.size() || !is_line(lines[first].first, '1') ||
                !is_line(lines[first + 1].first, '2')) {
                // Resynchronize on the next line 1, keeping a name line in front of it.
                std::size_t next = i + 1;
                while (next < lines.size() && !is_line(lines[next].first, '1')) {
                    ++next;
                }
                if (next < lines.size() && next - 1 > i && !is_line(lines[next - 1].first, '2')) {
                    --next;
                }
                const std::size_t bad_line = lines[i].second;
                i = next;
                throw TleError(TleIssue{TleErrorKind::MalformedLine, index, bad_line,
                                        "expected a line-1/line-2 pair"});
            }
            const Record rec{lines[first].first, lines[first + 1].first, lines[first].second};
            i = first + 2;
            result.elements.push_back(decode_record(rec, index));
        } catch (const TleError& e) {
            if (mode == TleMode::Strict) {
                throw;
            }
            result.issues.push_back(e.issue());
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Kepler / two-body

double solve_kepler(double mean_anomaly, double eccentricity)
{
    if (!(eccentricity >= 0.0 && eccentricity < 1.0)) {
        throw std::invalid_argument("solve_kepler: eccentricity must lie in [0, 1)");
    }
    if (!std::isfinite(mean_anomaly)) {
        throw std::invalid_argument("solve_kepler: mean anomaly must be finite");
    }
    // Reduce to [-pi, pi] and restore the revolution count afterwards.
    const double revs = std::round(mean_anomaly / kTwoPi);
    const double m = mean_anomaly - revs * kTwoPi;
    if (eccentricity == 0.0) {
        return mean_anomaly;
    }
    double e_anom = eccentricity < 0.8 ? m : (m < 0.0 ? -kPi : kPi);
    for (int iter = 0; iter < kKeplerMaxIterations; ++iter) {
        const double f = e_anom - eccentricity * std::sin(e_anom) - m;
        if (std::abs(f) < 1e-14) {
            return e_anom + revs * kTwoPi;
        }
        const double fp = 1.0 - eccentricity * std::cos(e_anom);
        e_anom -= f / fp;
    }
    const double f = e_anom - eccentricity * std::sin(e_anom) - m;
    if (std::abs(f) < 1e-13) {
        return e_anom + revs * kTwoPi;
    }
    throw NonConvergence("solve_kepler: no convergence after " +
                         std::to_string(kKeplerMaxIterations) + " iterations");
}

Vec3 propagate_eci(const OrbitalElements& el, double dt, bool j2)
{
    const double a = el.semi_major_axis();
    const double e = el.eccentricity;
    const double n = el.mean_motion;
    double raan = el.raan;
    double argp = el.arg_perigee;
    if (j2) {
        const double p = a * (1.0 - e * e);
        const double k = n * kJ2 * (kJ2ReferenceRadius / p) * (kJ2ReferenceRadius / p);
        const double ci = std::cos(el.inclination);
        raan += -1.5 * k * ci * dt;
        argp += 0.75 * k * (5.0 * ci * ci - 1.0) * dt;
    }
    const double m = normalize_angle(el.mean_anomaly + n * dt);
    const double ea = solve_kepler(m, e);
    const double nu = 2.0 * std::atan2(std::sqrt(1.0 + e) * std::sin(ea / 2.0),
                                       std::sqrt(1.0 - e) * std::cos(ea / 2.0));
    const double r = a * (1.0 - e * std::cos(ea));
    const double u = argp + nu;
    const double cu = std::cos(u);
    const double su = std::sin(u);
    const double co = std::cos(raan);
    const double so = std::sin(raan);
    const double ci = std::cos(el.inclination);
    const double si = std::sin(el.inclination);
    return {r * (co * cu - so * su * ci), r * (so * cu + co * su * ci), r * su * si};
}

StateVector elements_to_state(const OrbitalElements& el, double t, const PropagationContext& ctx)
{
    if (!std::isfinite(t)) {
        throw std::invalid_argument("elements_to_state: time must be finite");
    }
    const double epoch_offset =
        std::chrono::duration<double>(ctx.scenario_epoch - el.epoch).count();
    StateVector sv;
    sv.sat_id = el.sat_id;
    sv.time = t;
    sv.position_eci = propagate_eci(el, t + epoch_offset, ctx.j2);
    sv.position_ecef = eci_to_ecef(sv.position_eci, t, ctx.theta0);
    return sv;
}

StateVector elements_to_state(const OrbitalElements& el, double t)
{
    return elements_to_state(el, t, PropagationContext{el.epoch, 0.0, false});
}

std::vector<StateVector> propagate_all(std::span<const OrbitalElements> elements, double t,
                                       const PropagationContext& ctx)
{
    std::vector<StateVector> out;
    out.reserve(elements.size());
    for (const auto& el : elements) {
        out.push_back(elements_to_state(el, t, ctx));
    }
    return out;
}

Vec3 eci_to_ecef(Vec3 p, double t, double theta0)
{
    const double theta = theta0 + kEarthRotationRate * t;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * p.x + s * p.y, -s * p.x + c * p.y, p.z};
}

double gmst_angle(UtcTime t)
{
    const double d = julian_date(t) - 2451545.0;
    const double deg = std::fmod(280.46061837 + 360.98564736629 * d, 360.0);
    return normalize_angle(deg * kDegToRad);
}

Vec3 ground_station_position(const GroundStation& gs)
{
    const double r = kEarthRadius + gs.altitude_m;
    const double lat = gs.latitude_deg * kDegToRad;
    const double lon = gs.longitude_deg * kDegToRad;
    return {r * std::cos(lat) * std::cos(lon), r * std::cos(lat) * std::sin(lon),
            r * std::sin(lat)};
}

std::vector<GroundStation> default_ground_stations()
{
    struct Site {
        double lat;
        double lon;
    };
    // Gateway-like sites: the Americas, Europe, Africa, Asia, Oceania.
    static constexpr Site kSites[] = {
        {47.61, -122.33},  // Seattle
        {34.05, -118.24},  // Los Angeles
        {39.74, -104.99},  // Denver
        {32.78, -96.80},   // Dallas
        {41.88, -87.63},   // Chicago
        {40.71, -74.01},   // New York
        {25.76, -80.19},   // Miami
        {19.43, -99.13},   // Mexico City
        {4.71, -74.07},    // Bogota
        {-12.05, -77.04},  // Lima
        {-23.55, -46.63},  // Sao Paulo
        {-34.60, -58.38},  // Buenos Aires
        {-33.45, -70.67},  // Santiago
        {64.15, -21.94},   // Reykjavik
        {51.51, -0.13},    // London
        {40.42, -3.70},    // Madrid
        {50.11, 8.68},     // Frankfurt
        {52.23, 21.01},    // Warsaw
        {6.52, 3.38},      // Lagos
        {-1.29, 36.82},    // Nairobi
        {-26.20, 28.05},   // Johannesburg
        {30.04, 31.24},    // Cairo
        {25.20, 55.27},    // Dubai
        {19.08, 72.88},    // Mumbai
        {1.35, 103.82},    // Singapore
        {-6.21, 106.85},   // Jakarta
        {14.60, 120.98},   // Manila
        {35.68, 139.69},   // Tokyo
        {37.57, 126.98},   // Seoul
        {-33.87, 151.21},  // Sydney
        {-31.95, 115.86},  // Perth
        {-36.85, 174.76},  // Auckland
        {61.22, -149.90},  // Anchorage
    };
    std::vector<GroundStation> out;
    int id = 0;
    for (const Site& s : kSites) {
        out.push_back({id++, s.lat, s.lon, 0.0});
    }
    return out;
}

std::vector<GroundStation> parse_ground_stations_csv(std::string_view text)
{
    std::vector<GroundStation> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view l = trim(line);
        if (l.empty()) {
            continue;
        }
        if (!header_seen) {
            std::string compact;
            for (char c : l) {
                if (c != ' ') {
                    compact.push_back(c);
                }
            }
            if (compact != "gs_id,lat_deg,lon_deg,alt_m") {
                throw ConfigError("ground stations CSV: expected header gs_id,lat_deg,lon_deg,alt_m");
            }
            header_seen = true;
            continue;
        }
        std::vector<std::string_view> fields;
        std::string_view rest = l;
        while (true) {
            const std::size_t comma = rest.find(',');
            fields.push_back(trim(rest.substr(0, comma)));
            if (comma == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(comma + 1);
        }
        const std::string where = "ground stations CSV line " + std::to_string(line_no);
        if (fields.size() != 4) {
            throw ConfigError(where + ": expected 4 fields");
        }
        GroundStation gs;
        try {
            gs.gs_id = parse_int(fields[0], "gs_id");
            gs.latitude_deg = parse_double(fields[1], "lat_deg");
            gs.longitude_deg = parse_double(fields[2], "lon_deg");
            gs.altitude_m = parse_double(fields[3], "alt_m");
        } catch (const FieldError& e) {
            throw ConfigError(where + ": " + e.what);
        }
        if (gs.latitude_deg < -90.0 || gs.latitude_deg > 90.0) {
            throw ConfigError(where + ": lat_deg outside [-90, 90]");
        }
        if (gs.longitude_deg < -180.0 || gs.longitude_deg >= 180.0) {
            throw ConfigError(where + ": lon_deg outside [-180, 180)");
        }
        out.push_back(gs);
    }
    if (!header_seen) {
        throw ConfigError("ground stations CSV: missing header");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Walker

std::vector<OrbitalElements> generate_walker(const WalkerSpec& spec, UtcTime epoch, int first_id)
{
    if (spec.total_sats < 1) {
        throw InvalidWalker("walker: total_sats must be >= 1");
    }
    if (spec.planes < 1) {
        throw InvalidWalker("walker: planes must be >= 1");
    }
    if (spec.total_sats % spec.planes != 0) {
        throw InvalidWalker("walker: planes (" + std::to_string(spec.planes) +
                            ") must divide total_sats (" + std::to_string(spec.total_sats) + ")");
    }
    if (spec.phasing < 0 || spec.phasing >= spec.planes) {
        throw InvalidWalker("walker: phasing must satisfy 0 <= phasing < planes");
    }
    if (!(spec.altitude_km > 0.0)) {
        throw InvalidWalker("walker: altitude_km must be positive");
    }
    if (spec.inclination_deg < 0.0 || spec.inclination_deg > 180.0) {
        throw InvalidWalker("walker: inclination_deg outside [0, 180]");
    }
    const int per_plane = spec.total_sats / spec.planes;
    const double a = kEarthRadius + spec.altitude_km * 1e3;
    const double n = std::sqrt(kEarthMu / (a * a * a));
    std::vector<OrbitalElements> out;
    out.reserve(static_cast<std::size_t>(spec.total_sats));
    for (int p = 0; p < spec.planes; ++p) {
        for (int s = 0; s < per_plane; ++s) {
            OrbitalElements el;
            el.sat_id = first_id + p * per_plane + s;
            el.epoch = epoch;
            el.inclination = spec.inclination_deg * kDegToRad;
            el.raan = normalize_angle(p * 360.0 / spec.planes * kDegToRad);
            el.eccentricity = 0.0;
            el.arg_perigee = 0.0;
            const double m_deg = s * 360.0 / per_plane +
                                 static_cast<double>(p) * spec.phasing * 360.0 / spec.total_sats;
            el.mean_anomaly = normalize_angle(m_deg * kDegToRad);
            el.mean_motion = n;
            out.push_back(el);
        }
    }
    return out;
}

}  // namespace leoctl::ephemeris
