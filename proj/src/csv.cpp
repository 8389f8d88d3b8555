/*
 * Copyright 2026 The hdfda Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "hdfda/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace hdfda {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw Error(ErrorKind::Internal, "number formatting failed");
    return std::string(buf.data(), ptr);
}

// ---------------------------------------------------------------------------

void CsvWriter::separator() {
    if (row_started_) os_ << ',';
    row_started_ = true;
}

CsvWriter& CsvWriter::field(std::string_view s) {
    separator();
    const bool quote = s.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!quote) {
        os_ << s;
        return *this;
    }
    os_ << '"';
    for (char c : s) {
        if (c == '"') os_ << '"';
        os_ << c;
    }
    os_ << '"';
    return *this;
}

CsvWriter& CsvWriter::field(double v) {
    separator();
    os_ << format_double(v);
    return *this;
}

CsvWriter& CsvWriter::field(std::size_t v) {
    separator();
    os_ << v;
    return *this;
}

CsvWriter& CsvWriter::field(long long v) {
    separator();
    os_ << v;
    return *this;
}

CsvWriter& CsvWriter::empty_field() {
    separator();
    return *this;
}

CsvWriter& CsvWriter::optional_field(std::optional<double> v) {
    if (v && std::isfinite(*v)) return field(*v);
    return empty_field();
}

void CsvWriter::end_row() {
    os_ << "\r\n";
    row_started_ = false;
}

void CsvWriter::header(std::initializer_list<std::string_view> names) {
    for (auto n : names) field(n);
    end_row();
}

std::vector<std::string> split_csv_record(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (in_quotes) throw ValidationError("unterminated quoted CSV field");
    out.push_back(std::move(cur));
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

template <class T>
T parse_number(std::string_view s, std::size_t line_no, std::string_view column) {
    s = trim(s);
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw ValidationError("line " + std::to_string(line_no) + ": cannot parse " + std::string(column) + " '" +
                              std::string(s) + "'");
    return v;
}

struct RawRow {
    std::size_t subject;
    std::size_t component;
    Observation obs;
};

} // namespace

ObservationSet read_observation_csv(std::istream& in, DesignKind design, const std::vector<Interval>& domains) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ValidationError("observation CSV is empty (header required)");
    ++line_no;
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
        line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_csv_record(line);
    std::array<std::size_t, 4> col{};
    const std::array<std::string_view, 4> names{"subject", "component", "time", "value"};
    for (std::size_t c = 0; c < names.size(); ++c) {
        const auto it = std::find_if(header.begin(), header.end(),
                                     [&](const std::string& h) { return trim(h) == names[c]; });
        if (it == header.end())
            throw ValidationError("observation CSV header lacks column '" + std::string(names[c]) + "'");
        col[c] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<RawRow> rows;
    std::size_t n = 0, p = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto f = split_csv_record(line);
        if (f.size() != header.size())
            throw ValidationError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                                  " fields, got " + std::to_string(f.size()));
        const auto subject = parse_number<long long>(f[col[0]], line_no, "subject");
        const auto component = parse_number<long long>(f[col[1]], line_no, "component");
        if (subject < 1 || component < 1)
            throw ValidationError("line " + std::to_string(line_no) + ": subject and component are 1-based");
        RawRow r{static_cast<std::size_t>(subject - 1), static_cast<std::size_t>(component - 1),
                 {parse_number<double>(f[col[2]], line_no, "time"), parse_number<double>(f[col[3]], line_no, "value")}};
        n = std::max(n, r.subject + 1);
        p = std::max(p, r.component + 1);
        rows.push_back(r);
    }
    if (in.bad()) throw IoError("read failure on observation CSV");
    if (rows.empty()) throw ValidationError("empty dataset: observation CSV has no rows");

    std::vector<Interval> doms;
    if (domains.size() == 1) {
        doms.assign(p, domains.front());
    } else if (domains.size() == p) {
        doms = domains;
    } else {
        throw ValidationError("expected 1 or " + std::to_string(p) + " domains, got " + std::to_string(domains.size()));
    }

    ObservationSet::Builder builder(n, p, design, std::move(doms));
    for (const auto& r : rows) builder.add(r.subject, r.component, r.obs);
    return validate_observations(std::move(builder).build());
}

ObservationSet read_observation_csv(const std::filesystem::path& path, DesignKind design,
                                    const std::vector<Interval>& domains) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return read_observation_csv(in, design, domains);
}

void write_observation_csv(std::ostream& os, const ObservationSet& obs) {
    CsvWriter w(os);
    w.header({"subject", "component", "time", "value"});
    for (std::size_t i = 0; i < obs.subjects(); ++i)
        for (std::size_t j = 0; j < obs.components(); ++j)
            for (const auto& o : obs.series(i, j)) {
                w.field(i + 1).field(j + 1).field(o.time).field(o.value);
                w.end_row();
            }
}

void write_observation_csv(const std::filesystem::path& path, const ObservationSet& obs) {
    auto os = open_output(path);
    write_observation_csv(os, obs);
    if (!os) throw IoError("write failure on '" + path.string() + "'");
}

void write_curves_csv(std::ostream& os, std::span<const EstimateCurve> curves) {
    CsvWriter w(os);
    w.header({"component", "t", "mu_hat", "status"});
    for (const auto& c : curves)
        for (std::size_t a = 0; a < c.grid.size(); ++a) {
            w.field(c.component + 1).field(c.grid[a]);
            if (c.status[a] == EstimateStatus::Missing)
                w.empty_field();
            else
                w.field(c.values[a]);
            w.field(to_string(c.status[a]));
            w.end_row();
        }
}

void write_surfaces_csv(std::ostream& os, std::span<const EstimateSurface> surfaces) {
    CsvWriter w(os);
    w.header({"j", "k", "s", "t", "gamma_hat", "status"});
    for (const auto& s : surfaces)
        for (std::size_t a = 0; a < s.grid_s.size(); ++a)
            for (std::size_t b = 0; b < s.grid_t.size(); ++b) {
                w.field(s.j + 1).field(s.k + 1).field(s.grid_s[a]).field(s.grid_t[b]);
                const auto st = s.status_at(a, b);
                if (st == EstimateStatus::Missing)
                    w.empty_field();
                else
                    w.field(s.value(a, b));
                w.field(to_string(st));
                w.end_row();
            }
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    return os;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
    return ss.str();
}

} // namespace hdfda
