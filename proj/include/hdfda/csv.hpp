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

#ifndef HDFDA_CSV_HPP
#define HDFDA_CSV_HPP

#include "hdfda/core.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hdfda {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// RFC-4180 writer: CRLF record terminators, fields quoted only when needed.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    CsvWriter& field(std::string_view s);
    CsvWriter& field(double v);
    CsvWriter& field(std::size_t v);
    CsvWriter& field(long long v);
    CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
    CsvWriter& empty_field();
    /// Writes v, or an empty field when absent or non-finite.
    CsvWriter& optional_field(std::optional<double> v);
    void end_row();

    /// Convenience: a full header row.
    void header(std::initializer_list<std::string_view> names);

private:
    void separator();

    std::ostream& os_;
    bool row_started_ = false;
};

/// Splits one CSV record (RFC-4180 quoting) into fields.
std::vector<std::string> split_csv_record(std::string_view line);

/// Reads the observation CSV (header with subject, component, time, value;
/// 1-based indices; LF or CRLF). `domains` holds either a single interval
/// shared by all components or one per component. The number of subjects and
/// components is the largest index seen. Returns a validated set.
ObservationSet read_observation_csv(std::istream& in, DesignKind design, const std::vector<Interval>& domains);
ObservationSet read_observation_csv(const std::filesystem::path& path, DesignKind design,
                                    const std::vector<Interval>& domains);

void write_observation_csv(std::ostream& os, const ObservationSet& obs);
void write_observation_csv(const std::filesystem::path& path, const ObservationSet& obs);

/// `component,t,mu_hat,status` with 1-based components.
void write_curves_csv(std::ostream& os, std::span<const EstimateCurve> curves);
/// `j,k,s,t,gamma_hat,status` with 1-based indices.
void write_surfaces_csv(std::ostream& os, std::span<const EstimateSurface> surfaces);

/// Opens a file for writing, creating parent directories; throws IoError.
std::ofstream open_output(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

} // namespace hdfda

#endif // HDFDA_CSV_HPP
