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

#ifndef HDFDA_HARNESS_HPP
#define HDFDA_HARNESS_HPP

#include "hdfda/cov_smoother.hpp"
#include "hdfda/metrics.hpp"
#include "hdfda/simgen.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hdfda {

enum class SweepTask { Mean, Cov, Both };
enum class MeanMode { Oracle, PlugIn };

struct SweepTuple {
    std::size_t n = 100;
    std::size_t p = 10;
    CountLaw count_law;
    /// When set, the count law is Fixed(ceil(dense_mult (n / log p)^{1/4})).
    std::optional<double> dense_mult;
    /// When set, overrides the automatic regime classification.
    std::optional<Regime> regime;

    CountLaw resolved_law() const;
};

struct BandwidthMode {
    enum class Kind { Prescribed, OracleSearch };
    Kind kind = Kind::Prescribed;
    double c = 1.0;
    std::vector<double> multipliers; // OracleSearch; 1.0 is always included
};

struct SweepConfig {
    SweepTask task = SweepTask::Mean;
    std::vector<DesignKind> designs{DesignKind::SR};
    std::vector<SchemeKind> schemes{SchemeKind::OBS};
    std::vector<SweepTuple> tuples;
    std::size_t replicates = 10;
    std::uint64_t master_seed = 1;
    BandwidthMode bandwidth;
    MeanMode mean_mode = MeanMode::Oracle;
    double regime_c = 1.0;
    std::size_t grid_mean = 51;
    std::size_t grid_cov = 21;
    PairSelection pairs = PairSelection::all();
    ProcessSpec process;
    NoiseSpec noise;
    TimeDensity time_density;
    KernelSpec kernel = KernelSpec::epanechnikov();

    void validate() const;
};

SweepConfig sweep_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SweepConfig& c);

/// One (task, tuple, design, scheme, replicate) evaluation.
struct ResultRow {
    Task task = Task::Mean;
    DesignKind design = DesignKind::SR;
    SchemeKind scheme = SchemeKind::OBS;
    Regime regime = Regime::Sparse;
    std::size_t tuple = 0;
    std::size_t n = 0, p = 0;
    double nbar = 0.0; // nominal count level (N̄ for OBS, N^H for SUBJ)
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    double bandwidth = 0.0; // first component's bandwidth
    double multiplier = 1.0;
    double driver = 0.0;
    double max_l2 = 0.0, max_sup = 0.0;
    std::size_t missing = 0, points = 0;
    bool ok = true;
    std::string message;
    double seconds = 0.0; // not part of the deterministic outputs
};

/// Median summary per (task, design, scheme, tuple).
struct RateRow {
    Task task = Task::Mean;
    DesignKind design = DesignKind::SR;
    SchemeKind scheme = SchemeKind::OBS;
    Regime regime = Regime::Sparse;
    std::size_t tuple = 0;
    std::size_t n = 0, p = 0;
    double nbar = 0.0;
    double driver = 0.0;
    double max_l2 = 0.0;  // median over successful replicates
    double max_sup = 0.0; // median over successful replicates
    double missing_frac = 0.0;
    std::size_t succeeded = 0;
};

struct FitGroup {
    Task task = Task::Mean;
    DesignKind design = DesignKind::SR;
    SchemeKind scheme = SchemeKind::OBS;
    Regime regime = Regime::Sparse;
    std::optional<RateFit> l2_fit;
    std::optional<RateFit> sup_fit;
    bool strictly_decreasing = false; // median max-L2 strictly decreasing in n
    std::string note;
};

struct SweepResult {
    std::vector<ResultRow> rows;
    std::vector<RateRow> rates;
    std::vector<FitGroup> fits;
};

SweepResult run_sweep(const SweepConfig& config);

struct CompareRow {
    Task task = Task::Mean;
    DesignKind design = DesignKind::FR;
    std::size_t tuple = 0;
    std::size_t n = 0, p = 0;
    std::size_t replicate = 0;
    double obs_max_l2 = 0.0, subj_max_l2 = 0.0;
    std::string winner; // subj | obs | tie | error
};

struct CompareSummary {
    Task task = Task::Mean;
    DesignKind design = DesignKind::FR;
    std::size_t tuple = 0;
    std::size_t n = 0, p = 0;
    std::size_t replicates = 0;
    double subj_win_fraction = 0.0; // ties count one half
};

struct CompareResult {
    SweepResult sweep;
    std::vector<CompareRow> rows;
    std::vector<CompareSummary> summaries;
};

/// Runs the sweep with both OBS and SUBJ on identical data and pairs them.
CompareResult run_compare_schemes(const SweepConfig& config);

/// rows.csv, rates.csv, summary.json, config_resolved.json, timing.csv.
void write_sweep_outputs(const SweepResult& result, const SweepConfig& config, const std::filesystem::path& dir);
/// The sweep outputs plus compare.csv and compare.json.
void write_compare_outputs(const CompareResult& result, const SweepConfig& config, const std::filesystem::path& dir);

void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_rates_csv(std::ostream& os, const std::vector<RateRow>& rates);
nlohmann::json summary_json(const SweepResult& result);

} // namespace hdfda

#endif // HDFDA_HARNESS_HPP
