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

#ifndef HDFDA_METRICS_HPP
#define HDFDA_METRICS_HPP

#include "hdfda/core.hpp"
#include "hdfda/weights.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace hdfda {

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

/// Trapezoid L2 norm of f sampled on a uniform grid. With a status vector,
/// only segments whose two endpoints are non-Missing are integrated.
/// Throws ValidationError when every point is Missing.
double l2_norm_curve(const Grid& g, std::span<const double> f, std::span<const EstimateStatus> status = {});

/// 2-D trapezoid on grid_s x grid_t, values row-major (a * nt + b). With a
/// status vector, only cells whose four corners are non-Missing contribute.
double l2_norm_surface(const Grid& gs, const Grid& gt, std::span<const double> f,
                       std::span<const EstimateStatus> status = {});

/// max |f| over non-Missing points.
double sup_norm(std::span<const double> f, std::span<const EstimateStatus> status = {});

struct ComponentError {
    std::size_t j = 0;
    double l2 = 0.0;
    double sup = 0.0;
    std::size_t missing = 0;
};

struct PairError {
    PairIndex pair;
    double l2 = 0.0;
    double sup = 0.0;
    std::size_t missing = 0;
};

struct ErrorReport {
    std::vector<ComponentError> mean;
    std::vector<PairError> cov;
    double max_mean_l2 = 0.0, max_mean_sup = 0.0;
    double max_cov_l2 = 0.0, max_cov_sup = 0.0;
    std::size_t mean_missing = 0, mean_points = 0;
    std::size_t cov_missing = 0, cov_points = 0;
};

using MeanTruth = std::function<double(std::size_t j, double t)>;
using CovTruth = std::function<double(std::size_t j, std::size_t k, double s, double t)>;

/// Errors against truth evaluated on each estimate's own grid.
void add_mean_errors(ErrorReport& report, std::span<const EstimateCurve> curves, const MeanTruth& truth);
void add_cov_errors(ErrorReport& report, std::span<const EstimateSurface> surfaces, const CovTruth& truth);

// ---------------------------------------------------------------------------
// Regimes and bandwidths
// ---------------------------------------------------------------------------

enum class Task { Mean, Cov };
enum class Regime { Sparse, Dense, UltraDense };

std::string_view to_string(Task t);
std::string_view to_string(Regime r);
Task parse_task(std::string_view s);
Regime parse_regime(std::string_view s);

/// Count level per component enters as N̄_j for OBS and N_j^H for SUBJ.
struct RegimeInputs {
    std::size_t n = 0;
    std::size_t p = 0;
    double nbar_min = 0.0;
    double nbar_max = 0.0;
    Task task = Task::Mean;
    SchemeKind scheme = SchemeKind::OBS;
    double c = 1.0;
};

/// (log p / n)^{1/4}
double regime_scale(std::size_t n, std::size_t p);

/// Sparse if N̄_max (log p/n)^{1/4} < c; UltraDense (mean only) if
/// N̄_min (log p/n)^{1/4} > 1/c; Dense otherwise, including ties.
Regime classify_regime(const RegimeInputs& in);

/// Per-component bandwidths for the given regime; `nbar` holds N̄_j (OBS) or
/// N_j^H (SUBJ). Results are clamped to (0, domain_length].
std::vector<double> bandwidth_prescribe(const RegimeInputs& in, Regime regime, std::span<const double> nbar,
                                        double domain_length = 1.0);

/// Abscissa of the rate regression.
double rate_driver(Task task, Regime regime, std::size_t n, std::size_t p, double nbar_min);

/// Exact expressions, for overlays.
double mean_rate_obs(std::size_t n, std::size_t p, double b, const ComponentCountSummary& s);
double mean_rate_subj(std::size_t n, std::size_t p, double b, const ComponentCountSummary& s);
double mean_rate_generic(std::size_t p, double b, double variance_term, double wbar);
double cov_rate_obs(std::size_t n, std::size_t p, double bj, double bk, const PairCountSummary& s);
double cov_rate_subj(std::size_t n, std::size_t p, double bj, double bk, const PairCountSummary& s,
                     double nharm_j);
double cov_rate_generic(std::size_t p, double bj, double bk, double q, double vbar);

// ---------------------------------------------------------------------------
// Rate regression
// ---------------------------------------------------------------------------

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
    std::size_t points = 0;
};

/// OLS of log(error) on log(driver).
RateFit fit_rate_exponent(std::span<const std::pair<double, double>> points);

/// Median of a nonempty sample (mean of the two middle values for even sizes).
double median(std::vector<double> v);

} // namespace hdfda

#endif // HDFDA_METRICS_HPP
