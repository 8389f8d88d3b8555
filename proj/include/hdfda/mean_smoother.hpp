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

#ifndef HDFDA_MEAN_SMOOTHER_HPP
#define HDFDA_MEAN_SMOOTHER_HPP

#include "hdfda/core.hpp"
#include "hdfda/weights.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hdfda {

/// Weighted kernel sums at one evaluation point t:
///   S_r = sum_i w_ij sum_l K_b(T - t) u^r,  R_r = sum_i w_ij sum_l K_b(T - t) u^r Y,
/// with u = (T - t)/b.
struct MeanFitInternals {
    double S0 = 0.0;
    double S1 = 0.0;
    double S2 = 0.0;
    double R0 = 0.0;
    double R1 = 0.0;
};

struct MeanBandwidths {
    std::vector<double> b; // per component

    static MeanBandwidths shared(double value, std::size_t p) { return {std::vector<double>(p, value)}; }
};

/// All observations of one component merged into a single list, ordered by
/// (time, subject, position), each carrying its subject's weight. Subjects
/// with zero weight are left out.
class ComponentSample {
public:
    struct Entry {
        double time;
        double value;
        double weight;
        std::uint32_t subject;
    };

    ComponentSample() = default;
    ComponentSample(const ObservationSet& obs, std::size_t j, std::span<const double> weights);

    std::size_t component() const noexcept { return j_; }
    const Interval& domain() const noexcept { return domain_; }
    std::span<const Entry> entries() const noexcept { return entries_; }
    /// Half-open index range of entries with |time - t| <= r.
    std::pair<std::size_t, std::size_t> window(double t, double r) const noexcept;

private:
    std::size_t j_ = 0;
    Interval domain_;
    std::vector<Entry> entries_;
};

MeanFitInternals mean_sums_at(double t, const ComponentSample& sample, double b, const KernelSpec& kernel);

/// Same sums by a full scan of every entry (no windowing), visiting entries
/// in the same order. Reference path for tests.
MeanFitInternals mean_sums_brute_force(double t, const ComponentSample& sample, double b, const KernelSpec& kernel);

/// Intercept of the local linear fit from precomputed sums, with the
/// Exact -> LocalConstantFallback -> Missing ladder.
PointEstimate mean_from_sums(const MeanFitInternals& s) noexcept;

PointEstimate mean_at(double t, const ComponentSample& sample, double b, const KernelSpec& kernel);

/// Fits every component on its grid. `grids` holds one grid per component,
/// or a single grid shared by all. Under SR every bandwidth must be equal.
std::vector<EstimateCurve> estimate_means(const ObservationSet& obs, const MeanWeights& weights,
                                          const MeanBandwidths& bandwidths, std::span<const Grid> grids,
                                          const KernelSpec& kernel = KernelSpec::epanechnikov());

std::vector<EstimateCurve> estimate_means(const ObservationSet& obs, const WeightScheme& scheme,
                                          const MeanBandwidths& bandwidths, std::span<const Grid> grids,
                                          const KernelSpec& kernel = KernelSpec::epanechnikov());

} // namespace hdfda

#endif // HDFDA_MEAN_SMOOTHER_HPP
