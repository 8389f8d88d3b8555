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

#include "hdfda/mean_smoother.hpp"

#include "hdfda/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace hdfda {

ComponentSample::ComponentSample(const ObservationSet& obs, std::size_t j, std::span<const double> weights)
    : j_(j), domain_(obs.domain(j)) {
    if (weights.size() != obs.subjects()) throw ValidationError("mean weights do not match the subject count");
    std::size_t total = 0;
    for (std::size_t i = 0; i < obs.subjects(); ++i) total += obs.count(i, j);
    entries_.reserve(total);
    for (std::size_t i = 0; i < obs.subjects(); ++i) {
        if (!(weights[i] > 0.0)) continue;
        for (const auto& o : obs.series(i, j))
            entries_.push_back({o.time, o.value, weights[i], static_cast<std::uint32_t>(i)});
    }
    // Series are already time-sorted; a stable sort keeps subject then position order on ties.
    std::stable_sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) { return a.time < b.time; });
}

std::pair<std::size_t, std::size_t> ComponentSample::window(double t, double r) const noexcept {
    const auto lo = std::partition_point(entries_.begin(), entries_.end(),
                                         [&](const Entry& e) { return e.time - t < -r; });
    const auto hi = std::partition_point(lo, entries_.end(), [&](const Entry& e) { return e.time - t <= r; });
    return {static_cast<std::size_t>(lo - entries_.begin()), static_cast<std::size_t>(hi - entries_.begin())};
}

namespace {

inline void accumulate(MeanFitInternals& s, const ComponentSample::Entry& e, double t, double b,
                       const KernelSpec& kernel) noexcept {
    const double u = (e.time - t) / b;
    const double wk = e.weight * (kernel(u) / b);
    const double wku = wk * u;
    s.S0 += wk;
    s.S1 += wku;
    s.S2 += wku * u;
    s.R0 += wk * e.value;
    s.R1 += wku * e.value;
}

} // namespace

MeanFitInternals mean_sums_at(double t, const ComponentSample& sample, double b, const KernelSpec& kernel) {
    if (!(b > 0.0)) throw ValidationError("bandwidth must be positive");
    MeanFitInternals s;
    const auto entries = sample.entries();
    const auto [lo, hi] = sample.window(t, b);
    for (std::size_t e = lo; e < hi; ++e) accumulate(s, entries[e], t, b, kernel);
    return s;
}

MeanFitInternals mean_sums_brute_force(double t, const ComponentSample& sample, double b, const KernelSpec& kernel) {
    if (!(b > 0.0)) throw ValidationError("bandwidth must be positive");
    MeanFitInternals s;
    for (const auto& e : sample.entries()) {
        if (std::fabs(e.time - t) > b) continue;
        accumulate(s, e, t, b, kernel);
    }
    return s;
}

PointEstimate mean_from_sums(const MeanFitInternals& s) noexcept {
    const double det = s.S0 * s.S2 - s.S1 * s.S1;
    const double eps = 1e-10 * std::max(s.S0 * s.S2, 1.0);
    if (det > eps) return {(s.R0 * s.S2 - s.R1 * s.S1) / det, EstimateStatus::Exact};
    if (s.S0 > 0.0) return {s.R0 / s.S0, EstimateStatus::LocalConstantFallback};
    return {};
}

PointEstimate mean_at(double t, const ComponentSample& sample, double b, const KernelSpec& kernel) {
    return mean_from_sums(mean_sums_at(t, sample, b, kernel));
}

std::vector<EstimateCurve> estimate_means(const ObservationSet& obs, const MeanWeights& weights,
                                          const MeanBandwidths& bandwidths, std::span<const Grid> grids,
                                          const KernelSpec& kernel) {
    const std::size_t p = obs.components();
    if (!obs.validated()) throw ValidationError("observations must be validated before estimation");
    if (weights.subjects() != obs.subjects() || weights.components() != p)
        throw ValidationError("mean weights do not match the observation set");
    if (bandwidths.b.size() != p)
        throw ValidationError("expected " + std::to_string(p) + " mean bandwidths, got " +
                              std::to_string(bandwidths.b.size()));
    if (grids.size() != 1 && grids.size() != p)
        throw ValidationError("expected 1 or " + std::to_string(p) + " grids, got " + std::to_string(grids.size()));
    for (std::size_t j = 0; j < p; ++j) {
        const double b = bandwidths.b[j];
        if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("mean bandwidths must be positive");
        if (obs.design() == DesignKind::SR && b != bandwidths.b.front())
            throw ValidationError("SR design uses a single mean bandwidth for all components");
        const Grid& g = grids[grids.size() == 1 ? 0 : j];
        if (g.lo() < obs.domain(j).lo || g.hi() > obs.domain(j).hi)
            throw ValidationError("grid for component " + std::to_string(j + 1) + " leaves its domain");
    }

    std::vector<EstimateCurve> curves(p);
    parallel_for(p, [&](std::size_t j) {
        const Grid& g = grids[grids.size() == 1 ? 0 : j];
        const ComponentSample sample(obs, j, weights.component(j));
        EstimateCurve c;
        c.component = j;
        c.grid = g;
        c.bandwidth = bandwidths.b[j];
        c.values.resize(g.size());
        c.status.resize(g.size());
        for (std::size_t a = 0; a < g.size(); ++a) {
            const auto est = mean_at(g[a], sample, c.bandwidth, kernel);
            c.values[a] = est.value;
            c.status[a] = est.status;
        }
        curves[j] = std::move(c);
    });
    return curves;
}

std::vector<EstimateCurve> estimate_means(const ObservationSet& obs, const WeightScheme& scheme,
                                          const MeanBandwidths& bandwidths, std::span<const Grid> grids,
                                          const KernelSpec& kernel) {
    return estimate_means(obs, mean_weights(scheme, obs.counts()), bandwidths, grids, kernel);
}

} // namespace hdfda
