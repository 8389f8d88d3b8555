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

#ifndef HDFDA_COV_SMOOTHER_HPP
#define HDFDA_COV_SMOOTHER_HPP

#include "hdfda/core.hpp"
#include "hdfda/weights.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace hdfda {

// ---------------------------------------------------------------------------
// Mean used to center the raw covariances
// ---------------------------------------------------------------------------

class MeanProvider {
public:
    using Function = std::function<double(std::size_t j, double t)>;
    enum class Kind { Oracle, PlugIn };

    /// Known mean functions (e.g. simulation truth).
    static MeanProvider oracle(Function mu);
    /// Estimated curves, one per component (indexed by EstimateCurve::component),
    /// linearly interpolated between grid points.
    static MeanProvider plug_in(std::vector<EstimateCurve> curves);

    Kind kind() const noexcept { return kind_; }

    /// mu_j(t). `subject` only feeds the error message when a plug-in curve is
    /// Missing at t or does not cover t.
    double at(std::size_t subject, std::size_t j, double t) const;

private:
    MeanProvider() = default;

    Kind kind_ = Kind::Oracle;
    Function oracle_;
    std::vector<EstimateCurve> curves_; // indexed by component
};

/// Y - mu_j(T) for every observation, laid out like the observation set:
/// values(i, j)[l] corresponds to obs.series(i, j)[l].
class CenteredValues {
public:
    CenteredValues(const ObservationSet& obs, const MeanProvider& mean);

    std::span<const double> values(std::size_t i, std::size_t j) const noexcept {
        const std::size_t s = i * p_ + j;
        return {c_.data() + offsets_[s], offsets_[s + 1] - offsets_[s]};
    }

private:
    std::size_t p_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<double> c_;
};

// ---------------------------------------------------------------------------
// Raw covariance terms and pointwise fits
// ---------------------------------------------------------------------------

struct RawCovTerm {
    std::uint32_t l;
    std::uint32_t m;
    double s; // T_ijl
    double t; // T_ikm
    double z; // Z_ijklm
};

/// Z_ijklm over I_ijk for one pair, per subject, in row-major (l, m) order.
class RawCovTerms {
public:
    std::size_t j() const noexcept { return j_; }
    std::size_t k() const noexcept { return k_; }
    DesignKind design() const noexcept { return design_; }
    std::size_t subjects() const noexcept { return nj_.size(); }
    bool excludes_coincident() const noexcept { return excludes_coincident_pairs(design_, j_, k_); }

    std::span<const RawCovTerm> terms(std::size_t i) const noexcept {
        return {terms_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    std::span<const double> times_j(std::size_t i) const noexcept {
        return {tj_.data() + toff_j_[i], toff_j_[i + 1] - toff_j_[i]};
    }
    std::span<const double> times_k(std::size_t i) const noexcept {
        return {tk_.data() + toff_k_[i], toff_k_[i + 1] - toff_k_[i]};
    }
    /// Position of (l, m) within terms(i); (l, m) must belong to I_ijk.
    std::size_t term_index(std::size_t i, std::size_t l, std::size_t m) const noexcept {
        if (!excludes_coincident()) return l * nk_[i] + m;
        return l * (nk_[i] - 1) + m - (m > l ? 1 : 0);
    }

private:
    friend RawCovTerms raw_cov_terms(const ObservationSet&, const MeanProvider&, std::size_t, std::size_t);

    std::size_t j_ = 0;
    std::size_t k_ = 0;
    DesignKind design_ = DesignKind::FR;
    std::vector<std::size_t> nj_, nk_;
    std::vector<std::size_t> offsets_{0};
    std::vector<RawCovTerm> terms_;
    std::vector<std::size_t> toff_j_{0}, toff_k_{0};
    std::vector<double> tj_, tk_;
};

RawCovTerms raw_cov_terms(const ObservationSet& obs, const MeanProvider& mean, std::size_t j, std::size_t k);

struct CovFitInternals {
    double S00 = 0.0, S10 = 0.0, S01 = 0.0, S20 = 0.0, S11 = 0.0, S02 = 0.0;
    double R00 = 0.0, R10 = 0.0, R01 = 0.0;
    double Q0 = 0.0, Q1 = 0.0, Q2 = 0.0;
};

/// Windowed sums at (s, t): subjects ascending, then (l, m) row-major inside
/// the two binary-search windows. Q0..Q2 are filled in.
CovFitInternals cov_sums_at(double s, double t, const RawCovTerms& raw, const CovWeights& v, double bj, double bk,
                            const KernelSpec& kernel);

/// Same sums by scanning every stored term in the same order.
CovFitInternals cov_sums_brute_force(double s, double t, const RawCovTerms& raw, const CovWeights& v, double bj,
                                     double bk, const KernelSpec& kernel);

/// Fills Q0..Q2 and solves for the intercept with the degeneracy ladder.
PointEstimate cov_from_sums(CovFitInternals& s) noexcept;

PointEstimate cov_at(double s, double t, const RawCovTerms& raw, const CovWeights& v, double bj, double bk,
                     const KernelSpec& kernel);

// ---------------------------------------------------------------------------
// Batch surfaces
// ---------------------------------------------------------------------------

struct CovBandwidths {
    std::vector<double> b; // per component

    static CovBandwidths shared(double value, std::size_t p) { return {std::vector<double>(p, value)}; }
};

struct PairSelection {
    enum class Kind { All, DiagonalOnly, List };
    Kind kind = Kind::All;
    std::vector<PairIndex> list;

    static PairSelection all() { return {Kind::All, {}}; }
    static PairSelection diagonal() { return {Kind::DiagonalOnly, {}}; }
    static PairSelection of(std::vector<PairIndex> pairs) { return {Kind::List, std::move(pairs)}; }

    /// Normalized (j <= k), deduplicated, ascending.
    std::vector<PairIndex> resolve(std::size_t p) const;
};

struct CovEstimates {
    std::vector<EstimateSurface> surfaces; // j <= k, ascending pair order
    std::vector<PairIndex> skipped;        // pairs whose index sets were all empty

    /// gamma_jk surface; for j > k the transpose of the stored (k, j) surface.
    EstimateSurface get(std::size_t j, std::size_t k) const;
};

/// Fits the selected surfaces. `grids` holds one grid per component or a
/// single shared grid; under SR a single grid and a single bandwidth are
/// required. Surfaces for j = k are exactly symmetric.
CovEstimates estimate_covariances(const ObservationSet& obs, const MeanProvider& mean, const WeightScheme& scheme,
                                  const CovBandwidths& bandwidths, std::span<const Grid> grids,
                                  const PairSelection& selection,
                                  const KernelSpec& kernel = KernelSpec::epanechnikov());

} // namespace hdfda

#endif // HDFDA_COV_SMOOTHER_HPP
