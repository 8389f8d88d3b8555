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

#ifndef HDFDA_WEIGHTS_HPP
#define HDFDA_WEIGHTS_HPP

#include "hdfda/core.hpp"

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hdfda {

// ---------------------------------------------------------------------------
// Component pairs
// ---------------------------------------------------------------------------

/// Unordered component pair, normalized so that j <= k.
struct PairIndex {
    std::size_t j = 0;
    std::size_t k = 0;

    static PairIndex of(std::size_t a, std::size_t b) { return a <= b ? PairIndex{a, b} : PairIndex{b, a}; }
    bool diagonal() const noexcept { return j == k; }
    friend auto operator<=>(const PairIndex&, const PairIndex&) = default;
};

std::vector<PairIndex> all_pairs(std::size_t p);
std::vector<PairIndex> diagonal_pairs(std::size_t p);
/// "all", "diag", or a comma-separated list "j1:k1,j2:k2" of 1-based pairs.
/// Pairs are normalized, deduplicated and returned in ascending order.
std::vector<PairIndex> parse_pairs(std::string_view spec, std::size_t p);

// ---------------------------------------------------------------------------
// Index sets I_ijk
// ---------------------------------------------------------------------------

/// Whether the l == m raw covariances are left out for pair (j, k). Under
/// SR every pair shares the time list, so coincident-time products always
/// carry error cross-terms; under FR that happens only for auto-covariances.
inline bool excludes_coincident_pairs(DesignKind design, std::size_t j, std::size_t k) noexcept {
    return design == DesignKind::SR || j == k;
}

/// |I_ijk| for counts N_ij, N_ik (under SR both equal N_i).
std::size_t index_set_size(DesignKind design, std::size_t j, std::size_t k, std::size_t nij, std::size_t nik);

/// Visits the (l, m) pairs of I_ijk in row-major order.
template <class F>
void for_each_index_pair(DesignKind design, std::size_t j, std::size_t k, std::size_t nij, std::size_t nik, F&& f) {
    const bool skip = excludes_coincident_pairs(design, j, k);
    for (std::size_t l = 0; l < nij; ++l)
        for (std::size_t m = 0; m < nik; ++m) {
            if (skip && l == m) continue;
            f(l, m);
        }
}

// ---------------------------------------------------------------------------
// Weight schemes
// ---------------------------------------------------------------------------

enum class SchemeKind { OBS, SUBJ, Generic };

std::string_view to_string(SchemeKind s);
SchemeKind parse_scheme(std::string_view s);

/// Caller-supplied weights. Mean weights are indexed (i, j); covariance
/// weights are per requested pair, one entry per subject.
struct GenericWeights {
    std::size_t subjects = 0;
    std::size_t components = 0;
    std::vector<double> mean;                           // i * components + j
    std::map<PairIndex, std::vector<double>> covariance; // pair -> v_{.jk}
};

class WeightScheme {
public:
    static WeightScheme obs() { return WeightScheme(SchemeKind::OBS, nullptr); }
    static WeightScheme subj() { return WeightScheme(SchemeKind::SUBJ, nullptr); }
    static WeightScheme generic(GenericWeights w) {
        return WeightScheme(SchemeKind::Generic, std::make_shared<const GenericWeights>(std::move(w)));
    }

    SchemeKind kind() const noexcept { return kind_; }
    const GenericWeights* generic_weights() const noexcept { return generic_.get(); }

private:
    WeightScheme(SchemeKind k, std::shared_ptr<const GenericWeights> g) : kind_(k), generic_(std::move(g)) {}

    SchemeKind kind_;
    std::shared_ptr<const GenericWeights> generic_;
};

/// w_ij, stored component-major so that component(j) is a contiguous span
/// over subjects.
class MeanWeights {
public:
    MeanWeights() = default;
    MeanWeights(std::size_t n, std::size_t p) : n_(n), p_(p), w_(n * p, 0.0) {}

    std::size_t subjects() const noexcept { return n_; }
    std::size_t components() const noexcept { return p_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return w_[j * n_ + i]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return w_[j * n_ + i]; }
    std::span<const double> component(std::size_t j) const noexcept { return {w_.data() + j * n_, n_}; }

private:
    std::size_t n_ = 0;
    std::size_t p_ = 0;
    std::vector<double> w_;
};

/// v_ijk for a set of pairs; lookup is symmetric in (j, k).
class CovWeights {
public:
    CovWeights() = default;
    explicit CovWeights(std::size_t n) : n_(n) {}

    std::size_t subjects() const noexcept { return n_; }
    std::span<const PairIndex> pairs() const noexcept { return pairs_; }
    bool contains(std::size_t j, std::size_t k) const;
    /// v_{.jk}; throws ValidationError when the pair was not constructed.
    std::span<const double> pair(std::size_t j, std::size_t k) const;

    void set(PairIndex pair, std::vector<double> v);

private:
    std::size_t n_ = 0;
    std::vector<PairIndex> pairs_;
    std::vector<std::vector<double>> v_;
};

MeanWeights mean_weights(const WeightScheme& scheme, const CountMatrix& counts);

/// Covariance weights for the requested pairs. Throws ValidationError naming
/// the first pair whose index sets are all empty.
CovWeights cov_weights(const WeightScheme& scheme, DesignKind design, const CountMatrix& counts,
                       std::span<const PairIndex> pairs);

// ---------------------------------------------------------------------------
// Count summaries and homogeneity
// ---------------------------------------------------------------------------

struct ComponentCountSummary {
    double nbar = 0.0;             // n^-1 sum_i N_ij
    double nbar_sq = 0.0;          // n^-1 sum_i N_ij^2
    double nplus = 0.0;            // max_i N_ij
    std::optional<double> nharm;   // n (sum_i 1/N_ij)^-1; absent if any N_ij = 0
    std::optional<double> wbar;    // max_i w_ij N_ij; absent if weights undefined
};

struct PairCountSummary {
    PairIndex pair;
    double nbar_jk = 0.0;           // n^-1 sum_i N_ij N_ik
    double nbar_jk2 = 0.0;          // n^-1 sum_i N_ij N_ik^2
    double nbar_j2k2 = 0.0;         // n^-1 sum_i N_ij^2 N_ik^2
    double nplus_jk = 0.0;          // max_i N_ij N_ik
    std::optional<double> nharm_jk; // n (sum_i 1/(N_ij N_ik))^-1
    std::optional<double> vbar;     // max_i v_ijk |I_ijk|
};

struct CountSummaries {
    std::size_t subjects = 0;
    SchemeKind scheme = SchemeKind::OBS;
    DesignKind design = DesignKind::FR;
    std::vector<ComponentCountSummary> components;
    std::vector<PairCountSummary> pairs;
};

CountSummaries count_summaries(const CountMatrix& counts, const WeightScheme& scheme, DesignKind design,
                               std::span<const PairIndex> pairs);

struct HomogeneityReport {
    std::vector<std::optional<double>> mean_ratio; // per component
    std::vector<std::optional<double>> cov_ratio;  // per summarized pair
    std::optional<double> max_mean_ratio;
    std::optional<double> max_cov_ratio;
};

HomogeneityReport homogeneity_report(const CountSummaries& summaries);

/// Stochastic-term size q_jkn of the covariance rate for pair (j, k) with
/// bandwidths b_j, b_k. Under SR the common auto-covariance form is used.
double q_jkn(DesignKind design, const CountMatrix& counts, std::span<const double> v, std::size_t j, std::size_t k,
             double bj, double bk);

/// omega_jk^2; under SR the common auto-covariance form.
double omega_sq(DesignKind design, const CountMatrix& counts, std::span<const double> v, std::size_t j, std::size_t k);

/// sum_i w_ij^2 N_ij (1/b + N_ij - 1), the mean-rate stochastic term.
double mean_variance_term(const CountMatrix& counts, std::span<const double> w, std::size_t j, double b);

} // namespace hdfda

#endif // HDFDA_WEIGHTS_HPP
