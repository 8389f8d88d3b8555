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

#include "hdfda/weights.hpp"

#include <algorithm>
#include <charconv>

namespace hdfda {

namespace {

constexpr double kGenericTolerance = 1e-9;

std::string pair_name(PairIndex p) { return "(" + std::to_string(p.j + 1) + "," + std::to_string(p.k + 1) + ")"; }

std::size_t parse_index(std::string_view s, std::size_t p) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 1 || v > p)
        throw ValidationError("bad component index '" + std::string(s) + "' (expected 1.." + std::to_string(p) + ")");
    return v - 1;
}

void check_normalization(double sum, const std::string& what) {
    if (!(std::fabs(sum - 1.0) <= kGenericTolerance))
        throw ValidationError("generic " + what + " weights violate normalization: sum = " + std::to_string(sum));
}

} // namespace

std::vector<PairIndex> all_pairs(std::size_t p) {
    std::vector<PairIndex> out;
    out.reserve(p * (p + 1) / 2);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = j; k < p; ++k) out.push_back({j, k});
    return out;
}

std::vector<PairIndex> diagonal_pairs(std::size_t p) {
    std::vector<PairIndex> out;
    out.reserve(p);
    for (std::size_t j = 0; j < p; ++j) out.push_back({j, j});
    return out;
}

std::vector<PairIndex> parse_pairs(std::string_view spec, std::size_t p) {
    if (spec == "all") return all_pairs(p);
    if (spec == "diag") return diagonal_pairs(p);
    std::vector<PairIndex> out;
    while (!spec.empty()) {
        const auto comma = spec.find(',');
        const auto item = spec.substr(0, comma);
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) throw ValidationError("bad pair '" + std::string(item) + "' (expected j:k)");
        out.push_back(PairIndex::of(parse_index(item.substr(0, colon), p), parse_index(item.substr(colon + 1), p)));
        if (comma == std::string_view::npos) break;
        spec.remove_prefix(comma + 1);
    }
    if (out.empty()) throw ValidationError("empty pair selection");
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::size_t index_set_size(DesignKind design, std::size_t j, std::size_t k, std::size_t nij, std::size_t nik) {
    if (design == DesignKind::SR) return nij == 0 ? 0 : nij * (nij - 1);
    if (j == k) return nij == 0 ? 0 : nij * (nij - 1);
    return nij * nik;
}

std::string_view to_string(SchemeKind s) {
    switch (s) {
    case SchemeKind::OBS: return "obs";
    case SchemeKind::SUBJ: return "subj";
    case SchemeKind::Generic: return "generic";
    }
    return "obs";
}

SchemeKind parse_scheme(std::string_view s) {
    if (s == "obs" || s == "OBS") return SchemeKind::OBS;
    if (s == "subj" || s == "SUBJ") return SchemeKind::SUBJ;
    throw ValidationError("unknown weighting scheme '" + std::string(s) + "' (expected obs or subj)");
}

// ---------------------------------------------------------------------------

bool CovWeights::contains(std::size_t j, std::size_t k) const {
    return std::binary_search(pairs_.begin(), pairs_.end(), PairIndex::of(j, k));
}

std::span<const double> CovWeights::pair(std::size_t j, std::size_t k) const {
    const auto key = PairIndex::of(j, k);
    const auto it = std::lower_bound(pairs_.begin(), pairs_.end(), key);
    if (it == pairs_.end() || *it != key) throw ValidationError("no covariance weights for pair " + pair_name(key));
    return v_[static_cast<std::size_t>(it - pairs_.begin())];
}

void CovWeights::set(PairIndex pair, std::vector<double> v) {
    pair = PairIndex::of(pair.j, pair.k);
    const auto it = std::lower_bound(pairs_.begin(), pairs_.end(), pair);
    const auto pos = it - pairs_.begin();
    if (it != pairs_.end() && *it == pair) {
        v_[static_cast<std::size_t>(pos)] = std::move(v);
        return;
    }
    pairs_.insert(it, pair);
    v_.insert(v_.begin() + pos, std::move(v));
}

MeanWeights mean_weights(const WeightScheme& scheme, const CountMatrix& counts) {
    const std::size_t n = counts.subjects(), p = counts.components();
    MeanWeights w(n, p);
    for (std::size_t j = 0; j < p; ++j) {
        std::size_t total = 0, active = 0;
        for (std::size_t i = 0; i < n; ++i) {
            total += counts(i, j);
            active += counts(i, j) > 0 ? 1 : 0;
        }
        if (total == 0)
            throw ValidationError("component " + std::to_string(j + 1) + " has no observations; mean weights undefined");
        switch (scheme.kind()) {
        case SchemeKind::OBS:
            for (std::size_t i = 0; i < n; ++i)
                if (counts(i, j) > 0) w(i, j) = 1.0 / static_cast<double>(total);
            break;
        case SchemeKind::SUBJ:
            for (std::size_t i = 0; i < n; ++i)
                if (counts(i, j) > 0)
                    w(i, j) = 1.0 / (static_cast<double>(active) * static_cast<double>(counts(i, j)));
            break;
        case SchemeKind::Generic: {
            const auto* g = scheme.generic_weights();
            if (g->subjects != n || g->components != p || g->mean.size() != n * p)
                throw ValidationError("generic mean weights have the wrong shape");
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts(i, j) == 0) continue;
                const double v = g->mean[i * p + j];
                if (!(v > 0.0) || !std::isfinite(v))
                    throw ValidationError("generic mean weights must be strictly positive");
                w(i, j) = v;
                sum += v * static_cast<double>(counts(i, j));
            }
            check_normalization(sum, "mean");
            break;
        }
        }
    }
    return w;
}

CovWeights cov_weights(const WeightScheme& scheme, DesignKind design, const CountMatrix& counts,
                       std::span<const PairIndex> pairs) {
    const std::size_t n = counts.subjects();
    CovWeights out(n);
    for (const auto raw : pairs) {
        const auto pr = PairIndex::of(raw.j, raw.k);
        if (pr.k >= counts.components()) throw ValidationError("pair " + pair_name(pr) + " out of range");
        std::vector<std::size_t> sizes(n);
        std::size_t total = 0, active = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sizes[i] = index_set_size(design, pr.j, pr.k, counts(i, pr.j), counts(i, pr.k));
            total += sizes[i];
            active += sizes[i] > 0 ? 1 : 0;
        }
        if (total == 0) throw ValidationError("all index sets are empty for pair " + pair_name(pr));
        std::vector<double> v(n, 0.0);
        switch (scheme.kind()) {
        case SchemeKind::OBS:
            for (std::size_t i = 0; i < n; ++i)
                if (sizes[i] > 0) v[i] = 1.0 / static_cast<double>(total);
            break;
        case SchemeKind::SUBJ:
            for (std::size_t i = 0; i < n; ++i)
                if (sizes[i] > 0) v[i] = 1.0 / (static_cast<double>(active) * static_cast<double>(sizes[i]));
            break;
        case SchemeKind::Generic: {
            const auto* g = scheme.generic_weights();
            const auto it = g->covariance.find(pr);
            if (it == g->covariance.end() || it->second.size() != n)
                throw ValidationError("generic covariance weights missing for pair " + pair_name(pr));
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[i] == 0) continue;
                const double x = it->second[i];
                if (!(x > 0.0) || !std::isfinite(x))
                    throw ValidationError("generic covariance weights must be strictly positive");
                v[i] = x;
                sum += x * static_cast<double>(sizes[i]);
            }
            check_normalization(sum, "covariance");
            break;
        }
        }
        out.set(pr, std::move(v));
    }
    return out;
}

// ---------------------------------------------------------------------------

CountSummaries count_summaries(const CountMatrix& counts, const WeightScheme& scheme, DesignKind design,
                               std::span<const PairIndex> pairs) {
    const std::size_t n = counts.subjects(), p = counts.components();
    const double nd = static_cast<double>(n);
    CountSummaries out;
    out.subjects = n;
    out.scheme = scheme.kind();
    out.design = design;
    out.components.resize(p);

    std::optional<MeanWeights> w;
    try {
        w = mean_weights(scheme, counts);
    } catch (const ValidationError&) {
        // wbar reported as absent for every component
    }

    for (std::size_t j = 0; j < p; ++j) {
        auto& c = out.components[j];
        double sum = 0.0, sum_sq = 0.0, inv = 0.0, plus = 0.0;
        bool any_zero = false;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = static_cast<double>(counts(i, j));
            sum += x;
            sum_sq += x * x;
            plus = std::max(plus, x);
            if (x == 0.0)
                any_zero = true;
            else
                inv += 1.0 / x;
        }
        c.nbar = sum / nd;
        c.nbar_sq = sum_sq / nd;
        c.nplus = plus;
        if (!any_zero && n > 0) c.nharm = nd / inv;
        if (w && sum > 0.0) {
            double m = 0.0;
            for (std::size_t i = 0; i < n; ++i) m = std::max(m, (*w)(i, j) * static_cast<double>(counts(i, j)));
            c.wbar = m;
        }
    }

    for (const auto raw : pairs) {
        const auto pr = PairIndex::of(raw.j, raw.k);
        PairCountSummary s;
        s.pair = pr;
        double jk = 0.0, jk2 = 0.0, j2k2 = 0.0, plus = 0.0, inv = 0.0;
        bool any_zero = false;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = static_cast<double>(counts(i, pr.j));
            const double b = static_cast<double>(counts(i, pr.k));
            jk += a * b;
            jk2 += a * b * b;
            j2k2 += a * a * b * b;
            plus = std::max(plus, a * b);
            if (a * b == 0.0)
                any_zero = true;
            else
                inv += 1.0 / (a * b);
        }
        s.nbar_jk = jk / nd;
        s.nbar_jk2 = jk2 / nd;
        s.nbar_j2k2 = j2k2 / nd;
        s.nplus_jk = plus;
        if (!any_zero && n > 0) s.nharm_jk = nd / inv;
        try {
            const auto cw = cov_weights(scheme, design, counts, std::span<const PairIndex>(&pr, 1));
            const auto v = cw.pair(pr.j, pr.k);
            double m = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                m = std::max(m, v[i] * static_cast<double>(
                                           index_set_size(design, pr.j, pr.k, counts(i, pr.j), counts(i, pr.k))));
            s.vbar = m;
        } catch (const ValidationError&) {
        }
        out.pairs.push_back(s);
    }
    return out;
}

HomogeneityReport homogeneity_report(const CountSummaries& summaries) {
    HomogeneityReport r;
    for (const auto& c : summaries.components) {
        std::optional<double> ratio;
        if (c.nbar > 0.0) ratio = std::max(c.nbar_sq / (c.nbar * c.nbar), c.nplus / c.nbar);
        r.mean_ratio.push_back(ratio);
        if (ratio) r.max_mean_ratio = std::max(r.max_mean_ratio.value_or(*ratio), *ratio);
    }
    for (const auto& s : summaries.pairs) {
        std::optional<double> ratio;
        if (s.nbar_jk > 0.0) {
            const double nbar_j = summaries.components.at(s.pair.j).nbar;
            const double d2 = s.nbar_jk * s.nbar_jk;
            ratio = std::max({nbar_j * s.nbar_jk2 / d2, s.nbar_j2k2 / d2, s.nplus_jk / s.nbar_jk});
        }
        r.cov_ratio.push_back(ratio);
        if (ratio) r.max_cov_ratio = std::max(r.max_cov_ratio.value_or(*ratio), *ratio);
    }
    return r;
}

double q_jkn(DesignKind design, const CountMatrix& counts, std::span<const double> v, std::size_t j, std::size_t k,
             double bj, double bk) {
    if (!(bj > 0.0) || !(bk > 0.0)) throw ValidationError("bandwidths must be positive");
    double q = 0.0;
    const bool auto_form = design == DesignKind::SR || j == k;
    for (std::size_t i = 0; i < counts.subjects(); ++i) {
        const double vi2 = v[i] * v[i];
        if (auto_form) {
            const double nn = static_cast<double>(counts(i, j));
            q += vi2 * nn * (nn - 1.0) * (1.0 / (bj * bj) + 2.0 / bj * (nn - 2.0) + (nn - 2.0) * (nn - 3.0));
        } else {
            const double a = static_cast<double>(counts(i, j));
            const double b = static_cast<double>(counts(i, k));
            q += vi2 * a * b * (1.0 / bj + a - 1.0) * (1.0 / bk + b - 1.0);
        }
    }
    return q;
}

double omega_sq(DesignKind design, const CountMatrix& counts, std::span<const double> v, std::size_t j, std::size_t k) {
    if (design == DesignKind::SR || j == k) {
        double s = 0.0;
        for (std::size_t i = 0; i < counts.subjects(); ++i) {
            const double nn = static_cast<double>(counts(i, j));
            s += v[i] * v[i] * nn * (nn - 1.0) * (nn - 1.0);
        }
        return s;
    }
    double left = 0.0, right = 0.0;
    for (std::size_t i = 0; i < counts.subjects(); ++i) {
        const double a = static_cast<double>(counts(i, j));
        const double b = static_cast<double>(counts(i, k));
        left += v[i] * v[i] * a * a * b;
        right += v[i] * v[i] * a * b * b;
    }
    return std::max(left, right);
}

double mean_variance_term(const CountMatrix& counts, std::span<const double> w, std::size_t j, double b) {
    if (!(b > 0.0)) throw ValidationError("bandwidth must be positive");
    double s = 0.0;
    for (std::size_t i = 0; i < counts.subjects(); ++i) {
        const double nn = static_cast<double>(counts(i, j));
        s += w[i] * w[i] * nn * (1.0 / b + nn - 1.0);
    }
    return s;
}

} // namespace hdfda
