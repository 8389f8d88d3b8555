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

#include "hdfda/cov_smoother.hpp"

#include "hdfda/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace hdfda {

// ---------------------------------------------------------------------------
// MeanProvider
// ---------------------------------------------------------------------------

MeanProvider MeanProvider::oracle(Function mu) {
    if (!mu) throw ValidationError("oracle mean function is empty");
    MeanProvider m;
    m.kind_ = Kind::Oracle;
    m.oracle_ = std::move(mu);
    return m;
}

MeanProvider MeanProvider::plug_in(std::vector<EstimateCurve> curves) {
    MeanProvider m;
    m.kind_ = Kind::PlugIn;
    std::size_t p = 0;
    for (const auto& c : curves) p = std::max(p, c.component + 1);
    m.curves_.resize(p);
    std::vector<bool> seen(p, false);
    for (auto& c : curves) {
        if (seen[c.component]) throw ValidationError("duplicate plug-in mean curve for component " +
                                                     std::to_string(c.component + 1));
        seen[c.component] = true;
        m.curves_[c.component] = std::move(c);
    }
    for (std::size_t j = 0; j < p; ++j)
        if (!seen[j]) throw ValidationError("no plug-in mean curve for component " + std::to_string(j + 1));
    return m;
}

namespace {

[[noreturn]] void missing_mean(std::size_t i, std::size_t j, double t, const char* why) {
    std::ostringstream ss;
    ss << "plug-in mean " << why << " for subject " << i + 1 << ", component " << j + 1 << ", time " << t;
    throw ValidationError(ss.str());
}

} // namespace

double MeanProvider::at(std::size_t subject, std::size_t j, double t) const {
    if (kind_ == Kind::Oracle) return oracle_(j, t);
    if (j >= curves_.size()) missing_mean(subject, j, t, "curve absent");
    const auto& c = curves_[j];
    const auto pts = c.grid.points();
    if (pts.empty() || t < pts.front() || t > pts.back()) missing_mean(subject, j, t, "grid does not cover time");
    auto it = std::upper_bound(pts.begin(), pts.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - pts.begin());
    if (hi == pts.size()) hi = pts.size() - 1;
    const std::size_t lo = hi == 0 ? 0 : hi - 1;
    if (pts[lo] == t) {
        if (c.status[lo] == EstimateStatus::Missing) missing_mean(subject, j, t, "is Missing");
        return c.values[lo];
    }
    if (pts[hi] == t) {
        if (c.status[hi] == EstimateStatus::Missing) missing_mean(subject, j, t, "is Missing");
        return c.values[hi];
    }
    if (c.status[lo] == EstimateStatus::Missing || c.status[hi] == EstimateStatus::Missing)
        missing_mean(subject, j, t, "is Missing");
    const double a = (t - pts[lo]) / (pts[hi] - pts[lo]);
    return (1.0 - a) * c.values[lo] + a * c.values[hi];
}

CenteredValues::CenteredValues(const ObservationSet& obs, const MeanProvider& mean) : p_(obs.components()) {
    offsets_.reserve(obs.subjects() * p_ + 1);
    offsets_.push_back(0);
    c_.reserve(obs.total_observations());
    for (std::size_t i = 0; i < obs.subjects(); ++i)
        for (std::size_t j = 0; j < p_; ++j) {
            for (const auto& o : obs.series(i, j)) {
                const double z = o.value - mean.at(i, j, o.time);
                if (!std::isfinite(z)) {
                    std::ostringstream ss;
                    ss << "non-finite centered value for subject " << i + 1 << ", component " << j + 1
                       << ", time " << o.time;
                    throw ValidationError(ss.str());
                }
                c_.push_back(z);
            }
            offsets_.push_back(c_.size());
        }
}

// ---------------------------------------------------------------------------
// Raw terms and pointwise sums
// ---------------------------------------------------------------------------

RawCovTerms raw_cov_terms(const ObservationSet& obs, const MeanProvider& mean, std::size_t j, std::size_t k) {
    if (!obs.validated()) throw ValidationError("observations must be validated before estimation");
    if (j >= obs.components() || k >= obs.components()) throw ValidationError("component index out of range");
    RawCovTerms r;
    r.j_ = j;
    r.k_ = k;
    r.design_ = obs.design();
    const bool skip = excludes_coincident_pairs(obs.design(), j, k);
    for (std::size_t i = 0; i < obs.subjects(); ++i) {
        const auto sj = obs.series(i, j);
        const auto sk = obs.series(i, k);
        std::vector<double> cj(sj.size()), ck(sk.size());
        for (std::size_t l = 0; l < sj.size(); ++l) cj[l] = sj[l].value - mean.at(i, j, sj[l].time);
        for (std::size_t m = 0; m < sk.size(); ++m) ck[m] = sk[m].value - mean.at(i, k, sk[m].time);
        for (std::size_t l = 0; l < sj.size(); ++l)
            for (std::size_t m = 0; m < sk.size(); ++m) {
                if (skip && l == m) continue;
                const double z = cj[l] * ck[m];
                if (!std::isfinite(z)) throw ValidationError("non-finite raw covariance");
                r.terms_.push_back({static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(m), sj[l].time,
                                    sk[m].time, z});
            }
        r.offsets_.push_back(r.terms_.size());
        r.nj_.push_back(sj.size());
        r.nk_.push_back(sk.size());
        for (const auto& o : sj) r.tj_.push_back(o.time);
        for (const auto& o : sk) r.tk_.push_back(o.time);
        r.toff_j_.push_back(r.tj_.size());
        r.toff_k_.push_back(r.tk_.size());
    }
    return r;
}

namespace {

inline void accumulate(CovFitInternals& f, double vi, const RawCovTerm& term, double s, double t, double bj,
                       double bk, const KernelSpec& kernel) noexcept {
    const double u = (term.s - s) / bj;
    const double w = (term.t - t) / bk;
    const double vk = vi * (kernel(u) / bj) * (kernel(w) / bk);
    const double vku = vk * u;
    const double vkw = vk * w;
    f.S00 += vk;
    f.S10 += vku;
    f.S01 += vkw;
    f.S20 += vku * u;
    f.S11 += vku * w;
    f.S02 += vkw * w;
    f.R00 += vk * term.z;
    f.R10 += vku * term.z;
    f.R01 += vkw * term.z;
}

std::pair<std::size_t, std::size_t> time_window(std::span<const double> times, double x, double r) {
    const auto lo = std::partition_point(times.begin(), times.end(), [&](double v) { return v - x < -r; });
    const auto hi = std::partition_point(lo, times.end(), [&](double v) { return v - x <= r; });
    return {static_cast<std::size_t>(lo - times.begin()), static_cast<std::size_t>(hi - times.begin())};
}

void fill_q(CovFitInternals& f) noexcept {
    f.Q0 = f.S20 * f.S02 - f.S11 * f.S11;
    f.Q1 = f.S10 * f.S02 - f.S01 * f.S11;
    f.Q2 = f.S10 * f.S11 - f.S01 * f.S20;
}

void check_bandwidths(double bj, double bk) {
    if (!(bj > 0.0) || !(bk > 0.0)) throw ValidationError("bandwidths must be positive");
}

} // namespace

CovFitInternals cov_sums_at(double s, double t, const RawCovTerms& raw, const CovWeights& v, double bj, double bk,
                            const KernelSpec& kernel) {
    check_bandwidths(bj, bk);
    const auto vw = v.pair(raw.j(), raw.k());
    const bool skip = raw.excludes_coincident();
    CovFitInternals f;
    for (std::size_t i = 0; i < raw.subjects(); ++i) {
        if (!(vw[i] > 0.0)) continue;
        const auto terms = raw.terms(i);
        if (terms.empty()) continue;
        const auto [l0, l1] = time_window(raw.times_j(i), s, bj);
        if (l0 == l1) continue;
        const auto [m0, m1] = time_window(raw.times_k(i), t, bk);
        for (std::size_t l = l0; l < l1; ++l)
            for (std::size_t m = m0; m < m1; ++m) {
                if (skip && l == m) continue;
                accumulate(f, vw[i], terms[raw.term_index(i, l, m)], s, t, bj, bk, kernel);
            }
    }
    fill_q(f);
    return f;
}

CovFitInternals cov_sums_brute_force(double s, double t, const RawCovTerms& raw, const CovWeights& v, double bj,
                                     double bk, const KernelSpec& kernel) {
    check_bandwidths(bj, bk);
    const auto vw = v.pair(raw.j(), raw.k());
    CovFitInternals f;
    for (std::size_t i = 0; i < raw.subjects(); ++i) {
        if (!(vw[i] > 0.0)) continue;
        for (const auto& term : raw.terms(i)) {
            if (std::fabs(term.s - s) > bj || std::fabs(term.t - t) > bk) continue;
            accumulate(f, vw[i], term, s, t, bj, bk, kernel);
        }
    }
    fill_q(f);
    return f;
}

PointEstimate cov_from_sums(CovFitInternals& f) noexcept {
    fill_q(f);
    const double den = f.Q0 * f.S00 - f.Q1 * f.S10 + f.Q2 * f.S01;
    const double eps = 1e-10 * std::max(f.S00 * f.S20 * f.S02, 1.0);
    if (den > eps) return {(f.Q0 * f.R00 - f.Q1 * f.R10 + f.Q2 * f.R01) / den, EstimateStatus::Exact};
    if (f.S00 > 0.0) return {f.R00 / f.S00, EstimateStatus::LocalConstantFallback};
    return {};
}

PointEstimate cov_at(double s, double t, const RawCovTerms& raw, const CovWeights& v, double bj, double bk,
                     const KernelSpec& kernel) {
    auto f = cov_sums_at(s, t, raw, v, bj, bk, kernel);
    return cov_from_sums(f);
}

// ---------------------------------------------------------------------------
// Batch surfaces
// ---------------------------------------------------------------------------

std::vector<PairIndex> PairSelection::resolve(std::size_t p) const {
    switch (kind) {
    case Kind::All: return all_pairs(p);
    case Kind::DiagonalOnly: return diagonal_pairs(p);
    case Kind::List: break;
    }
    std::vector<PairIndex> out;
    for (const auto raw : list) {
        const auto pr = PairIndex::of(raw.j, raw.k);
        if (pr.k >= p) throw ValidationError("pair (" + std::to_string(pr.j + 1) + "," + std::to_string(pr.k + 1) +
                                             ") out of range for p = " + std::to_string(p));
        out.push_back(pr);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty()) throw ValidationError("empty pair selection");
    return out;
}

EstimateSurface CovEstimates::get(std::size_t j, std::size_t k) const {
    const auto key = PairIndex::of(j, k);
    for (const auto& s : surfaces)
        if (s.j == key.j && s.k == key.k) return j <= k ? s : s.transposed();
    throw ValidationError("no surface for pair (" + std::to_string(j + 1) + "," + std::to_string(k + 1) + ")");
}

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Separable kernel profiles of one component on its grid: per subject,
/// P_q(i, a) = sum_l K_b(T_il - s_a) u^q and A_q(i, a) = sum_l K_b(T_il - s_a) u^q c_il.
struct Profiles {
    Matrix P[3];
    Matrix A[2];
};

/// Per observation (one row each, subjects in order) kernel rows
/// E_q(r, a) = K_b(T_r - s_a) u^q, used for the coincident-pair terms.
struct ObsRows {
    Matrix E[3];
    std::vector<std::size_t> subject; // row -> subject
};

template <class Visit>
void kernel_row(double time, const Grid& g, double b, const KernelSpec& kernel, Visit&& visit) {
    const auto [a0, a1] = g.window(time, b);
    for (std::size_t a = a0; a < a1; ++a) {
        const double d = time - g[a];
        if (std::fabs(d) > b) continue;
        const double u = d / b;
        visit(a, kernel(u) / b, u);
    }
}

Profiles component_profiles(const ObservationSet& obs, const CenteredValues& cv, std::size_t j, const Grid& g,
                            double b, const KernelSpec& kernel, bool with_p) {
    const std::size_t n = obs.subjects(), G = g.size();
    Profiles pr;
    if (with_p)
        for (auto& m : pr.P) m.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(G));
    for (auto& m : pr.A) m.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(G));
    for (std::size_t i = 0; i < n; ++i) {
        const auto series = obs.series(i, j);
        const auto c = cv.values(i, j);
        const auto ii = static_cast<Eigen::Index>(i);
        for (std::size_t l = 0; l < series.size(); ++l)
            kernel_row(series[l].time, g, b, kernel, [&](std::size_t a, double kv, double u) {
                const auto aa = static_cast<Eigen::Index>(a);
                if (with_p) {
                    pr.P[0](ii, aa) += kv;
                    pr.P[1](ii, aa) += kv * u;
                    pr.P[2](ii, aa) += kv * u * u;
                }
                pr.A[0](ii, aa) += kv * c[l];
                pr.A[1](ii, aa) += kv * u * c[l];
            });
    }
    return pr;
}

ObsRows observation_rows(const ObservationSet& obs, std::size_t j, const Grid& g, double b,
                         const KernelSpec& kernel) {
    ObsRows rows;
    std::size_t total = 0;
    for (std::size_t i = 0; i < obs.subjects(); ++i) total += obs.count(i, j);
    for (auto& m : rows.E) m.setZero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(g.size()));
    rows.subject.reserve(total);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < obs.subjects(); ++i)
        for (const auto& o : obs.series(i, j)) {
            kernel_row(o.time, g, b, kernel, [&](std::size_t a, double kv, double u) {
                const auto aa = static_cast<Eigen::Index>(a);
                rows.E[0](r, aa) = kv;
                rows.E[1](r, aa) = kv * u;
                rows.E[2](r, aa) = kv * u * u;
            });
            rows.subject.push_back(i);
            ++r;
        }
    return rows;
}

/// X^T diag(d) Y.
Matrix weighted_cross(const Matrix& X, const Vector& d, const Matrix& Y) {
    return X.transpose() * (d.asDiagonal() * Y);
}

struct SSums {
    Matrix S00, S10, S01, S20, S11, S02;
    Matrix full00; // S00 before the coincident-pair correction
};

SSums s_sums(const Profiles& pj, const Profiles& pk, const Vector& v, const ObsRows* rows_j, const ObsRows* rows_k,
             const Vector* row_v) {
    SSums s;
    s.S00 = weighted_cross(pj.P[0], v, pk.P[0]);
    s.S10 = weighted_cross(pj.P[1], v, pk.P[0]);
    s.S01 = weighted_cross(pj.P[0], v, pk.P[1]);
    s.S20 = weighted_cross(pj.P[2], v, pk.P[0]);
    s.S11 = weighted_cross(pj.P[1], v, pk.P[1]);
    s.S02 = weighted_cross(pj.P[0], v, pk.P[2]);
    s.full00 = s.S00;
    if (rows_j != nullptr) {
        const auto& Ej = rows_j->E;
        const auto& Ek = rows_k->E;
        s.S00 -= weighted_cross(Ej[0], *row_v, Ek[0]);
        s.S10 -= weighted_cross(Ej[1], *row_v, Ek[0]);
        s.S01 -= weighted_cross(Ej[0], *row_v, Ek[1]);
        s.S20 -= weighted_cross(Ej[2], *row_v, Ek[0]);
        s.S11 -= weighted_cross(Ej[1], *row_v, Ek[1]);
        s.S02 -= weighted_cross(Ej[0], *row_v, Ek[2]);
    }
    return s;
}

EstimateSurface solve_surface(std::size_t j, std::size_t k, const Grid& gj, const Grid& gk, double bj, double bk,
                              const SSums& s, const Matrix& R00, const Matrix& R10, const Matrix& R01) {
    EstimateSurface out;
    out.j = j;
    out.k = k;
    out.grid_s = gj;
    out.grid_t = gk;
    out.bandwidth_j = bj;
    out.bandwidth_k = bk;
    const std::size_t ns = gj.size(), nt = gk.size();
    out.values.assign(ns * nt, std::numeric_limits<double>::quiet_NaN());
    out.status.assign(ns * nt, EstimateStatus::Missing);
    const bool mirror = j == k && gj == gk && bj == bk;
    for (std::size_t a = 0; a < ns; ++a)
        for (std::size_t b = mirror ? a : 0; b < nt; ++b) {
            const auto aa = static_cast<Eigen::Index>(a), bb = static_cast<Eigen::Index>(b);
            PointEstimate est;
            // Cells whose every product was a removed coincident pair cancel to roundoff.
            if (s.S00(aa, bb) > 1e-12 * s.full00(aa, bb)) {
                CovFitInternals f;
                f.S00 = s.S00(aa, bb);
                f.S10 = s.S10(aa, bb);
                f.S01 = s.S01(aa, bb);
                f.S20 = s.S20(aa, bb);
                f.S11 = s.S11(aa, bb);
                f.S02 = s.S02(aa, bb);
                f.R00 = R00(aa, bb);
                f.R10 = R10(aa, bb);
                f.R01 = R01(aa, bb);
                est = cov_from_sums(f);
            }
            out.values[a * nt + b] = est.value;
            out.status[a * nt + b] = est.status;
            if (mirror) {
                out.values[b * nt + a] = est.value;
                out.status[b * nt + a] = est.status;
            }
        }
    return out;
}

} // namespace

CovEstimates estimate_covariances(const ObservationSet& obs, const MeanProvider& mean, const WeightScheme& scheme,
                                  const CovBandwidths& bandwidths, std::span<const Grid> grids,
                                  const PairSelection& selection, const KernelSpec& kernel) {
    if (!obs.validated()) throw ValidationError("observations must be validated before estimation");
    const std::size_t n = obs.subjects(), p = obs.components();
    const bool sr = obs.design() == DesignKind::SR;
    if (bandwidths.b.size() != p)
        throw ValidationError("expected " + std::to_string(p) + " covariance bandwidths, got " +
                              std::to_string(bandwidths.b.size()));
    if (grids.size() != 1 && grids.size() != p)
        throw ValidationError("expected 1 or " + std::to_string(p) + " grids, got " + std::to_string(grids.size()));
    const auto grid_of = [&](std::size_t j) -> const Grid& { return grids[grids.size() == 1 ? 0 : j]; };
    for (std::size_t j = 0; j < p; ++j) {
        const double b = bandwidths.b[j];
        if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("covariance bandwidths must be positive");
        if (sr && b != bandwidths.b.front())
            throw ValidationError("SR design uses a single covariance bandwidth for all components");
        if (sr && !(grid_of(j) == grid_of(0))) throw ValidationError("SR design uses a single grid");
        if (grid_of(j).lo() < obs.domain(j).lo || grid_of(j).hi() > obs.domain(j).hi)
            throw ValidationError("grid for component " + std::to_string(j + 1) + " leaves its domain");
    }

    const auto counts = obs.counts();
    CovEstimates result;
    std::vector<PairIndex> pairs;
    for (const auto pr : selection.resolve(p)) {
        std::size_t total = 0;
        for (std::size_t i = 0; i < n; ++i) total += index_set_size(obs.design(), pr.j, pr.k, counts(i, pr.j), counts(i, pr.k));
        (total == 0 ? result.skipped : pairs).push_back(pr);
    }
    if (pairs.empty()) return result;
    const CovWeights weights = cov_weights(scheme, obs.design(), counts, pairs);
    const CenteredValues cv(obs, mean);

    // Only components touched by a retained pair need profiles.
    std::vector<bool> used(p, false);
    for (const auto pr : pairs) used[pr.j] = used[pr.k] = true;
    std::vector<Profiles> profiles(p);
    parallel_for(p, [&](std::size_t j) {
        if (!used[j]) return;
        // Under SR all components share times, so P comes from one component.
        const bool with_p = !sr || j == 0;
        profiles[j] = component_profiles(obs, cv, j, grid_of(j), bandwidths.b[j], kernel, with_p);
    });
    if (sr && !used[0]) {
        auto base = component_profiles(obs, cv, 0, grid_of(0), bandwidths.b[0], kernel, true);
        for (int q = 0; q < 3; ++q) profiles[0].P[q] = std::move(base.P[q]);
    }

    ObsRows sr_rows;
    std::vector<std::vector<double>> sr_centered; // per component, row-aligned
    if (sr) {
        sr_rows = observation_rows(obs, 0, grid_of(0), bandwidths.b[0], kernel);
        sr_centered.resize(p);
        for (std::size_t j = 0; j < p; ++j) {
            if (!used[j]) continue;
            auto& col = sr_centered[j];
            col.reserve(sr_rows.subject.size());
            for (std::size_t i = 0; i < n; ++i)
                for (double c : cv.values(i, j)) col.push_back(c);
        }
    }

    const auto weight_vector = [&](PairIndex pr) {
        const auto w = weights.pair(pr.j, pr.k);
        return Vector(Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())));
    };
    const auto row_weights = [&](const ObsRows& rows, const Vector& v) {
        Vector d(static_cast<Eigen::Index>(rows.subject.size()));
        for (std::size_t r = 0; r < rows.subject.size(); ++r)
            d[static_cast<Eigen::Index>(r)] = v[static_cast<Eigen::Index>(rows.subject[r])];
        return d;
    };

    // Under SR with common pair weights the S sums are identical for all pairs.
    std::optional<SSums> shared_s;
    if (sr) {
        bool common = true;
        const Vector v0 = weight_vector(pairs.front());
        for (const auto pr : pairs) common = common && weight_vector(pr) == v0;
        if (common) {
            const Vector dv = row_weights(sr_rows, v0);
            shared_s = s_sums(profiles[0], profiles[0], v0, &sr_rows, &sr_rows, &dv);
        }
    }

    result.surfaces.resize(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t idx) {
        const auto pr = pairs[idx];
        const std::size_t j = pr.j, k = pr.k;
        const Grid& gj = grid_of(j);
        const Grid& gk = grid_of(k);
        const double bj = bandwidths.b[j], bk = bandwidths.b[k];
        const Vector v = weight_vector(pr);
        const Profiles& pj = profiles[j];
        const Profiles& pk = profiles[k];

        Matrix R00 = weighted_cross(pj.A[0], v, pk.A[0]);
        Matrix R10 = weighted_cross(pj.A[1], v, pk.A[0]);
        Matrix R01 = weighted_cross(pj.A[0], v, pk.A[1]);

        if (sr) {
            const Vector dv = row_weights(sr_rows, v);
            Vector dz(dv.size());
            const auto& cj = sr_centered[j];
            const auto& ck = sr_centered[k];
            for (Eigen::Index r = 0; r < dv.size(); ++r)
                dz[r] = dv[r] * cj[static_cast<std::size_t>(r)] * ck[static_cast<std::size_t>(r)];
            const auto& E = sr_rows.E;
            R00 -= weighted_cross(E[0], dz, E[0]);
            const Matrix c01 = weighted_cross(E[0], dz, E[1]);
            R01 -= c01;
            R10 -= c01.transpose();
            const SSums s = shared_s ? *shared_s : s_sums(profiles[0], profiles[0], v, &sr_rows, &sr_rows, &dv);
            result.surfaces[idx] = solve_surface(j, k, gj, gk, bj, bk, s, R00, R10, R01);
            return;
        }

        if (j == k) {
            const ObsRows rows = observation_rows(obs, j, gj, bj, kernel);
            const Vector dv = row_weights(rows, v);
            Vector dz(dv.size());
            Eigen::Index r = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (double c : cv.values(i, j)) {
                    dz[r] = dv[r] * c * c;
                    ++r;
                }
            R00 -= weighted_cross(rows.E[0], dz, rows.E[0]);
            const Matrix c01 = weighted_cross(rows.E[0], dz, rows.E[1]);
            R01 -= c01;
            R10 -= c01.transpose();
            const SSums s = s_sums(pj, pk, v, &rows, &rows, &dv);
            result.surfaces[idx] = solve_surface(j, k, gj, gk, bj, bk, s, R00, R10, R01);
            return;
        }

        const SSums s = s_sums(pj, pk, v, nullptr, nullptr, nullptr);
        result.surfaces[idx] = solve_surface(j, k, gj, gk, bj, bk, s, R00, R10, R01);
    });
    return result;
}

} // namespace hdfda
