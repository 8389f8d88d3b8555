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

#include "hdfda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hdfda {

namespace {

bool valid_at(std::span<const EstimateStatus> status, std::size_t idx) {
    return status.empty() || status[idx] != EstimateStatus::Missing;
}

void check_status_size(std::size_t values, std::span<const EstimateStatus> status) {
    if (!status.empty() && status.size() != values) throw ValidationError("status and value sizes differ");
}

double log_p(std::size_t p) {
    if (p < 2) throw ValidationError("rate expressions need p >= 2");
    return std::log(static_cast<double>(p));
}

} // namespace

double l2_norm_curve(const Grid& g, std::span<const double> f, std::span<const EstimateStatus> status) {
    if (g.size() < 2) throw ValidationError("L2 norm needs at least 2 grid points");
    if (f.size() != g.size()) throw ValidationError("curve and grid sizes differ");
    check_status_size(f.size(), status);
    bool any = false;
    double acc = 0.0;
    for (std::size_t a = 0; a < f.size(); ++a) any = any || valid_at(status, a);
    if (!any) throw ValidationError("all points are Missing");
    for (std::size_t a = 0; a + 1 < f.size(); ++a) {
        if (!valid_at(status, a) || !valid_at(status, a + 1)) continue;
        acc += 0.5 * (g[a + 1] - g[a]) * (f[a] * f[a] + f[a + 1] * f[a + 1]);
    }
    return std::sqrt(acc);
}

double l2_norm_surface(const Grid& gs, const Grid& gt, std::span<const double> f,
                       std::span<const EstimateStatus> status) {
    const std::size_t ns = gs.size(), nt = gt.size();
    if (ns < 2 || nt < 2) throw ValidationError("L2 norm needs at least 2 grid points per axis");
    if (f.size() != ns * nt) throw ValidationError("surface and grid sizes differ");
    check_status_size(f.size(), status);
    bool any = false;
    for (std::size_t idx = 0; idx < f.size(); ++idx) any = any || valid_at(status, idx);
    if (!any) throw ValidationError("all points are Missing");
    double acc = 0.0;
    for (std::size_t a = 0; a + 1 < ns; ++a)
        for (std::size_t b = 0; b + 1 < nt; ++b) {
            const std::size_t c00 = a * nt + b, c01 = c00 + 1, c10 = c00 + nt, c11 = c10 + 1;
            if (!valid_at(status, c00) || !valid_at(status, c01) || !valid_at(status, c10) || !valid_at(status, c11))
                continue;
            const double area = (gs[a + 1] - gs[a]) * (gt[b + 1] - gt[b]);
            acc += 0.25 * area * (f[c00] * f[c00] + f[c01] * f[c01] + f[c10] * f[c10] + f[c11] * f[c11]);
        }
    return std::sqrt(acc);
}

double sup_norm(std::span<const double> f, std::span<const EstimateStatus> status) {
    check_status_size(f.size(), status);
    bool any = false;
    double m = 0.0;
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
        if (!valid_at(status, idx)) continue;
        any = true;
        m = std::max(m, std::fabs(f[idx]));
    }
    if (!any) throw ValidationError("all points are Missing");
    return m;
}

void add_mean_errors(ErrorReport& report, std::span<const EstimateCurve> curves, const MeanTruth& truth) {
    for (const auto& c : curves) {
        std::vector<double> err(c.grid.size());
        for (std::size_t a = 0; a < err.size(); ++a)
            err[a] = c.status[a] == EstimateStatus::Missing ? 0.0 : c.values[a] - truth(c.component, c.grid[a]);
        ComponentError e;
        e.j = c.component;
        e.missing = c.missing_count();
        e.l2 = l2_norm_curve(c.grid, err, c.status);
        e.sup = sup_norm(err, c.status);
        report.max_mean_l2 = std::max(report.max_mean_l2, e.l2);
        report.max_mean_sup = std::max(report.max_mean_sup, e.sup);
        report.mean_missing += e.missing;
        report.mean_points += err.size();
        report.mean.push_back(e);
    }
}

void add_cov_errors(ErrorReport& report, std::span<const EstimateSurface> surfaces, const CovTruth& truth) {
    for (const auto& s : surfaces) {
        const std::size_t ns = s.grid_s.size(), nt = s.grid_t.size();
        std::vector<double> err(ns * nt);
        for (std::size_t a = 0; a < ns; ++a)
            for (std::size_t b = 0; b < nt; ++b) {
                const std::size_t idx = a * nt + b;
                err[idx] = s.status[idx] == EstimateStatus::Missing
                               ? 0.0
                               : s.values[idx] - truth(s.j, s.k, s.grid_s[a], s.grid_t[b]);
            }
        PairError e;
        e.pair = {s.j, s.k};
        e.missing = s.missing_count();
        e.l2 = l2_norm_surface(s.grid_s, s.grid_t, err, s.status);
        e.sup = sup_norm(err, s.status);
        report.max_cov_l2 = std::max(report.max_cov_l2, e.l2);
        report.max_cov_sup = std::max(report.max_cov_sup, e.sup);
        report.cov_missing += e.missing;
        report.cov_points += err.size();
        report.cov.push_back(e);
    }
}

// ---------------------------------------------------------------------------

std::string_view to_string(Task t) { return t == Task::Mean ? "mean" : "cov"; }

std::string_view to_string(Regime r) {
    switch (r) {
    case Regime::Sparse: return "sparse";
    case Regime::Dense: return "dense";
    case Regime::UltraDense: return "ultradense";
    }
    return "dense";
}

Task parse_task(std::string_view s) {
    if (s == "mean") return Task::Mean;
    if (s == "cov") return Task::Cov;
    throw ValidationError("unknown task '" + std::string(s) + "' (expected mean or cov)");
}

Regime parse_regime(std::string_view s) {
    if (s == "sparse") return Regime::Sparse;
    if (s == "dense") return Regime::Dense;
    if (s == "ultradense" || s == "ultra-dense" || s == "ultra_dense") return Regime::UltraDense;
    throw ValidationError("unknown regime '" + std::string(s) + "' (expected sparse, dense or ultradense)");
}

double regime_scale(std::size_t n, std::size_t p) {
    if (n < 2) throw ValidationError("regime classification needs n >= 2");
    return std::pow(log_p(p) / static_cast<double>(n), 0.25);
}

Regime classify_regime(const RegimeInputs& in) {
    if (!(in.c > 0.0)) throw ValidationError("regime constant c must be positive");
    if (!(in.nbar_min > 0.0) || in.nbar_max < in.nbar_min) throw ValidationError("count levels must be positive");
    const double scale = regime_scale(in.n, in.p);
    if (in.nbar_max * scale < in.c) return Regime::Sparse;
    if (in.task == Task::Mean && in.nbar_min * scale > 1.0 / in.c) return Regime::UltraDense;
    return Regime::Dense;
}

std::vector<double> bandwidth_prescribe(const RegimeInputs& in, Regime regime, std::span<const double> nbar,
                                        double domain_length) {
    if (!(in.c > 0.0)) throw ValidationError("bandwidth constant c must be positive");
    if (!(domain_length > 0.0)) throw ValidationError("domain length must be positive");
    if (in.n < 2) throw ValidationError("bandwidth prescription needs n >= 2");
    const double lp = log_p(in.p);
    const double nd = static_cast<double>(in.n);
    double nbar_min = 0.0;
    for (const double v : nbar) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("count levels must be positive");
        nbar_min = nbar_min == 0.0 ? v : std::min(nbar_min, v);
    }
    if (nbar.empty()) throw ValidationError("no components to prescribe bandwidths for");
    if (in.task == Task::Cov && regime == Regime::UltraDense) regime = Regime::Dense;

    std::vector<double> out(nbar.size());
    for (std::size_t j = 0; j < nbar.size(); ++j) {
        double b = 0.0;
        if (in.task == Task::Mean) {
            switch (regime) {
            case Regime::Sparse: b = std::pow(lp / (nd * nbar[j]), 0.2); break;
            case Regime::Dense: b = std::pow(lp / nd, 0.25); break;
            case Regime::UltraDense:
                b = std::max({std::pow(lp / nd, 0.25) / std::log(nd), 2.0 * std::sqrt(lp / nd), 2.0 / nbar_min});
                break;
            }
        } else {
            b = regime == Regime::Sparse ? std::pow(lp / (nd * nbar[j] * nbar[j]), 1.0 / 6.0)
                                         : std::pow(lp / nd, 0.25);
        }
        out[j] = std::min(in.c * b, domain_length);
    }
    return out;
}

double rate_driver(Task task, Regime regime, std::size_t n, std::size_t p, double nbar_min) {
    if (n < 1) throw ValidationError("rate driver needs n >= 1");
    const double base = log_p(p) / static_cast<double>(n);
    if (regime != Regime::Sparse) return base;
    if (!(nbar_min > 0.0)) throw ValidationError("count level must be positive");
    return task == Task::Mean ? base / nbar_min : base / (nbar_min * nbar_min);
}

double mean_rate_obs(std::size_t n, std::size_t p, double b, const ComponentCountSummary& s) {
    const double lp = log_p(p), nd = static_cast<double>(n);
    return b * b + std::sqrt(lp / nd * (1.0 / (s.nbar * b) + s.nbar_sq / (s.nbar * s.nbar))) +
           s.nplus * lp / (nd * s.nbar * b);
}

double mean_rate_subj(std::size_t n, std::size_t p, double b, const ComponentCountSummary& s) {
    if (!s.nharm) throw ValidationError("harmonic mean count undefined (zero counts)");
    const double lp = log_p(p), nd = static_cast<double>(n);
    return b * b + std::sqrt(lp / nd * (1.0 / (*s.nharm * b) + 1.0)) + lp / (nd * b);
}

double mean_rate_generic(std::size_t p, double b, double variance_term, double wbar) {
    const double lp = log_p(p);
    return b * b + std::sqrt(lp * variance_term) + lp * wbar / b;
}

double cov_rate_obs(std::size_t n, std::size_t p, double bj, double bk, const PairCountSummary& s) {
    const double lp = log_p(p), nd = static_cast<double>(n);
    const double d2 = s.nbar_jk * s.nbar_jk;
    return std::max(bj, bk) * std::max(bj, bk) +
           std::sqrt(lp / nd * (1.0 / (s.nbar_jk * bj * bk) + s.nbar_jk2 / (d2 * bj) + s.nbar_j2k2 / d2)) +
           s.nplus_jk * lp / (nd * s.nbar_jk * bj * bk);
}

double cov_rate_subj(std::size_t n, std::size_t p, double bj, double bk, const PairCountSummary& s,
                     double nharm_j) {
    if (!s.nharm_jk) throw ValidationError("harmonic mean count undefined (zero counts)");
    const double lp = log_p(p), nd = static_cast<double>(n);
    return std::max(bj, bk) * std::max(bj, bk) +
           std::sqrt(lp / nd * (1.0 / (*s.nharm_jk * bj * bk) + 1.0 / (nharm_j * bj) + 1.0)) +
           lp / (nd * bj * bk);
}

double cov_rate_generic(std::size_t p, double bj, double bk, double q, double vbar) {
    const double lp = log_p(p);
    return std::max(bj, bk) * std::max(bj, bk) + std::sqrt(lp * q) + lp * vbar / (bj * bk);
}

// ---------------------------------------------------------------------------

RateFit fit_rate_exponent(std::span<const std::pair<double, double>> points) {
    std::set<double> drivers;
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y))
            throw ValidationError("rate fit needs positive finite drivers and errors");
        drivers.insert(x);
    }
    if (drivers.size() < 2) throw ValidationError("rate fit needs at least 2 distinct drivers");
    const double m = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
        mx += std::log(x);
        my += std::log(y);
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : points) {
        const double dx = std::log(x) - mx, dy = std::log(y) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    RateFit f;
    f.points = points.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    const double sse = std::max(0.0, syy - f.slope * sxy);
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
    f.slope_stderr = points.size() > 2 ? std::sqrt(sse / (m - 2.0) / sxx) : 0.0;
    return f;
}

double median(std::vector<double> v) {
    if (v.empty()) throw ValidationError("median of an empty sample");
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
    const double hi = v[h];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h));
    return 0.5 * (lo + hi);
}

} // namespace hdfda
