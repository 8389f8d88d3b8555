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

// Acceptance checks. Prints one PASS/FAIL line per criterion; exits nonzero
// when any criterion fails.
//
//   acceptance [--replicates N] [--out DIR] [--only 1,2,...]

#include "hdfda/cov_smoother.hpp"
#include "hdfda/harness.hpp"
#include "hdfda/mean_smoother.hpp"
#include "hdfda/parallel.hpp"

#include "../unit/support.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace hdfda;
using hdfda::test::random_set;
using hdfda::test::rel_diff;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Options {
    std::size_t replicates = 100;
    std::filesystem::path out;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// Exactness and oracle checks
// ---------------------------------------------------------------------------

Outcome affine_mean() {
    std::mt19937_64 rng(1);
    const auto obs = random_set(rng, 20, 5, DesignKind::FR, 3, 6, [](auto, auto, double t) { return 2.0 + 3.0 * t; });
    const auto g = Grid::uniform({0.0, 1.0}, 101);
    double worst = 0.0;
    std::size_t exact = 0;
    for (const auto& scheme : {WeightScheme::obs(), WeightScheme::subj()}) {
        const auto curves = estimate_means(obs, scheme, MeanBandwidths::shared(0.3, 5), std::span<const Grid>(&g, 1));
        for (const auto& c : curves)
            for (std::size_t q = 0; q < g.size(); ++q) {
                if (c.status[q] != EstimateStatus::Exact) continue;
                ++exact;
                worst = std::max(worst, std::fabs(c.values[q] - (2.0 + 3.0 * g[q])));
            }
    }
    return {worst <= 1e-9 && exact > 0, fmt("max error %.3g over %zu Exact points (tol 1e-9)", worst, exact)};
}

Outcome plane_cov() {
    std::mt19937_64 rng(2);
    const auto zero = MeanProvider::oracle([](std::size_t, double) { return 0.0; });
    double worst = 0.0;
    std::size_t exact = 0;
    const auto g = Grid::uniform({0.0, 1.0}, 26);
    const auto scan = [&](const CovEstimates& est, const std::function<double(std::size_t, std::size_t, double, double)>& truth) {
        for (const auto& s : est.surfaces)
            for (std::size_t a = 0; a < g.size(); ++a)
                for (std::size_t b = 0; b < g.size(); ++b) {
                    if (s.status_at(a, b) != EstimateStatus::Exact) continue;
                    ++exact;
                    worst = std::max(worst, std::fabs(s.value(a, b) - truth(s.j, s.k, g[a], g[b])));
                }
    };
    for (const auto design : {DesignKind::FR, DesignKind::SR}) {
        // Y = 1, mu = 0: Z = 1 everywhere.
        const auto ones = random_set(rng, 20, 4, design, 2, 6, [](auto, auto, double) { return 1.0; });
        scan(estimate_covariances(ones, zero, WeightScheme::obs(), CovBandwidths::shared(0.3, 4),
                                  std::span<const Grid>(&g, 1), PairSelection::all()),
             [](auto, auto, double, double) { return 1.0; });
        // Y_0 = 1, Y_j = c_j + d_j T: Z_0j is affine in t.
        std::uniform_real_distribution<double> coef(-2.0, 2.0);
        std::vector<double> c(3), d(3);
        for (std::size_t j = 0; j < 3; ++j) {
            c[j] = coef(rng);
            d[j] = coef(rng);
        }
        const auto affine = random_set(rng, 30, 3, design, 3, 6,
                                       [&](auto, std::size_t j, double t) { return j == 0 ? 1.0 : c[j] + d[j] * t; });
        std::vector<PairIndex> pairs{{0, 1}, {0, 2}};
        scan(estimate_covariances(affine, zero, WeightScheme::subj(), CovBandwidths::shared(0.3, 3),
                                  std::span<const Grid>(&g, 1), PairSelection::of(pairs)),
             [&](auto, std::size_t k, double, double t) { return c[k] + d[k] * t; });
    }
    return {worst <= 1e-9 && exact > 0, fmt("max error %.3g over %zu Exact points (tol 1e-9)", worst, exact)};
}

Outcome oracle_equivalence() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(0.0, 1.0), val(-5.0, 5.0), bw(0.05, 0.6);
    std::uniform_int_distribution<std::size_t> nd(1, 6);
    const auto k = KernelSpec::epanechnikov();
    double worst_mean = 0.0, worst_cov = 0.0;
    std::size_t mean_n = 0, cov_n = 0, attempts = 0;
    while (mean_n < 1000 && ++attempts < 100000) {
        const auto obs = random_set(rng, nd(rng), 1, DesignKind::FR, 1, 6, [&](auto, auto, double) { return val(rng); });
        const auto w = mean_weights(attempts % 2 ? WeightScheme::obs() : WeightScheme::subj(), obs.counts());
        const ComponentSample sample(obs, 0, w.component(0));
        const double t = unif(rng), b = bw(rng);
        const auto s = mean_sums_at(t, sample, b, k);
        const auto e = mean_from_sums(s);
        if (e.status != EstimateStatus::Exact || s.S0 * s.S2 - s.S1 * s.S1 < 1e-4 * s.S0 * s.S2) continue;
        std::vector<double> x, y, om;
        for (std::size_t i = 0; i < obs.subjects(); ++i)
            for (const auto& o : obs.series(i, 0)) {
                const double kw = w(i, 0) * scaled_kernel(k, b, o.time - t);
                if (kw == 0.0) continue;
                x.push_back(o.time - t);
                y.push_back(o.value);
                om.push_back(kw);
            }
        worst_mean = std::max(worst_mean, rel_diff(e.value, hdfda::test::wls_line_intercept(x, y, om)));
        ++mean_n;
    }
    const auto zero = MeanProvider::oracle([](std::size_t, double) { return 0.0; });
    attempts = 0;
    while (cov_n < 1000 && ++attempts < 100000) {
        const auto design = attempts % 2 ? DesignKind::FR : DesignKind::SR;
        const std::size_t j = 0, kk = (attempts / 2) % 2;
        const auto obs = random_set(rng, nd(rng), 2, design, 2, 6, [&](auto, auto, double) { return val(rng); });
        const std::vector<PairIndex> pl{PairIndex::of(j, kk)};
        const auto v = cov_weights((attempts / 4) % 2 ? WeightScheme::obs() : WeightScheme::subj(), design,
                                   obs.counts(), pl);
        const auto raw = raw_cov_terms(obs, zero, j, kk);
        const double s = unif(rng), t = unif(rng), bj = bw(rng), bk = bw(rng);
        auto f = cov_sums_at(s, t, raw, v, bj, bk, k);
        const auto e = cov_from_sums(f);
        if (e.status != EstimateStatus::Exact) continue;
        if (f.Q0 * f.S00 - f.Q1 * f.S10 + f.Q2 * f.S01 < 1e-4 * f.S00 * f.S20 * f.S02) continue;
        std::vector<double> x1, x2, z, om;
        const auto vs = v.pair(j, kk);
        const bool skip = design == DesignKind::SR || j == kk;
        for (std::size_t i = 0; i < obs.subjects(); ++i) {
            const auto a = obs.series(i, j), b = obs.series(i, kk);
            for (std::size_t l = 0; l < a.size(); ++l)
                for (std::size_t m = 0; m < b.size(); ++m) {
                    if (skip && l == m) continue;
                    const double w = vs[i] * scaled_kernel(k, bj, a[l].time - s) * scaled_kernel(k, bk, b[m].time - t);
                    if (w == 0.0) continue;
                    x1.push_back(a[l].time - s);
                    x2.push_back(b[m].time - t);
                    z.push_back(a[l].value * b[m].value);
                    om.push_back(w);
                }
        }
        worst_cov = std::max(worst_cov, rel_diff(e.value, hdfda::test::wls_plane_intercept(x1, x2, z, om)));
        ++cov_n;
    }
    const bool ok = mean_n == 1000 && cov_n == 1000 && worst_mean <= 1e-10 && worst_cov <= 1e-10;
    return {ok, fmt("mean %zu instances max rel %.3g; cov %zu instances max rel %.3g (tol 1e-10)", mean_n, worst_mean,
                    cov_n, worst_cov)};
}

Outcome worked_values() {
    ObservationSet::Builder fb(1, 1, DesignKind::FR, Interval{0.0, 1.0}), sb(1, 1, DesignKind::SR, Interval{0.0, 1.0});
    for (const auto& [t, y] : {std::pair{0.4, 1.0}, {0.5, 2.0}, {0.6, 4.0}}) {
        fb.add(0, 0, {t, y});
        sb.add(0, 0, {t, y});
    }
    const auto fr = validate_observations(std::move(fb).build());
    const auto sr = validate_observations(std::move(sb).build());
    const auto k = KernelSpec::epanechnikov();
    const auto w = mean_weights(WeightScheme::subj(), fr.counts());
    const auto m = mean_at(0.5, ComponentSample(fr, 0, w.component(0)), 0.2, k);
    const std::vector<PairIndex> pl{{0, 0}};
    const auto v = cov_weights(WeightScheme::subj(), DesignKind::SR, sr.counts(), pl);
    const auto c = cov_at(0.5, 0.5, raw_cov_terms(sr, MeanProvider::oracle([](std::size_t, double) { return 0.0; }), 0, 0),
                          v, 0.2, 0.2, k);
    const double em = std::fabs(m.value - 2.3), ec = std::fabs(c.value - 52.0 / 11.0);
    return {em <= 1e-10 && ec <= 1e-10, fmt("mean %.12f (err %.2g), cov %.12f (err %.2g)", m.value, em, c.value, ec)};
}

Outcome obs_equals_subj() {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    const auto obs = random_set(rng, 30, 10, DesignKind::FR, 4, 4, [&](auto, auto, double t) { return t + z(rng); });
    const auto g = Grid::uniform({0.0, 1.0}, 51);
    const auto gc = Grid::uniform({0.0, 1.0}, 21);
    double worst = 0.0;
    bool same_status = true;
    const auto mo = estimate_means(obs, WeightScheme::obs(), MeanBandwidths::shared(0.25, 10), std::span<const Grid>(&g, 1));
    const auto ms = estimate_means(obs, WeightScheme::subj(), MeanBandwidths::shared(0.25, 10), std::span<const Grid>(&g, 1));
    for (std::size_t j = 0; j < mo.size(); ++j)
        for (std::size_t q = 0; q < g.size(); ++q) {
            same_status &= mo[j].status[q] == ms[j].status[q];
            if (mo[j].status[q] != EstimateStatus::Missing) worst = std::max(worst, std::fabs(mo[j].values[q] - ms[j].values[q]));
        }
    const auto mean = MeanProvider::oracle([](std::size_t, double t) { return t; });
    const auto co = estimate_covariances(obs, mean, WeightScheme::obs(), CovBandwidths::shared(0.25, 10),
                                         std::span<const Grid>(&gc, 1), PairSelection::all());
    const auto cs = estimate_covariances(obs, mean, WeightScheme::subj(), CovBandwidths::shared(0.25, 10),
                                         std::span<const Grid>(&gc, 1), PairSelection::all());
    for (std::size_t q = 0; q < co.surfaces.size(); ++q)
        for (std::size_t c = 0; c < co.surfaces[q].values.size(); ++c) {
            same_status &= co.surfaces[q].status[c] == cs.surfaces[q].status[c];
            if (co.surfaces[q].status[c] != EstimateStatus::Missing)
                worst = std::max(worst, std::fabs(co.surfaces[q].values[c] - cs.surfaces[q].values[c]));
        }
    return {same_status && worst <= 1e-12,
            fmt("max |OBS - SUBJ| %.3g over 10 curves and %zu surfaces (tol 1e-12)", worst, co.surfaces.size())};
}

// ---------------------------------------------------------------------------
// Rate sweeps
// ---------------------------------------------------------------------------

json tuples(const std::vector<std::size_t>& ns, std::size_t p, const json& law, const char* regime) {
    json out = json::array();
    for (const auto n : ns) out.push_back({{"n", n}, {"p", p ? p : n}, {"count_law", law}, {"regime", regime}});
    return out;
}

json sweep_json(const char* task, json tuple_list, std::size_t reps) {
    return {{"task", task},
            {"designs", {"sr"}},
            {"schemes", {"obs"}},
            {"tuples", std::move(tuple_list)},
            {"replicates", reps},
            {"master_seed", 7},
            {"bandwidth", {{"mode", "prescribed"}, {"c", 1.0}}},
            {"mean_mode", "oracle"},
            {"noise", {{"sigma", 0.5}}},
            {"process", {{"mean", {{"family", "sine"}, {"amplitude", 0.5}}}}}};
}

struct SweepRun {
    SweepConfig config;
    SweepResult result;
    std::string rows_csv, rates_csv;
};

SweepRun run_with_threads(const SweepConfig& c, int threads) {
    set_thread_limit(threads);
    SweepRun r{c, run_sweep(c), {}, {}};
    set_thread_limit(0);
    std::ostringstream a, b;
    write_rows_csv(a, r.result.rows);
    write_rates_csv(b, r.result.rates);
    r.rows_csv = a.str();
    r.rates_csv = b.str();
    return r;
}

std::string medians(const SweepResult& r) {
    std::string s;
    for (const auto& rate : r.rates) s += (s.empty() ? "" : " ") + fmt("%.4g", rate.max_l2);
    return s;
}

Outcome slope_check(const SweepRun& run, double lo, double hi, std::optional<double> min_r2) {
    const auto& fits = run.result.fits;
    if (fits.size() != 1 || !fits[0].l2_fit) return {false, "no rate fit"};
    const auto& f = *fits[0].l2_fit;
    std::size_t failed = 0;
    for (const auto& row : run.result.rows) failed += row.ok ? 0 : 1;
    bool ok = f.slope >= lo && f.slope <= hi && failed == 0;
    std::string d = fmt("slope %.3f (range [%.2f, %.2f]), R^2 %.3f", f.slope, lo, hi, f.r_squared);
    if (min_r2) {
        ok &= f.r_squared >= *min_r2;
        d += fmt(" (min %.2f)", *min_r2);
    }
    d += fmt(", %zu points, failed rows %zu; medians %s", f.points, failed, medians(run.result).c_str());
    return {ok, d};
}

void save(const SweepRun& run, const Options& opt, const char* name) {
    if (opt.out.empty()) return;
    write_sweep_outputs(run.result, run.config, opt.out / name);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hdfda acceptance checks"};
    Options opt;
    std::string only;
    app.add_option("--replicates", opt.replicates, "replicates per sweep tuple")->check(CLI::PositiveNumber);
    app.add_option("--out", opt.out, "directory for the sweep outputs");
    app.add_option("--only", only, "comma-separated criteria to run");
    CLI11_PARSE(app, argc, argv);
    std::set<int> selected;
    for (std::stringstream ss(only); ss.good();) {
        std::string tok;
        std::getline(ss, tok, ',');
        if (!tok.empty()) selected.insert(std::stoi(tok));
    }
    const auto want = [&](std::initializer_list<int> ids) {
        if (selected.empty()) return true;
        for (const int i : ids)
            if (selected.count(i)) return true;
        return false;
    };

    int failures = 0;
    const auto report = [&](int id, const char* name, const Outcome& o, double secs) {
        std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    };
    const auto timed = [&](int id, const char* name, const std::function<Outcome()>& f) {
        if (!want({id})) return;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        report(id, name, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    };

    timed(1, "affine mean exactness", affine_mean);
    timed(2, "plane covariance exactness", plane_cov);
    timed(3, "closed form vs normal equations", oracle_equivalence);
    timed(4, "worked values", worked_values);
    timed(5, "OBS equals SUBJ under constant counts", obs_equals_subj);

    const json dense = {{"type", "dense_rule"}, {"mult", 3}};
    const std::size_t R = opt.replicates;
    std::map<int, SweepRun> runs;
    std::map<int, double> run_secs;
    const auto sweep = [&](int id, const json& j) {
        const auto t0 = std::chrono::steady_clock::now();
        runs.emplace(id, run_with_threads(sweep_from_json(j), 1));
        run_secs[id] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    const auto run_sweep_criterion = [&](int id, const char* name, const json& j, double lo, double hi,
                                         std::optional<double> r2) {
        if (!want({id, 11, 12})) return;
        try {
            sweep(id, j);
        } catch (const std::exception& e) {
            report(id, name, {false, std::string("exception: ") + e.what()}, 0.0);
            return;
        }
        save(runs.at(id), opt, ("criterion" + std::to_string(id)).c_str());
        if (want({id})) report(id, name, slope_check(runs.at(id), lo, hi, r2), run_secs[id]);
    };

    run_sweep_criterion(6, "sparse mean exponent",
                        sweep_json("mean", tuples({200, 400, 800, 1600}, 0, {{"type", "fixed"}, {"n", 2}}, "sparse"), R),
                        0.28, 0.52, 0.95);
    run_sweep_criterion(7, "dense mean exponent",
                        sweep_json("mean", tuples({200, 400, 800, 1600, 3200}, 50, dense, "dense"), R), 0.38, 0.62,
                        std::nullopt);
    run_sweep_criterion(8, "sparse covariance exponent",
                        sweep_json("cov", tuples({200, 400, 800, 1600}, 20, {{"type", "fixed"}, {"n", 3}}, "sparse"), R),
                        0.21, 0.45, std::nullopt);
    run_sweep_criterion(9, "dense covariance exponent",
                        sweep_json("cov", tuples({200, 400, 800, 1600}, 20, dense, "dense"), R), 0.38, 0.62,
                        std::nullopt);

    timed(10, "SUBJ beats OBS under a heavy subject", [&]() -> Outcome {
        auto j = sweep_json("mean", json::array({{{"n", 50},
                                                  {"p", 20},
                                                  {"count_law", {{"type", "heavy_subject"}, {"base", 2}, {"big", 200}, {"subject", 1}}},
                                                  {"regime", "dense"}}}),
                            R);
        j["designs"] = {"fr"};
        const auto c = sweep_from_json(j);
        const auto r = run_compare_schemes(c);
        if (!opt.out.empty()) write_compare_outputs(r, c, opt.out / "criterion10");
        if (r.summaries.size() != 1) return {false, "expected one comparison"};
        const auto& s = r.summaries[0];
        return {s.subj_win_fraction >= 0.8 && s.replicates == R,
                fmt("SUBJ win fraction %.2f over %zu replicates (min 0.80)", s.subj_win_fraction, s.replicates)};
    });

    timed(11, "medians strictly decreasing in n", [&]() -> Outcome {
        std::string d;
        bool ok = true;
        for (const int id : {6, 7, 8, 9}) {
            const auto it = runs.find(id);
            const bool dec = it != runs.end() && it->second.result.fits.size() == 1 &&
                             it->second.result.fits[0].strictly_decreasing;
            ok &= dec;
            d += fmt("%s(%d) %s", d.empty() ? "" : ", ", id, it == runs.end() ? "not run" : (dec ? "yes" : "no"));
        }
        return {ok, d};
    });

    timed(12, "byte-identical outputs at 1 and 8 workers", [&]() -> Outcome {
        std::string d;
        bool ok = true;
        for (const int id : {6, 8}) {
            const auto it = runs.find(id);
            if (it == runs.end()) {
                ok = false;
                d += fmt("%s(%d) not run", d.empty() ? "" : ", ", id);
                continue;
            }
            const auto again = run_with_threads(it->second.config, 8);
            const bool same = again.rows_csv == it->second.rows_csv && again.rates_csv == it->second.rates_csv;
            ok &= same;
            d += fmt("%s(%d) rows.csv %zu bytes, rates.csv %zu bytes %s", d.empty() ? "" : ", ", id,
                     it->second.rows_csv.size(), it->second.rates_csv.size(), same ? "identical" : "DIFFER");
        }
        return {ok, d};
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "PASSED", failures);
    return failures ? 1 : 0;
}
