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

#include "hdfda/harness.hpp"

#include "hdfda/csv.hpp"
#include "hdfda/mean_smoother.hpp"
#include "hdfda/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace hdfda {

using nlohmann::json;

CountLaw SweepTuple::resolved_law() const {
    if (!dense_mult) return count_law;
    if (!(*dense_mult > 0.0)) throw ValidationError("dense_rule multiplier must be positive");
    if (p < 2 || n < 1) throw ValidationError("dense_rule needs n >= 1 and p >= 2");
    const double N = std::ceil(*dense_mult * std::pow(static_cast<double>(n) / std::log(static_cast<double>(p)), 0.25));
    return CountLaw::fixed_count(static_cast<std::size_t>(N));
}

void SweepConfig::validate() const {
    if (designs.empty()) throw ValidationError("sweep needs at least one design");
    if (schemes.empty()) throw ValidationError("sweep needs at least one scheme");
    for (const auto s : schemes)
        if (s == SchemeKind::Generic) throw ValidationError("sweeps support the obs and subj schemes only");
    if (tuples.empty()) throw ValidationError("sweep needs at least one (n, p, count_law) tuple");
    if (replicates < 1) throw ValidationError("replicates must be at least 1");
    if (bandwidth.kind == BandwidthMode::Kind::Prescribed && !(bandwidth.c > 0.0))
        throw ValidationError("bandwidth constant c must be positive");
    if (bandwidth.kind == BandwidthMode::Kind::OracleSearch) {
        if (bandwidth.multipliers.empty()) throw ValidationError("oracle search needs a nonempty multiplier grid");
        for (const double m : bandwidth.multipliers)
            if (!(m > 0.0) || !std::isfinite(m)) throw ValidationError("bandwidth multipliers must be positive");
    }
    if (!(regime_c > 0.0)) throw ValidationError("regime constant must be positive");
    if (grid_mean < 2 || grid_cov < 2) throw ValidationError("grids need at least 2 points");
    for (const auto& t : tuples) {
        if (t.n < 2 || t.p < 2) throw ValidationError("tuples need n >= 2 and p >= 2");
        const auto law = t.resolved_law();
        if (task != SweepTask::Mean && law.minimum() < 2 && law.kind != CountLaw::Kind::UniformInt)
            throw ValidationError("covariance sweeps need at least 2 observations per curve");
        if (task != SweepTask::Mean && law.kind == CountLaw::Kind::UniformInt && law.min < 2)
            throw ValidationError("covariance sweeps need at least 2 observations per curve");
        (void)pairs.resolve(t.p);
        for (const auto d : designs) {
            SimulationConfig sc;
            sc.process = process;
            sc.sampling = {d, law, time_density};
            sc.noise = noise;
            sc.n = t.n;
            sc.p = t.p;
            sc.validate();
        }
    }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
    if (!j.is_object()) throw ValidationError(std::string(where) + " must be a JSON object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw ValidationError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const char* where) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("bad value for '") + key + "' in " + where);
    }
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback, const char* where) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer() || it->get<long long>() < 0)
        throw ValidationError(std::string("'") + key + "' in " + where + " must be a nonnegative integer");
    return it->get<std::size_t>();
}

std::string pairs_to_string(const PairSelection& s) {
    switch (s.kind) {
    case PairSelection::Kind::All: return "all";
    case PairSelection::Kind::DiagonalOnly: return "diag";
    case PairSelection::Kind::List: break;
    }
    std::string out;
    for (const auto& pr : s.list) {
        if (!out.empty()) out += ',';
        out += std::to_string(pr.j + 1) + ":" + std::to_string(pr.k + 1);
    }
    return out;
}

PairSelection pairs_from_string(const std::string& s) {
    if (s == "all") return PairSelection::all();
    if (s == "diag") return PairSelection::diagonal();
    // Indices are range-checked per tuple once p is known.
    return PairSelection::of(parse_pairs(s, std::numeric_limits<std::uint32_t>::max()));
}

std::string_view to_string(SweepTask t) {
    switch (t) {
    case SweepTask::Mean: return "mean";
    case SweepTask::Cov: return "cov";
    case SweepTask::Both: return "both";
    }
    return "mean";
}

} // namespace

SweepConfig sweep_from_json(const json& j) {
    check_keys(j, {"task", "designs", "schemes", "tuples", "replicates", "master_seed", "bandwidth", "mean_mode",
                   "regime_c", "grid", "pairs", "process", "noise", "time_density", "kernel"},
               "sweep config");
    SweepConfig c;
    const auto task = get_or<std::string>(j, "task", "mean", "sweep config");
    if (task == "mean")
        c.task = SweepTask::Mean;
    else if (task == "cov")
        c.task = SweepTask::Cov;
    else if (task == "both")
        c.task = SweepTask::Both;
    else
        throw ValidationError("unknown sweep task '" + task + "' (expected mean, cov or both)");
    if (j.contains("designs")) {
        c.designs.clear();
        for (const auto& d : get_or(j, "designs", std::vector<std::string>{}, "sweep config"))
            c.designs.push_back(parse_design(d));
    }
    if (j.contains("schemes")) {
        c.schemes.clear();
        for (const auto& s : get_or(j, "schemes", std::vector<std::string>{}, "sweep config"))
            c.schemes.push_back(parse_scheme(s));
    }
    if (!j.contains("tuples") || !j.at("tuples").is_array()) throw ValidationError("sweep config needs a tuples array");
    for (const auto& t : j.at("tuples")) {
        // resolved_count_law is informational output of to_json and is ignored on input.
        check_keys(t, {"n", "p", "count_law", "regime", "resolved_count_law"}, "tuple");
        SweepTuple tu;
        tu.n = get_count(t, "n", 0, "tuple");
        tu.p = get_count(t, "p", 0, "tuple");
        if (t.contains("count_law")) {
            const auto& law = t.at("count_law");
            if (law.is_object() && law.value("type", "") == "dense_rule") {
                check_keys(law, {"type", "mult"}, "count_law");
                tu.dense_mult = get_or(law, "mult", 3.0, "count_law");
            } else {
                tu.count_law = count_law_from_json(law);
            }
        }
        if (t.contains("regime")) tu.regime = parse_regime(get_or<std::string>(t, "regime", "", "tuple"));
        c.tuples.push_back(tu);
    }
    c.replicates = get_count(j, "replicates", c.replicates, "sweep config");
    c.master_seed = get_or<std::uint64_t>(j, "master_seed", c.master_seed, "sweep config");
    if (j.contains("bandwidth")) {
        const auto& b = j.at("bandwidth");
        check_keys(b, {"mode", "c", "multipliers"}, "bandwidth");
        const auto mode = get_or<std::string>(b, "mode", "prescribed", "bandwidth");
        if (mode == "prescribed") {
            c.bandwidth.kind = BandwidthMode::Kind::Prescribed;
        } else if (mode == "oracle_search") {
            c.bandwidth.kind = BandwidthMode::Kind::OracleSearch;
        } else {
            throw ValidationError("unknown bandwidth mode '" + mode + "' (expected prescribed or oracle_search)");
        }
        c.bandwidth.c = get_or(b, "c", 1.0, "bandwidth");
        c.bandwidth.multipliers = get_or(b, "multipliers", std::vector<double>{}, "bandwidth");
        if (c.bandwidth.kind == BandwidthMode::Kind::OracleSearch) {
            auto& m = c.bandwidth.multipliers;
            m.push_back(1.0);
            std::sort(m.begin(), m.end());
            m.erase(std::unique(m.begin(), m.end()), m.end());
        }
    }
    const auto mm = get_or<std::string>(j, "mean_mode", "oracle", "sweep config");
    if (mm == "oracle")
        c.mean_mode = MeanMode::Oracle;
    else if (mm == "plugin")
        c.mean_mode = MeanMode::PlugIn;
    else
        throw ValidationError("unknown mean_mode '" + mm + "' (expected oracle or plugin)");
    c.regime_c = get_or(j, "regime_c", c.regime_c, "sweep config");
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        check_keys(g, {"mean", "cov"}, "grid");
        c.grid_mean = get_count(g, "mean", c.grid_mean, "grid");
        c.grid_cov = get_count(g, "cov", c.grid_cov, "grid");
    }
    c.pairs = pairs_from_string(get_or<std::string>(j, "pairs", "all", "sweep config"));
    if (j.contains("process")) c.process = process_from_json(j.at("process"));
    if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
    if (j.contains("time_density")) c.time_density = time_density_from_json(j.at("time_density"));
    c.kernel = KernelSpec::parse(get_or<std::string>(j, "kernel", "epanechnikov", "sweep config"));
    c.validate();
    return c;
}

json to_json(const SweepConfig& c) {
    json designs = json::array(), schemes = json::array(), tuples = json::array();
    for (const auto d : c.designs) designs.push_back(std::string(to_string(d)));
    for (const auto s : c.schemes) schemes.push_back(std::string(to_string(s)));
    for (const auto& t : c.tuples) {
        json tj = {{"n", t.n}, {"p", t.p}};
        tj["count_law"] = t.dense_mult ? json{{"type", "dense_rule"}, {"mult", *t.dense_mult}} : to_json(t.count_law);
        tj["resolved_count_law"] = to_json(t.resolved_law());
        if (t.regime) tj["regime"] = std::string(to_string(*t.regime));
        tuples.push_back(tj);
    }
    json bw = {{"mode", c.bandwidth.kind == BandwidthMode::Kind::Prescribed ? "prescribed" : "oracle_search"}};
    if (c.bandwidth.kind == BandwidthMode::Kind::Prescribed)
        bw["c"] = c.bandwidth.c;
    else
        bw["multipliers"] = c.bandwidth.multipliers;
    return {{"task", std::string(to_string(c.task))},
            {"designs", designs},
            {"schemes", schemes},
            {"tuples", tuples},
            {"replicates", c.replicates},
            {"master_seed", c.master_seed},
            {"bandwidth", bw},
            {"mean_mode", c.mean_mode == MeanMode::Oracle ? "oracle" : "plugin"},
            {"regime_c", c.regime_c},
            {"grid", {{"mean", c.grid_mean}, {"cov", c.grid_cov}}},
            {"pairs", pairs_to_string(c.pairs)},
            {"process", to_json(c.process)},
            {"noise", to_json(c.noise)},
            {"time_density", to_json(c.time_density)},
            {"kernel", c.kernel.name()}};
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

namespace {

/// N̄ (OBS) or N^H (SUBJ) implied by the count law, used for classification
/// and the regression abscissa so that they do not vary across replicates.
double nominal_level(const CountLaw& law, std::size_t n, SchemeKind scheme) {
    const double nd = static_cast<double>(n);
    switch (law.kind) {
    case CountLaw::Kind::Fixed: return static_cast<double>(law.fixed);
    case CountLaw::Kind::UniformInt: {
        if (scheme == SchemeKind::OBS) return 0.5 * static_cast<double>(law.min + law.max);
        double inv = 0.0;
        for (std::size_t k = law.min; k <= law.max; ++k) inv += 1.0 / static_cast<double>(k);
        return static_cast<double>(law.max - law.min + 1) / inv;
    }
    case CountLaw::Kind::HeavySubject: {
        const double base = static_cast<double>(law.base), big = static_cast<double>(law.big);
        if (scheme == SchemeKind::OBS) return ((nd - 1.0) * base + big) / nd;
        return nd / ((nd - 1.0) / base + 1.0 / big);
    }
    }
    return 1.0;
}

std::vector<double> realized_levels(const CountMatrix& counts, SchemeKind scheme, DesignKind design) {
    const auto summaries = count_summaries(counts, scheme == SchemeKind::OBS ? WeightScheme::obs() : WeightScheme::subj(),
                                           design, {});
    std::vector<double> out;
    for (std::size_t j = 0; j < summaries.components.size(); ++j) {
        const auto& c = summaries.components[j];
        if (scheme == SchemeKind::OBS) {
            out.push_back(c.nbar);
        } else {
            if (!c.nharm) throw ValidationError("component " + std::to_string(j + 1) + " has a subject with no observations");
            out.push_back(*c.nharm);
        }
    }
    return out;
}

WeightScheme scheme_of(SchemeKind s) { return s == SchemeKind::OBS ? WeightScheme::obs() : WeightScheme::subj(); }

std::vector<double> scaled(std::vector<double> b, double m) {
    for (auto& v : b) v = std::min(v * m, 1.0);
    return b;
}

struct Evaluation {
    double max_l2 = 0.0, max_sup = 0.0;
    std::size_t missing = 0, points = 0;
    double bandwidth = 0.0;
    bool ok = true;
    std::string message;
    double seconds = 0.0;
};

/// Outcome of one work item: evals[task][scheme][multiplier].
struct ItemResult {
    std::uint64_t seed = 0;
    std::vector<std::vector<std::vector<Evaluation>>> evals;
};

struct Layout {
    std::vector<Task> tasks;
    std::vector<double> multipliers;
};

Layout layout_of(const SweepConfig& c) {
    Layout l;
    if (c.task != SweepTask::Cov) l.tasks.push_back(Task::Mean);
    if (c.task != SweepTask::Mean) l.tasks.push_back(Task::Cov);
    if (c.bandwidth.kind == BandwidthMode::Kind::OracleSearch)
        l.multipliers = c.bandwidth.multipliers;
    else
        l.multipliers = {1.0};
    return l;
}

Regime regime_for(const SweepConfig& c, const SweepTuple& t, Task task, SchemeKind scheme) {
    if (t.regime) return (task == Task::Cov && *t.regime == Regime::UltraDense) ? Regime::Dense : *t.regime;
    const double level = nominal_level(t.resolved_law(), t.n, scheme);
    RegimeInputs in{t.n, t.p, level, level, task, scheme, c.regime_c};
    return classify_regime(in);
}

ItemResult run_item(const SweepConfig& c, const Layout& layout, std::size_t ti, std::size_t di, std::size_t r) {
    const auto& tuple = c.tuples[ti];
    ItemResult out;
    out.seed = mix_seed({c.master_seed, ti, r, di});
    out.evals.assign(layout.tasks.size(),
                     std::vector<std::vector<Evaluation>>(c.schemes.size(),
                                                          std::vector<Evaluation>(layout.multipliers.size())));
    const auto fail_all = [&](const std::string& msg) {
        for (auto& a : out.evals)
            for (auto& b : a)
                for (auto& e : b) {
                    e.ok = false;
                    e.message = msg;
                }
    };

    SimulationConfig sc;
    sc.process = c.process;
    sc.sampling = {c.designs[di], tuple.resolved_law(), c.time_density};
    sc.noise = c.noise;
    sc.n = tuple.n;
    sc.p = tuple.p;
    sc.seed = out.seed;
    std::optional<ObservationSet> obs;
    try {
        obs = simulate(sc);
    } catch (const std::exception& e) {
        fail_all(std::string("simulation failed: ") + e.what());
        return out;
    }
    const TruthEvaluator truth(c.process, tuple.p);
    const MeanTruth mu = [&](std::size_t j, double t) { return truth.mean(j, t); };
    const CovTruth gamma = [&](std::size_t j, std::size_t k, double s, double t) { return truth.cov(j, k, s, t); };
    const auto counts = obs->counts();
    const Grid mean_grid = Grid::uniform({0.0, 1.0}, c.grid_mean);
    const Grid cov_grid = Grid::uniform({0.0, 1.0}, c.grid_cov);
    const double base_c = c.bandwidth.kind == BandwidthMode::Kind::Prescribed ? c.bandwidth.c : 1.0;

    for (std::size_t si = 0; si < c.schemes.size(); ++si) {
        const SchemeKind scheme = c.schemes[si];
        for (std::size_t ki = 0; ki < layout.tasks.size(); ++ki) {
            const Task task = layout.tasks[ki];
            for (std::size_t mi = 0; mi < layout.multipliers.size(); ++mi) {
                auto& ev = out.evals[ki][si][mi];
                const auto start = std::chrono::steady_clock::now();
                try {
                    const auto levels = realized_levels(counts, scheme, obs->design());
                    const auto [lo, hi] = std::minmax_element(levels.begin(), levels.end());
                    const RegimeInputs in{tuple.n, tuple.p, *lo, *hi, task, scheme, base_c};
                    const Regime regime = regime_for(c, tuple, task, scheme);
                    const auto bw = scaled(bandwidth_prescribe(in, regime, levels), layout.multipliers[mi]);
                    ev.bandwidth = bw.front();
                    ErrorReport report;
                    if (task == Task::Mean) {
                        const auto curves = estimate_means(*obs, scheme_of(scheme), MeanBandwidths{bw},
                                                           std::span<const Grid>(&mean_grid, 1), c.kernel);
                        add_mean_errors(report, curves, mu);
                        ev.max_l2 = report.max_mean_l2;
                        ev.max_sup = report.max_mean_sup;
                        ev.missing = report.mean_missing;
                        ev.points = report.mean_points;
                    } else {
                        std::optional<MeanProvider> provider;
                        if (c.mean_mode == MeanMode::Oracle) {
                            provider = MeanProvider::oracle(mu);
                        } else {
                            RegimeInputs mean_in = in;
                            mean_in.task = Task::Mean;
                            const Regime mean_regime = regime_for(c, tuple, Task::Mean, scheme);
                            const auto mean_bw = bandwidth_prescribe(mean_in, mean_regime, levels);
                            provider = MeanProvider::plug_in(estimate_means(*obs, scheme_of(scheme),
                                                                            MeanBandwidths{mean_bw},
                                                                            std::span<const Grid>(&mean_grid, 1),
                                                                            c.kernel));
                        }
                        const auto est = estimate_covariances(*obs, *provider, scheme_of(scheme), CovBandwidths{bw},
                                                              std::span<const Grid>(&cov_grid, 1), c.pairs, c.kernel);
                        if (!est.skipped.empty())
                            ev.message = std::to_string(est.skipped.size()) + " pair(s) skipped (empty index sets)";
                        add_cov_errors(report, est.surfaces, gamma);
                        ev.max_l2 = report.max_cov_l2;
                        ev.max_sup = report.max_cov_sup;
                        ev.missing = report.cov_missing;
                        ev.points = report.cov_points;
                    }
                } catch (const std::exception& e) {
                    ev.ok = false;
                    ev.message = e.what();
                }
                ev.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
        }
    }
    return out;
}

double median_of_ok(const std::vector<const Evaluation*>& evs, double Evaluation::*field) {
    std::vector<double> v;
    for (const auto* e : evs)
        if (e->ok) v.push_back(e->*field);
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return median(std::move(v));
}

} // namespace

SweepResult run_sweep(const SweepConfig& config) {
    config.validate();
    const Layout layout = layout_of(config);
    const std::size_t T = config.tuples.size(), D = config.designs.size(), R = config.replicates;
    std::vector<ItemResult> items(T * D * R);
    parallel_for(items.size(), [&](std::size_t idx) {
        const std::size_t ti = idx / (D * R), di = (idx / R) % D, r = idx % R;
        items[idx] = run_item(config, layout, ti, di, r);
    });
    const auto item = [&](std::size_t ti, std::size_t di, std::size_t r) -> const ItemResult& {
        return items[(ti * D + di) * R + r];
    };

    SweepResult result;
    for (std::size_t ki = 0; ki < layout.tasks.size(); ++ki) {
        const Task task = layout.tasks[ki];
        for (std::size_t ti = 0; ti < T; ++ti) {
            const auto& tuple = config.tuples[ti];
            for (std::size_t di = 0; di < D; ++di)
                for (std::size_t si = 0; si < config.schemes.size(); ++si) {
                    const SchemeKind scheme = config.schemes[si];
                    // Pick the multiplier with the smallest median max-L2 (first on ties).
                    std::size_t best = 0;
                    double best_err = std::numeric_limits<double>::infinity();
                    for (std::size_t mi = 0; mi < layout.multipliers.size(); ++mi) {
                        std::vector<const Evaluation*> evs;
                        for (std::size_t r = 0; r < R; ++r) evs.push_back(&item(ti, di, r).evals[ki][si][mi]);
                        const double med = median_of_ok(evs, &Evaluation::max_l2);
                        if (med < best_err) {
                            best_err = med;
                            best = mi;
                        }
                    }
                    const Regime regime = regime_for(config, tuple, task, scheme);
                    const double level = nominal_level(tuple.resolved_law(), tuple.n, scheme);
                    const double driver = rate_driver(task, regime, tuple.n, tuple.p, level);
                    RateRow rate;
                    rate.task = task;
                    rate.design = config.designs[di];
                    rate.scheme = scheme;
                    rate.regime = regime;
                    rate.tuple = ti;
                    rate.n = tuple.n;
                    rate.p = tuple.p;
                    rate.nbar = level;
                    rate.driver = driver;
                    std::vector<const Evaluation*> chosen;
                    std::size_t missing = 0, points = 0;
                    for (std::size_t r = 0; r < R; ++r) {
                        const auto& it = item(ti, di, r);
                        const auto& ev = it.evals[ki][si][best];
                        chosen.push_back(&ev);
                        ResultRow row;
                        row.task = task;
                        row.design = config.designs[di];
                        row.scheme = scheme;
                        row.regime = regime;
                        row.tuple = ti;
                        row.n = tuple.n;
                        row.p = tuple.p;
                        row.nbar = level;
                        row.replicate = r;
                        row.seed = it.seed;
                        row.bandwidth = ev.bandwidth;
                        row.multiplier = layout.multipliers[best];
                        row.driver = driver;
                        row.max_l2 = ev.max_l2;
                        row.max_sup = ev.max_sup;
                        row.missing = ev.missing;
                        row.points = ev.points;
                        row.ok = ev.ok;
                        row.message = ev.message;
                        row.seconds = ev.seconds;
                        result.rows.push_back(row);
                        if (ev.ok) {
                            missing += ev.missing;
                            points += ev.points;
                            ++rate.succeeded;
                        }
                    }
                    rate.max_l2 = median_of_ok(chosen, &Evaluation::max_l2);
                    rate.max_sup = median_of_ok(chosen, &Evaluation::max_sup);
                    rate.missing_frac = points > 0 ? static_cast<double>(missing) / static_cast<double>(points) : 0.0;
                    result.rates.push_back(rate);
                }
        }
    }

    // Rate fits per (task, design, scheme, regime).
    std::map<std::tuple<int, int, int, int>, std::vector<const RateRow*>> groups;
    for (const auto& r : result.rates)
        groups[{static_cast<int>(r.task), static_cast<int>(r.design), static_cast<int>(r.scheme),
                static_cast<int>(r.regime)}]
            .push_back(&r);
    for (auto& [key, members] : groups) {
        FitGroup g;
        g.task = members.front()->task;
        g.design = members.front()->design;
        g.scheme = members.front()->scheme;
        g.regime = members.front()->regime;
        std::vector<std::pair<double, double>> l2, sup;
        for (const auto* m : members)
            if (m->succeeded > 0 && m->max_l2 > 0.0 && m->max_sup > 0.0) {
                l2.emplace_back(m->driver, m->max_l2);
                sup.emplace_back(m->driver, m->max_sup);
            }
        try {
            g.l2_fit = fit_rate_exponent(l2);
            g.sup_fit = fit_rate_exponent(sup);
        } catch (const ValidationError& e) {
            g.note = e.what();
        }
        std::vector<const RateRow*> by_n = members;
        std::stable_sort(by_n.begin(), by_n.end(), [](const RateRow* a, const RateRow* b) { return a->n < b->n; });
        g.strictly_decreasing = by_n.size() >= 2;
        for (std::size_t a = 1; a < by_n.size(); ++a)
            if (!(by_n[a]->n > by_n[a - 1]->n && by_n[a]->max_l2 < by_n[a - 1]->max_l2)) g.strictly_decreasing = false;
        result.fits.push_back(std::move(g));
    }
    return result;
}

CompareResult run_compare_schemes(const SweepConfig& config) {
    SweepConfig c = config;
    c.schemes = {SchemeKind::OBS, SchemeKind::SUBJ};
    CompareResult out;
    out.sweep = run_sweep(c);
    std::map<std::tuple<int, std::size_t, int, std::size_t>, std::pair<const ResultRow*, const ResultRow*>> paired;
    for (const auto& r : out.sweep.rows) {
        auto& slot = paired[{static_cast<int>(r.task), r.tuple, static_cast<int>(r.design), r.replicate}];
        (r.scheme == SchemeKind::OBS ? slot.first : slot.second) = &r;
    }
    std::map<std::tuple<int, std::size_t, int>, std::pair<double, std::size_t>> wins;
    for (const auto& [key, pr] : paired) {
        const auto* o = pr.first;
        const auto* s = pr.second;
        CompareRow row;
        row.task = o->task;
        row.design = o->design;
        row.tuple = o->tuple;
        row.n = o->n;
        row.p = o->p;
        row.replicate = o->replicate;
        row.obs_max_l2 = o->max_l2;
        row.subj_max_l2 = s->max_l2;
        auto& w = wins[{static_cast<int>(o->task), o->tuple, static_cast<int>(o->design)}];
        if (!o->ok || !s->ok) {
            row.winner = "error";
        } else {
            // Errors equal to roundoff count as a tie.
            const double tol = 1e-12 * std::max(s->max_l2, o->max_l2);
            row.winner = s->max_l2 < o->max_l2 - tol ? "subj" : (o->max_l2 < s->max_l2 - tol ? "obs" : "tie");
            w.first += row.winner == "subj" ? 1.0 : (row.winner == "tie" ? 0.5 : 0.0);
            ++w.second;
        }
        out.rows.push_back(row);
    }
    for (const auto& [key, w] : wins) {
        CompareSummary s;
        s.task = static_cast<Task>(std::get<0>(key));
        s.tuple = std::get<1>(key);
        s.design = static_cast<DesignKind>(std::get<2>(key));
        s.n = c.tuples[s.tuple].n;
        s.p = c.tuples[s.tuple].p;
        s.replicates = w.second;
        s.subj_win_fraction = w.second > 0 ? w.first / static_cast<double>(w.second) : 0.0;
        out.summaries.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Outputs
// ---------------------------------------------------------------------------

namespace {

void finite_or_empty(CsvWriter& w, double v, bool ok) {
    if (ok && std::isfinite(v))
        w.field(v);
    else
        w.empty_field();
}

json fit_json(const std::optional<RateFit>& f) {
    if (!f) return nullptr;
    return {{"slope", f->slope},
            {"intercept", f->intercept},
            {"r_squared", f->r_squared},
            {"slope_stderr", f->slope_stderr},
            {"points", f->points}};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    auto os = open_output(path);
    os << text;
    if (!os) throw IoError("write failure on '" + path.string() + "'");
}

} // namespace

void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    CsvWriter w(os);
    w.header({"task", "design", "scheme", "regime", "tuple", "n", "p", "Nbar", "replicate", "seed", "bandwidth",
              "multiplier", "driver", "max_l2", "max_sup", "missing", "points", "status", "message"});
    for (const auto& r : rows) {
        w.field(to_string(r.task)).field(to_string(r.design)).field(to_string(r.scheme)).field(to_string(r.regime));
        w.field(r.tuple).field(r.n).field(r.p).field(r.nbar).field(r.replicate).field(static_cast<std::size_t>(r.seed));
        w.field(r.bandwidth).field(r.multiplier).field(r.driver);
        finite_or_empty(w, r.max_l2, r.ok);
        finite_or_empty(w, r.max_sup, r.ok);
        w.field(r.missing).field(r.points).field(r.ok ? "ok" : "error").field(r.message);
        w.end_row();
    }
}

void write_rates_csv(std::ostream& os, const std::vector<RateRow>& rates) {
    CsvWriter w(os);
    w.header({"task", "scheme", "regime", "n", "p", "Nbar", "driver", "max_l2", "max_sup", "missing_frac", "design"});
    for (const auto& r : rates) {
        w.field(to_string(r.task)).field(to_string(r.scheme)).field(to_string(r.regime));
        w.field(r.n).field(r.p).field(r.nbar).field(r.driver);
        finite_or_empty(w, r.max_l2, r.succeeded > 0);
        finite_or_empty(w, r.max_sup, r.succeeded > 0);
        w.field(r.missing_frac).field(to_string(r.design));
        w.end_row();
    }
}

json summary_json(const SweepResult& result) {
    json fits = json::array();
    for (const auto& g : result.fits) {
        json f = {{"task", std::string(to_string(g.task))},
                  {"design", std::string(to_string(g.design))},
                  {"scheme", std::string(to_string(g.scheme))},
                  {"regime", std::string(to_string(g.regime))},
                  {"l2", fit_json(g.l2_fit)},
                  {"sup", fit_json(g.sup_fit)},
                  {"strictly_decreasing", g.strictly_decreasing}};
        if (!g.note.empty()) f["note"] = g.note;
        fits.push_back(f);
    }
    std::size_t failed = 0;
    for (const auto& r : result.rows) failed += r.ok ? 0 : 1;
    return {{"fits", fits}, {"rows", result.rows.size()}, {"failed_rows", failed}};
}

void write_sweep_outputs(const SweepResult& result, const SweepConfig& config, const std::filesystem::path& dir) {
    {
        auto os = open_output(dir / "rows.csv");
        write_rows_csv(os, result.rows);
        if (!os) throw IoError("write failure on rows.csv");
    }
    {
        auto os = open_output(dir / "rates.csv");
        write_rates_csv(os, result.rates);
        if (!os) throw IoError("write failure on rates.csv");
    }
    {
        auto os = open_output(dir / "timing.csv");
        CsvWriter w(os);
        w.header({"task", "design", "scheme", "tuple", "replicate", "seconds"});
        for (const auto& r : result.rows) {
            w.field(to_string(r.task)).field(to_string(r.design)).field(to_string(r.scheme));
            w.field(r.tuple).field(r.replicate).field(r.seconds);
            w.end_row();
        }
        if (!os) throw IoError("write failure on timing.csv");
    }
    write_file(dir / "summary.json", summary_json(result).dump(2) + "\n");
    write_file(dir / "config_resolved.json", to_json(config).dump(2) + "\n");
}

void write_compare_outputs(const CompareResult& result, const SweepConfig& config, const std::filesystem::path& dir) {
    SweepConfig c = config;
    c.schemes = {SchemeKind::OBS, SchemeKind::SUBJ};
    write_sweep_outputs(result.sweep, c, dir);
    {
        auto os = open_output(dir / "compare.csv");
        CsvWriter w(os);
        w.header({"task", "design", "tuple", "n", "p", "replicate", "obs_max_l2", "subj_max_l2", "winner"});
        for (const auto& r : result.rows) {
            w.field(to_string(r.task)).field(to_string(r.design)).field(r.tuple).field(r.n).field(r.p);
            w.field(r.replicate);
            finite_or_empty(w, r.obs_max_l2, r.winner != "error");
            finite_or_empty(w, r.subj_max_l2, r.winner != "error");
            w.field(r.winner);
            w.end_row();
        }
        if (!os) throw IoError("write failure on compare.csv");
    }
    json s = json::array();
    for (const auto& m : result.summaries)
        s.push_back({{"task", std::string(to_string(m.task))},
                     {"design", std::string(to_string(m.design))},
                     {"tuple", m.tuple},
                     {"n", m.n},
                     {"p", m.p},
                     {"replicates", m.replicates},
                     {"subj_win_fraction", m.subj_win_fraction}});
    write_file(dir / "compare.json", json{{"comparisons", s}}.dump(2) + "\n");
}

} // namespace hdfda
