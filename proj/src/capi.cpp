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

#include "hdfda/hdfda.h"

#include "hdfda/cov_smoother.hpp"
#include "hdfda/csv.hpp"
#include "hdfda/harness.hpp"
#include "hdfda/mean_smoother.hpp"
#include "hdfda/metrics.hpp"
#include "hdfda/parallel.hpp"
#include "hdfda/simgen.hpp"
#include "hdfda/weights.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <new>
#include <optional>
#include <string>

using nlohmann::json;

struct hdfda_observations {
    hdfda::ObservationSet set;
};

struct hdfda_truth {
    hdfda::TruthEvaluator eval;
};

struct hdfda_estimates {
    std::vector<hdfda::EstimateCurve> curves;
    hdfda::CovEstimates cov;
    bool has_cov = false;
    json info;
};

namespace {

thread_local std::string last_error;

template <class F>
hdfda_status guarded(F&& f) noexcept {
    try {
        last_error.clear();
        f();
        return HDFDA_OK;
    } catch (const hdfda::Error& e) {
        last_error = e.what();
        switch (e.kind()) {
        case hdfda::ErrorKind::Validation: return HDFDA_ERR_VALIDATION;
        case hdfda::ErrorKind::Io: return HDFDA_ERR_IO;
        case hdfda::ErrorKind::Internal: return HDFDA_ERR_INTERNAL;
        }
        return HDFDA_ERR_INTERNAL;
    } catch (const json::exception& e) {
        last_error = std::string("invalid JSON: ") + e.what();
        return HDFDA_ERR_VALIDATION;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return HDFDA_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return HDFDA_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return HDFDA_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (!p) throw hdfda::ValidationError(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

double parse_number(std::string_view s, std::string_view whole) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw hdfda::ValidationError("bad domain '" + std::string(whole) + "' (expected lo:hi[,lo:hi...])");
    return v;
}

std::vector<hdfda::Interval> parse_domains(const char* spec) {
    if (!spec || !*spec) return {hdfda::Interval{0.0, 1.0}};
    const std::string_view all(spec);
    std::vector<hdfda::Interval> out;
    std::size_t start = 0;
    while (start <= all.size()) {
        const auto end = std::min(all.find(',', start), all.size());
        const auto item = all.substr(start, end - start);
        const auto colon = item.find(':');
        if (colon == std::string_view::npos)
            throw hdfda::ValidationError("bad domain '" + std::string(all) + "' (expected lo:hi[,lo:hi...])");
        hdfda::Interval iv{parse_number(item.substr(0, colon), all), parse_number(item.substr(colon + 1), all)};
        if (!(iv.lo < iv.hi)) throw hdfda::ValidationError("domain '" + std::string(item) + "' must have lo < hi");
        out.push_back(iv);
        start = end + 1;
    }
    return out;
}

hdfda::PairSelection parse_selection(std::string_view s, std::size_t p) {
    if (s == "all") return hdfda::PairSelection::all();
    if (s == "diag") return hdfda::PairSelection::diagonal();
    return hdfda::PairSelection::of(hdfda::parse_pairs(s, p));
}

/// N̄_j (OBS) or N_j^H (SUBJ) per component.
std::vector<double> count_levels(const hdfda::ObservationSet& obs, hdfda::SchemeKind scheme) {
    const auto ws = scheme == hdfda::SchemeKind::OBS ? hdfda::WeightScheme::obs() : hdfda::WeightScheme::subj();
    const auto summaries = hdfda::count_summaries(obs.counts(), ws, obs.design(), {});
    std::vector<double> out;
    for (std::size_t j = 0; j < summaries.components.size(); ++j) {
        const auto& c = summaries.components[j];
        if (scheme == hdfda::SchemeKind::OBS) {
            out.push_back(c.nbar);
        } else {
            if (!c.nharm)
                throw hdfda::ValidationError("component " + std::to_string(j + 1) +
                                             " has subjects without observations; the prescribed SUBJ bandwidth "
                                             "is undefined, pass an explicit bandwidth");
            out.push_back(*c.nharm);
        }
    }
    return out;
}

struct Bandwidths {
    std::vector<double> b;
    std::string regime; // "fixed" when given explicitly
};

/// Explicit value, or the prescription on the unit scale stretched to each
/// component's domain.
Bandwidths choose_bandwidths(const hdfda::ObservationSet& obs, hdfda::Task task, hdfda::SchemeKind scheme,
                             double fixed, double c, double regime_c) {
    const std::size_t p = obs.components();
    Bandwidths out;
    if (fixed > 0.0) {
        if (!std::isfinite(fixed)) throw hdfda::ValidationError("bandwidth must be finite");
        out.b.assign(p, fixed);
        out.regime = "fixed";
        return out;
    }
    if (!(c > 0.0)) throw hdfda::ValidationError("bandwidth constant must be positive");
    const auto levels = count_levels(obs, scheme);
    const auto [lo, hi] = std::minmax_element(levels.begin(), levels.end());
    const hdfda::RegimeInputs regime_in{obs.subjects(), p, *lo, *hi, task, scheme, regime_c};
    const auto regime = hdfda::classify_regime(regime_in);
    hdfda::RegimeInputs in = regime_in;
    in.c = c;
    out.b = hdfda::bandwidth_prescribe(in, regime, levels, 1.0);
    for (std::size_t j = 0; j < p; ++j) out.b[j] *= obs.domain(j).length();
    out.regime = std::string(hdfda::to_string(regime));
    return out;
}

json status_counts(std::size_t missing, std::size_t points) { return {{"missing", missing}, {"points", points}}; }

} // namespace

extern "C" {

const char* hdfda_version(void) { return "0.1.0"; }

const char* hdfda_last_error(void) { return last_error.c_str(); }

void hdfda_string_free(char* s) { std::free(s); }

hdfda_status hdfda_set_threads(int threads) {
    return guarded([&] {
        if (threads < 0) throw hdfda::ValidationError("thread count must be nonnegative");
        hdfda::set_thread_limit(threads);
    });
}

int hdfda_get_threads(void) { return hdfda::thread_limit(); }

hdfda_status hdfda_observations_read_csv(const char* path, const char* design, const char* domain,
                                         hdfda_observations** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        const auto d = hdfda::parse_design(design ? design : "fr");
        auto set = hdfda::read_observation_csv(std::filesystem::path(path), d, parse_domains(domain));
        *out = new hdfda_observations{std::move(set)};
    });
}

hdfda_status hdfda_observations_write_csv(const hdfda_observations* obs, const char* path) {
    return guarded([&] {
        require(obs, "observations");
        require(path, "path");
        hdfda::write_observation_csv(std::filesystem::path(path), obs->set);
    });
}

hdfda_status hdfda_observations_shape(const hdfda_observations* obs, size_t* subjects, size_t* components,
                                      size_t* total) {
    return guarded([&] {
        require(obs, "observations");
        if (subjects) *subjects = obs->set.subjects();
        if (components) *components = obs->set.components();
        if (total) *total = obs->set.total_observations();
    });
}

hdfda_status hdfda_observations_count(const hdfda_observations* obs, size_t i, size_t j, size_t* count) {
    return guarded([&] {
        require(obs, "observations");
        require(count, "count");
        if (i >= obs->set.subjects() || j >= obs->set.components())
            throw hdfda::ValidationError("series index out of range");
        *count = obs->set.count(i, j);
    });
}

void hdfda_observations_free(hdfda_observations* obs) { delete obs; }

hdfda_status hdfda_simulate(const char* config_json, hdfda_observations** obs, hdfda_truth** truth) {
    return guarded([&] {
        require(config_json, "config");
        if (obs) *obs = nullptr;
        if (truth) *truth = nullptr;
        const auto cfg = hdfda::simulation_from_json(json::parse(config_json));
        cfg.validate();
        std::unique_ptr<hdfda_observations> o;
        if (obs) o = std::make_unique<hdfda_observations>(hdfda_observations{hdfda::simulate(cfg)});
        std::unique_ptr<hdfda_truth> t;
        if (truth) t = std::make_unique<hdfda_truth>(hdfda_truth{hdfda::TruthEvaluator(cfg.process, cfg.p)});
        if (obs) *obs = o.release();
        if (truth) *truth = t.release();
    });
}

hdfda_status hdfda_simulation_resolve(const char* config_json, char** out_json) {
    return guarded([&] {
        require(config_json, "config");
        require(out_json, "out");
        const auto cfg = hdfda::simulation_from_json(json::parse(config_json));
        cfg.validate();
        *out_json = dup_string(hdfda::to_json(cfg).dump(2) + "\n");
    });
}

hdfda_status hdfda_truth_read(const char* path, hdfda_truth** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        const auto text = hdfda::read_text_file(path);
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw hdfda::ValidationError("truth file '" + std::string(path) + "' is not valid JSON: " + e.what());
        }
        *out = new hdfda_truth{hdfda::TruthEvaluator::from_json(j)};
    });
}

hdfda_status hdfda_truth_write(const hdfda_truth* truth, const char* path) {
    return guarded([&] {
        require(truth, "truth");
        require(path, "path");
        auto os = hdfda::open_output(path);
        os << truth->eval.to_json().dump(2) << "\n";
        if (!os) throw hdfda::IoError("write failure on '" + std::string(path) + "'");
    });
}

hdfda_status hdfda_truth_mean(const hdfda_truth* truth, size_t j, double t, double* out) {
    return guarded([&] {
        require(truth, "truth");
        require(out, "out");
        *out = truth->eval.mean(j, t);
    });
}

hdfda_status hdfda_truth_cov(const hdfda_truth* truth, size_t j, size_t k, double s, double t, double* out) {
    return guarded([&] {
        require(truth, "truth");
        require(out, "out");
        *out = truth->eval.cov(j, k, s, t);
    });
}

void hdfda_truth_free(hdfda_truth* truth) { delete truth; }

void hdfda_estimate_options_default(hdfda_estimate_options* opts) {
    if (!opts) return;
    opts->scheme = "obs";
    opts->kernel = "epanechnikov";
    opts->estimate_mean = 1;
    opts->pairs = nullptr;
    opts->bw_mean = 0.0;
    opts->bw_cov = 0.0;
    opts->bw_const = 1.0;
    opts->regime_const = 1.0;
    opts->grid_mean = 101;
    opts->grid_cov = 51;
    opts->mean_truth = nullptr;
}

hdfda_status hdfda_estimate(const hdfda_observations* obs, const hdfda_estimate_options* opts,
                            hdfda_estimates** out) {
    return guarded([&] {
        require(obs, "observations");
        require(opts, "options");
        require(out, "out");
        *out = nullptr;
        const auto& set = obs->set;
        const std::size_t p = set.components();
        const auto scheme_kind = hdfda::parse_scheme(opts->scheme ? opts->scheme : "obs");
        if (scheme_kind == hdfda::SchemeKind::Generic)
            throw hdfda::ValidationError("generic weights are not available through this interface");
        const auto scheme =
            scheme_kind == hdfda::SchemeKind::OBS ? hdfda::WeightScheme::obs() : hdfda::WeightScheme::subj();
        const auto kernel = hdfda::KernelSpec::parse(opts->kernel ? opts->kernel : "epanechnikov");
        const bool want_cov = opts->pairs != nullptr;
        if (!opts->estimate_mean && !want_cov) throw hdfda::ValidationError("nothing to estimate");
        if (opts->grid_mean < 2 || (want_cov && opts->grid_cov < 2))
            throw hdfda::ValidationError("grids need at least 2 points");

        auto est = std::make_unique<hdfda_estimates>();
        est->info = {{"design", std::string(hdfda::to_string(set.design()))},
                     {"scheme", std::string(hdfda::to_string(scheme_kind))},
                     {"kernel", kernel.name()},
                     {"subjects", set.subjects()},
                     {"components", p},
                     {"observations", set.total_observations()}};

        const bool need_mean_fit = opts->estimate_mean || (want_cov && !opts->mean_truth);
        if (need_mean_fit) {
            const auto bw = choose_bandwidths(set, hdfda::Task::Mean, scheme_kind, opts->bw_mean, opts->bw_const,
                                              opts->regime_const);
            std::vector<hdfda::Grid> grids;
            for (std::size_t j = 0; j < p; ++j) grids.push_back(hdfda::Grid::uniform(set.domain(j), opts->grid_mean));
            est->curves = hdfda::estimate_means(set, scheme, hdfda::MeanBandwidths{bw.b}, grids, kernel);
            std::size_t missing = 0;
            for (const auto& c : est->curves) missing += c.missing_count();
            est->info["mean"] = {{"regime", bw.regime},
                                 {"bandwidths", bw.b},
                                 {"grid", opts->grid_mean},
                                 {"status", status_counts(missing, p * opts->grid_mean)}};
        }
        if (want_cov) {
            const auto selection = parse_selection(opts->pairs, p);
            const auto bw = choose_bandwidths(set, hdfda::Task::Cov, scheme_kind, opts->bw_cov, opts->bw_const,
                                              opts->regime_const);
            std::vector<hdfda::Grid> grids;
            if (set.design() == hdfda::DesignKind::SR) {
                grids.push_back(hdfda::Grid::uniform(set.domain(0), opts->grid_cov));
            } else {
                for (std::size_t j = 0; j < p; ++j) grids.push_back(hdfda::Grid::uniform(set.domain(j), opts->grid_cov));
            }
            std::optional<hdfda::MeanProvider> provider;
            if (opts->mean_truth) {
                if (opts->mean_truth->eval.components() != p)
                    throw hdfda::ValidationError("truth has " + std::to_string(opts->mean_truth->eval.components()) +
                                                 " components but the data have " + std::to_string(p));
                const auto* truth = &opts->mean_truth->eval;
                provider = hdfda::MeanProvider::oracle([truth](std::size_t j, double t) { return truth->mean(j, t); });
            } else {
                provider = hdfda::MeanProvider::plug_in(est->curves);
            }
            const hdfda::CovBandwidths cb{bw.b};
            est->cov = hdfda::estimate_covariances(set, *provider, scheme, cb, grids, selection, kernel);
            est->has_cov = true;
            std::size_t missing = 0, points = 0;
            for (const auto& s : est->cov.surfaces) {
                for (const auto st : s.status) missing += st == hdfda::EstimateStatus::Missing ? 1 : 0;
                points += s.status.size();
            }
            json skipped = json::array();
            for (const auto& pr : est->cov.skipped) skipped.push_back({pr.j + 1, pr.k + 1});
            est->info["cov"] = {{"regime", bw.regime},
                                {"bandwidths", cb.b},
                                {"grid", opts->grid_cov},
                                {"centering", opts->mean_truth ? "oracle" : "plugin"},
                                {"pairs", est->cov.surfaces.size()},
                                {"skipped_pairs", skipped},
                                {"status", status_counts(missing, points)}};
        }
        if (!opts->estimate_mean) est->curves.clear();
        *out = est.release();
    });
}

hdfda_status hdfda_estimates_write(const hdfda_estimates* est, const char* dir) {
    return guarded([&] {
        require(est, "estimates");
        require(dir, "dir");
        const std::filesystem::path d(dir);
        if (!est->curves.empty()) {
            auto os = hdfda::open_output(d / "mean.csv");
            hdfda::write_curves_csv(os, est->curves);
            if (!os) throw hdfda::IoError("write failure on mean.csv");
        }
        if (est->has_cov) {
            auto os = hdfda::open_output(d / "cov.csv");
            hdfda::write_surfaces_csv(os, est->cov.surfaces);
            if (!os) throw hdfda::IoError("write failure on cov.csv");
        }
        auto os = hdfda::open_output(d / "estimate.json");
        os << est->info.dump(2) << "\n";
        if (!os) throw hdfda::IoError("write failure on estimate.json");
    });
}

hdfda_status hdfda_estimates_info(const hdfda_estimates* est, char** out_json) {
    return guarded([&] {
        require(est, "estimates");
        require(out_json, "out");
        *out_json = dup_string(est->info.dump(2) + "\n");
    });
}

hdfda_status hdfda_estimates_mean(const hdfda_estimates* est, size_t j, size_t g, double* t, double* value,
                                  int* status) {
    return guarded([&] {
        require(est, "estimates");
        if (j >= est->curves.size()) throw hdfda::ValidationError("no mean curve for that component");
        const auto& c = est->curves[j];
        if (g >= c.grid.size()) throw hdfda::ValidationError("grid index out of range");
        if (t) *t = c.grid[g];
        if (value) *value = c.values[g];
        if (status) *status = static_cast<int>(c.status[g]);
    });
}

hdfda_status hdfda_estimates_cov(const hdfda_estimates* est, size_t j, size_t k, size_t a, size_t b, double* value,
                                 int* status) {
    return guarded([&] {
        require(est, "estimates");
        if (!est->has_cov) throw hdfda::ValidationError("no covariance surfaces were fitted");
        const auto key = hdfda::PairIndex::of(j, k);
        const auto it = std::find_if(est->cov.surfaces.begin(), est->cov.surfaces.end(),
                                     [&](const hdfda::EstimateSurface& s) { return s.j == key.j && s.k == key.k; });
        if (it == est->cov.surfaces.end()) throw hdfda::ValidationError("pair was not fitted");
        // Stored as (min, max); (j, k) with j > k reads the transpose.
        const std::size_t row = j <= k ? a : b, col = j <= k ? b : a;
        if (row >= it->grid_s.size() || col >= it->grid_t.size())
            throw hdfda::ValidationError("grid index out of range");
        if (value) *value = it->value(row, col);
        if (status) *status = static_cast<int>(it->status_at(row, col));
    });
}

void hdfda_estimates_free(hdfda_estimates* est) { delete est; }

hdfda_status hdfda_diagnose(const hdfda_observations* obs, const char* pairs, double threshold, char** out_json) {
    return guarded([&] {
        require(obs, "observations");
        require(out_json, "out");
        if (!(threshold >= 1.0)) throw hdfda::ValidationError("homogeneity threshold must be at least 1");
        const auto& set = obs->set;
        const auto counts = set.counts();
        const auto selected = parse_selection(pairs ? pairs : "all", set.components()).resolve(set.components());
        const auto so = hdfda::count_summaries(counts, hdfda::WeightScheme::obs(), set.design(), selected);
        const auto ss = hdfda::count_summaries(counts, hdfda::WeightScheme::subj(), set.design(), selected);
        const auto report = hdfda::homogeneity_report(so);
        const auto opt = [](const std::optional<double>& v) -> json { return v ? json(*v) : json(nullptr); };

        json comps = json::array();
        for (std::size_t j = 0; j < so.components.size(); ++j) {
            const auto& c = so.components[j];
            comps.push_back({{"component", j + 1},
                             {"nbar", c.nbar},
                             {"nbar_sq", c.nbar_sq},
                             {"nplus", c.nplus},
                             {"nharm", opt(c.nharm)},
                             {"wbar_obs", opt(c.wbar)},
                             {"wbar_subj", opt(ss.components[j].wbar)},
                             {"meanRatio", opt(report.mean_ratio[j])}});
        }
        json prs = json::array();
        for (std::size_t q = 0; q < so.pairs.size(); ++q) {
            const auto& c = so.pairs[q];
            prs.push_back({{"j", c.pair.j + 1},
                           {"k", c.pair.k + 1},
                           {"nbar_jk", c.nbar_jk},
                           {"nbar_jk2", c.nbar_jk2},
                           {"nbar_j2k2", c.nbar_j2k2},
                           {"nplus_jk", c.nplus_jk},
                           {"nharm_jk", opt(c.nharm_jk)},
                           {"vbar_obs", opt(c.vbar)},
                           {"vbar_subj", opt(ss.pairs[q].vbar)},
                           {"covRatio", opt(report.cov_ratio[q])}});
        }
        // Without any defined pair ratio, fall back to the mean ratio.
        const auto decisive = report.max_cov_ratio ? report.max_cov_ratio : report.max_mean_ratio;
        const json j = {{"design", std::string(hdfda::to_string(set.design()))},
                        {"subjects", set.subjects()},
                        {"components", set.components()},
                        {"observations", set.total_observations()},
                        {"components_summary", comps},
                        {"pairs_summary", prs},
                        {"maxMeanRatio", opt(report.max_mean_ratio)},
                        {"maxCovRatio", opt(report.max_cov_ratio)},
                        {"threshold", threshold},
                        {"obs_recommended", decisive ? *decisive <= threshold : false}};
        *out_json = dup_string(j.dump(2) + "\n");
    });
}

hdfda_status hdfda_run_sweep(const char* config_json, const char* out_dir, char** summary_json) {
    return guarded([&] {
        require(config_json, "config");
        if (summary_json) *summary_json = nullptr;
        const auto cfg = hdfda::sweep_from_json(json::parse(config_json));
        const auto result = hdfda::run_sweep(cfg);
        if (out_dir) hdfda::write_sweep_outputs(result, cfg, out_dir);
        if (summary_json) *summary_json = dup_string(hdfda::summary_json(result).dump(2) + "\n");
    });
}

hdfda_status hdfda_run_compare(const char* config_json, const char* out_dir, char** summary_json) {
    return guarded([&] {
        require(config_json, "config");
        if (summary_json) *summary_json = nullptr;
        const auto cfg = hdfda::sweep_from_json(json::parse(config_json));
        const auto result = hdfda::run_compare_schemes(cfg);
        if (out_dir) hdfda::write_compare_outputs(result, cfg, out_dir);
        if (summary_json) {
            json s = json::array();
            for (const auto& m : result.summaries)
                s.push_back({{"task", std::string(hdfda::to_string(m.task))},
                             {"design", std::string(hdfda::to_string(m.design))},
                             {"tuple", m.tuple},
                             {"n", m.n},
                             {"p", m.p},
                             {"replicates", m.replicates},
                             {"subj_win_fraction", m.subj_win_fraction}});
            *summary_json = dup_string(json{{"comparisons", s}}.dump(2) + "\n");
        }
    });
}

} // extern "C"
