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

// Command-line front end. Talks to the library only through hdfda.h.

#include "hdfda/hdfda.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitInternal = 3;

struct Failure {
    int code;
    std::string message;
};

int exit_code(hdfda_status s) {
    switch (s) {
    case HDFDA_OK: return kExitOk;
    case HDFDA_ERR_VALIDATION: return kExitValidation;
    case HDFDA_ERR_IO: return kExitIo;
    case HDFDA_ERR_INTERNAL: return kExitInternal;
    }
    return kExitInternal;
}

void check(hdfda_status s) {
    if (s != HDFDA_OK) throw Failure{exit_code(s), hdfda_last_error()};
}

struct StringDeleter {
    void operator()(char* s) const { hdfda_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct ObsDeleter {
    void operator()(hdfda_observations* p) const { hdfda_observations_free(p); }
};
struct TruthDeleter {
    void operator()(hdfda_truth* p) const { hdfda_truth_free(p); }
};
struct EstDeleter {
    void operator()(hdfda_estimates* p) const { hdfda_estimates_free(p); }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{kExitIo, "cannot open '" + path + "'"};
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Failure{kExitIo, "read failure on '" + path + "'"};
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Failure{kExitIo, "cannot write '" + path.string() + "'"};
    os << text;
    if (!os) throw Failure{kExitIo, "write failure on '" + path.string() + "'"};
}

nlohmann::json parse_json(const std::string& text, const std::string& origin) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Failure{kExitValidation, origin + " is not valid JSON: " + e.what()};
    }
}

struct SimulateArgs {
    std::string config, out, design;
    std::optional<std::size_t> n, p;
    std::optional<unsigned long long> seed;
};

struct DataArgs {
    std::string input, design = "fr", domain;
};

struct EstimateArgs {
    DataArgs data;
    std::string scheme = "obs", kernel = "epanechnikov", pairs, mean = "plugin", truth, out;
    double bw_mean = 0.0, bw_cov = 0.0, bw_const = 1.0, regime_const = 1.0;
    std::size_t grid = 101;
    std::optional<std::size_t> grid_cov;
    bool no_mean = false;
};

struct DiagnoseArgs {
    DataArgs data;
    std::string pairs = "all", out;
    double threshold = 10.0;
};

struct SweepArgs {
    std::string config, out;
};

void run_simulate(const SimulateArgs& a) {
    nlohmann::json cfg = a.config.empty() ? nlohmann::json::object() : parse_json(read_file(a.config), a.config);
    if (!cfg.is_object()) throw Failure{kExitValidation, "simulation config must be a JSON object"};
    if (a.n) cfg["n"] = *a.n;
    if (a.p) cfg["p"] = *a.p;
    if (a.seed) cfg["seed"] = *a.seed;
    if (!a.design.empty()) cfg["sampling"]["design"] = a.design;
    const std::string text = cfg.dump();

    hdfda_observations* raw_obs = nullptr;
    hdfda_truth* raw_truth = nullptr;
    check(hdfda_simulate(text.c_str(), &raw_obs, &raw_truth));
    std::unique_ptr<hdfda_observations, ObsDeleter> obs(raw_obs);
    std::unique_ptr<hdfda_truth, TruthDeleter> truth(raw_truth);
    char* resolved = nullptr;
    check(hdfda_simulation_resolve(text.c_str(), &resolved));
    OwnedString resolved_owned(resolved);

    const std::filesystem::path out(a.out);
    check(hdfda_observations_write_csv(obs.get(), (out / "obs.csv").string().c_str()));
    check(hdfda_truth_write(truth.get(), (out / "truth.json").string().c_str()));
    write_file(out / "config_resolved.json", resolved);
}

std::unique_ptr<hdfda_observations, ObsDeleter> load(const DataArgs& d) {
    hdfda_observations* raw = nullptr;
    check(hdfda_observations_read_csv(d.input.c_str(), d.design.c_str(), d.domain.empty() ? nullptr : d.domain.c_str(),
                                      &raw));
    return std::unique_ptr<hdfda_observations, ObsDeleter>(raw);
}

void run_estimate(const EstimateArgs& a) {
    const auto obs = load(a.data);
    std::unique_ptr<hdfda_truth, TruthDeleter> truth;
    if (a.mean == "oracle") {
        if (a.truth.empty()) throw Failure{kExitValidation, "--mean oracle requires --truth"};
        hdfda_truth* raw = nullptr;
        check(hdfda_truth_read(a.truth.c_str(), &raw));
        truth.reset(raw);
    } else if (!a.truth.empty()) {
        throw Failure{kExitValidation, "--truth is only used with --mean oracle"};
    }
    hdfda_estimate_options opts;
    hdfda_estimate_options_default(&opts);
    opts.scheme = a.scheme.c_str();
    opts.kernel = a.kernel.c_str();
    opts.estimate_mean = a.no_mean ? 0 : 1;
    opts.pairs = a.pairs.empty() ? nullptr : a.pairs.c_str();
    opts.bw_mean = a.bw_mean;
    opts.bw_cov = a.bw_cov;
    opts.bw_const = a.bw_const;
    opts.regime_const = a.regime_const;
    opts.grid_mean = a.grid;
    opts.grid_cov = a.grid_cov.value_or(a.grid);
    opts.mean_truth = truth.get();
    hdfda_estimates* raw = nullptr;
    check(hdfda_estimate(obs.get(), &opts, &raw));
    std::unique_ptr<hdfda_estimates, EstDeleter> est(raw);
    check(hdfda_estimates_write(est.get(), a.out.c_str()));
}

void run_diagnose(const DiagnoseArgs& a) {
    const auto obs = load(a.data);
    char* raw = nullptr;
    check(hdfda_diagnose(obs.get(), a.pairs.c_str(), a.threshold, &raw));
    OwnedString json(raw);
    if (a.out.empty())
        std::cout << json.get();
    else
        write_file(a.out, json.get());
}

void run_rates(const SweepArgs& a, bool compare) {
    const std::string text = read_file(a.config);
    (void)parse_json(text, a.config);
    char* raw = nullptr;
    check(compare ? hdfda_run_compare(text.c_str(), a.out.c_str(), &raw)
                  : hdfda_run_sweep(text.c_str(), a.out.c_str(), &raw));
    OwnedString summary(raw);
}

void add_data_options(CLI::App* sub, DataArgs& d) {
    sub->add_option("--input", d.input, "Observation CSV (subject,component,time,value; 1-based)")->required();
    sub->add_option("--design", d.design, "Sampling design")->check(CLI::IsMember({"fr", "sr", "FR", "SR"}));
    sub->add_option("--domain", d.domain, "lo:hi shared by all components, or one lo:hi per component (comma list)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hdfda: mean and covariance estimation for high-dimensional functional data"};
    app.require_subcommand(1);
    app.fallthrough();
    std::optional<int> threads;
    app.add_option("--threads", threads, "Worker threads (overrides HDFDA_THREADS)")->check(CLI::PositiveNumber);
    app.set_version_flag("--version", std::string(hdfda_version()));

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Draw a synthetic dataset with its truth sidecar");
    simulate->add_option("--config", sim.config, "Simulation config JSON");
    simulate->add_option("--n", sim.n, "Subjects");
    simulate->add_option("--p", sim.p, "Components");
    simulate->add_option("--seed", sim.seed, "Seed");
    simulate->add_option("--design", sim.design, "Sampling design")->check(CLI::IsMember({"fr", "sr", "FR", "SR"}));
    simulate->add_option("--out", sim.out, "Output directory (obs.csv, truth.json, config_resolved.json)")->required();

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "Fit mean curves and covariance surfaces");
    add_data_options(estimate, est.data);
    estimate->add_option("--scheme", est.scheme, "Weight scheme")->check(CLI::IsMember({"obs", "subj", "OBS", "SUBJ"}));
    estimate->add_option("--bw-mean", est.bw_mean, "Mean bandwidth (default: prescribed)")->check(CLI::PositiveNumber);
    estimate->add_option("--bw-cov", est.bw_cov, "Covariance bandwidth (default: prescribed)")
        ->check(CLI::PositiveNumber);
    estimate->add_option("--bw-const", est.bw_const, "Constant of the prescribed bandwidths")
        ->check(CLI::PositiveNumber);
    estimate->add_option("--regime-const", est.regime_const, "Constant of the regime classification")
        ->check(CLI::PositiveNumber);
    estimate->add_option("--grid", est.grid, "Grid points per curve (and per surface axis unless --grid-cov)")
        ->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
    estimate->add_option("--grid-cov", est.grid_cov, "Grid points per surface axis")
        ->check(CLI::Range(std::size_t{2}, std::size_t{10000}));
    estimate->add_option("--pairs", est.pairs, "Covariance pairs: all, diag, or j:k,... (omit for mean only)");
    estimate->add_option("--mean", est.mean, "Centering for covariances")->check(CLI::IsMember({"plugin", "oracle"}));
    estimate->add_option("--truth", est.truth, "truth.json from simulate (with --mean oracle)");
    estimate->add_option("--kernel", est.kernel, "epanechnikov, biweight or gaussian[:scale]");
    estimate->add_flag("--no-mean", est.no_mean, "Skip writing mean curves");
    estimate->add_option("--out", est.out, "Output directory")->required();

    SweepArgs rates_args;
    auto* rates = app.add_subcommand("rates", "Monte Carlo sweep with rate fits");
    rates->add_option("--config", rates_args.config, "Sweep config JSON")->required();
    rates->add_option("--out", rates_args.out, "Output directory")->required();

    DiagnoseArgs diag;
    auto* diagnose = app.add_subcommand("diagnose", "Count summaries and homogeneity ratios as JSON");
    add_data_options(diagnose, diag.data);
    diagnose->add_option("--pairs", diag.pairs, "Pairs to summarize: all, diag, or j:k,...");
    diagnose->add_option("--threshold", diag.threshold, "Largest homogeneity ratio that still recommends OBS")
        ->check(CLI::Range(1.0, 1e300));
    diagnose->add_option("--out", diag.out, "Write the JSON here instead of standard output");

    SweepArgs cmp_args;
    auto* compare = app.add_subcommand("compare", "OBS vs SUBJ on identical data");
    compare->add_option("--config", cmp_args.config, "Sweep config JSON")->required();
    compare->add_option("--out", cmp_args.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        std::cout << hdfda_version() << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitValidation;
    }

    try {
        if (threads) check(hdfda_set_threads(*threads));
        if (*simulate)
            run_simulate(sim);
        else if (*estimate)
            run_estimate(est);
        else if (*rates)
            run_rates(rates_args, false);
        else if (*diagnose)
            run_diagnose(diag);
        else if (*compare)
            run_rates(cmp_args, true);
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    }
    return kExitOk;
}
