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

#include <hdfda/hdfda.h>

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

namespace {

const char* const kConfig = R"({"n": 40, "p": 3, "seed": 4,
    "sampling": {"design": "fr", "count_law": {"type": "uniform", "min": 3, "max": 6}},
    "noise": {"sigma": 0.2}})";

std::string take(char* s) {
    std::string out = s ? s : "";
    hdfda_string_free(s);
    return out;
}

} // namespace

TEST_CASE("version and null handling") {
    CHECK(std::string(hdfda_version()) == "0.1.0");
    hdfda_observations* obs = nullptr;
    CHECK(hdfda_observations_read_csv(nullptr, "fr", nullptr, &obs) == HDFDA_ERR_VALIDATION);
    CHECK(std::string(hdfda_last_error()).size() > 0);
    CHECK(hdfda_simulate(nullptr, nullptr, nullptr) == HDFDA_ERR_VALIDATION);
    size_t n = 0;
    CHECK(hdfda_observations_shape(nullptr, &n, nullptr, nullptr) == HDFDA_ERR_VALIDATION);
    hdfda_observations_free(nullptr);
    hdfda_truth_free(nullptr);
    hdfda_estimates_free(nullptr);
    hdfda_string_free(nullptr);
}

TEST_CASE("error codes") {
    hdfda_observations* obs = nullptr;
    CHECK(hdfda_observations_read_csv("/nonexistent/obs.csv", "fr", nullptr, &obs) == HDFDA_ERR_IO);
    CHECK(obs == nullptr);
    CHECK(hdfda_observations_read_csv("/nonexistent/obs.csv", "xx", nullptr, &obs) == HDFDA_ERR_VALIDATION);
    CHECK(hdfda_simulate("{not json", &obs, nullptr) == HDFDA_ERR_VALIDATION);
    CHECK(hdfda_simulate(R"({"unknown": 1})", &obs, nullptr) == HDFDA_ERR_VALIDATION);
    CHECK(std::string(hdfda_last_error()).find("unknown") != std::string::npos);
    CHECK(hdfda_set_threads(-1) == HDFDA_ERR_VALIDATION);
    CHECK(hdfda_set_threads(2) == HDFDA_OK);
    CHECK(hdfda_get_threads() == 2);
    CHECK(hdfda_set_threads(0) == HDFDA_OK);
}

TEST_CASE("simulate, write, read, estimate") {
    hdfda_observations* obs = nullptr;
    hdfda_truth* truth = nullptr;
    REQUIRE(hdfda_simulate(kConfig, &obs, &truth) == HDFDA_OK);
    size_t n = 0, p = 0, total = 0, c = 0;
    REQUIRE(hdfda_observations_shape(obs, &n, &p, &total) == HDFDA_OK);
    CHECK(n == 40);
    CHECK(p == 3);
    CHECK(hdfda_observations_count(obs, 0, 0, &c) == HDFDA_OK);
    CHECK(c >= 3);
    CHECK(hdfda_observations_count(obs, 40, 0, &c) == HDFDA_ERR_VALIDATION);

    const auto dir = std::filesystem::temp_directory_path() / "hdfda_capi_test";
    std::filesystem::create_directories(dir);
    const auto csv = (dir / "obs.csv").string(), tj = (dir / "truth.json").string();
    REQUIRE(hdfda_observations_write_csv(obs, csv.c_str()) == HDFDA_OK);
    REQUIRE(hdfda_truth_write(truth, tj.c_str()) == HDFDA_OK);
    hdfda_observations* back = nullptr;
    REQUIRE(hdfda_observations_read_csv(csv.c_str(), "fr", "0:1", &back) == HDFDA_OK);
    size_t total2 = 0;
    hdfda_observations_shape(back, nullptr, nullptr, &total2);
    CHECK(total2 == total);
    hdfda_truth* t2 = nullptr;
    REQUIRE(hdfda_truth_read(tj.c_str(), &t2) == HDFDA_OK);
    double m1 = 0, m2 = 0;
    hdfda_truth_mean(truth, 1, 0.3, &m1);
    hdfda_truth_mean(t2, 1, 0.3, &m2);
    CHECK(m1 == m2);
    CHECK(hdfda_truth_cov(truth, 0, 3, 0.1, 0.2, &m1) == HDFDA_ERR_VALIDATION);

    hdfda_estimate_options opts;
    hdfda_estimate_options_default(&opts);
    CHECK(opts.grid_mean == 101);
    CHECK(opts.estimate_mean == 1);
    opts.pairs = "all";
    opts.grid_cov = 11;
    opts.mean_truth = t2;
    hdfda_estimates* est = nullptr;
    REQUIRE(hdfda_estimate(back, &opts, &est) == HDFDA_OK);

    double t = 0, v = 0;
    int st = -1;
    REQUIRE(hdfda_estimates_mean(est, 2, 50, &t, &v, &st) == HDFDA_OK);
    CHECK(t == doctest::Approx(0.5));
    CHECK(st == 0);
    hdfda_truth_mean(truth, 2, 0.5, &m1);
    CHECK(std::fabs(v - m1) < 0.5);
    CHECK(hdfda_estimates_mean(est, 2, 101, &t, &v, &st) == HDFDA_ERR_VALIDATION);

    double a = 0, b = 0;
    int sa = 0, sb = 0;
    REQUIRE(hdfda_estimates_cov(est, 0, 2, 3, 7, &a, &sa) == HDFDA_OK);
    REQUIRE(hdfda_estimates_cov(est, 2, 0, 7, 3, &b, &sb) == HDFDA_OK);
    CHECK(a == b);
    CHECK(sa == sb);

    char* info = nullptr;
    REQUIRE(hdfda_estimates_info(est, &info) == HDFDA_OK);
    const auto j = nlohmann::json::parse(take(info));
    CHECK(j.at("scheme") == "obs");
    CHECK(j.at("cov").at("pairs") == 6);
    CHECK(j.at("cov").at("centering") == "oracle");

    const auto out = dir / "est";
    std::filesystem::create_directories(out);
    REQUIRE(hdfda_estimates_write(est, out.string().c_str()) == HDFDA_OK);
    CHECK(std::filesystem::exists(out / "mean.csv"));
    CHECK(std::filesystem::exists(out / "cov.csv"));
    CHECK(std::filesystem::exists(out / "estimate.json"));

    char* diag = nullptr;
    REQUIRE(hdfda_diagnose(back, "diag", 10.0, &diag) == HDFDA_OK);
    const auto d = nlohmann::json::parse(take(diag));
    CHECK(d.at("components_summary").size() == 3);
    CHECK(d.at("pairs_summary").size() == 3);
    CHECK(d.contains("obs_recommended"));
    CHECK(hdfda_diagnose(back, "all", 0.5, &diag) == HDFDA_ERR_VALIDATION);

    opts.scheme = "bogus";
    hdfda_estimates* bad = nullptr;
    CHECK(hdfda_estimate(back, &opts, &bad) == HDFDA_ERR_VALIDATION);
    CHECK(bad == nullptr);

    hdfda_estimates_free(est);
    hdfda_truth_free(t2);
    hdfda_truth_free(truth);
    hdfda_observations_free(back);
    hdfda_observations_free(obs);
    std::filesystem::remove_all(dir);
}

TEST_CASE("sweep through the C API") {
    const char* cfg = R"({"tuples": [{"n": 20, "p": 3}, {"n": 40, "p": 3}], "replicates": 2, "grid": {"mean": 11}})";
    char* summary = nullptr;
    REQUIRE(hdfda_run_sweep(cfg, nullptr, &summary) == HDFDA_OK);
    const auto s = nlohmann::json::parse(take(summary));
    CHECK(s.at("rows") == 4);
    REQUIRE(hdfda_run_compare(cfg, nullptr, &summary) == HDFDA_OK);
    CHECK(nlohmann::json::parse(take(summary)).at("comparisons").size() == 2);
    CHECK(hdfda_run_sweep(R"({"tuples": 3})", nullptr, nullptr) == HDFDA_ERR_VALIDATION);
}
