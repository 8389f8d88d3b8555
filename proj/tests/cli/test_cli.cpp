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

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = HDFDA_CLI_PATH;

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const char* name) {
    const auto d = fs::temp_directory_path() / "hdfda_cli_test" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

const char* const kSweep = R"({"task": "mean", "designs": ["sr"], "schemes": ["obs", "subj"],
  "tuples": [{"n": 30, "p": 4, "count_law": {"type": "uniform", "min": 2, "max": 4}},
             {"n": 60, "p": 4, "count_law": {"type": "uniform", "min": 2, "max": 4}}],
  "replicates": 3, "master_seed": 5, "grid": {"mean": 21}})";

} // namespace

TEST_CASE("help and version") {
    CHECK(run("--help") == 0);
    CHECK(run("--version") == 0);
    CHECK(run("estimate --help") == 0);
    CHECK(run("") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("simulate --bogus 1 --out /tmp") == 1);
}

TEST_CASE("simulate, estimate, diagnose") {
    const auto d = scratch("pipeline");
    const auto sim = d / "sim";
    REQUIRE(run("simulate --n 25 --p 3 --seed 2 --design fr --out " + sim.string()) == 0);
    CHECK(fs::exists(sim / "obs.csv"));
    CHECK(fs::exists(sim / "truth.json"));
    CHECK(fs::exists(sim / "config_resolved.json"));

    const auto est = d / "est";
    REQUIRE(run("estimate --input " + (sim / "obs.csv").string() + " --design fr --pairs diag --mean oracle --truth " +
                (sim / "truth.json").string() + " --grid 21 --out " + est.string()) == 0);
    CHECK(fs::exists(est / "mean.csv"));
    CHECK(fs::exists(est / "cov.csv"));
    CHECK(fs::exists(est / "estimate.json"));
    CHECK(slurp(est / "estimate.json").find("\"cov\"") != std::string::npos);

    const auto diag = d / "diag.json";
    CHECK(run("diagnose --input " + (sim / "obs.csv").string() + " --design fr --out " + diag.string()) == 0);
    CHECK(slurp(diag).find("obs_recommended") != std::string::npos);

    // Missing input is an I/O error; bad values are validation errors.
    CHECK(run("estimate --input " + (d / "nope.csv").string() + " --out " + est.string()) == 2);
    CHECK(run("estimate --input " + (sim / "obs.csv").string() + " --scheme heavy --out " + est.string()) == 1);
    CHECK(run("estimate --input " + (sim / "obs.csv").string() + " --design fr --pairs 1:7 --out " + est.string()) ==
          1);
    CHECK(run("simulate --n 0 --out " + sim.string()) == 1);
    CHECK(run("estimate --out " + est.string()) == 1);
}

TEST_CASE("thread count does not change outputs") {
    const auto d = scratch("threads");
    const auto cfg = d / "sweep.json";
    write_file(cfg, kSweep);
    REQUIRE(run("--threads 1 rates --config " + cfg.string() + " --out " + (d / "t1").string()) == 0);
    REQUIRE(run("--threads 8 rates --config " + cfg.string() + " --out " + (d / "t8").string()) == 0);
    for (const char* f : {"rows.csv", "rates.csv", "summary.json", "config_resolved.json"}) {
        CHECK(fs::exists(d / "t1" / f));
        CHECK(slurp(d / "t1" / f) == slurp(d / "t8" / f));
    }
    CHECK(fs::exists(d / "t1" / "timing.csv"));

    REQUIRE(run("--threads 1 simulate --n 200 --p 5 --seed 9 --out " + (d / "s1").string()) == 0);
    REQUIRE(run("--threads 8 simulate --n 200 --p 5 --seed 9 --out " + (d / "s8").string()) == 0);
    CHECK(slurp(d / "s1" / "obs.csv") == slurp(d / "s8" / "obs.csv"));

    REQUIRE(run("compare --config " + cfg.string() + " --out " + (d / "cmp").string()) == 0);
    CHECK(fs::exists(d / "cmp" / "compare.csv"));
    CHECK(fs::exists(d / "cmp" / "compare.json"));

    CHECK(run("--threads 0 simulate --out " + (d / "s0").string()) == 1);
    const std::string env = "HDFDA_THREADS=abc " + kCli + " simulate --n 10 --out " + (d / "env").string() +
                            " >/dev/null 2>&1";
    const int rc = std::system(env.c_str());
    CHECK(WEXITSTATUS(rc) == 1);
}

TEST_CASE("bad sweep configs") {
    const auto d = scratch("bad");
    write_file(d / "bad.json", R"({"tuples": [{"n": 10, "p": 2}], "unknown": true})");
    CHECK(run("rates --config " + (d / "bad.json").string() + " --out " + (d / "o").string()) == 1);
    write_file(d / "broken.json", "{");
    CHECK(run("rates --config " + (d / "broken.json").string() + " --out " + (d / "o").string()) == 1);
    CHECK(run("rates --config " + (d / "absent.json").string() + " --out " + (d / "o").string()) == 2);
}
