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

#include "hdfda/csv.hpp"
#include "hdfda/parallel.hpp"
#include "hdfda/simgen.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace hdfda;

namespace {

SimulationConfig base_config(DesignKind design, std::size_t n, std::size_t p) {
    SimulationConfig c;
    c.sampling.design = design;
    c.n = n;
    c.p = p;
    c.seed = 99;
    return c;
}

std::string csv_bytes(const ObservationSet& obs) {
    std::ostringstream os;
    write_observation_csv(os, obs);
    return os.str();
}

/// Running mean and standard error of a scalar statistic.
struct Moments {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++count;
    }
    double mean() const { return sum / static_cast<double>(count); }
    double se() const {
        const double m = mean();
        return std::sqrt((sum_sq / static_cast<double>(count) - m * m) / static_cast<double>(count));
    }
};

} // namespace

TEST_SUITE("simgen") {

TEST_CASE("seed mixing") {
    CHECK(mix_seed({1, 2}) != mix_seed({2, 1}));
    CHECK(mix_seed({1, 2}) == mix_seed({1, 2}));
    CHECK(mix64(0) != 0);
}

TEST_CASE("noiseless zero-score draws reproduce the mean") {
    auto c = base_config(DesignKind::FR, 20, 3);
    c.process.basis_count = 3;
    c.process.score_variances = {0.0, 0.0, 0.0};
    c.process.mean.amplitude = 1.7;
    c.noise.sigma = 0.0;
    c.sampling.count_law.kind = CountLaw::Kind::UniformInt;
    c.sampling.count_law.min = 2;
    c.sampling.count_law.max = 7;
    const auto obs = simulate(c);
    CHECK(obs.validated());
    const TruthEvaluator truth(c.process, 3);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(obs.count(i, j) >= 2);
            CHECK(obs.count(i, j) <= 7);
            for (const auto& o : obs.series(i, j)) CHECK(o.value == truth.mean(j, o.time));
        }
}

TEST_CASE("flat single factor") {
    ProcessSpec s;
    s.basis_count = 1;
    s.score_variances = {1.0};
    s.loadings = {{1.0}, {1.0}};
    const TruthEvaluator t(s, 2);
    CHECK(t.cov(0, 1, 0.2, 0.9) == doctest::Approx(1.0));
    CHECK(t.cov(1, 1, 0.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("truth covariance is symmetric") {
    ProcessSpec s;
    const TruthEvaluator t(s, 4);
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t k = 0; k < 4; ++k)
            for (double a = 0.0; a <= 1.0; a += 0.25)
                for (double b = 0.0; b <= 1.0; b += 0.25) CHECK(t.cov(j, k, a, b) == doctest::Approx(t.cov(k, j, b, a)));
    // Positive semidefinite on a small grid.
    for (double a = 0.0; a <= 1.0; a += 0.1) CHECK(t.cov(0, 0, a, a) > 0.0);
}

TEST_CASE("SR draws share time points") {
    auto c = base_config(DesignKind::SR, 30, 4);
    c.sampling.count_law.kind = CountLaw::Kind::UniformInt;
    c.sampling.count_law.min = 1;
    c.sampling.count_law.max = 5;
    const auto obs = simulate(c);
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 1; j < 4; ++j) {
            REQUIRE(obs.count(i, j) == obs.count(i, 0));
            for (std::size_t l = 0; l < obs.count(i, 0); ++l) CHECK(obs.series(i, j)[l].time == obs.series(i, 0)[l].time);
        }
}

TEST_CASE("heavy-subject counts") {
    auto c = base_config(DesignKind::FR, 10, 2);
    c.sampling.count_law.kind = CountLaw::Kind::HeavySubject;
    c.sampling.count_law.base = 2;
    c.sampling.count_law.big = 50;
    c.sampling.count_law.subject = 3;
    const auto obs = simulate(c);
    for (std::size_t i = 0; i < 10; ++i) CHECK(obs.count(i, 1) == (i == 3 ? 50u : 2u));
}

TEST_CASE("output does not depend on the worker count") {
    auto c = base_config(DesignKind::FR, 200, 5);
    c.sampling.count_law.kind = CountLaw::Kind::UniformInt;
    c.sampling.count_law.max = 6;
    set_thread_limit(1);
    const auto a = csv_bytes(simulate(c));
    set_thread_limit(8);
    const auto b = csv_bytes(simulate(c));
    set_thread_limit(0);
    CHECK(a == b);
    c.seed = 100;
    CHECK(csv_bytes(simulate(c)) != a);
}

TEST_CASE("moments match the truth") {
    // e = Y - mu(T) at random times; each statistic minus its expectation
    // should average to zero within four standard errors.
    auto c = base_config(DesignKind::SR, 100000, 3);
    c.sampling.count_law = CountLaw::fixed_count(2);
    c.noise.sigma = 0.5;
    c.noise.sr_cross_corr = 0.3;
    const auto obs = simulate(c);
    const TruthEvaluator truth(c.process, 3);
    const double s2 = 0.25;
    Moments resid[3], var[3], cross_diff, cross_same;
    for (std::size_t i = 0; i < c.n; ++i) {
        for (std::size_t j = 0; j < 3; ++j)
            for (const auto& o : obs.series(i, j)) {
                const double e = o.value - truth.mean(j, o.time);
                resid[j].add(e);
                var[j].add(e * e - truth.cov(j, j, o.time, o.time) - s2);
            }
        const auto a = obs.series(i, 0), b = obs.series(i, 2);
        const auto e = [&](const Observation& o, std::size_t j) { return o.value - truth.mean(j, o.time); };
        cross_diff.add(e(a[0], 0) * e(b[1], 2) - truth.cov(0, 2, a[0].time, b[1].time));
        cross_same.add(e(a[1], 0) * e(b[1], 2) - truth.cov(0, 2, a[1].time, b[1].time) - 0.3 * s2);
    }
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::fabs(resid[j].mean()) <= 4.0 * resid[j].se());
        CHECK(std::fabs(var[j].mean()) <= 4.0 * var[j].se());
    }
    CHECK(std::fabs(cross_diff.mean()) <= 3.0 * cross_diff.se());
    CHECK(std::fabs(cross_same.mean()) <= 4.0 * cross_same.se());
}

TEST_CASE("FR errors are independent across components") {
    auto c = base_config(DesignKind::FR, 50000, 2);
    c.process.mean.kind = MeanFamily::Kind::Affine;
    c.process.mean.intercept = 1.0;
    c.process.mean.slope = -2.0;
    c.sampling.count_law = CountLaw::fixed_count(1);
    c.noise.sigma = 1.0;
    const auto obs = simulate(c);
    const TruthEvaluator truth(c.process, 2);
    Moments cross, var;
    for (std::size_t i = 0; i < c.n; ++i) {
        const auto& a = obs.series(i, 0)[0];
        const auto& b = obs.series(i, 1)[0];
        const double ea = a.value - truth.mean(0, a.time), eb = b.value - truth.mean(1, b.time);
        cross.add(ea * eb - truth.cov(0, 1, a.time, b.time));
        var.add(ea * ea - truth.cov(0, 0, a.time, a.time) - 1.0);
    }
    CHECK(std::fabs(cross.mean()) <= 3.0 * cross.se());
    CHECK(std::fabs(var.mean()) <= 4.0 * var.se());
}

TEST_CASE("config JSON") {
    const auto j = nlohmann::json::parse(R"({
        "n": 12, "p": 3, "seed": 5,
        "process": {"basis_count": 3, "score_decay": 1.5, "mean": {"family": "affine", "intercept": 1, "slope": 2}},
        "sampling": {"design": "sr", "count_law": {"type": "uniform", "min": 2, "max": 4},
                     "time_density": {"type": "beta", "alpha": 2, "beta": 3}},
        "noise": {"sigma": 0.1, "sr_cross_corr": 0.2}
    })");
    const auto c = simulation_from_json(j);
    CHECK(c.n == 12);
    CHECK(c.sampling.design == DesignKind::SR);
    CHECK(c.sampling.count_law.kind == CountLaw::Kind::UniformInt);
    CHECK(c.sampling.time_density.kind == TimeDensity::Kind::Beta);
    CHECK(c.process.resolved_variances().size() == 3);
    const auto back = simulation_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(csv_bytes(simulate(back)) == csv_bytes(simulate(c)));

    CHECK_THROWS_AS(simulation_from_json(nlohmann::json::parse(R"({"n": 3, "bogus": 1})")), ValidationError);
    CHECK_THROWS_AS(simulation_from_json(nlohmann::json::parse(R"({"noise": {"sigma": 1, "rho": 0}})")),
                    ValidationError);
    CHECK_THROWS_AS(simulation_from_json(nlohmann::json::parse(R"({"sampling": {"count_law": {"type": "poisson"}}})")),
                    ValidationError);
    auto bad = c;
    bad.sampling.design = DesignKind::FR;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("truth sidecar round trip") {
    ProcessSpec s;
    s.mean.amplitude = 0.5;
    const TruthEvaluator t(s, 3);
    const auto u = TruthEvaluator::from_json(t.to_json());
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(u.mean(j, 0.37) == t.mean(j, 0.37));
        for (std::size_t k = 0; k < 3; ++k) CHECK(u.cov(j, k, 0.1, 0.8) == t.cov(j, k, 0.1, 0.8));
    }
}

} // TEST_SUITE
