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

#include "hdfda/core.hpp"
#include "hdfda/csv.hpp"

#include <doctest.h>

#include <functional>
#include <sstream>

using namespace hdfda;

namespace {

double trapezoid(const std::function<double(double)>& f, double lo, double hi, std::size_t points) {
    const double h = (hi - lo) / static_cast<double>(points - 1);
    double s = 0.5 * (f(lo) + f(hi));
    for (std::size_t a = 1; a + 1 < points; ++a) s += f(lo + static_cast<double>(a) * h);
    return s * h;
}

ObservationSet two_subjects_fr() {
    ObservationSet::Builder b(2, 2, DesignKind::FR, Interval{0.0, 1.0});
    b.add(0, 0, {0.1, 1.0});
    b.add(0, 0, {0.7, 2.0});
    b.add(0, 1, {0.3, 3.0});
    b.add(1, 0, {0.2, 4.0});
    b.add(1, 1, {0.4, 5.0});
    b.add(1, 1, {0.9, 6.0});
    return std::move(b).build();
}

} // namespace

TEST_SUITE("core") {

TEST_CASE("epanechnikov values") {
    const auto k = KernelSpec::epanechnikov();
    CHECK(kernel_eval(k, 0.0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(kernel_eval(k, 1.2) == 0.0);
    CHECK(kernel_eval(k, 0.5) == doctest::Approx(0.5625).epsilon(1e-15));
    CHECK(scaled_kernel(k, 0.5, 0.0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(scaled_kernel(k, 0.2, 0.1) == doctest::Approx(2.8125).epsilon(1e-14));
    CHECK_THROWS_AS(scaled_kernel(k, 0.0, 0.1), ValidationError);
    CHECK_THROWS_AS(scaled_kernel(k, -1.0, 0.1), ValidationError);
}

TEST_CASE("kernels are symmetric densities on [-1, 1]") {
    for (const auto& k : {KernelSpec::epanechnikov(), KernelSpec::biweight(), KernelSpec::truncated_gaussian(0.5),
                          KernelSpec::truncated_gaussian(0.2)}) {
        CAPTURE(k.name());
        CHECK(trapezoid([&](double u) { return k(u); }, -1.0, 1.0, 10001) == doctest::Approx(1.0).epsilon(1e-6));
        for (const double b : {0.05, 0.2, 1.0})
            CHECK(trapezoid([&](double x) { return scaled_kernel(k, b, x); }, -b, b, 10001) ==
                  doctest::Approx(1.0).epsilon(1e-6));
        for (const double u : {0.0, 0.1, 0.33, 0.9, 1.0, 1.5}) {
            CHECK(k(u) == k(-u));
            CHECK(k(u) >= 0.0);
            CHECK(scaled_kernel(k, 1.0, u) == k(u));
        }
        CHECK(k(1.0001) == 0.0);
    }
}

TEST_CASE("kernel names parse back") {
    for (const auto& k : {KernelSpec::epanechnikov(), KernelSpec::biweight(), KernelSpec::truncated_gaussian(0.3)})
        CHECK(KernelSpec::parse(k.name()) == k);
    CHECK_THROWS_AS(KernelSpec::parse("cosine"), ValidationError);
    CHECK_THROWS_AS(KernelSpec::truncated_gaussian(0.0), ValidationError);
}

TEST_CASE("uniform grid") {
    const auto g = Grid::uniform({-1.0, 2.0}, 7);
    REQUIRE(g.size() == 7);
    CHECK(g.lo() == -1.0);
    CHECK(g.hi() == 2.0);
    for (std::size_t a = 1; a < g.size(); ++a) CHECK(g[a] - g[a - 1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(Grid::uniform({0.0, 1.0}, 1), ValidationError);
    CHECK_THROWS_AS(Grid::uniform({1.0, 1.0}, 5), ValidationError);

    // The padded window covers every point within r.
    const auto [first, last] = g.window(0.6, 0.5);
    for (std::size_t a = 0; a < g.size(); ++a)
        if (std::fabs(g[a] - 0.6) <= 0.5) CHECK((a >= first && a < last));
}

TEST_CASE("validation sorts and is idempotent") {
    ObservationSet::Builder b(1, 1, DesignKind::FR, Interval{0.0, 1.0});
    b.add(0, 0, {0.8, 1.0});
    b.add(0, 0, {0.2, 2.0});
    const auto v = validate_observations(std::move(b).build());
    CHECK(v.validated());
    REQUIRE(v.series(0, 0).size() == 2);
    CHECK(v.series(0, 0)[0].time == 0.2);
    CHECK(v.series(0, 0)[1].value == 1.0);
    CHECK(validate_observations(v) == v);

    const auto sorted = two_subjects_fr();
    const auto checked = validate_observations(sorted);
    CHECK(checked.counts()(1, 1) == 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            const auto a = sorted.series(i, j), c = checked.series(i, j);
            CHECK(std::equal(a.begin(), a.end(), c.begin(), c.end()));
        }
}

TEST_CASE("validation errors") {
    SUBCASE("SR times must agree across components") {
        ObservationSet::Builder b(1, 2, DesignKind::SR, Interval{0.0, 1.0});
        b.add(0, 0, {0.1, 1.0});
        b.add(0, 0, {0.5, 1.0});
        b.add(0, 1, {0.1, 1.0});
        b.add(0, 1, {0.6, 1.0});
        CHECK_THROWS_AS(validate_observations(std::move(b).build()), ValidationError);
    }
    SUBCASE("time outside the domain") {
        ObservationSet::Builder b(1, 1, DesignKind::FR, Interval{0.0, 1.0});
        b.add(0, 0, {1.5, 1.0});
        CHECK_THROWS_WITH_AS(validate_observations(std::move(b).build()), doctest::Contains("outside the domain"),
                             ValidationError);
    }
    SUBCASE("empty") {
        ObservationSet::Builder b(2, 1, DesignKind::FR, Interval{0.0, 1.0});
        CHECK_THROWS_AS(validate_observations(std::move(b).build()), ValidationError);
    }
    SUBCASE("non-finite value") {
        ObservationSet::Builder b(1, 1, DesignKind::FR, Interval{0.0, 1.0});
        b.add(0, 0, {0.5, std::numeric_limits<double>::infinity()});
        CHECK_THROWS_AS(validate_observations(std::move(b).build()), ValidationError);
    }
}

TEST_CASE("bulk layout checks its offsets") {
    std::vector<Observation> obs{{0.1, 1.0}, {0.2, 2.0}};
    CHECK_NOTHROW(ObservationSet::from_layout(1, 2, DesignKind::FR, {{0, 1}, {0, 1}}, {0, 1, 2}, obs));
    CHECK_THROWS_AS(ObservationSet::from_layout(1, 2, DesignKind::FR, {{0, 1}, {0, 1}}, {0, 2, 1}, obs),
                    ValidationError);
    CHECK_THROWS_AS(ObservationSet::from_layout(1, 2, DesignKind::FR, {{0, 1}}, {0, 1, 2}, obs), ValidationError);
}

TEST_CASE("observation csv round trip") {
    const auto set = validate_observations(two_subjects_fr());
    std::ostringstream os;
    write_observation_csv(os, set);
    const std::string text = os.str();
    CHECK(text.rfind("subject,component,time,value\r\n", 0) == 0);
    std::istringstream is(text);
    CHECK(read_observation_csv(is, DesignKind::FR, {{0.0, 1.0}}) == set);

    // LF endings and shuffled rows are accepted.
    std::istringstream lf("subject,component,time,value\n2,2,0.9,6\n1,1,0.7,2\n1,1,0.1,1\n1,2,0.3,3\n2,1,0.2,4\n"
                          "2,2,0.4,5\n");
    CHECK(read_observation_csv(lf, DesignKind::FR, {{0.0, 1.0}}) == set);
}

TEST_CASE("observation csv errors") {
    const auto read = [](const std::string& s) {
        std::istringstream is(s);
        return read_observation_csv(is, DesignKind::FR, {{0.0, 1.0}});
    };
    CHECK_THROWS_AS(read("1,1,0.5,1\n"), ValidationError);
    CHECK_THROWS_AS(read("subject,component,time,value\n0,1,0.5,1\n"), ValidationError);
    CHECK_THROWS_AS(read("subject,component,time,value\n1,1,abc,1\n"), ValidationError);
    CHECK_THROWS_AS(read("subject,component,time,value\n1,1,0.5\n"), ValidationError);
    CHECK_THROWS_AS(read_observation_csv(std::filesystem::path("/nonexistent/obs.csv"), DesignKind::FR, {{0, 1}}),
                    IoError);
}

TEST_CASE("csv quoting and number formatting") {
    std::ostringstream os;
    CsvWriter w(os);
    w.field("a,b").field("say \"hi\"").field(0.1).field(std::size_t{7});
    w.end_row();
    CHECK(os.str() == "\"a,b\",\"say \"\"hi\"\"\",0.1,7\r\n");
    const auto f = split_csv_record("\"a,b\",\"say \"\"hi\"\"\",0.1");
    REQUIRE(f.size() == 3);
    CHECK(f[0] == "a,b");
    CHECK(f[1] == "say \"hi\"");
    CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}

} // TEST_SUITE
