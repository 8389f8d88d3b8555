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

#ifndef HDFDA_TEST_SUPPORT_HPP
#define HDFDA_TEST_SUPPORT_HPP

#include "hdfda/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace hdfda::test {

inline double rel_diff(double a, double b) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1.0});
}

/// Random ragged FR or SR set on [0, 1]; value(i, j, t) supplies Y.
inline ObservationSet random_set(std::mt19937_64& rng, std::size_t n, std::size_t p, DesignKind design,
                                 std::size_t min_count, std::size_t max_count,
                                 const std::function<double(std::size_t, std::size_t, double)>& value) {
    std::uniform_int_distribution<std::size_t> count(min_count, max_count);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ObservationSet::Builder b(n, p, design, Interval{0.0, 1.0});
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> shared;
        if (design == DesignKind::SR) {
            const std::size_t c = count(rng);
            for (std::size_t l = 0; l < c; ++l) shared.push_back(unif(rng));
        }
        for (std::size_t j = 0; j < p; ++j) {
            std::vector<double> times = shared;
            if (design == DesignKind::FR) {
                const std::size_t c = count(rng);
                for (std::size_t l = 0; l < c; ++l) times.push_back(unif(rng));
            }
            for (const double t : times) b.add(i, j, {t, value(i, j, t)});
        }
    }
    return validate_observations(std::move(b).build());
}

/// Intercept of the weighted least-squares line through (T - t, Y) with
/// weights omega, via Eigen's normal-equation solve.
inline double wls_line_intercept(const std::vector<double>& x, const std::vector<double>& y,
                                 const std::vector<double>& omega) {
    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    Eigen::Vector2d r = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Eigen::Vector2d row(1.0, x[i]);
        A += omega[i] * row * row.transpose();
        r += omega[i] * y[i] * row;
    }
    return A.fullPivLu().solve(r)(0);
}

/// Intercept of the weighted least-squares plane through (S - s, T - t, Z).
inline double wls_plane_intercept(const std::vector<double>& x1, const std::vector<double>& x2,
                                  const std::vector<double>& z, const std::vector<double>& omega) {
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Vector3d r = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < z.size(); ++i) {
        const Eigen::Vector3d row(1.0, x1[i], x2[i]);
        A += omega[i] * row * row.transpose();
        r += omega[i] * z[i] * row;
    }
    return A.fullPivLu().solve(r)(0);
}

} // namespace hdfda::test

#endif // HDFDA_TEST_SUPPORT_HPP
