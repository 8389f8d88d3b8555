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

#ifndef HDFDA_SIMGEN_HPP
#define HDFDA_SIMGEN_HPP

#include "hdfda/core.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace hdfda {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;
/// Order-sensitive combination of several 64-bit values into one seed.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) noexcept;

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

struct MeanFamily {
    enum class Kind { Sine, Affine, Zero };
    Kind kind = Kind::Sine;
    double amplitude = 1.0; // Sine: amplitude * sin(2 pi t + j/p), j 1-based
    double intercept = 0.0; // Affine: intercept + slope * t
    double slope = 0.0;

    double operator()(std::size_t j, std::size_t p, double t) const noexcept;
};

/// X_j(t) = mu_j(t) + sum_m a_jm xi_m phi_m(t) on [0, 1], with phi_1 = 1,
/// phi_m(t) = sqrt(2) cos((m - 1) pi t) and xi_m ~ N(0, lambda_m).
struct ProcessSpec {
    std::size_t basis_count = 5;
    std::vector<double> score_variances; // empty: lambda_m = m^-score_decay
    double score_decay = 2.0;
    double loading_rho = 0.5;
    std::vector<std::vector<double>> loadings; // empty: banded default; else p rows of basis_count
    MeanFamily mean;

    std::vector<double> resolved_variances() const;
    /// p x M loading matrix, row-major.
    std::vector<double> resolved_loadings(std::size_t p) const;
};

double basis_function(std::size_t m, double t) noexcept; // m 0-based

struct CountLaw {
    enum class Kind { Fixed, UniformInt, HeavySubject };
    Kind kind = Kind::Fixed;
    std::size_t fixed = 2;                    // Fixed
    std::size_t min = 1, max = 1;             // UniformInt, inclusive
    std::size_t base = 2, big = 200, subject = 0; // HeavySubject (subject 0-based)

    static CountLaw fixed_count(std::size_t n) {
        CountLaw c;
        c.fixed = n;
        return c;
    }
    std::size_t draw(std::size_t subject_index, std::mt19937_64& rng) const;
    std::size_t minimum() const noexcept;
};

struct TimeDensity {
    enum class Kind { Uniform, Beta };
    Kind kind = Kind::Uniform;
    double alpha = 1.0, beta = 1.0;

    double draw(std::mt19937_64& rng) const;
};

struct SamplingSpec {
    DesignKind design = DesignKind::FR;
    CountLaw count_law;
    TimeDensity time_density;
};

struct NoiseSpec {
    double sigma = 0.5;
    double sr_cross_corr = 0.0;
};

struct SimulationConfig {
    ProcessSpec process;
    SamplingSpec sampling;
    NoiseSpec noise;
    std::size_t n = 100;
    std::size_t p = 10;
    std::uint64_t seed = 1;

    /// Throws ValidationError for inconsistent combinations.
    void validate() const;
};

// JSON (de)serialization. Unknown keys are rejected; missing keys take defaults.
ProcessSpec process_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProcessSpec& s);
CountLaw count_law_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CountLaw& c);
TimeDensity time_density_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TimeDensity& t);
NoiseSpec noise_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NoiseSpec& s);
SimulationConfig simulation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimulationConfig& c);

// ---------------------------------------------------------------------------
// Truth
// ---------------------------------------------------------------------------

class TruthEvaluator {
public:
    TruthEvaluator(const ProcessSpec& process, std::size_t p);

    std::size_t components() const noexcept { return p_; }
    std::size_t basis_count() const noexcept { return lambda_.size(); }
    double mean(std::size_t j, double t) const;
    double cov(std::size_t j, std::size_t k, double s, double t) const;

    /// Sidecar with everything needed to rebuild the evaluator.
    nlohmann::json to_json() const;
    static TruthEvaluator from_json(const nlohmann::json& j);

private:
    std::size_t p_;
    MeanFamily mean_;
    std::vector<double> lambda_;
    std::vector<double> a_; // p x M
};

/// Draws one dataset; output depends only on the config (not on the thread count).
ObservationSet simulate(const SimulationConfig& config);

} // namespace hdfda

#endif // HDFDA_SIMGEN_HPP
