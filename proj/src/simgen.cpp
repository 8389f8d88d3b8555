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

#include "hdfda/simgen.hpp"

#include "hdfda/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace hdfda {

using nlohmann::json;

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x6A09E667F3BCC909ULL;
    for (const auto v : parts) h = mix64(h ^ mix64(v));
    return h;
}

double MeanFamily::operator()(std::size_t j, std::size_t p, double t) const noexcept {
    switch (kind) {
    case Kind::Sine:
        return amplitude * std::sin(2.0 * std::numbers::pi * t + static_cast<double>(j + 1) / static_cast<double>(p));
    case Kind::Affine: return intercept + slope * t;
    case Kind::Zero: return 0.0;
    }
    return 0.0;
}

double basis_function(std::size_t m, double t) noexcept {
    if (m == 0) return 1.0;
    return std::numbers::sqrt2 * std::cos(static_cast<double>(m) * std::numbers::pi * t);
}

std::vector<double> ProcessSpec::resolved_variances() const {
    if (!score_variances.empty()) {
        if (score_variances.size() != basis_count)
            throw ValidationError("score_variances must have basis_count = " + std::to_string(basis_count) +
                                  " entries");
        return score_variances;
    }
    std::vector<double> out(basis_count);
    for (std::size_t m = 0; m < basis_count; ++m) out[m] = std::pow(static_cast<double>(m + 1), -score_decay);
    return out;
}

std::vector<double> ProcessSpec::resolved_loadings(std::size_t p) const {
    const std::size_t M = basis_count;
    std::vector<double> a(p * M);
    if (!loadings.empty()) {
        if (loadings.size() != p) throw ValidationError("loadings must have one row per component");
        for (std::size_t j = 0; j < p; ++j) {
            if (loadings[j].size() != M) throw ValidationError("each loadings row must have basis_count entries");
            for (std::size_t m = 0; m < M; ++m) {
                if (!std::isfinite(loadings[j][m])) throw ValidationError("loadings must be finite");
                a[j * M + m] = loadings[j][m];
            }
        }
        return a;
    }
    for (std::size_t j = 0; j < p; ++j) {
        const std::size_t home = j % M;
        for (std::size_t m = 0; m < M; ++m) {
            const std::size_t d = home > m ? home - m : m - home;
            a[j * M + m] = std::pow(loading_rho, static_cast<double>(std::min(d, M - d)));
        }
    }
    return a;
}

std::size_t CountLaw::draw(std::size_t subject_index, std::mt19937_64& rng) const {
    switch (kind) {
    case Kind::Fixed: return fixed;
    case Kind::UniformInt: return std::uniform_int_distribution<std::size_t>(min, max)(rng);
    case Kind::HeavySubject: return subject_index == subject ? big : base;
    }
    return fixed;
}

std::size_t CountLaw::minimum() const noexcept {
    switch (kind) {
    case Kind::Fixed: return fixed;
    case Kind::UniformInt: return min;
    case Kind::HeavySubject: return std::min(base, big);
    }
    return fixed;
}

double TimeDensity::draw(std::mt19937_64& rng) const {
    if (kind == Kind::Uniform) return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double x = std::gamma_distribution<double>(alpha, 1.0)(rng);
    const double y = std::gamma_distribution<double>(beta, 1.0)(rng);
    return x + y > 0.0 ? x / (x + y) : 0.5;
}

void SimulationConfig::validate() const {
    if (n < 1 || p < 1) throw ValidationError("simulation requires n >= 1 and p >= 1");
    if (process.basis_count < 1) throw ValidationError("basis_count must be at least 1");
    for (const double v : process.resolved_variances())
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("score variances must be finite and >= 0");
    if (!std::isfinite(process.loading_rho)) throw ValidationError("loading_rho must be finite");
    (void)process.resolved_loadings(p);
    if (process.mean.kind == MeanFamily::Kind::Sine && !std::isfinite(process.mean.amplitude))
        throw ValidationError("mean amplitude must be finite");
    const auto& c = sampling.count_law;
    switch (c.kind) {
    case CountLaw::Kind::Fixed:
        if (c.fixed < 1) throw ValidationError("fixed count must be at least 1");
        break;
    case CountLaw::Kind::UniformInt:
        if (c.min < 1 || c.max < c.min) throw ValidationError("uniform count law needs 1 <= min <= max");
        break;
    case CountLaw::Kind::HeavySubject:
        if (c.base < 1 || c.big < 1) throw ValidationError("heavy-subject counts must be at least 1");
        if (c.subject >= n) throw ValidationError("heavy subject index exceeds n");
        break;
    }
    if (sampling.time_density.kind == TimeDensity::Kind::Beta &&
        !(sampling.time_density.alpha > 0.0 && sampling.time_density.beta > 0.0))
        throw ValidationError("beta time density needs alpha, beta > 0");
    if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma)) throw ValidationError("noise sigma must be >= 0");
    const double rho = noise.sr_cross_corr;
    if (!std::isfinite(rho) || rho < -1.0 || rho > 1.0) throw ValidationError("sr_cross_corr must lie in [-1, 1]");
    if (rho != 0.0 && sampling.design == DesignKind::FR)
        throw ValidationError("sr_cross_corr is only meaningful under the SR design");
    if (p > 1 && rho < -1.0 / static_cast<double>(p - 1))
        throw ValidationError("sr_cross_corr below -1/(p-1) gives an indefinite error covariance");
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

MeanFamily mean_from_json(const json& j) {
    check_keys(j, {"family", "amplitude", "intercept", "slope"}, "process.mean");
    MeanFamily m;
    const auto family = get_or<std::string>(j, "family", "sine", "process.mean");
    if (family == "sine")
        m.kind = MeanFamily::Kind::Sine;
    else if (family == "affine")
        m.kind = MeanFamily::Kind::Affine;
    else if (family == "zero")
        m.kind = MeanFamily::Kind::Zero;
    else
        throw ValidationError("unknown mean family '" + family + "' (expected sine, affine or zero)");
    m.amplitude = get_or(j, "amplitude", 1.0, "process.mean");
    m.intercept = get_or(j, "intercept", 0.0, "process.mean");
    m.slope = get_or(j, "slope", 0.0, "process.mean");
    return m;
}

json mean_to_json(const MeanFamily& m) {
    switch (m.kind) {
    case MeanFamily::Kind::Sine: return {{"family", "sine"}, {"amplitude", m.amplitude}};
    case MeanFamily::Kind::Affine: return {{"family", "affine"}, {"intercept", m.intercept}, {"slope", m.slope}};
    case MeanFamily::Kind::Zero: return {{"family", "zero"}};
    }
    return {};
}

} // namespace

ProcessSpec process_from_json(const json& j) {
    check_keys(j, {"basis_count", "score_variances", "score_decay", "loading_rho", "loadings", "mean"}, "process");
    ProcessSpec s;
    s.basis_count = get_count(j, "basis_count", s.basis_count, "process");
    s.score_variances = get_or(j, "score_variances", std::vector<double>{}, "process");
    s.score_decay = get_or(j, "score_decay", s.score_decay, "process");
    s.loading_rho = get_or(j, "loading_rho", s.loading_rho, "process");
    s.loadings = get_or(j, "loadings", std::vector<std::vector<double>>{}, "process");
    if (j.contains("mean")) s.mean = mean_from_json(j.at("mean"));
    if (!j.contains("basis_count") && !s.score_variances.empty()) s.basis_count = s.score_variances.size();
    return s;
}

json to_json(const ProcessSpec& s) {
    json out = {{"basis_count", s.basis_count},
                {"score_variances", s.resolved_variances()},
                {"loading_rho", s.loading_rho},
                {"mean", mean_to_json(s.mean)}};
    if (!s.loadings.empty()) out["loadings"] = s.loadings;
    return out;
}

CountLaw count_law_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("count_law must be a JSON object");
    const auto type = get_or<std::string>(j, "type", "fixed", "count_law");
    CountLaw c;
    if (type == "fixed") {
        check_keys(j, {"type", "n"}, "count_law");
        c.kind = CountLaw::Kind::Fixed;
        c.fixed = get_count(j, "n", c.fixed, "count_law");
    } else if (type == "uniform") {
        check_keys(j, {"type", "min", "max"}, "count_law");
        c.kind = CountLaw::Kind::UniformInt;
        c.min = get_count(j, "min", 1, "count_law");
        c.max = get_count(j, "max", c.min, "count_law");
    } else if (type == "heavy_subject") {
        check_keys(j, {"type", "base", "big", "subject"}, "count_law");
        c.kind = CountLaw::Kind::HeavySubject;
        c.base = get_count(j, "base", c.base, "count_law");
        c.big = get_count(j, "big", c.big, "count_law");
        const std::size_t subject = get_count(j, "subject", 1, "count_law");
        if (subject < 1) throw ValidationError("heavy subject index is 1-based");
        c.subject = subject - 1;
    } else {
        throw ValidationError("unknown count law '" + type + "' (expected fixed, uniform or heavy_subject)");
    }
    return c;
}

json to_json(const CountLaw& c) {
    switch (c.kind) {
    case CountLaw::Kind::Fixed: return {{"type", "fixed"}, {"n", c.fixed}};
    case CountLaw::Kind::UniformInt: return {{"type", "uniform"}, {"min", c.min}, {"max", c.max}};
    case CountLaw::Kind::HeavySubject:
        return {{"type", "heavy_subject"}, {"base", c.base}, {"big", c.big}, {"subject", c.subject + 1}};
    }
    return {};
}

TimeDensity time_density_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("time_density must be a JSON object");
    const auto type = get_or<std::string>(j, "type", "uniform", "time_density");
    TimeDensity t;
    if (type == "uniform") {
        check_keys(j, {"type"}, "time_density");
    } else if (type == "beta") {
        check_keys(j, {"type", "alpha", "beta"}, "time_density");
        t.kind = TimeDensity::Kind::Beta;
        t.alpha = get_or(j, "alpha", 1.0, "time_density");
        t.beta = get_or(j, "beta", 1.0, "time_density");
    } else {
        throw ValidationError("unknown time density '" + type + "' (expected uniform or beta)");
    }
    return t;
}

json to_json(const TimeDensity& t) {
    if (t.kind == TimeDensity::Kind::Uniform) return {{"type", "uniform"}};
    return {{"type", "beta"}, {"alpha", t.alpha}, {"beta", t.beta}};
}

NoiseSpec noise_from_json(const json& j) {
    check_keys(j, {"sigma", "sr_cross_corr"}, "noise");
    NoiseSpec s;
    s.sigma = get_or(j, "sigma", s.sigma, "noise");
    s.sr_cross_corr = get_or(j, "sr_cross_corr", s.sr_cross_corr, "noise");
    return s;
}

json to_json(const NoiseSpec& s) { return {{"sigma", s.sigma}, {"sr_cross_corr", s.sr_cross_corr}}; }

SimulationConfig simulation_from_json(const json& j) {
    check_keys(j, {"process", "sampling", "noise", "n", "p", "seed"}, "simulation config");
    SimulationConfig c;
    if (j.contains("process")) c.process = process_from_json(j.at("process"));
    if (j.contains("sampling")) {
        const auto& s = j.at("sampling");
        check_keys(s, {"design", "count_law", "time_density"}, "sampling");
        c.sampling.design = parse_design(get_or<std::string>(s, "design", "fr", "sampling"));
        if (s.contains("count_law")) c.sampling.count_law = count_law_from_json(s.at("count_law"));
        if (s.contains("time_density")) c.sampling.time_density = time_density_from_json(s.at("time_density"));
    }
    if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
    c.n = get_count(j, "n", c.n, "simulation config");
    c.p = get_count(j, "p", c.p, "simulation config");
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed, "simulation config");
    c.validate();
    return c;
}

json to_json(const SimulationConfig& c) {
    return {{"process", to_json(c.process)},
            {"sampling",
             {{"design", std::string(to_string(c.sampling.design))},
              {"count_law", to_json(c.sampling.count_law)},
              {"time_density", to_json(c.sampling.time_density)}}},
            {"noise", to_json(c.noise)},
            {"n", c.n},
            {"p", c.p},
            {"seed", c.seed}};
}

// ---------------------------------------------------------------------------
// Truth
// ---------------------------------------------------------------------------

TruthEvaluator::TruthEvaluator(const ProcessSpec& process, std::size_t p)
    : p_(p), mean_(process.mean), lambda_(process.resolved_variances()), a_(process.resolved_loadings(p)) {
    if (p == 0) throw ValidationError("truth needs at least one component");
}

double TruthEvaluator::mean(std::size_t j, double t) const {
    if (j >= p_) throw ValidationError("component index out of range");
    return mean_(j, p_, t);
}

double TruthEvaluator::cov(std::size_t j, std::size_t k, double s, double t) const {
    if (j >= p_ || k >= p_) throw ValidationError("component index out of range");
    const std::size_t M = lambda_.size();
    double g = 0.0;
    for (std::size_t m = 0; m < M; ++m)
        g += a_[j * M + m] * a_[k * M + m] * lambda_[m] * basis_function(m, s) * basis_function(m, t);
    return g;
}

json TruthEvaluator::to_json() const {
    const std::size_t M = lambda_.size();
    std::vector<std::vector<double>> rows(p_, std::vector<double>(M));
    for (std::size_t j = 0; j < p_; ++j)
        for (std::size_t m = 0; m < M; ++m) rows[j][m] = a_[j * M + m];
    return {{"components", p_},
            {"domain", {0.0, 1.0}},
            {"basis", "cosine"},
            {"mean", mean_to_json(mean_)},
            {"score_variances", lambda_},
            {"loadings", rows}};
}

TruthEvaluator TruthEvaluator::from_json(const json& j) {
    check_keys(j, {"components", "domain", "basis", "mean", "score_variances", "loadings"}, "truth");
    if (get_or<std::string>(j, "basis", "cosine", "truth") != "cosine")
        throw ValidationError("truth basis must be 'cosine'");
    if (!j.contains("components") || !j.contains("score_variances") || !j.contains("loadings"))
        throw ValidationError("truth JSON needs components, score_variances and loadings");
    ProcessSpec s;
    s.score_variances = get_or(j, "score_variances", std::vector<double>{}, "truth");
    s.basis_count = s.score_variances.size();
    s.loadings = get_or(j, "loadings", std::vector<std::vector<double>>{}, "truth");
    if (j.contains("mean")) s.mean = mean_from_json(j.at("mean"));
    return TruthEvaluator(s, get_count(j, "components", 0, "truth"));
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

ObservationSet simulate(const SimulationConfig& config) {
    config.validate();
    const std::size_t n = config.n, p = config.p, M = config.process.basis_count;
    const auto lambda = config.process.resolved_variances();
    const auto a = config.process.resolved_loadings(p);
    const auto& mean = config.process.mean;
    const auto& law = config.sampling.count_law;
    const auto& density = config.sampling.time_density;
    const bool sr = config.sampling.design == DesignKind::SR;
    const double sigma = config.noise.sigma;
    const double rho = config.noise.sr_cross_corr;
    const double pd = static_cast<double>(p);
    const double c_dev = std::sqrt(1.0 - rho);
    const double c_common = std::sqrt(std::max(0.0, (1.0 - rho + pd * rho) / pd));

    std::vector<std::vector<Observation>> per_subject(n);
    std::vector<std::vector<std::size_t>> per_counts(n);

    parallel_for(n, [&](std::size_t i) {
        std::mt19937_64 rng(mix_seed({config.seed, i}));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> xi(M);
        for (std::size_t m = 0; m < M; ++m) xi[m] = std::sqrt(lambda[m]) * normal(rng);

        // Random part of X_j(t) is sum_m a_jm xi_m phi_m(t).
        std::vector<double> phi(M);
        const auto fill_phi = [&](double t) {
            for (std::size_t m = 0; m < M; ++m) phi[m] = xi[m] * basis_function(m, t);
        };
        const auto curve = [&](std::size_t j, double t) {
            double x = mean(j, p, t);
            for (std::size_t m = 0; m < M; ++m) x += a[j * M + m] * phi[m];
            return x;
        };

        auto& out = per_subject[i];
        auto& counts = per_counts[i];
        counts.assign(p, 0);
        if (sr) {
            const std::size_t N = law.draw(i, rng);
            std::vector<double> times(N);
            for (auto& t : times) t = density.draw(rng);
            std::sort(times.begin(), times.end());
            std::vector<double> eps(p * N, 0.0), e(p);
            for (std::size_t l = 0; l < N; ++l) {
                double ebar = 0.0;
                for (std::size_t j = 0; j < p; ++j) {
                    e[j] = normal(rng);
                    ebar += e[j];
                }
                ebar /= pd;
                const double g = std::sqrt(pd) * ebar;
                for (std::size_t j = 0; j < p; ++j)
                    eps[j * N + l] = rho == 0.0 ? sigma * e[j] : sigma * (c_dev * (e[j] - ebar) + c_common * g);
            }
            out.resize(p * N);
            for (std::size_t l = 0; l < N; ++l) {
                fill_phi(times[l]);
                for (std::size_t j = 0; j < p; ++j) out[j * N + l] = {times[l], curve(j, times[l]) + eps[j * N + l]};
            }
            counts.assign(p, N);
        } else {
            for (std::size_t j = 0; j < p; ++j) {
                const std::size_t N = law.draw(i, rng);
                std::vector<double> times(N);
                for (auto& t : times) t = density.draw(rng);
                std::sort(times.begin(), times.end());
                for (std::size_t l = 0; l < N; ++l) {
                    fill_phi(times[l]);
                    out.push_back({times[l], curve(j, times[l]) + sigma * normal(rng)});
                }
                counts[j] = N;
            }
        }
    });

    std::vector<std::size_t> offsets;
    offsets.reserve(n * p + 1);
    offsets.push_back(0);
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            total += per_counts[i][j];
            offsets.push_back(total);
        }
    std::vector<Observation> flat;
    flat.reserve(total);
    for (auto& s : per_subject) {
        flat.insert(flat.end(), s.begin(), s.end());
        std::vector<Observation>().swap(s);
    }
    return validate_observations(ObservationSet::from_layout(n, p, config.sampling.design,
                                                             std::vector<Interval>(p, Interval{0.0, 1.0}),
                                                             std::move(offsets), std::move(flat)));
}

} // namespace hdfda
