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

#ifndef HDFDA_CORE_HPP
#define HDFDA_CORE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hdfda {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrorKind { Validation = 1, Io = 2, Internal = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

// ---------------------------------------------------------------------------
// Designs, domains, kernels
// ---------------------------------------------------------------------------

/// Observation-time design: fully random (independent times per component)
/// or simultaneous random (all components of a subject share their times).
enum class DesignKind { FR, SR };

std::string_view to_string(DesignKind d);
DesignKind parse_design(std::string_view s);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const noexcept { return hi - lo; }
    bool contains(double t) const noexcept { return t >= lo && t <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Symmetric probability density supported on [-1, 1].
class KernelSpec {
public:
    enum class Kind { Epanechnikov, Biweight, TruncatedGaussian };

    static KernelSpec epanechnikov() { return KernelSpec(Kind::Epanechnikov, 0.0); }
    static KernelSpec biweight() { return KernelSpec(Kind::Biweight, 0.0); }
    /// Gaussian with standard deviation `scale`, truncated to [-1, 1] and
    /// renormalized to unit mass there.
    static KernelSpec truncated_gaussian(double scale);

    /// Parses "epanechnikov", "biweight", or "gaussian[:scale]".
    static KernelSpec parse(std::string_view s);

    Kind kind() const noexcept { return kind_; }
    double scale() const noexcept { return scale_; }
    std::string name() const;

    double operator()(double u) const noexcept {
        if (!(std::fabs(u) <= 1.0)) return 0.0;
        switch (kind_) {
        case Kind::Epanechnikov: return 0.75 * (1.0 - u * u);
        case Kind::Biweight: {
            const double a = 1.0 - u * u;
            return 0.9375 * a * a;
        }
        case Kind::TruncatedGaussian: {
            const double z = u / scale_;
            return norm_ * std::exp(-0.5 * z * z);
        }
        }
        return 0.0;
    }

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;

private:
    KernelSpec(Kind kind, double scale);

    Kind kind_;
    double scale_;
    double norm_;
};

inline double kernel_eval(const KernelSpec& spec, double u) noexcept { return spec(u); }

/// K_b(x) = K(x / b) / b. Throws ValidationError for b <= 0.
double scaled_kernel(const KernelSpec& spec, double b, double x);

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

/// Uniform evaluation mesh spanning a closed interval, endpoints included.
class Grid {
public:
    Grid() = default;
    static Grid uniform(Interval domain, std::size_t count);

    std::span<const double> points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    double operator[](std::size_t a) const noexcept { return points_[a]; }
    double lo() const noexcept { return points_.front(); }
    double hi() const noexcept { return points_.back(); }
    double spacing() const noexcept { return spacing_; }
    Interval domain() const noexcept { return {lo(), hi()}; }

    /// Indices [first, last) of grid points within [x - r, x + r], padded by
    /// one point on each side so that callers can apply an exact predicate.
    std::pair<std::size_t, std::size_t> window(double x, double r) const noexcept;

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::vector<double> points_;
    double spacing_ = 0.0;
};

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

struct Observation {
    double time;
    double value;
    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Per-(subject, component) observation counts N_ij.
class CountMatrix {
public:
    CountMatrix() = default;
    CountMatrix(std::size_t n, std::size_t p) : n_(n), p_(p), counts_(n * p, 0) {}

    std::size_t subjects() const noexcept { return n_; }
    std::size_t components() const noexcept { return p_; }
    std::size_t operator()(std::size_t i, std::size_t j) const noexcept { return counts_[i * p_ + j]; }
    std::size_t& operator()(std::size_t i, std::size_t j) noexcept { return counts_[i * p_ + j]; }
    std::size_t total(std::size_t j) const noexcept;

private:
    std::size_t n_ = 0;
    std::size_t p_ = 0;
    std::vector<std::size_t> counts_;
};

/// Ragged store of (time, value) pairs for n subjects and p components.
/// Series are laid out contiguously, subject-major.
class ObservationSet {
public:
    class Builder;

    ObservationSet() = default;

    /// Bulk construction from the contiguous layout: series (i, j) occupies
    /// obs[offsets[i*p + j], offsets[i*p + j + 1]). Not yet validated.
    static ObservationSet from_layout(std::size_t n, std::size_t p, DesignKind design, std::vector<Interval> domains,
                                      std::vector<std::size_t> offsets, std::vector<Observation> obs);

    std::size_t subjects() const noexcept { return n_; }
    std::size_t components() const noexcept { return p_; }
    DesignKind design() const noexcept { return design_; }
    const Interval& domain(std::size_t j) const { return domains_.at(j); }
    std::span<const Interval> domains() const noexcept { return domains_; }

    std::span<const Observation> series(std::size_t i, std::size_t j) const noexcept {
        const std::size_t s = i * p_ + j;
        return {obs_.data() + offsets_[s], offsets_[s + 1] - offsets_[s]};
    }
    std::size_t count(std::size_t i, std::size_t j) const noexcept {
        const std::size_t s = i * p_ + j;
        return offsets_[s + 1] - offsets_[s];
    }
    std::size_t total_observations() const noexcept { return obs_.size(); }
    CountMatrix counts() const;

    /// True once the set has passed validate_observations.
    bool validated() const noexcept { return validated_; }

    friend bool operator==(const ObservationSet& a, const ObservationSet& b) {
        return a.n_ == b.n_ && a.p_ == b.p_ && a.design_ == b.design_ && a.domains_ == b.domains_ &&
               a.offsets_ == b.offsets_ && a.obs_ == b.obs_;
    }

private:
    friend ObservationSet validate_observations(ObservationSet raw);

    std::size_t n_ = 0;
    std::size_t p_ = 0;
    DesignKind design_ = DesignKind::FR;
    std::vector<Interval> domains_;
    std::vector<std::size_t> offsets_{0};
    std::vector<Observation> obs_;
    bool validated_ = false;
};

/// Accumulates series in any order and assembles an ObservationSet.
class ObservationSet::Builder {
public:
    Builder(std::size_t n, std::size_t p, DesignKind design, std::vector<Interval> domains);
    Builder(std::size_t n, std::size_t p, DesignKind design, Interval shared_domain)
        : Builder(n, p, design, std::vector<Interval>(p, shared_domain)) {}

    void add(std::size_t i, std::size_t j, Observation o);
    void add_series(std::size_t i, std::size_t j, std::span<const Observation> obs);
    ObservationSet build() &&;

private:
    std::size_t n_;
    std::size_t p_;
    DesignKind design_;
    std::vector<Interval> domains_;
    std::vector<std::vector<Observation>> series_;
};

/// Sorts every series by time, checks domain membership, and enforces the
/// shared-time structure of SR designs. Idempotent.
ObservationSet validate_observations(ObservationSet raw);

// ---------------------------------------------------------------------------
// Estimates
// ---------------------------------------------------------------------------

enum class EstimateStatus : std::uint8_t { Exact = 0, LocalConstantFallback = 1, Missing = 2 };

std::string_view to_string(EstimateStatus s);

struct PointEstimate {
    double value = std::numeric_limits<double>::quiet_NaN();
    EstimateStatus status = EstimateStatus::Missing;
};

struct EstimateCurve {
    std::size_t component = 0;
    Grid grid;
    std::vector<double> values;
    std::vector<EstimateStatus> status;
    double bandwidth = 0.0;

    std::size_t missing_count() const noexcept;
};

/// Surface on grid_s x grid_t, stored row-major: index a * grid_t.size() + b.
struct EstimateSurface {
    std::size_t j = 0;
    std::size_t k = 0;
    Grid grid_s;
    Grid grid_t;
    std::vector<double> values;
    std::vector<EstimateStatus> status;
    double bandwidth_j = 0.0;
    double bandwidth_k = 0.0;

    double value(std::size_t a, std::size_t b) const noexcept { return values[a * grid_t.size() + b]; }
    EstimateStatus status_at(std::size_t a, std::size_t b) const noexcept {
        return status[a * grid_t.size() + b];
    }
    std::size_t missing_count() const noexcept;

    /// The (k, j) surface evaluated at (t, s).
    EstimateSurface transposed() const;
};

} // namespace hdfda

#endif // HDFDA_CORE_HPP
