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

#include <algorithm>
#include <charconv>
#include <numbers>
#include <sstream>

namespace hdfda {

std::string_view to_string(DesignKind d) { return d == DesignKind::FR ? "fr" : "sr"; }

DesignKind parse_design(std::string_view s) {
    if (s == "fr" || s == "FR") return DesignKind::FR;
    if (s == "sr" || s == "SR") return DesignKind::SR;
    throw ValidationError("unknown design '" + std::string(s) + "' (expected fr or sr)");
}

std::string_view to_string(EstimateStatus s) {
    switch (s) {
    case EstimateStatus::Exact: return "exact";
    case EstimateStatus::LocalConstantFallback: return "fallback";
    case EstimateStatus::Missing: return "missing";
    }
    return "missing";
}

// ---------------------------------------------------------------------------

KernelSpec::KernelSpec(Kind kind, double scale) : kind_(kind), scale_(scale), norm_(0.0) {
    if (kind_ == Kind::TruncatedGaussian) {
        // mass of exp(-z^2/2) over u in [-1, 1], z = u / scale
        const double mass = scale_ * std::sqrt(2.0 * std::numbers::pi) * std::erf(1.0 / (scale_ * std::numbers::sqrt2));
        norm_ = 1.0 / mass;
    }
}

KernelSpec KernelSpec::truncated_gaussian(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw ValidationError("truncated Gaussian kernel scale must be positive");
    return KernelSpec(Kind::TruncatedGaussian, scale);
}

KernelSpec KernelSpec::parse(std::string_view s) {
    if (s == "epanechnikov" || s == "epa") return epanechnikov();
    if (s == "biweight" || s == "quartic") return biweight();
    if (s.starts_with("gaussian")) {
        double scale = 0.5;
        if (s.size() > 8) {
            if (s[8] != ':') throw ValidationError("bad kernel '" + std::string(s) + "'");
            const auto rest = s.substr(9);
            const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), scale);
            if (ec != std::errc() || ptr != rest.data() + rest.size())
                throw ValidationError("bad gaussian kernel scale in '" + std::string(s) + "'");
        }
        return truncated_gaussian(scale);
    }
    throw ValidationError("unknown kernel '" + std::string(s) + "'");
}

std::string KernelSpec::name() const {
    switch (kind_) {
    case Kind::Epanechnikov: return "epanechnikov";
    case Kind::Biweight: return "biweight";
    case Kind::TruncatedGaussian: {
        std::ostringstream os;
        os.precision(17);
        os << "gaussian:" << scale_;
        return os.str();
    }
    }
    return "epanechnikov";
}

double scaled_kernel(const KernelSpec& spec, double b, double x) {
    if (!(b > 0.0)) throw ValidationError("bandwidth must be positive");
    return spec(x / b) / b;
}

// ---------------------------------------------------------------------------

Grid Grid::uniform(Interval domain, std::size_t count) {
    if (count < 2) throw ValidationError("grid needs at least 2 points");
    if (!(domain.hi > domain.lo)) throw ValidationError("grid domain must have positive length");
    Grid g;
    g.points_.resize(count);
    g.spacing_ = domain.length() / static_cast<double>(count - 1);
    for (std::size_t a = 0; a < count; ++a)
        g.points_[a] = domain.lo + static_cast<double>(a) * g.spacing_;
    g.points_.back() = domain.hi;
    return g;
}

std::pair<std::size_t, std::size_t> Grid::window(double x, double r) const noexcept {
    const auto n = static_cast<std::ptrdiff_t>(points_.size());
    const auto first = static_cast<std::ptrdiff_t>(std::floor((x - r - lo()) / spacing_)) - 1;
    const auto last = static_cast<std::ptrdiff_t>(std::ceil((x + r - lo()) / spacing_)) + 2;
    return {static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(first, 0, n)),
            static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(last, 0, n))};
}

// ---------------------------------------------------------------------------

std::size_t CountMatrix::total(std::size_t j) const noexcept {
    std::size_t s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, j);
    return s;
}

CountMatrix ObservationSet::counts() const {
    CountMatrix c(n_, p_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < p_; ++j) c(i, j) = count(i, j);
    return c;
}

ObservationSet::Builder::Builder(std::size_t n, std::size_t p, DesignKind design, std::vector<Interval> domains)
    : n_(n), p_(p), design_(design), domains_(std::move(domains)), series_(n * p) {
    if (domains_.size() != p_)
        throw ValidationError("expected " + std::to_string(p_) + " component domains, got " +
                              std::to_string(domains_.size()));
}

void ObservationSet::Builder::add(std::size_t i, std::size_t j, Observation o) {
    if (i >= n_ || j >= p_) throw ValidationError("observation index out of range");
    series_[i * p_ + j].push_back(o);
}

void ObservationSet::Builder::add_series(std::size_t i, std::size_t j, std::span<const Observation> obs) {
    if (i >= n_ || j >= p_) throw ValidationError("observation index out of range");
    auto& s = series_[i * p_ + j];
    s.insert(s.end(), obs.begin(), obs.end());
}

ObservationSet ObservationSet::Builder::build() && {
    ObservationSet out;
    out.n_ = n_;
    out.p_ = p_;
    out.design_ = design_;
    out.domains_ = std::move(domains_);
    out.offsets_.assign(n_ * p_ + 1, 0);
    std::size_t total = 0;
    for (const auto& s : series_) total += s.size();
    out.obs_.reserve(total);
    for (std::size_t s = 0; s < series_.size(); ++s) {
        out.obs_.insert(out.obs_.end(), series_[s].begin(), series_[s].end());
        out.offsets_[s + 1] = out.obs_.size();
        std::vector<Observation>().swap(series_[s]);
    }
    return out;
}

ObservationSet ObservationSet::from_layout(std::size_t n, std::size_t p, DesignKind design,
                                           std::vector<Interval> domains, std::vector<std::size_t> offsets,
                                           std::vector<Observation> obs) {
    if (domains.size() != p)
        throw ValidationError("expected " + std::to_string(p) + " component domains, got " +
                              std::to_string(domains.size()));
    if (offsets.size() != n * p + 1 || offsets.front() != 0 || offsets.back() != obs.size() ||
        !std::is_sorted(offsets.begin(), offsets.end()))
        throw ValidationError("inconsistent observation layout");
    ObservationSet out;
    out.n_ = n;
    out.p_ = p;
    out.design_ = design;
    out.domains_ = std::move(domains);
    out.offsets_ = std::move(offsets);
    out.obs_ = std::move(obs);
    return out;
}

ObservationSet validate_observations(ObservationSet raw) {
    const std::size_t n = raw.n_, p = raw.p_;
    if (n == 0 || p == 0) throw ValidationError("empty dataset: no subjects or components");
    if (raw.domains_.size() != p) throw ValidationError("domain count does not match component count");
    if (raw.obs_.empty()) throw ValidationError("empty dataset: no observations");
    for (std::size_t j = 0; j < p; ++j) {
        const auto& d = raw.domains_[j];
        if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || !(d.hi > d.lo))
            throw ValidationError("component " + std::to_string(j + 1) + " has an invalid domain");
    }

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const std::size_t s = i * p + j;
            auto first = raw.obs_.begin() + static_cast<std::ptrdiff_t>(raw.offsets_[s]);
            auto last = raw.obs_.begin() + static_cast<std::ptrdiff_t>(raw.offsets_[s + 1]);
            for (auto it = first; it != last; ++it) {
                if (!std::isfinite(it->time) || !std::isfinite(it->value))
                    throw ValidationError("non-finite observation for subject " + std::to_string(i + 1) +
                                          ", component " + std::to_string(j + 1));
                if (!raw.domains_[j].contains(it->time)) {
                    std::ostringstream os;
                    os.precision(17);
                    os << "time " << it->time << " of subject " << i + 1 << ", component " << j + 1
                       << " lies outside the domain [" << raw.domains_[j].lo << ", " << raw.domains_[j].hi << "]";
                    throw ValidationError(os.str());
                }
            }
            std::stable_sort(first, last, [](const Observation& a, const Observation& b) { return a.time < b.time; });
        }
    }

    if (raw.design_ == DesignKind::SR) {
        for (std::size_t j = 1; j < p; ++j)
            if (!(raw.domains_[j] == raw.domains_[0]))
                throw ValidationError("SR design requires identical domains for all components");
        for (std::size_t i = 0; i < n; ++i) {
            const auto ref = raw.series(i, 0);
            for (std::size_t j = 1; j < p; ++j) {
                const auto cur = raw.series(i, j);
                const bool same = cur.size() == ref.size() &&
                                  std::equal(cur.begin(), cur.end(), ref.begin(),
                                             [](const Observation& a, const Observation& b) { return a.time == b.time; });
                if (!same)
                    throw ValidationError("SR-inconsistency: subject " + std::to_string(i + 1) + ", component " +
                                          std::to_string(j + 1) + " has a time list differing from component 1");
            }
        }
    }
    raw.validated_ = true;
    return raw;
}

// ---------------------------------------------------------------------------

std::size_t EstimateCurve::missing_count() const noexcept {
    return static_cast<std::size_t>(std::count(status.begin(), status.end(), EstimateStatus::Missing));
}

std::size_t EstimateSurface::missing_count() const noexcept {
    return static_cast<std::size_t>(std::count(status.begin(), status.end(), EstimateStatus::Missing));
}

EstimateSurface EstimateSurface::transposed() const {
    EstimateSurface t;
    t.j = k;
    t.k = j;
    t.grid_s = grid_t;
    t.grid_t = grid_s;
    t.bandwidth_j = bandwidth_k;
    t.bandwidth_k = bandwidth_j;
    const std::size_t ns = grid_s.size(), nt = grid_t.size();
    t.values.resize(values.size());
    t.status.resize(status.size());
    for (std::size_t a = 0; a < ns; ++a)
        for (std::size_t b = 0; b < nt; ++b) {
            t.values[b * ns + a] = values[a * nt + b];
            t.status[b * ns + a] = status[a * nt + b];
        }
    return t;
}

} // namespace hdfda
