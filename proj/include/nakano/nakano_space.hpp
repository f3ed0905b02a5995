#pragma once

// Variable-exponent Lebesgue spaces over finite atomic measure spaces: the
// modular functional, the Luxemburg norm, lattice operations and density
// changes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nakano/errors.hpp"
#include "nakano/measure.hpp"

namespace nakano {

/// A measure space together with an exponent p(.) in [1, r] per atom and the
/// global bound r.
class NakanoSpace {
public:
    NakanoSpace() = default;

    /// `r` defaults to max(1, max_i p_i).
    NakanoSpace(AtomicMeasureSpace space, std::vector<double> exponent,
                std::optional<double> r = std::nullopt)
        : space_(std::move(space)), exponent_(std::move(exponent)) {
        if (exponent_.size() != space_.size())
            throw DomainError("NakanoSpace: one exponent per atom required");
        double pmax = 1.0;
        for (double p : exponent_) {
            if (!std::isfinite(p))
                throw DomainError("NakanoSpace: exponent must be finite");
            pmax = std::max(pmax, p);
        }
        r_ = r.value_or(pmax);
        if (!std::isfinite(r_) || r_ < 1.0)
            throw DomainError("NakanoSpace: bound r must be finite and >= 1");
        for (std::size_t i = 0; i < exponent_.size(); ++i) {
            if (exponent_[i] < 1.0 || exponent_[i] > r_)
                throw DomainError("NakanoSpace: exponent of atom '" + space_.atoms()->id(i) +
                                  "' outside [1, r]");
        }
    }

    const AtomicMeasureSpace& space() const noexcept { return space_; }
    const AtomSetPtr& atoms() const noexcept { return space_.atoms(); }
    std::size_t size() const noexcept { return exponent_.size(); }
    std::span<const double> exponent() const noexcept { return exponent_; }
    double exponent(std::size_t i) const { return exponent_.at(i); }
    std::span<const double> weights() const noexcept { return space_.weights(); }
    double r() const noexcept { return r_; }

private:
    AtomicMeasureSpace space_;
    std::vector<double> exponent_;
    double r_ = 1.0;
};

/// Value of the modular functional; never negative.
class ModularValue {
public:
    constexpr ModularValue() = default;
    explicit ModularValue(double v) : value_(v) {
        if (!(v >= 0.0))
            throw DomainError("ModularValue must be >= 0");
    }
    constexpr double value() const noexcept { return value_; }
    constexpr operator double() const noexcept { return value_; }

private:
    double value_ = 0.0;
};

namespace detail {

// |v|^p with 0^p = 0 for p >= 1.
inline double abs_pow(double v, double p) {
    const double a = std::fabs(v);
    return a == 0.0 ? 0.0 : std::pow(a, p);
}

inline void require_finite(const SimpleFunction& f, const char* where) {
    if (!f.all_finite())
        throw DomainError(std::string(where) + ": function has non-finite values");
}

} // namespace detail

/// sum_i mu_i |f_i / c|^{p_i}
inline double scaled_modular(const NakanoSpace& N, const SimpleFunction& f, double c) {
    const auto w = N.weights();
    const auto p = N.exponent();
    double total = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double a = std::fabs(f[i]);
        if (a != 0.0)
            total += w[i] * std::pow(a / c, p[i]);
    }
    return total;
}

inline ModularValue modular(const NakanoSpace& N, const SimpleFunction& f) {
    require_same_atoms(N.atoms(), f.atoms(), "modular");
    const auto w = N.weights();
    const auto p = N.exponent();
    double total = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        total += w[i] * detail::abs_pow(f[i], p[i]);
    return ModularValue(total);
}

struct NormResult {
    double norm = 0.0;
    double residual = 0.0; ///< |modular(f / norm) - 1|, 0 for f = 0
    int evaluations = 0;
};

/// Luxemburg norm with solver diagnostics.
///
/// c -> modular(f / c) is continuous and strictly decreasing for f != 0. The
/// root is bracketed by doubling or halving from c = 1, bisected on log c to
/// relative width 1e-13, then polished by safeguarded Newton steps.
inline NormResult luxemburg_norm_detailed(const NakanoSpace& N, const SimpleFunction& f) {
    require_same_atoms(N.atoms(), f.atoms(), "luxemburg_norm");
    detail::require_finite(f, "luxemburg_norm");
    NormResult res;
    if (f.is_zero())
        return res;

    auto theta = [&](double c) {
        ++res.evaluations;
        return scaled_modular(N, f, c);
    };

    double lo = 1.0, hi = 1.0; // theta(lo) >= 1 >= theta(hi)
    double t = theta(1.0);
    if (t > 1.0) {
        while (t > 1.0) {
            lo = hi;
            hi *= 2.0;
            t = theta(hi);
        }
    } else if (t < 1.0) {
        while (t < 1.0) {
            hi = lo;
            lo *= 0.5;
            t = theta(lo);
        }
    } else {
        res.norm = 1.0;
        return res;
    }

    while (hi / lo - 1.0 > 1e-13) {
        const double mid = std::sqrt(lo * hi);
        const double tm = theta(mid);
        if (tm == 1.0) {
            lo = hi = mid;
            break;
        }
        (tm > 1.0 ? lo : hi) = mid;
    }

    double c = std::sqrt(lo * hi);
    double resid = std::fabs(theta(c) - 1.0);
    const auto w = N.weights();
    const auto p = N.exponent();
    for (int step = 0; step < 3 && resid > 0.0; ++step) {
        double value = 0.0, slope = 0.0; // slope = -c * d/dc theta(c)
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double a = std::fabs(f[i]);
            if (a == 0.0)
                continue;
            const double term = w[i] * std::pow(a / c, p[i]);
            value += term;
            slope += p[i] * term;
        }
        ++res.evaluations;
        const double next = c * (1.0 + (value - 1.0) / slope);
        if (!(next >= lo * (1.0 - 1e-13) && next <= hi * (1.0 + 1e-13)))
            break;
        const double r_next = std::fabs(theta(next) - 1.0);
        if (!(r_next < resid))
            break;
        c = next;
        resid = r_next;
    }
    res.norm = c;
    res.residual = resid;
    return res;
}

inline double luxemburg_norm(const NakanoSpace& N, const SimpleFunction& f) {
    return luxemburg_norm_detailed(N, f).norm;
}

// Lattice operations.

inline SimpleFunction abs(const SimpleFunction& f) {
    return transform(f, [](double v) { return std::fabs(v); });
}

inline SimpleFunction join(const SimpleFunction& f, const SimpleFunction& g) {
    return combine(f, g, [](double a, double b) { return std::max(a, b); });
}

inline SimpleFunction meet(const SimpleFunction& f, const SimpleFunction& g) {
    return combine(f, g, [](double a, double b) { return std::min(a, b); });
}

inline SimpleFunction pos_part(const SimpleFunction& f) {
    return transform(f, [](double v) { return std::max(v, 0.0); });
}

inline SimpleFunction neg_part(const SimpleFunction& f) {
    return transform(f, [](double v) { return std::max(-v, 0.0); });
}

/// t -> sgn(t)|t|^a; fixes zero.
inline double signed_power(double t, double a) {
    if (t == 0.0)
        return 0.0;
    const double m = std::pow(std::fabs(t), a);
    return t < 0.0 ? -m : m;
}

/// Same exponent, different measure on the same atoms.
inline NakanoSpace with_measure(const NakanoSpace& N, const AtomicMeasureSpace& nu) {
    require_same_atoms(N.atoms(), nu.atoms(), "with_measure");
    return NakanoSpace(nu, std::vector<double>(N.exponent().begin(), N.exponent().end()), N.r());
}

/// (D f)_i = (mu_i / nu_i)^{1/p_i} f_i, mapping L_p(mu) onto L_p(nu) while
/// preserving the modular functional.
inline SimpleFunction density_change(const NakanoSpace& N, const AtomicMeasureSpace& nu,
                                     const SimpleFunction& f) {
    require_same_atoms(N.atoms(), nu.atoms(), "density_change");
    require_same_atoms(N.atoms(), f.atoms(), "density_change");
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double ratio = N.space().weight(i) / nu.weight(i);
        out[i] = std::pow(ratio, 1.0 / N.exponent(i)) * f[i];
    }
    return SimpleFunction(f.atoms(), std::move(out));
}

/// Distinct exponent values, ascending. Deduplication is by exact equality.
inline std::vector<double> essential_range(const NakanoSpace& N) {
    std::vector<double> values(N.exponent().begin(), N.exponent().end());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
}

} // namespace nakano
