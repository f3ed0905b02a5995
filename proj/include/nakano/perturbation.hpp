#pragma once

// Exponent perturbation: the constants A_s, B_s, C_s with certified two-sided
// bounds, the moduli eta_s / eta_hat_s / Delta_r, the maps
// E_{p,q} f = sgn(f)|f|^{p/q}, exponent quantization, and verifiers for the
// inequalities these objects satisfy.
//
// Conservative sides: infima (A) are bounded below by grid-min - slack,
// suprema (B, C) above by grid-max + slack. Every verifier consumes the
// conservative side.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nakano/errors.hpp"
#include "nakano/measure.hpp"
#include "nakano/nakano_space.hpp"
#include "nakano/random.hpp"
#include "nakano/report.hpp"

namespace nakano {

/// Grid resolutions used when bounding the constants.
struct ConstantsGrid {
    double gamma_step = 1e-5;      ///< A: gamma in [1/2, 1 - 1e-9]; fine step for B refinement
    double gamma_cutoff = 1e-9;    ///< A: the gamma grid stops at 1 - gamma_cutoff
    double coarse_step = 1e-3;     ///< B: coarse (gamma, t) scan
    double x_step = 1e-4;          ///< C2: x in [0, 2]
    double c1_step = 0x1.0p-9;     ///< C1: (alpha, beta, t) grid
    std::size_t c1_refine = 100000;///< C1: random samples around the grid argmax
    std::uint64_t seed = 0x43315f726566ULL;
};

struct PerturbationConstants {
    double s = 1.0;
    double A_lower = 1.0, A_upper = 1.0;
    double B_minus_lower = 1.0, B_minus_upper = 1.0;
    double B_plus_lower = 1.0, B_plus_upper = 1.0;
    double B_lower = 1.0, B_upper = 1.0;
    double C1_lower = 0.0, C1_upper = 0.0;
    double C2_lower = 0.0, C2_upper = 0.0;
    double C_lower = 0.0, C_upper = 0.0;
    double grid_step = 1e-5;
    double slack = 0.0; ///< largest safety margin applied to any bound
};

// ---------------------------------------------------------------------------
// Pointwise functions

/// ln(1 - gamma^s) / ln(1 - gamma), given u = 1 - gamma in (0, 1]. Extended
/// by 1 at u = 0. Below u = 1e-8 the asymptotic form 1 + ln s / ln u is used.
inline double phi_from_gap(double u, double s) {
    if (u <= 0.0)
        return 1.0;
    if (u < 1e-8)
        return 1.0 + std::log(s) / std::log(u);
    const double one_minus_pow = -std::expm1(s * std::log1p(-u)); // 1 - gamma^s
    return std::log(one_minus_pow) / std::log(u);
}

inline double phi(double gamma, double s) { return phi_from_gap(1.0 - gamma, s); }

/// (1 - gamma^t) / (1 - gamma)^t for gamma in [0, 1/2].
inline double b_minus_ratio(double gamma, double t) {
    return (-std::expm1(t * std::log(gamma))) * std::exp(-t * std::log1p(-gamma));
}

/// (1 + gamma^t) / (1 + gamma)^t for gamma in [0, 1].
inline double b_plus_ratio(double gamma, double t) {
    return (1.0 + std::exp(t * std::log(gamma))) * std::exp(-t * std::log1p(gamma));
}

/// |sgn(m)|m|^t - (sgn(a)|a|^t + sgn(b)|b|^t) / 2| with m = (a + b) / 2.
inline double midpoint_defect(double alpha, double beta, double t) {
    return std::fabs(signed_power(0.5 * (alpha + beta), t) -
                     0.5 * (signed_power(alpha, t) + signed_power(beta, t)));
}

namespace detail {

inline double eta_with(double A, double s, double x) {
    return x <= 1.0 ? std::pow(x, A / s) : std::pow(x, s);
}

inline double eta_hat_with(double A, double B, double s, double x) {
    return std::exp2(1.0 - A) * B * eta_with(A, s, x) / A;
}

// Evenly spaced grid on [lo, hi] with spacing at most `step`, endpoints included.
inline std::vector<double> linspace(double lo, double hi, double step) {
    if (!(hi > lo))
        return {lo};
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
    g[n] = hi;
    return g;
}

struct Extremum {
    double value = -std::numeric_limits<double>::infinity();
    double slack = 0.0;
    double x = 0.0, y = 0.0;
};

// sup of f over [x0, x1] x [y0, y1]: a coarse scan, then a fine grid on the
// cells around the coarse argmax. Slack is twice the largest difference
// between the fine argmax and its grid neighbours.
template <class F>
Extremum grid_sup_2d(F&& f, double x0, double x1, double y0, double y1, double coarse, double fine) {
    const auto xs = linspace(x0, x1, coarse);
    const auto ys = linspace(y0, y1, coarse);
    Extremum best;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < ys.size(); ++j) {
            const double v = f(xs[i], ys[j]);
            if (v > best.value) {
                best.value = v;
                bi = i;
                bj = j;
            }
        }
    const auto fx = linspace(xs[bi == 0 ? 0 : bi - 1], xs[std::min(bi + 1, xs.size() - 1)], fine);
    const auto fy = linspace(ys[bj == 0 ? 0 : bj - 1], ys[std::min(bj + 1, ys.size() - 1)], fine);
    std::vector<double> vals(fx.size() * fy.size());
    std::size_t fi = 0, fj = 0;
    double fbest = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fx.size(); ++i)
        for (std::size_t j = 0; j < fy.size(); ++j) {
            const double v = f(fx[i], fy[j]);
            vals[i * fy.size() + j] = v;
            if (v > fbest) {
                fbest = v;
                fi = i;
                fj = j;
            }
        }
    double diff = 0.0;
    auto at = [&](std::size_t i, std::size_t j) { return vals[i * fy.size() + j]; };
    if (fi > 0) diff = std::max(diff, std::fabs(fbest - at(fi - 1, fj)));
    if (fi + 1 < fx.size()) diff = std::max(diff, std::fabs(fbest - at(fi + 1, fj)));
    if (fj > 0) diff = std::max(diff, std::fabs(fbest - at(fi, fj - 1)));
    if (fj + 1 < fy.size()) diff = std::max(diff, std::fabs(fbest - at(fi, fj + 1)));
    if (fbest >= best.value) {
        best.value = fbest;
        best.x = fx[fi];
        best.y = fy[fj];
    } else {
        best.x = xs[bi];
        best.y = ys[bj];
    }
    best.slack = 2.0 * diff;
    return best;
}

// A_s: min over gamma in [1/2, 1 - cutoff] of phi(gamma, s) / s.
inline Extremum a_infimum(double s, const ConstantsGrid& grid) {
    // Walk u = 1 - gamma from 1/2 down to the cutoff.
    const auto us = linspace(grid.gamma_cutoff, 0.5, grid.gamma_step);
    std::vector<double> g(us.size());
    std::size_t arg = 0;
    for (std::size_t i = 0; i < us.size(); ++i) {
        g[i] = phi_from_gap(us[i], s) / s;
        if (g[i] < g[arg])
            arg = i;
    }
    double diff = 0.0;
    if (arg > 0) diff = std::max(diff, std::fabs(g[arg] - g[arg - 1]));
    if (arg + 1 < g.size()) diff = std::max(diff, std::fabs(g[arg + 1] - g[arg]));
    Extremum e;
    e.value = g[arg];
    e.slack = 2.0 * diff;
    e.x = 1.0 - us[arg];
    return e;
}

// C1 sup over alpha, beta in [-1, 1], t in [1/s, s].
inline Extremum c1_supremum(double s, const ConstantsGrid& grid) {
    const auto half = static_cast<std::size_t>(std::llround(1.0 / grid.c1_step)); // cells per unit
    const std::size_t na = 2 * half + 1;             // alpha grid points
    const std::size_t nm = 4 * half + 1;             // midpoint grid (half step)
    const auto ts = linspace(1.0 / s, s, grid.c1_step);
    std::vector<double> table(nm);
    Extremum best;
    best.value = 0.0;
    std::size_t bi = 0, bj = 0, bk = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double t = ts[k];
        for (std::size_t m = 0; m < nm; ++m)
            table[m] = signed_power(-1.0 + static_cast<double>(m) / static_cast<double>(2 * half), t);
        // The defect is symmetric in (alpha, beta); scan j >= i.
        for (std::size_t i = 0; i < na; ++i) {
            const double ai = table[2 * i];
            for (std::size_t j = i; j < na; ++j) {
                const double v = std::fabs(table[i + j] - 0.5 * (ai + table[2 * j]));
                if (v > best.value) {
                    best.value = v;
                    bi = i;
                    bj = j;
                    bk = k;
                }
            }
        }
    }
    auto alpha = [&](std::size_t i) { return -1.0 + static_cast<double>(i) / static_cast<double>(half); };
    const double a0 = alpha(bi), b0 = alpha(bj), t0 = ts[bk];
    best.x = a0;
    best.y = b0;

    double diff = 0.0;
    const double h = grid.c1_step;
    auto probe = [&](double a, double b, double t) {
        if (a < -1.0 || a > 1.0 || b < -1.0 || b > 1.0 || t < 1.0 / s || t > s)
            return;
        diff = std::max(diff, std::fabs(best.value - midpoint_defect(a, b, t)));
    };
    probe(a0 - h, b0, t0);
    probe(a0 + h, b0, t0);
    probe(a0, b0 - h, t0);
    probe(a0, b0 + h, t0);
    if (bk > 0) probe(a0, b0, ts[bk - 1]);
    if (bk + 1 < ts.size()) probe(a0, b0, ts[bk + 1]);

    Rng rng(grid.seed);
    const double tlo = bk > 0 ? ts[bk - 1] : ts[bk];
    const double thi = bk + 1 < ts.size() ? ts[bk + 1] : ts[bk];
    for (std::size_t n = 0; n < grid.c1_refine; ++n) {
        const double a = std::clamp(a0 + rng.uniform(-h, h), -1.0, 1.0);
        const double b = std::clamp(b0 + rng.uniform(-h, h), -1.0, 1.0);
        const double t = rng.uniform(tlo, thi);
        const double v = midpoint_defect(a, b, t);
        if (v > best.value) {
            best.value = v;
            best.x = a;
            best.y = b;
        }
    }
    best.slack = 2.0 * diff;
    return best;
}

// sup over x in [0, 2] of |x - eta_hat(x)| for the given (A, B).
inline Extremum c2_supremum(double A, double B, double s, const ConstantsGrid& grid) {
    const auto xs = linspace(0.0, 2.0, grid.x_step);
    std::vector<double> g(xs.size());
    std::size_t arg = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        g[i] = std::fabs(xs[i] - eta_hat_with(A, B, s, xs[i]));
        if (g[i] > g[arg])
            arg = i;
    }
    double diff = 0.0;
    if (arg > 0) diff = std::max(diff, std::fabs(g[arg] - g[arg - 1]));
    if (arg + 1 < g.size()) diff = std::max(diff, std::fabs(g[arg + 1] - g[arg]));
    Extremum e;
    e.value = g[arg];
    e.slack = 2.0 * diff;
    e.x = xs[arg];
    return e;
}

} // namespace detail

/// Certified bounds on A_s, B_s and C_s. At s = 1 the constants are exactly
/// A = B = 1, C = 0.
inline PerturbationConstants compute_constants(double s, const ConstantsGrid& grid,
                                               std::optional<double> r = std::nullopt) {
    if (!std::isfinite(s) || s < 1.0)
        throw DomainError("compute_constants: s must be >= 1");
    if (r && s > *r)
        throw DomainError("compute_constants: s must be <= r");
    if (!(grid.gamma_step > 0.0) || !(grid.coarse_step > 0.0) || !(grid.x_step > 0.0) ||
        !(grid.c1_step > 0.0))
        throw DomainError("compute_constants: grid steps must be > 0");

    PerturbationConstants c;
    c.s = s;
    c.grid_step = grid.gamma_step;
    if (s == 1.0)
        return c;

    const auto a = detail::a_infimum(s, grid);
    c.A_upper = a.value;
    c.A_lower = a.value - a.slack;

    const double tlo = 1.0 / s;
    const auto bm = detail::grid_sup_2d(b_minus_ratio, 0.0, 0.5, tlo, s, grid.coarse_step, grid.gamma_step);
    const auto bp = detail::grid_sup_2d(b_plus_ratio, 0.0, 1.0, tlo, s, grid.coarse_step, grid.gamma_step);
    c.B_minus_lower = bm.value;
    c.B_minus_upper = bm.value + bm.slack;
    c.B_plus_lower = bp.value;
    c.B_plus_upper = bp.value + bp.slack;
    c.B_lower = std::max(c.B_minus_lower, c.B_plus_lower);
    c.B_upper = std::max(c.B_minus_upper, c.B_plus_upper);

    const auto c1 = detail::c1_supremum(s, grid);
    c.C1_lower = c1.value;
    c.C1_upper = c1.value + c1.slack;

    // eta_hat is increasing in B and decreasing in A, pointwise.
    const auto c2_hi = detail::c2_supremum(c.A_lower, c.B_upper, s, grid);
    const auto c2_lo = detail::c2_supremum(c.A_upper, c.B_lower, s, grid);
    c.C2_upper = c2_hi.value + c2_hi.slack;
    c.C2_lower = c2_lo.value;

    c.C_lower = std::max(c.C1_lower, c.C2_lower);
    c.C_upper = std::max(c.C1_upper, c.C2_upper);
    c.slack = std::max({a.slack, bm.slack, bp.slack, c1.slack, c2_hi.slack});
    return c;
}

inline PerturbationConstants compute_constants(double s, double grid_step = 1e-5,
                                               std::optional<double> r = std::nullopt) {
    ConstantsGrid grid;
    grid.gamma_step = grid_step;
    return compute_constants(s, grid, r);
}

/// Memoized compute_constants(s, grid_step).
inline const PerturbationConstants& cached_constants(double s, double grid_step = 1e-5) {
    static std::mutex mutex;
    static std::map<std::pair<double, double>, PerturbationConstants> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(s, grid_step);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, compute_constants(s, grid_step)).first;
    return it->second;
}

// ---------------------------------------------------------------------------
// Moduli

namespace detail {
inline void require_eta_domain(double x) {
    if (!(x >= 0.0 && x <= 2.0))
        throw DomainError("eta: x must lie in [0, 2]");
}
} // namespace detail

/// x^{A/s} on [0, 1], x^s on (1, 2], with A = A_lower.
inline double eta(const PerturbationConstants& c, double x) {
    detail::require_eta_domain(x);
    return detail::eta_with(c.A_lower, c.s, x);
}

/// 2^{1-A} B eta(x) / A with (A_lower, B_upper); never below the exact value.
inline double eta_hat(const PerturbationConstants& c, double x) {
    detail::require_eta_domain(x);
    return detail::eta_hat_with(c.A_lower, c.B_upper, c.s, x);
}

/// Largest delta with ‖f - g‖ < delta implying ‖E f - E g‖ <= eps on unit
/// balls, for any exponents in [1, r]. `c` must be the constants at s = r.
inline double delta_modulus(const PerturbationConstants& c, double eps) {
    if (!(eps > 0.0))
        throw DomainError("delta_modulus: eps must be > 0");
    const double A = c.A_lower, B = c.B_upper, r = c.s;
    const double base = std::exp2(A - 1.0) * A * eps / B;
    if (base >= 1.0)
        return 1.0;
    return std::min(std::pow(base, r / A), 1.0);
}

inline double delta_modulus(double r, double eps, double grid_step = 1e-5) {
    if (!(eps > 0.0))
        throw DomainError("delta_modulus: eps must be > 0");
    return delta_modulus(cached_constants(r, grid_step), eps);
}

// ---------------------------------------------------------------------------
// Exponent maps

namespace detail {
inline void require_same_measure(const NakanoSpace& a, const NakanoSpace& b, const char* where) {
    require_same_atoms(a.atoms(), b.atoms(), where);
    const auto wa = a.weights(), wb = b.weights();
    if (!std::equal(wa.begin(), wa.end(), wb.begin(), wb.end()))
        throw DomainError(std::string(where) + ": spaces carry different measures");
}
} // namespace detail

/// (E f)_i = sgn(f_i)|f_i|^{p_i / q_i}. Preserves the modular functional.
inline SimpleFunction exponent_map(const NakanoSpace& from, const NakanoSpace& to, const SimpleFunction& f) {
    detail::require_same_measure(from, to, "exponent_map");
    require_same_atoms(from.atoms(), f.atoms(), "exponent_map");
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = from.exponent(i) == to.exponent(i) ? f[i]
                                                    : signed_power(f[i], from.exponent(i) / to.exponent(i));
    return SimpleFunction(f.atoms(), std::move(out));
}

/// Replaces p by a finite-range q with 1 <= q/p <= s: q_i is the smallest
/// point of {min(r, s^j) : j >= 1} that is >= p_i.
inline NakanoSpace quantize_exponent(const NakanoSpace& N, double s) {
    if (!(s > 1.0) || !std::isfinite(s))
        throw DomainError("quantize_exponent: s must be > 1");
    const double r = N.r();
    const double log_s = std::log(s);
    std::vector<double> q(N.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double p = N.exponent(i);
        auto j = std::max<long long>(1, static_cast<long long>(std::ceil(std::log(p) / log_s)));
        double b = std::pow(s, static_cast<double>(j));
        while (b < p)
            b = std::pow(s, static_cast<double>(++j));
        while (j > 1 && std::pow(s, static_cast<double>(j - 1)) >= p)
            b = std::pow(s, static_cast<double>(--j));
        double value = std::min(b, r);
        if (value > s * p) // rounding at a grid point; ratio 1 is always admissible
            value = p;
        q[i] = value;
    }
    return NakanoSpace(N.space(), std::move(q), r);
}

/// Whether 1/s <= p_i/q_i <= s on every atom (checked without division).
inline bool exponent_ratio_within(const NakanoSpace& Np, const NakanoSpace& Nq, double s) {
    for (std::size_t i = 0; i < Np.size(); ++i) {
        const double p = Np.exponent(i), q = Nq.exponent(i);
        if (p > s * q || q > s * p)
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Pointwise inequality verifiers

struct GridSpec {
    std::size_t per_axis = 100; ///< grid points per axis
    std::size_t random = 0;     ///< extra uniformly random samples
    std::uint64_t seed = 1;
};

/// |sgn(a)|a|^t - sgn(b)|b|^t| <= max(|a-b|^{A t}, B |a-b|^t) for a, b in
/// [-1, 1] and t in [1/s, s], using (A_lower, B_upper).
inline VerificationReport verify_signed_power_bound(const PerturbationConstants& c, const GridSpec& spec = {}) {
    VerificationReport rep("signed_power_bound", 1e-12);
    const double A = c.A_lower, B = c.B_upper, s = c.s;
    auto check = [&](double a, double b, double t) {
        const double lhs = std::fabs(signed_power(a, t) - signed_power(b, t));
        const double d = std::fabs(a - b);
        const double rhs = std::max(std::pow(d, A * t), B * std::pow(d, t));
        rep.record(rhs - lhs, [&] {
            return Witness{"alpha, beta, t", {{"alpha", a}, {"beta", b}, {"t", t}, {"lhs", lhs}, {"rhs", rhs}}};
        });
    };
    const auto axis = detail::linspace(-1.0, 1.0, 2.0 / static_cast<double>(std::max<std::size_t>(1, spec.per_axis - 1)));
    const auto taxis = detail::linspace(1.0 / s, s, (s - 1.0 / s) / static_cast<double>(std::max<std::size_t>(1, spec.per_axis - 1)));
    for (double a : axis)
        for (double b : axis)
            for (double t : taxis)
                check(a, b, t);
    Rng rng(spec.seed);
    for (std::size_t n = 0; n < spec.random; ++n)
        check(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(1.0 / s, s));
    return rep;
}

/// t(1 - gamma) + gamma^t <= 1 for gamma, t in [0, 1], with 0^0 = 1.
inline VerificationReport verify_concavity_bound(const GridSpec& spec = {}) {
    VerificationReport rep("concavity_bound", 1e-12);
    auto check = [&](double gamma, double t) {
        const double lhs = t * (1.0 - gamma) + std::pow(gamma, t);
        rep.record(1.0 - lhs, [&] { return Witness{"gamma, t", {{"gamma", gamma}, {"t", t}, {"lhs", lhs}}}; });
    };
    const auto axis = detail::linspace(0.0, 1.0, 1.0 / static_cast<double>(std::max<std::size_t>(1, spec.per_axis - 1)));
    for (double g : axis)
        for (double t : axis)
            check(g, t);
    Rng rng(spec.seed);
    for (std::size_t n = 0; n < spec.random; ++n)
        check(rng.uniform(), rng.uniform());
    return rep;
}

// ---------------------------------------------------------------------------
// Exponent-map verifiers on random unit-ball pairs

struct ExponentMapReport {
    VerificationReport forward{"modulus_forward", 1e-10};   ///< ‖Ef-Eg‖ <= eta_hat(‖f-g‖)
    VerificationReport backward{"modulus_backward", 1e-10}; ///< ‖f-g‖ <= eta_hat(‖Ef-Eg‖)
    VerificationReport algebra{"algebra", 0.0};             ///< E0 = 0, E(-f) = -Ef, E|f| = |Ef|
    VerificationReport distance{"distance_defect", 1e-10};  ///< |‖f-g‖ - ‖Ef-Eg‖| <= C
    VerificationReport midpoint{"midpoint_defect", 1e-10};  ///< ‖E((f+g)/2) - (Ef+Eg)/2‖ <= 2C

    bool modulus_ok() const { return forward.ok() && backward.ok(); }
    bool defects_ok() const { return algebra.ok() && distance.ok() && midpoint.ok(); }
    bool ok() const { return modulus_ok() && defects_ok(); }
};

namespace detail {

inline double clamp_distance(double d) { return d > 2.0 && d <= 2.0 + 1e-9 ? 2.0 : d; }

inline double max_abs_diff(const SimpleFunction& a, const SimpleFunction& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

} // namespace detail

/// Samples `trials` random pairs in the unit ball of Np and checks the
/// modulus and defect bounds for E_{p,q} with the constants `c` (at some s
/// with 1/s <= p/q <= s).
inline ExponentMapReport verify_exponent_map(const NakanoSpace& Np, const NakanoSpace& Nq,
                                             const PerturbationConstants& c, std::size_t trials,
                                             std::uint64_t seed) {
    detail::require_same_measure(Np, Nq, "verify_exponent_map");
    if (!exponent_ratio_within(Np, Nq, c.s))
        throw ContractError("verify_exponent_map: exponent ratio outside [1/s, s]");
    ExponentMapReport rep;
    Rng rng(seed);
    const double C = c.C_upper;
    for (std::size_t k = 0; k < trials; ++k) {
        const SimpleFunction f = random_unit_ball(rng, Np);
        const SimpleFunction g = k % 16 == 0 ? f : random_unit_ball(rng, Np);
        const SimpleFunction Ef = exponent_map(Np, Nq, f);
        const SimpleFunction Eg = exponent_map(Np, Nq, g);
        const double d = detail::clamp_distance(luxemburg_norm(Np, f - g));
        const double dE = detail::clamp_distance(luxemburg_norm(Nq, Ef - Eg));
        auto witness = [&](const char* what) {
            return Witness{what, {{"trial", static_cast<double>(k)}, {"dist", d}, {"dist_mapped", dE}}};
        };
        rep.forward.record(eta_hat(c, d) - dE, [&] { return witness("forward"); });
        rep.backward.record(eta_hat(c, dE) - d, [&] { return witness("backward"); });

        double alg = 0.0;
        alg = std::max(alg, detail::max_abs_diff(exponent_map(Np, Nq, SimpleFunction::zero(Np.space())),
                                                 SimpleFunction::zero(Np.space())));
        alg = std::max(alg, detail::max_abs_diff(exponent_map(Np, Nq, -f), -Ef));
        alg = std::max(alg, detail::max_abs_diff(exponent_map(Np, Nq, abs(f)), abs(Ef)));
        rep.algebra.record(-alg, [&] { return witness("algebra"); });

        rep.distance.record(C - std::fabs(d - dE), [&] { return witness("distance"); });
        const SimpleFunction mid = exponent_map(Np, Nq, 0.5 * (f + g)) - 0.5 * (Ef + Eg);
        const double md = luxemburg_norm(Nq, mid);
        rep.midpoint.record(2.0 * C - md, [&] {
            auto w = witness("midpoint");
            w.values.emplace_back("midpoint_norm", md);
            return w;
        });
    }
    return rep;
}

/// Both directions of the eta_hat modulus bound.
inline ExponentMapReport verify_exponent_map_modulus(const NakanoSpace& Np, const NakanoSpace& Nq,
                                                     const PerturbationConstants& c, std::size_t trials,
                                                     std::uint64_t seed) {
    auto rep = verify_exponent_map(Np, Nq, c, trials, seed);
    rep.algebra = rep.distance = rep.midpoint = {};
    return rep;
}

/// Algebraic identities plus the distance and midpoint defects.
inline ExponentMapReport verify_exponent_map_defects(const NakanoSpace& Np, const NakanoSpace& Nq,
                                                     const PerturbationConstants& c, std::size_t trials,
                                                     std::uint64_t seed) {
    auto rep = verify_exponent_map(Np, Nq, c, trials, seed);
    rep.forward = rep.backward = {};
    return rep;
}

/// Samples pairs with ‖f - g‖ < Delta_r(eps) (f, g in the unit ball) and
/// checks ‖Ef - Eg‖ <= eps. `c` are the constants at s = r.
inline VerificationReport verify_delta_modulus(const NakanoSpace& Np, const NakanoSpace& Nq,
                                               const PerturbationConstants& c, double eps,
                                               std::size_t trials, std::uint64_t seed) {
    detail::require_same_measure(Np, Nq, "verify_delta_modulus");
    if (!exponent_ratio_within(Np, Nq, c.s))
        throw ContractError("verify_delta_modulus: exponent ratio outside [1/r, r]");
    VerificationReport rep("delta_modulus", 1e-10);
    const double delta = delta_modulus(c, eps);
    Rng rng(seed);
    for (std::size_t k = 0; k < trials; ++k) {
        // ‖f‖ <= 1 - delta and ‖h‖ < delta keep g = f + h in the unit ball.
        const double radius = (1.0 - delta) * (rng.uniform() < 0.25 ? 1.0 : rng.uniform());
        const SimpleFunction f = random_with_norm(rng, Np, std::max(radius, 0.0));
        const SimpleFunction h = random_with_norm(rng, Np, delta * rng.uniform(0.5, 1.0) * (1.0 - 1e-12));
        const SimpleFunction g = f + h;
        const double d = luxemburg_norm(Np, f - g);
        if (!(d < delta))
            continue;
        const double dE = luxemburg_norm(Nq, exponent_map(Np, Nq, f) - exponent_map(Np, Nq, g));
        rep.record(eps - dE, [&] {
            return Witness{"pair", {{"trial", static_cast<double>(k)}, {"dist", d}, {"dist_mapped", dE}, {"delta", delta}}};
        });
    }
    return rep;
}

// ---------------------------------------------------------------------------
// eps-perturbations

struct PerturbationProbe {
    SimpleFunction f, g, h;
};

struct EpsilonPerturbationResult {
    bool passed = false;
    std::vector<VerificationReport> conditions;
};

/// Random probe triples in the unit ball of N.
inline std::vector<PerturbationProbe> random_probes(const NakanoSpace& N, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<PerturbationProbe> probes;
    probes.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        SimpleFunction f = random_unit_ball(rng, N);
        SimpleFunction g = random_unit_ball(rng, N);
        SimpleFunction h = random_unit_ball(rng, N);
        probes.push_back({std::move(f), std::move(g), std::move(h)});
    }
    return probes;
}

/// Checks the eps-perturbation conditions for `map` (unit ball of `from` to
/// unit ball of `to`) on the probe triples, with d(f, g) = ‖f - g‖ / 2:
///   map 0 = 0, map(-f) = -map f, map|f| = |map f|            (exact)
///   |d((f+g)/2, h) - d((map f + map g)/2, map h)| <= eps
///   |‖f‖ - ‖map f‖| <= eps
///   e^{-eps e^eps} d(f,g)^{e^eps} <= d(map f, map g) <= e^eps d(f,g)^{e^-eps}
inline EpsilonPerturbationResult
is_epsilon_perturbation(const NakanoSpace& from, const NakanoSpace& to,
                        const std::function<SimpleFunction(const SimpleFunction&)>& map,
                        const std::vector<PerturbationProbe>& probes, double eps) {
    VerificationReport algebra("algebra", 0.0);
    VerificationReport midpoint("midpoint_distance", 1e-10);
    VerificationReport norm("norm", 1e-10);
    VerificationReport upper("distance_upper", 1e-10);
    VerificationReport lower("distance_lower", 1e-10);

    const double grow = std::exp(eps), shrink = std::exp(-eps);
    const double lower_scale = std::exp(-eps * grow);
    auto dist = [](const NakanoSpace& N, const SimpleFunction& a, const SimpleFunction& b) {
        return 0.5 * luxemburg_norm(N, a - b);
    };

    {
        const SimpleFunction z = SimpleFunction::zero(from.space());
        const SimpleFunction mz = map(z);
        double m = 0.0;
        for (double v : mz.values())
            m = std::max(m, std::fabs(v));
        algebra.record(-m, [] { return Witness{"map(0) != 0", {}}; });
    }
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const auto& [f, g, h] = probes[k];
        const SimpleFunction tf = map(f), tg = map(g), th = map(h);
        auto w = [&](const char* what, std::vector<std::pair<std::string, double>> vals) {
            vals.emplace_back("probe", static_cast<double>(k));
            return Witness{what, std::move(vals)};
        };

        const double alg = std::max(detail::max_abs_diff(map(-f), -tf), detail::max_abs_diff(map(abs(f)), abs(tf)));
        algebra.record(-alg, [&] { return w("negation/abs", {{"max_abs_diff", alg}}); });

        const double m0 = dist(from, 0.5 * (f + g), h);
        const double m1 = dist(to, 0.5 * (tf + tg), th);
        midpoint.record(eps - std::fabs(m0 - m1), [&] { return w("midpoint", {{"before", m0}, {"after", m1}}); });

        const double n0 = luxemburg_norm(from, f), n1 = luxemburg_norm(to, tf);
        norm.record(eps - std::fabs(n0 - n1), [&] { return w("norm", {{"before", n0}, {"after", n1}}); });

        const double d0 = dist(from, f, g), d1 = dist(to, tf, tg);
        const double hi = grow * std::pow(d0, shrink);
        const double lo = lower_scale * std::pow(d0, grow);
        upper.record(hi - d1, [&] { return w("distance_upper", {{"d", d0}, {"d_mapped", d1}, {"bound", hi}}); });
        lower.record(d1 - lo, [&] { return w("distance_lower", {{"d", d0}, {"d_mapped", d1}, {"bound", lo}}); });
    }
    EpsilonPerturbationResult res;
    res.conditions = {algebra, midpoint, norm, upper, lower};
    res.passed = std::all_of(res.conditions.begin(), res.conditions.end(),
                             [](const VerificationReport& r) { return r.ok(); });
    return res;
}

/// Whether the constants at c.s imply that every E_{p,q} with
/// 1/s <= p/q <= s is an eps-perturbation.
///
/// Additive conditions: the norm defect is at most C and the midpoint
/// distance defect at most 3C/2. Distance conditions: with d = ‖.‖/2 and both
/// unit balls preserved, d(Ef, Eg) <= b(2d) where b(x) = min(1, eta_hat(x)/2),
/// and symmetrically backwards. Against the power-law targets the ratio grows
/// while eta_hat(x)/2 < 1 (given A/s >= e^{-eps}) and shrinks once b
/// saturates, so both are checked at the crossing point x_c.
inline bool certifies_epsilon_perturbation(const PerturbationConstants& c, double eps) {
    if (c.s == 1.0)
        return true;
    const double A = c.A_lower, B = c.B_upper, s = c.s;
    const double K = std::exp2(1.0 - A) * B / A;
    const double grow = std::exp(eps), shrink = std::exp(-eps);
    if (!(1.5 * c.C_upper <= eps) || !(A / s >= shrink))
        return false;
    // eta_hat(x) = K x^{A/s} on [0, 1], K x^s on (1, 2]; crossing of eta_hat = 2.
    const double xc = K >= 2.0 ? std::pow(2.0 / K, s / A) : std::min(2.0, std::pow(2.0 / K, 1.0 / s));
    const double log_b = std::min(0.0, std::log(eta_hat(c, xc)) - std::log(2.0));
    const double log_half_x = std::log(xc) - std::log(2.0);
    const bool upper = log_b <= eps + shrink * log_half_x;
    // -eps e^eps + e^eps log_b, written so that e^eps = inf stays finite-safe.
    const double lower_lhs = log_b - eps < 0.0 ? grow * (log_b - eps) : 0.0;
    const bool lower = lower_lhs <= log_half_x;
    return upper && lower;
}

struct BudgetResult {
    double s = 1.0;
    int k = 0;            ///< s = 1 + 2^{-k}
    bool certified = false;
    PerturbationConstants constants;
};

/// Largest s = 1 + 2^{-k} (k = 1, 2, ...; s <= r) whose certified constants
/// make every E_{p,q} with 1/s <= p/q <= s an eps-perturbation. When none
/// certifies up to k = max_k the smallest grid value is returned with
/// `certified = false`.
inline BudgetResult perturbation_budget(double eps, double r = std::numeric_limits<double>::infinity(),
                                        double grid_step = 1e-5, int max_k = 40) {
    if (!(eps > 0.0))
        throw DomainError("perturbation_budget: eps must be > 0");
    BudgetResult res;
    for (int k = 1; k <= max_k; ++k) {
        const double s = 1.0 + std::ldexp(1.0, -k);
        if (s > r && k < max_k)
            continue;
        const auto& c = cached_constants(s, grid_step);
        res = {s, k, certifies_epsilon_perturbation(c, eps), c};
        if (res.certified)
            return res;
    }
    return res;
}

} // namespace nakano
