#pragma once

// Two approximation schemes for the modular functional:
//  * a dyadic-exponential fit sum_k a_k 2^{-kx} ~ m^x on [1, r], giving
//    Theta(m f) ~ sum_k a_k Theta(2^{-k} f);
//  * exponent chunking, Theta(f) ~ sum_k ‖f_k‖^{(n+k+1)/n} where f_k is f
//    restricted to the atoms with p in [(n+k)/n, (n+k+1)/n).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nakano/errors.hpp"
#include "nakano/measure.hpp"
#include "nakano/nakano_space.hpp"
#include "nakano/report.hpp"

namespace nakano {

// ---------------------------------------------------------------------------
// Dyadic-exponential fit

struct DyadicFit {
    int m = 1;
    double r = 1.0;
    double eps = 0.0;
    std::vector<double> coefficients; ///< a_k, k < n
    double certified_error = 0.0;     ///< sup_{x in [1, r]} |sum a_k 2^{-kx} - m^x|

    std::size_t n() const noexcept { return coefficients.size(); }

    /// sum_k a_k 2^{-kx}, Horner in y = 2^{-x}.
    double evaluate(double x) const {
        const double y = std::exp2(-x);
        double acc = 0.0;
        for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
            acc = acc * y + *it;
        return acc;
    }

    double error_at(double x) const { return std::fabs(evaluate(x) - std::pow(static_cast<double>(m), x)); }
};

struct DyadicFitOptions {
    std::size_t fit_points = 2048;
    std::size_t certify_points = 8192;
    std::size_t start_n = 4;
    std::size_t max_n = 128;
    int reweight_iterations = 40;
};

namespace detail {

// Largest error over `points` evenly spaced x in [1, r], then refined around
// every local maximum on a 64-point subgrid of the two adjacent cells.
inline double certify_fit(const DyadicFit& fit, std::size_t points) {
    const double r = fit.r;
    if (r == 1.0)
        return fit.error_at(1.0);
    const double h = (r - 1.0) / static_cast<double>(points - 1);
    std::vector<double> e(points);
    for (std::size_t i = 0; i < points; ++i)
        e[i] = fit.error_at(i + 1 == points ? r : 1.0 + h * static_cast<double>(i));
    double worst = *std::max_element(e.begin(), e.end());
    for (std::size_t i = 0; i < points; ++i) {
        const bool left = i == 0 || e[i] >= e[i - 1];
        const bool right = i + 1 == points || e[i] >= e[i + 1];
        if (!left || !right)
            continue;
        const double lo = std::max(1.0, 1.0 + h * (static_cast<double>(i) - 1.0));
        const double hi = std::min(r, 1.0 + h * (static_cast<double>(i) + 1.0));
        for (int j = 0; j <= 64; ++j)
            worst = std::max(worst, fit.error_at(lo + (hi - lo) * j / 64.0));
    }
    return worst;
}

// Monomial coefficients in y of sum_k c_k T_k(alpha y + beta).
inline std::vector<double> chebyshev_to_monomial(const Eigen::VectorXd& c, long double alpha, long double beta) {
    const std::size_t n = static_cast<std::size_t>(c.size());
    std::vector<long double> prev(n, 0.0L), cur(n, 0.0L), out(n, 0.0L);
    prev[0] = 1.0L; // T_0
    out[0] += static_cast<long double>(c[0]);
    if (n > 1) {
        cur[0] = beta; // T_1 = alpha y + beta
        cur[1] = alpha;
        for (std::size_t j = 0; j < n; ++j)
            out[j] += static_cast<long double>(c[1]) * cur[j];
    }
    for (std::size_t k = 2; k < n; ++k) {
        std::vector<long double> next(n, 0.0L);
        for (std::size_t j = 0; j < n; ++j) {
            next[j] += 2.0L * beta * cur[j] - prev[j];
            if (j + 1 < n)
                next[j + 1] += 2.0L * alpha * cur[j];
        }
        prev.swap(cur);
        cur.swap(next);
        for (std::size_t j = 0; j < n; ++j)
            out[j] += static_cast<long double>(c[static_cast<Eigen::Index>(k)]) * cur[j];
    }
    return std::vector<double>(out.begin(), out.end());
}

// Discrete minimax fit with n terms: weighted least squares in a Chebyshev
// basis on the y-interval, reweighted toward equioscillation (Lawson).
inline DyadicFit fit_dyadic_terms(int m, double r, double eps, std::size_t n, const DyadicFitOptions& opt) {
    const std::size_t N = opt.fit_points;
    const double ya = std::exp2(-r), yb = 0.5;
    const long double alpha = 2.0L / (static_cast<long double>(yb) - ya);
    const long double beta = -(static_cast<long double>(yb) + ya) / (static_cast<long double>(yb) - ya);

    Eigen::MatrixXd V(N, n);
    Eigen::VectorXd g(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double x = 1.0 + (r - 1.0) * static_cast<double>(i) / static_cast<double>(N - 1);
        const double y = std::exp2(-x);
        const double u = static_cast<double>(alpha * y + beta);
        g[static_cast<Eigen::Index>(i)] = std::pow(static_cast<double>(m), x);
        double t0 = 1.0, t1 = u;
        for (std::size_t k = 0; k < n; ++k) {
            V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = k == 0 ? 1.0 : t1;
            if (k > 0) {
                const double t2 = 2.0 * u * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
        }
    }

    Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(N), 1.0 / static_cast<double>(N));
    DyadicFit best;
    best.m = m;
    best.r = r;
    best.eps = eps;
    double best_err = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.reweight_iterations; ++it) {
        const Eigen::VectorXd sw = w.cwiseSqrt();
        const Eigen::MatrixXd A = sw.asDiagonal() * V;
        const Eigen::VectorXd b = sw.cwiseProduct(g);
        const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
        const Eigen::VectorXd res = (V * c - g).cwiseAbs();
        const double err = res.maxCoeff();
        if (err < best_err) {
            best_err = err;
            best.coefficients = chebyshev_to_monomial(c, alpha, beta);
        }
        w = w.cwiseProduct(res);
        const double total = w.sum();
        if (!(total > 0.0))
            break;
        w /= total;
    }
    best.certified_error = certify_fit(best, opt.certify_points);
    return best;
}

} // namespace detail

/// Coefficients a_k with sup_{x in [1, r]} |sum_k a_k 2^{-kx} - m^x| <= eps.
/// The number of terms doubles from 4 until the certified error meets eps;
/// std::runtime_error if max_n terms do not suffice in double precision.
inline DyadicFit fit_dyadic(int m, double r, double eps, const DyadicFitOptions& opt = {}) {
    if (m < 1)
        throw DomainError("fit_dyadic: m must be >= 1");
    if (!std::isfinite(r) || r < 1.0)
        throw DomainError("fit_dyadic: r must be finite and >= 1");
    if (!(eps > 0.0))
        throw DomainError("fit_dyadic: eps must be > 0");
    DyadicFit fit;
    fit.m = m;
    fit.r = r;
    fit.eps = eps;
    if (m == 1 || r == 1.0) {
        // 1^x = 1 everywhere; on the single point x = 1 the constant m fits.
        fit.coefficients = {static_cast<double>(m)};
        fit.certified_error = detail::certify_fit(fit, opt.certify_points);
        return fit;
    }
    for (std::size_t n = opt.start_n; n <= opt.max_n; n *= 2) {
        fit = detail::fit_dyadic_terms(m, r, eps, n, opt);
        if (fit.certified_error <= eps)
            return fit;
    }
    throw std::runtime_error("fit_dyadic: no fit with at most " + std::to_string(opt.max_n) +
                             " terms reaches eps = " + std::to_string(eps));
}

/// sum_k a_k Theta(2^{-k} f), within fit.certified_error of Theta(m f) when
/// ‖f‖ <= 1.
inline double theta_scaled(const NakanoSpace& N, const SimpleFunction& f, const DyadicFit& fit) {
    if (fit.r < N.r())
        throw ContractError("theta_scaled: fit interval does not cover [1, r]");
    if (luxemburg_norm(N, f) > 1.0 + 1e-9)
        throw ContractError("theta_scaled: f must lie in the unit ball");
    double total = 0.0;
    for (std::size_t k = 0; k < fit.coefficients.size(); ++k)
        total += fit.coefficients[k] * modular(N, std::ldexp(1.0, -static_cast<int>(k)) * f);
    return total;
}

// ---------------------------------------------------------------------------
// Exponent chunking

struct Chunk {
    std::size_t k = 0;
    double lo = 1.0, hi = 1.0; ///< exponent interval [lo, hi)
    NakanoSpace space;         ///< restriction of N to the atoms with p in [lo, hi)
    SimpleFunction f;
};

struct ChunkPartition {
    std::size_t n = 1;
    std::vector<Chunk> chunks; ///< all l = floor(n (r - 1)) + 1 chunks, empty ones included
};

inline ChunkPartition chunk(const NakanoSpace& N, const SimpleFunction& f, std::size_t n) {
    if (n < 1)
        throw DomainError("chunk: n must be >= 1");
    require_same_atoms(N.atoms(), f.atoms(), "chunk");
    const double nd = static_cast<double>(n);
    const auto ell = static_cast<std::size_t>(std::floor(nd * (N.r() - 1.0))) + 1;
    auto lower = [&](std::size_t k) { return static_cast<double>(n + k) / nd; };

    std::vector<std::vector<std::size_t>> members(ell);
    for (std::size_t i = 0; i < N.size(); ++i) {
        const double p = N.exponent(i);
        auto k = static_cast<std::size_t>(std::max(0.0, std::floor(nd * (p - 1.0))));
        while (k > 0 && p < lower(k))
            --k;
        while (k + 1 < ell && p >= lower(k + 1))
            ++k;
        members[std::min(k, ell - 1)].push_back(i);
    }

    ChunkPartition cp;
    cp.n = n;
    cp.chunks.reserve(ell);
    for (std::size_t k = 0; k < ell; ++k) {
        const auto& idx = members[k];
        AtomicMeasureSpace sub = restrict_space(N.space(), idx);
        std::vector<double> p, v;
        for (std::size_t i : idx) {
            p.push_back(N.exponent(i));
            v.push_back(f[i]);
        }
        SimpleFunction fk(sub, std::move(v));
        cp.chunks.push_back({k, lower(k), lower(k + 1), NakanoSpace(std::move(sub), std::move(p), N.r()), std::move(fk)});
    }
    return cp;
}

/// sum_k ‖f_k‖^{(n+k+1)/n}
inline double chunked_estimate(const ChunkPartition& cp) {
    double total = 0.0;
    for (const auto& c : cp.chunks) {
        const double norm = luxemburg_norm(c.space, c.f);
        if (norm > 0.0)
            total += std::pow(norm, c.hi);
    }
    return total;
}

struct SeriesBounds {
    double lower = 0.0, upper = 0.0;
};

/// C_0 = sum_{k >= 0} ln(k+3) / (k+3)^{3/2}: partial sum to k = 10^6 plus
/// integral-test bounds on the tail.
inline SeriesBounds entropy_series_bounds() {
    static const SeriesBounds bounds = [] {
        constexpr long K = 1000000;
        long double sum = 0.0L;
        for (long k = K; k >= 0; --k) {
            const long double x = static_cast<long double>(k) + 3.0L;
            sum += std::log(x) / (x * std::sqrt(x));
        }
        // The summand decreases on [0, inf): sum_{k > K} lies between the
        // integrals from K + 1 and from K.
        auto tail = [](long double from) {
            const long double x = from + 3.0L;
            return 2.0L * (std::log(x) + 2.0L) / std::sqrt(x);
        };
        const long double lo = sum + tail(static_cast<long double>(K) + 1.0L);
        const long double hi = sum + tail(static_cast<long double>(K));
        return SeriesBounds{static_cast<double>(lo), std::nextafter(static_cast<double>(hi), 1e300)};
    }();
    return bounds;
}

/// C = C_0 + 4/e with the upper bound on C_0.
inline double chunk_error_constant() { return entropy_series_bounds().upper + 4.0 / std::exp(1.0); }

/// C / sqrt(n)
inline double chunk_error_bound(std::size_t n) {
    if (n < 1)
        throw DomainError("chunk_error_bound: n must be >= 1");
    return chunk_error_constant() / std::sqrt(static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Verifiers

/// For exponents in [s, s + eps] and ‖f‖ <= 1:
///   |Theta(f) - ‖f‖^{s+eps}| <= (eps/s) |ln Theta(f)| Theta(f)
/// and ‖f‖^{s+eps} <= Theta(f) <= ‖f‖^s.
inline VerificationReport verify_single_chunk_bound(const NakanoSpace& N, const SimpleFunction& f, double s,
                                                    double eps) {
    if (!(s >= 1.0) || !(eps > 0.0))
        throw ContractError("verify_single_chunk_bound: need s >= 1 and eps > 0");
    for (double p : N.exponent())
        if (p < s || p > s + eps)
            throw ContractError("verify_single_chunk_bound: exponent outside [s, s + eps]");
    const double a = luxemburg_norm(N, f);
    if (a > 1.0 + 1e-9)
        throw ContractError("verify_single_chunk_bound: f must lie in the unit ball");

    VerificationReport rep("single_chunk_bound", 1e-10);
    const double theta = modular(N, f);
    const double lo = std::pow(a, s + eps), hi = std::pow(a, s);
    auto w = [&] { return Witness{"f", {{"norm", a}, {"modular", theta}, {"s", s}, {"eps", eps}}}; };
    const double rhs = theta > 0.0 ? eps / s * std::fabs(std::log(theta)) * theta : 0.0;
    rep.record(rhs - std::fabs(theta - lo), w);
    rep.record(theta - lo, w);
    rep.record(hi - theta, w);
    return rep;
}

/// sum_k a_k |ln a_k| / (k + n) <= C / sqrt(n) for a_k >= 0 with sum <= 1.
inline VerificationReport verify_entropy_sum_bound(std::span<const double> a, std::size_t n) {
    if (n < 1)
        throw ContractError("verify_entropy_sum_bound: n must be >= 1");
    double mass = 0.0;
    for (double v : a) {
        if (!(v >= 0.0))
            throw ContractError("verify_entropy_sum_bound: entries must be >= 0");
        mass += v;
    }
    if (mass > 1.0 + 1e-12)
        throw ContractError("verify_entropy_sum_bound: entries must sum to <= 1");
    double lhs = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k] > 0.0)
            lhs += a[k] * std::fabs(std::log(a[k])) / static_cast<double>(k + n);
    VerificationReport rep("entropy_sum_bound", 1e-12);
    const double rhs = chunk_error_bound(n);
    rep.record(rhs - lhs, [&] {
        return Witness{"sequence", {{"n", static_cast<double>(n)}, {"lhs", lhs}, {"rhs", rhs}}};
    });
    return rep;
}

/// |Theta(f) - chunked_estimate(chunk(N, f, n))| <= C / sqrt(n) for ‖f‖ <= 1.
inline VerificationReport verify_chunk_error(const NakanoSpace& N, const SimpleFunction& f, std::size_t n) {
    if (luxemburg_norm(N, f) > 1.0 + 1e-9)
        throw ContractError("verify_chunk_error: f must lie in the unit ball");
    VerificationReport rep("chunk_error", 1e-10);
    const double theta = modular(N, f);
    const double est = chunked_estimate(chunk(N, f, n));
    const double bound = chunk_error_bound(n);
    rep.record(bound - std::fabs(theta - est), [&] {
        return Witness{"f", {{"n", static_cast<double>(n)}, {"modular", theta}, {"estimate", est}, {"bound", bound}}};
    });
    return rep;
}

} // namespace nakano
