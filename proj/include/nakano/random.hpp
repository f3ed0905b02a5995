#pragma once

// Seeded instance generators. The draws depend only on the seed and on
// std::mt19937_64, whose output sequence is fixed by the standard, so
// results are reproducible across standard libraries.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "nakano/measure.hpp"
#include "nakano/nakano_space.hpp"

namespace nakano {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform in {lo, ..., hi}.
    std::size_t index(std::size_t lo, std::size_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::size_t>(engine_() % span);
    }

    bool coin() { return (engine_() >> 63) != 0; }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

inline AtomicMeasureSpace random_space(Rng& rng, std::size_t atoms, double wmin = 0.05,
                                       double wmax = 2.0) {
    std::vector<double> w(atoms);
    for (auto& x : w)
        x = rng.uniform(wmin, wmax);
    return AtomicMeasureSpace::with_weights(std::move(w));
}

/// Exponents uniform in [pmin, pmax]; the bound r is `r`.
inline NakanoSpace random_nakano(Rng& rng, std::size_t atoms, double pmin, double pmax, double r) {
    auto space = random_space(rng, atoms);
    std::vector<double> p(atoms);
    for (auto& x : p)
        x = rng.uniform(pmin, pmax);
    return NakanoSpace(std::move(space), std::move(p), r);
}

/// Values uniform in [-scale, scale]; some atoms are zeroed.
inline SimpleFunction random_function(Rng& rng, const AtomicMeasureSpace& space, double scale = 1.0,
                                      double zero_fraction = 0.1) {
    std::vector<double> v(space.size());
    for (auto& x : v)
        x = rng.uniform() < zero_fraction ? 0.0 : rng.uniform(-scale, scale);
    return SimpleFunction(space, std::move(v));
}

inline SimpleFunction random_nonnegative(Rng& rng, const AtomicMeasureSpace& space, double scale = 1.0) {
    std::vector<double> v(space.size());
    for (auto& x : v)
        x = rng.uniform(0.0, scale);
    return SimpleFunction(space, std::move(v));
}

/// A random function with Luxemburg norm equal to `radius` (0 gives 0).
inline SimpleFunction random_with_norm(Rng& rng, const NakanoSpace& N, double radius) {
    SimpleFunction f = random_function(rng, N.space());
    if (f.is_zero() || radius == 0.0)
        return SimpleFunction::zero(N.space());
    const double n = luxemburg_norm(N, f);
    return (radius / n) * f;
}

/// A random element of the closed unit ball. A quarter of the draws sit on
/// the unit sphere.
inline SimpleFunction random_unit_ball(Rng& rng, const NakanoSpace& N) {
    const double radius = rng.uniform() < 0.25 ? 1.0 : rng.uniform();
    SimpleFunction f = random_with_norm(rng, N, radius);
    // Rounding can leave the norm a hair above 1.
    const double n = luxemburg_norm(N, f);
    if (n > 1.0)
        f = (1.0 / n) * f;
    return f;
}

} // namespace nakano
