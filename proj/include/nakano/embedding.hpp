#pragma once

// Lattice embeddings between Nakano spaces over finite atom sets. Each source
// atom is sent to a weighted indicator of a set of target atoms; the target
// sets of distinct source atoms are disjoint.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nakano/errors.hpp"
#include "nakano/measure.hpp"
#include "nakano/nakano_space.hpp"
#include "nakano/random.hpp"
#include "nakano/report.hpp"

namespace nakano {

struct ImageTerm {
    std::size_t atom; ///< target atom index
    double coeff;     ///< > 0
};

class RefinementEmbedding {
public:
    RefinementEmbedding(NakanoSpace source, NakanoSpace target, std::vector<std::vector<ImageTerm>> image)
        : source_(std::move(source)), target_(std::move(target)), image_(std::move(image)),
          owner_(target_.size(), npos) {
        if (image_.size() != source_.size())
            throw DomainError("RefinementEmbedding: one image list per source atom required");
        for (std::size_t a = 0; a < image_.size(); ++a) {
            if (image_[a].empty())
                throw DomainError("RefinementEmbedding: source atom '" + source_.atoms()->id(a) +
                                  "' has an empty image");
            for (const auto& term : image_[a]) {
                if (term.atom >= target_.size())
                    throw DomainError("RefinementEmbedding: target atom index out of range");
                if (!std::isfinite(term.coeff) || !(term.coeff > 0.0))
                    throw DomainError("RefinementEmbedding: coefficients must be finite and > 0");
                if (owner_[term.atom] != npos)
                    throw DomainError("RefinementEmbedding: target atom '" +
                                      target_.atoms()->id(term.atom) +
                                      "' appears in more than one image");
                owner_[term.atom] = a;
            }
        }
    }

    /// Builds from atom identifiers: source id -> [(target id, coeff)].
    static RefinementEmbedding
    from_ids(NakanoSpace source, NakanoSpace target,
             const std::map<std::string, std::vector<std::pair<std::string, double>>>& map) {
        std::vector<std::vector<ImageTerm>> image(source.size());
        for (const auto& [src, terms] : map) {
            auto& list = image[source.atoms()->index_of(src)];
            for (const auto& [dst, c] : terms)
                list.push_back({target.atoms()->index_of(dst), c});
        }
        return RefinementEmbedding(std::move(source), std::move(target), std::move(image));
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    const NakanoSpace& source() const noexcept { return source_; }
    const NakanoSpace& target() const noexcept { return target_; }
    const std::vector<std::vector<ImageTerm>>& image() const noexcept { return image_; }
    const std::vector<ImageTerm>& image(std::size_t a) const { return image_.at(a); }

    /// Source atom whose image contains target atom `y`, or npos.
    std::size_t owner(std::size_t y) const { return owner_.at(y); }

    bool characteristic_preserving() const {
        for (const auto& terms : image_)
            for (const auto& t : terms)
                if (t.coeff != 1.0)
                    return false;
        return true;
    }

    /// For every source atom, the target mass of its image equals its weight.
    bool measure_preserving(double rel_tol = 1e-12) const {
        for (std::size_t a = 0; a < image_.size(); ++a) {
            double mass = 0.0;
            for (const auto& t : image_[a])
                mass += target_.space().weight(t.atom);
            const double w = source_.space().weight(a);
            if (std::fabs(mass - w) > rel_tol * w)
                return false;
        }
        return true;
    }

private:
    NakanoSpace source_;
    NakanoSpace target_;
    std::vector<std::vector<ImageTerm>> image_;
    std::vector<std::size_t> owner_;
};

/// Extension of the embedding to all simple functions:
/// (apply f)(y) = coeff(y) * f(owner(y)), and 0 off the image.
inline SimpleFunction apply(const RefinementEmbedding& e, const SimpleFunction& f) {
    require_same_atoms(e.source().atoms(), f.atoms(), "apply");
    std::vector<double> out(e.target().size(), 0.0);
    for (std::size_t a = 0; a < f.size(); ++a)
        for (const auto& t : e.image(a))
            out[t.atom] = t.coeff * f[a];
    return SimpleFunction(e.target().atoms(), std::move(out));
}

/// Whether integration is preserved for `f`. Requires a characteristic- and
/// measure-preserving embedding.
inline bool check_integral_preservation(const RefinementEmbedding& e, const SimpleFunction& f) {
    if (!e.characteristic_preserving())
        throw ContractError("check_integral_preservation: embedding is not characteristic-preserving");
    if (!e.measure_preserving())
        throw ContractError("check_integral_preservation: embedding is not measure-preserving");
    const double lhs = integrate(e.source().space(), f);
    const double rhs = integrate(e.target().space(), apply(e, f));
    return std::fabs(lhs - rhs) <= 1e-10 * (1.0 + std::fabs(lhs));
}

namespace detail {

inline constexpr std::uint64_t probe_seed = 0x6e616b616e6fULL;
inline constexpr std::size_t random_probe_count = 64;
inline constexpr double rigidity_tolerance = 1e-9;

inline std::string describe(const SimpleFunction& f) {
    std::ostringstream os;
    os.precision(12);
    os << '(';
    for (std::size_t i = 0; i < f.size(); ++i)
        os << (i ? "," : "") << f.atoms()->id(i) << '=' << f[i];
    os << ')';
    return os.str();
}

} // namespace detail

/// Probe functions for the isometry test: every indicator, every sum of two
/// indicators, and 64 seeded random nonnegative functions.
inline std::vector<SimpleFunction> isometry_probes(const NakanoSpace& source) {
    const auto& space = source.space();
    std::vector<SimpleFunction> probes;
    for (std::size_t i = 0; i < space.size(); ++i)
        probes.push_back(SimpleFunction::indicator(space, i));
    for (std::size_t i = 0; i < space.size(); ++i)
        for (std::size_t j = i + 1; j < space.size(); ++j)
            probes.push_back(SimpleFunction::indicator(space, i) + SimpleFunction::indicator(space, j));
    Rng rng(detail::probe_seed);
    for (std::size_t k = 0; k < detail::random_probe_count; ++k)
        probes.push_back(random_nonnegative(rng, space));
    return probes;
}

struct IsometryDefect {
    double worst = 0.0; ///< max |‖θf‖ - ‖f‖| / max(1, ‖f‖) over probes
    std::string witness;
    double source_norm = 0.0;
    double target_norm = 0.0;
};

inline IsometryDefect isometry_defect(const RefinementEmbedding& e) {
    IsometryDefect d;
    for (const auto& f : isometry_probes(e.source())) {
        const double a = luxemburg_norm(e.source(), f);
        const double b = luxemburg_norm(e.target(), apply(e, f));
        const double defect = std::fabs(a - b) / std::max(1.0, a);
        if (defect > d.worst || std::isnan(defect)) {
            d = {defect, detail::describe(f), a, b};
        }
    }
    return d;
}

struct NormalizedEmbedding {
    SimpleFunction zeta;       ///< d lambda / d nu on the target atoms
    AtomicMeasureSpace lambda; ///< the new target measure
    RefinementEmbedding embedding;
};

/// Density-change normalization without the isometry check: zeta = coeff^q on
/// image atoms and 1 elsewhere, lambda = zeta nu, and the embedding is
/// composed with the density change from nu to lambda.
inline NormalizedEmbedding normalize_unchecked(const RefinementEmbedding& e) {
    const NakanoSpace& target = e.target();
    std::vector<double> zeta(target.size(), 1.0);
    for (const auto& terms : e.image())
        for (const auto& t : terms)
            zeta[t.atom] = std::pow(t.coeff, target.exponent(t.atom));

    std::vector<double> lambda(target.size());
    for (std::size_t y = 0; y < lambda.size(); ++y)
        lambda[y] = zeta[y] * target.space().weight(y);
    AtomicMeasureSpace lambda_space(target.atoms(), std::move(lambda));

    // (D g)_y = (nu_y / lambda_y)^{1/q_y} g_y
    std::vector<std::vector<ImageTerm>> image = e.image();
    for (auto& terms : image)
        for (auto& t : terms) {
            const double ratio = target.space().weight(t.atom) / lambda_space.weight(t.atom);
            t.coeff *= std::pow(ratio, 1.0 / target.exponent(t.atom));
        }
    NakanoSpace new_target = with_measure(target, lambda_space);
    return {SimpleFunction(target.atoms(), std::move(zeta)), std::move(lambda_space),
            RefinementEmbedding(e.source(), std::move(new_target), std::move(image))};
}

/// Normalizes an isometric embedding so it sends indicators to indicators.
/// Throws NotIsometric when a probe's norm is not preserved.
inline NormalizedEmbedding normalize(const RefinementEmbedding& e) {
    const IsometryDefect d = isometry_defect(e);
    if (!(d.worst <= detail::rigidity_tolerance))
        throw NotIsometric("normalize: embedding is not isometric on the probe set", d.witness,
                           d.source_norm, d.target_norm);
    return normalize_unchecked(e);
}

struct RigidityReport {
    CheckResult isometry; ///< precondition: norms preserved on the probe set
    std::vector<CheckResult> checks;

    bool passed() const {
        return isometry.passed &&
               std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }

    const CheckResult& check(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name)
                return c;
        throw DomainError("RigidityReport: no check named '" + name + "'");
    }
};

/// Normalizes `e` and checks the rigidity conclusions on the result:
///   characteristic  - all coefficients are 1
///   exponent        - q on each image atom equals p of its source atom
///   measure         - lambda-mass of each image equals the source weight
///   modular         - the modular functional is preserved on random probes
///   essential_range - ess rng p is contained in ess rng q
/// A non-isometric embedding is still normalized and checked; the isometry
/// entry records the failed precondition.
inline RigidityReport rigidity_check(const RefinementEmbedding& e) {
    if (e.source().size() < 2)
        throw ContractError("rigidity_check: source space must have at least two atoms");
    constexpr double tol = detail::rigidity_tolerance;
    RigidityReport report;

    const IsometryDefect d = isometry_defect(e);
    report.isometry = {"isometry", d.worst <= tol, d.worst, tol};

    const NormalizedEmbedding n = normalize_unchecked(e);
    const RefinementEmbedding& en = n.embedding;
    const NakanoSpace& src = en.source();
    const NakanoSpace& dst = en.target();

    double coeff_res = 0.0, exp_res = 0.0, mass_res = 0.0;
    for (std::size_t a = 0; a < src.size(); ++a) {
        double mass = 0.0;
        for (const auto& t : en.image(a)) {
            coeff_res = std::max(coeff_res, std::fabs(t.coeff - 1.0));
            exp_res = std::max(exp_res, std::fabs(dst.exponent(t.atom) - src.exponent(a)));
            mass += dst.space().weight(t.atom);
        }
        const double w = src.space().weight(a);
        mass_res = std::max(mass_res, std::fabs(mass - w) / w);
    }
    report.checks.push_back({"characteristic", coeff_res <= tol, coeff_res, tol});
    report.checks.push_back({"exponent", exp_res <= tol, exp_res, tol});
    report.checks.push_back({"measure", mass_res <= tol, mass_res, tol});

    double mod_res = 0.0;
    Rng rng(detail::probe_seed + 1);
    for (std::size_t k = 0; k < detail::random_probe_count; ++k) {
        const SimpleFunction f = random_function(rng, src.space(), 2.0);
        const double a = modular(src, f);
        const double b = modular(dst, apply(en, f));
        mod_res = std::max(mod_res, std::fabs(a - b) / std::max(1.0, a));
    }
    report.checks.push_back({"modular", mod_res <= tol, mod_res, tol});

    const auto rp = essential_range(src);
    const auto rq = essential_range(dst);
    double range_res = 0.0;
    for (double p : rp) {
        double best = std::numeric_limits<double>::infinity();
        for (double q : rq)
            best = std::min(best, std::fabs(p - q));
        range_res = std::max(range_res, best);
    }
    report.checks.push_back({"essential_range", range_res <= tol, range_res, tol});
    return report;
}

} // namespace nakano
