#pragma once

// Finite atomic measure spaces and simple functions over them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nakano/errors.hpp"

namespace nakano {

/// Ordered, duplicate-free list of atom identifiers. Shared (immutably)
/// between a space and every function defined on it.
class AtomSet {
public:
    AtomSet() = default;

    explicit AtomSet(std::vector<std::string> ids) : ids_(std::move(ids)) {
        index_.reserve(ids_.size());
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            if (!index_.emplace(ids_[i], i).second)
                throw DomainError("duplicate atom identifier '" + ids_[i] + "'");
        }
    }

    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    const std::string& id(std::size_t i) const { return ids_.at(i); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    bool contains(const std::string& id) const { return index_.count(id) != 0; }

    std::size_t index_of(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end())
            throw DomainError("unknown atom '" + id + "'");
        return it->second;
    }

    friend bool operator==(const AtomSet& a, const AtomSet& b) { return a.ids_ == b.ids_; }

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> index_;
};

using AtomSetPtr = std::shared_ptr<const AtomSet>;

inline bool same_atoms(const AtomSetPtr& a, const AtomSetPtr& b) {
    return a == b || (a && b && *a == *b);
}

inline void require_same_atoms(const AtomSetPtr& a, const AtomSetPtr& b, const char* where) {
    if (!same_atoms(a, b))
        throw DomainError(std::string(where) + ": atom sets differ");
}

/// A finite measure space whose sigma-algebra is the power set of its atoms.
/// Every atom carries a strictly positive, finite weight.
class AtomicMeasureSpace {
public:
    AtomicMeasureSpace() : atoms_(std::make_shared<AtomSet>()) {}

    AtomicMeasureSpace(std::vector<std::string> ids, std::vector<double> weights)
        : AtomicMeasureSpace(std::make_shared<const AtomSet>(std::move(ids)), std::move(weights)) {}

    AtomicMeasureSpace(AtomSetPtr atoms, std::vector<double> weights)
        : atoms_(std::move(atoms)), weights_(std::move(weights)) {
        if (!atoms_)
            throw DomainError("AtomicMeasureSpace: null atom set");
        if (weights_.size() != atoms_->size())
            throw DomainError("AtomicMeasureSpace: one weight per atom required");
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            if (!std::isfinite(weights_[i]) || !(weights_[i] > 0.0))
                throw DomainError("AtomicMeasureSpace: weight of atom '" + atoms_->id(i) +
                                  "' must be finite and > 0");
        }
    }

    /// Atoms named "a0", "a1", ... with the given weights.
    static AtomicMeasureSpace with_weights(std::vector<double> weights) {
        std::vector<std::string> ids(weights.size());
        for (std::size_t i = 0; i < ids.size(); ++i)
            ids[i] = "a" + std::to_string(i);
        return AtomicMeasureSpace(std::move(ids), std::move(weights));
    }

    std::size_t size() const noexcept { return weights_.size(); }
    const AtomSetPtr& atoms() const noexcept { return atoms_; }
    std::span<const double> weights() const noexcept { return weights_; }
    double weight(std::size_t i) const { return weights_.at(i); }

    double total_mass() const {
        double total = 0.0;
        for (double w : weights_)
            total += w;
        return total;
    }

private:
    AtomSetPtr atoms_;
    std::vector<double> weights_;
};

/// A real value per atom.
class SimpleFunction {
public:
    SimpleFunction() : atoms_(std::make_shared<AtomSet>()) {}

    SimpleFunction(AtomSetPtr atoms, std::vector<double> values)
        : atoms_(std::move(atoms)), values_(std::move(values)) {
        if (!atoms_ || values_.size() != atoms_->size())
            throw DomainError("SimpleFunction: one value per atom required");
    }

    SimpleFunction(const AtomicMeasureSpace& space, std::vector<double> values)
        : SimpleFunction(space.atoms(), std::move(values)) {}

    static SimpleFunction zero(const AtomicMeasureSpace& space) {
        return SimpleFunction(space, std::vector<double>(space.size(), 0.0));
    }

    static SimpleFunction constant(const AtomicMeasureSpace& space, double c) {
        return SimpleFunction(space, std::vector<double>(space.size(), c));
    }

    /// Indicator of the atom with index `i`.
    static SimpleFunction indicator(const AtomicMeasureSpace& space, std::size_t i) {
        std::vector<double> v(space.size(), 0.0);
        v.at(i) = 1.0;
        return SimpleFunction(space, std::move(v));
    }

    std::size_t size() const noexcept { return values_.size(); }
    const AtomSetPtr& atoms() const noexcept { return atoms_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double at(const std::string& id) const { return values_.at(atoms_->index_of(id)); }

    bool is_zero() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
    }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const SimpleFunction& a, const SimpleFunction& b) {
        return same_atoms(a.atoms_, b.atoms_) && a.values_ == b.values_;
    }

private:
    AtomSetPtr atoms_;
    std::vector<double> values_;
};

/// Atomwise image of `f` under `fn`.
template <class Fn>
SimpleFunction transform(const SimpleFunction& f, Fn&& fn) {
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        out[i] = fn(f[i]);
    return SimpleFunction(f.atoms(), std::move(out));
}

/// Atomwise combination of `f` and `g` under `fn`.
template <class Fn>
SimpleFunction combine(const SimpleFunction& f, const SimpleFunction& g, Fn&& fn) {
    require_same_atoms(f.atoms(), g.atoms(), "combine");
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        out[i] = fn(f[i], g[i]);
    return SimpleFunction(f.atoms(), std::move(out));
}

inline SimpleFunction operator+(const SimpleFunction& f, const SimpleFunction& g) {
    return combine(f, g, std::plus<>{});
}

inline SimpleFunction operator-(const SimpleFunction& f, const SimpleFunction& g) {
    return combine(f, g, std::minus<>{});
}

inline SimpleFunction operator-(const SimpleFunction& f) {
    return transform(f, std::negate<>{});
}

inline SimpleFunction operator*(double c, const SimpleFunction& f) {
    return transform(f, [c](double v) { return c * v; });
}

inline SimpleFunction operator*(const SimpleFunction& f, double c) { return c * f; }

/// Atomwise product.
inline SimpleFunction multiply(const SimpleFunction& f, const SimpleFunction& g) {
    return combine(f, g, std::multiplies<>{});
}

/// Sum of weight_i * f_i.
inline double integrate(const AtomicMeasureSpace& space, const SimpleFunction& f) {
    require_same_atoms(space.atoms(), f.atoms(), "integrate");
    double total = 0.0;
    const auto w = space.weights();
    for (std::size_t i = 0; i < f.size(); ++i)
        total += w[i] * f[i];
    return total;
}

/// Density of `nu` with respect to `mu`: nu_i / mu_i. Both measures live on
/// the same atoms, and all weights are positive, so they are equivalent.
inline SimpleFunction radon_nikodym(const AtomicMeasureSpace& mu, const AtomicMeasureSpace& nu) {
    require_same_atoms(mu.atoms(), nu.atoms(), "radon_nikodym");
    std::vector<double> zeta(mu.size());
    for (std::size_t i = 0; i < zeta.size(); ++i)
        zeta[i] = nu.weight(i) / mu.weight(i);
    return SimpleFunction(mu.atoms(), std::move(zeta));
}

/// Indices of `ids` inside `space`, in the space's canonical order, without
/// duplicates.
inline std::vector<std::size_t> atom_indices(const AtomicMeasureSpace& space,
                                             std::span<const std::string> ids) {
    std::vector<char> keep(space.size(), 0);
    for (const auto& id : ids)
        keep[space.atoms()->index_of(id)] = 1;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i])
            out.push_back(i);
    return out;
}

/// Sub-space on the atoms with the given indices (ascending), sharing weights.
inline AtomicMeasureSpace restrict_space(const AtomicMeasureSpace& space,
                                         std::span<const std::size_t> indices) {
    std::vector<std::string> ids;
    std::vector<double> weights;
    ids.reserve(indices.size());
    weights.reserve(indices.size());
    for (std::size_t i : indices) {
        ids.push_back(space.atoms()->id(i));
        weights.push_back(space.weight(i));
    }
    return AtomicMeasureSpace(std::move(ids), std::move(weights));
}

/// Restriction of `f` to an atom subset. The result keeps the parent's
/// atom order.
inline std::pair<AtomicMeasureSpace, SimpleFunction>
restrict(const AtomicMeasureSpace& space, const SimpleFunction& f, std::span<const std::string> ids) {
    require_same_atoms(space.atoms(), f.atoms(), "restrict");
    const auto idx = atom_indices(space, ids);
    AtomicMeasureSpace sub = restrict_space(space, idx);
    std::vector<double> values;
    values.reserve(idx.size());
    for (std::size_t i : idx)
        values.push_back(f[i]);
    SimpleFunction g(sub, std::move(values));
    return {std::move(sub), std::move(g)};
}

} // namespace nakano
