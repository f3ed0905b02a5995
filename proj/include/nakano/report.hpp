#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace nakano {

/// Named numeric values describing where a check was tight or violated.
struct Witness {
    std::string description;
    std::vector<std::pair<std::string, double>> values;
};

/// Outcome of running an inequality over many sample points.
///
/// margin = (allowed side) - (observed side); a point violates the check when
/// margin < -tolerance. `tolerance` absorbs floating-point rounding only.
struct VerificationReport {
    std::string name;
    double tolerance = 0.0;
    std::size_t checked = 0;
    std::size_t violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    Witness worst;                 ///< point attaining worst_margin
    std::vector<Witness> failures; ///< first few violating points

    static constexpr std::size_t max_failures = 5;

    VerificationReport() = default;
    VerificationReport(std::string n, double tol) : name(std::move(n)), tolerance(tol) {}

    bool ok() const noexcept { return violations == 0; }

    /// Records one sample. `make_witness` is only invoked when needed.
    template <class MakeWitness>
    void record(double margin, MakeWitness&& make_witness) {
        ++checked;
        const bool bad = !(margin >= -tolerance);
        const bool worse = std::isnan(margin) ? !std::isnan(worst_margin) : margin < worst_margin;
        if (worse) {
            worst_margin = margin;
            worst = make_witness();
        }
        if (bad) {
            if (failures.size() < max_failures)
                failures.push_back(make_witness());
            ++violations;
        }
    }

    void record(double margin) {
        record(margin, [] { return Witness{}; });
    }

    /// Folds another report's counters into this one.
    void merge(const VerificationReport& other) {
        checked += other.checked;
        violations += other.violations;
        if (other.worst_margin < worst_margin) {
            worst_margin = other.worst_margin;
            worst = other.worst;
        }
        for (const auto& f : other.failures)
            if (failures.size() < max_failures)
                failures.push_back(f);
    }
};

/// A single pass/fail check with its residual.
struct CheckResult {
    std::string name;
    bool passed = false;
    double residual = 0.0;
    double tolerance = 0.0;
};

} // namespace nakano
