#pragma once

#include <stdexcept>
#include <string>

namespace nakano {

/// Inputs outside an operation's domain: atom-set mismatches, non-finite
/// values, parameters out of range.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A documented precondition of an operation was not met by the caller.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// An embedding failed the isometry probe. `witness()` describes the probe
/// function and the two norms that disagree.
class NotIsometric : public ContractError {
public:
    NotIsometric(const std::string& what, std::string witness, double source_norm,
                 double target_norm)
        : ContractError(what), witness_(std::move(witness)),
          source_norm_(source_norm), target_norm_(target_norm) {}

    const std::string& witness() const noexcept { return witness_; }
    double source_norm() const noexcept { return source_norm_; }
    double target_norm() const noexcept { return target_norm_; }

private:
    std::string witness_;
    double source_norm_;
    double target_norm_;
};

} // namespace nakano
