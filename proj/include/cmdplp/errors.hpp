#pragma once

#include <stdexcept>
#include <string>

namespace cmdplp {

/// Malformed input: bad indices, wrong dimensions, invalid probabilities.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A square system whose smallest singular value is below the solve threshold.
class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, double sigma_min)
        : std::runtime_error(what), sigma_min_(sigma_min) {}
    double sigma_min() const noexcept { return sigma_min_; }

private:
    double sigma_min_;
};

/// The simplex engine could not finish (iteration cap, breakdown of the basis factorization).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A sampling walk ran out of steps before visiting every required state-action pair.
class CoverageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A condition that should be unreachable for a correctly configured run.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace cmdplp
