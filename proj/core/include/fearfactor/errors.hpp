#pragma once

#include <stdexcept>

namespace fearfactor {

/// Too few firms, observations or windows to estimate anything.
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two series share too few dates for the requested estimator.
class InsufficientOverlap : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fearfactor
