#pragma once

#include <stdexcept>
#include <string>

namespace corrlab {

/// Input outside the mathematical domain of an operation (|sigma| > 1,
/// negative mass, t <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Problem size above a configured cap.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// A statistic was requested over a sample that lacks required data.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Transport or peer failure in the networked GHZ session.
class NetworkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed wire record or protocol violation.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace corrlab
