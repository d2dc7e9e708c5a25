#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fpprep {

// Base class for everything this library throws.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A value is outside the mathematical domain of an operation (NaN to ulp(), etc).
class domain_error : public error {
public:
    using error::error;
};

// A documented precondition was violated by the caller.
class contract_error : public error {
public:
    using error::error;
};

// Dataset contains values the transforms do not support
// (negative, -0.0, NaN, infinity, subnormal).
class unsupported_input_error : public error {
public:
    using error::error;
};

// The requested shared-bit window cannot hold the packed dataset.
// max_feasible_d is the largest parameter that would have worked (0 = none).
class capacity_error : public error {
public:
    capacity_error(const std::string& what, int max_d)
        : error(what), max_feasible_d(max_d) {}
    int max_feasible_d = 0;
};

// The iteration cap was reached, or the per-iteration construction ran out
// of room before every value reached the target window.
class non_convergence_error : public error {
public:
    non_convergence_error(const std::string& what, int max_d)
        : error(what), max_feasible_d(max_d) {}
    int max_feasible_d = 0;
};

// The transform would push values past the largest (or below the smallest)
// usable exponent.
class range_exhausted_error : public error {
public:
    using error::error;
};

// Serialized bytes are malformed, truncated, or internally inconsistent.
class integrity_error : public error {
public:
    using error::error;
};

// Text input could not be parsed; row is the 1-based data row.
class parse_error : public error {
public:
    parse_error(const std::string& what, std::size_t row_index)
        : error(what), row(row_index) {}
    std::size_t row = 0;
};

// A checked-mode internal assertion failed. Indicates a library bug.
class check_error : public error {
public:
    using error::error;
};

}  // namespace fpprep
