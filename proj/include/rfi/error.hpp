#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rfi {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operands of incompatible dimensions.
class DimensionError : public Error {
public:
    DimensionError(const std::string& what, std::ptrdiff_t expected, std::ptrdiff_t actual)
        : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
                std::to_string(actual)),
          expected_(expected), actual_(actual) {}

    std::ptrdiff_t expected() const noexcept { return expected_; }
    std::ptrdiff_t actual() const noexcept { return actual_; }

private:
    std::ptrdiff_t expected_;
    std::ptrdiff_t actual_;
};

/// A parameter violates its documented domain (degenerate set, bad weight, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A computation produced a non-finite value or failed to converge.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Simulation blew up; carries the first offending chain and step.
class DivergenceError : public NumericError {
public:
    DivergenceError(std::size_t chain, std::size_t step)
        : NumericError("non-finite iterate in chain " + std::to_string(chain) + " at step " +
                       std::to_string(step)),
          chain_(chain), step_(step) {}

    std::size_t chain() const noexcept { return chain_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t chain_;
    std::size_t step_;
};

/// A diagnostic had too little usable data to reach a verdict.
class InconclusiveError : public Error {
public:
    using Error::Error;
};

} // namespace rfi
