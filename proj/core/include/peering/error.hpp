#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace peering {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: out-of-range parameters, inconsistent targets, bad agreements.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An iterative solver did not reach its tolerance, or its answer could not be certified.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> residuals = {})
        : Error(what), residuals_(std::move(residuals)) {}

    const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed or invalid input file content, located by line and column.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& column,
               const std::string& message)
        : ValidationError(source + ":" + std::to_string(line) + (column.empty() ? "" : " [" + column + "]") +
                ": " + message),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::string column_;
};

}  // namespace peering
