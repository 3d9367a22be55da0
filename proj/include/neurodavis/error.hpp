#ifndef NEURODAVIS_ERROR_HPP
#define NEURODAVIS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace neurodavis {

/// Caller supplied data that violates a precondition (shape, range, index).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A configuration value is out of its allowed domain.
class InvalidConfig : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input is well formed but carries no usable signal (zero variance, constant data).
class DegenerateInput : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative numeric routine failed to converge or produced a non-finite value.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double last_value)
        : std::runtime_error(what), last_value_(last_value) {}

    double last_value() const { return last_value_; }

private:
    double last_value_;
};

/// Malformed text input; row and column are 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : std::runtime_error(what + " (row " + std::to_string(row) + ", column " + std::to_string(column) + ")"),
          row_(row), column_(column) {}

    std::size_t row() const { return row_; }
    std::size_t column() const { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

}  // namespace neurodavis

#endif
