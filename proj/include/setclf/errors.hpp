// errors.hpp - exception hierarchy shared by all setclf modules.

#ifndef SETCLF_ERRORS_HPP
#define SETCLF_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace setclf {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A symmetric matrix failed the positive-definiteness check (pivot <= 1e-12).
class NotPositiveDefiniteError : public Error {
public:
    explicit NotPositiveDefiniteError(const std::string& what) : Error(what) {}
};

class DimensionMismatchError : public Error {
public:
    explicit DimensionMismatchError(const std::string& what) : Error(what) {}
};

class EmptySetError : public Error {
public:
    explicit EmptySetError(const std::string& what) : Error(what) {}
};

// Training data lacks one of the two classes.
class MissingClassError : public Error {
public:
    explicit MissingClassError(const std::string& what) : Error(what) {}
};

// The simplex exceeded its pivot budget; signals numerical trouble.
class IterationLimitError : public Error {
public:
    explicit IterationLimitError(const std::string& what) : Error(what) {}
};

// Vertex-enumeration oracle invoked beyond its combinatorial guard.
class TooLargeError : public Error {
public:
    explicit TooLargeError(const std::string& what) : Error(what) {}
};

// A constrained estimation problem has an empty feasible set.
class InfeasibleError : public Error {
public:
    explicit InfeasibleError(const std::string& what) : Error(what) {}
};

// One column of the CLIME program was infeasible; carries the column index.
class InfeasibleColumnError : public InfeasibleError {
public:
    InfeasibleColumnError(std::size_t column, const std::string& what)
        : InfeasibleError(what), column_(column) {}
    std::size_t column() const { return column_; }

private:
    std::size_t column_;
};

// An iterative fit (the scalar logistic regression) did not converge.
class NoConvergenceError : public Error {
public:
    explicit NoConvergenceError(const std::string& what) : Error(what) {}
};

// Malformed input file (data, model, or config).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

// Filesystem-level failure while reading or writing.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace setclf

#endif  // SETCLF_ERRORS_HPP
