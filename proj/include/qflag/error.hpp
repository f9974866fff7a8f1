#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qflag {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Non-finite values or other breakdown of floating point arithmetic.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what, std::size_t step = 0)
        : Error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// log of a (near) antipodal unit quaternion.
class BranchError : public Error {
public:
    using Error::Error;
};

/// Newton retraction started too far from the group.
class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& what, double defect)
        : Error(what), defect_(defect) {}
    double defect() const noexcept { return defect_; }

private:
    double defect_;
};

/// A path left the affine chart: some last-row entry |q_nj| fell to the floor.
class DomainExitError : public Error {
public:
    DomainExitError(std::size_t column, double modulus)
        : Error("affine chart exit: |q_n" + std::to_string(column + 1) + "| = " +
                std::to_string(modulus)),
          column_(column),
          modulus_(modulus) {}
    std::size_t column() const noexcept { return column_; }
    double modulus() const noexcept { return modulus_; }

private:
    std::size_t column_;
    double modulus_;
};

/// Gram matrix of the monomials lost positive definiteness in working precision.
class ConditioningError : public Error {
public:
    ConditioningError(const std::string& what, int max_safe_degree)
        : Error(what), max_safe_degree_(max_safe_degree) {}
    int max_safe_degree() const noexcept { return max_safe_degree_; }

private:
    int max_safe_degree_;
};

class QuadratureError : public Error {
public:
    using Error::Error;
};

/// Estimator called with too few samples.
class SampleSizeError : public Error {
public:
    using Error::Error;
};

}  // namespace qflag
