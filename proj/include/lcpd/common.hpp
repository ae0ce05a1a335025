#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lcpd {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error hierarchy. Every failure surfaced by the library derives from Error so
// callers (the CLI in particular) can map categories to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NonPositiveDiagonal : public Error {
public:
    using Error::Error;
};

class TargetOutOfRange : public Error {
public:
    using Error::Error;
};

class NegativeZetaSquared : public Error {
public:
    using Error::Error;
};

class Infeasible : public Error {
public:
    using Error::Error;
};

class SolverStall : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

inline void require_dims(bool ok, const std::string& what) {
    if (!ok) throw DimensionMismatch(what);
}

}  // namespace lcpd
