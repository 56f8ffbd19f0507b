#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace solnoise {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

constexpr double kPi = 3.14159265358979323846;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad arguments or an inconsistent configuration file.
struct ConfigError : Error {
  using Error::Error;
};

// The field blew up; carries the z at which it was detected.
struct DivergenceError : Error {
  double z;
  DivergenceError(const std::string& msg, double z_) : Error(msg), z(z_) {}
};

// Relaxation ran out of z budget without reaching the stationarity tolerance.
struct NoAttractorError : Error {
  using Error::Error;
};

// A two-pulse configuration merged or lost a pulse during relaxation.
struct PairCollapseError : Error {
  using Error::Error;
};

// A field did not have the structure a measurement requires.
struct MeasurementError : Error {
  using Error::Error;
};

// An internal invariant (commutator drift, physicality) was violated.
struct ConsistencyError : Error {
  using Error::Error;
};

}  // namespace solnoise
