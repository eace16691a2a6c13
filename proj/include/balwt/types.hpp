#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace balwt {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Index = Eigen::Index;

// Error taxonomy. Every failure mode surfaced by the library derives from
// Error so the CLI can map it to a single nonzero exit path.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidInput : Error {
  explicit InvalidInput(const std::string& msg) : Error(msg) {}
};
struct SchemaError : Error {
  explicit SchemaError(const std::string& msg) : Error(msg) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};
struct InvalidSplit : Error {
  explicit InvalidSplit(const std::string& msg) : Error(msg) {}
};
struct InvalidHyperparameter : Error {
  explicit InvalidHyperparameter(const std::string& msg) : Error(msg) {}
};
struct ConvergenceError : Error {
  ConvergenceError(const std::string& msg, Vector last)
      : Error(msg), last_iterate(std::move(last)) {}
  Vector last_iterate;
};
struct NotDiagonalError : Error {
  explicit NotDiagonalError(const std::string& msg) : Error(msg) {}
};
struct InfeasibleError : Error {
  InfeasibleError(const std::string& msg, double min_feasible)
      : Error(msg), delta_min(min_feasible) {}
  double delta_min = 0.0;
};
struct DegenerateWeights : Error {
  explicit DegenerateWeights(const std::string& msg) : Error(msg) {}
};

inline constexpr const char* kVersion = "0.1.0";

}  // namespace balwt
