#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace suelogit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

using LinkIndex = std::size_t;
using NodeId = int;

// Error taxonomy shared by every module. The CLI maps these onto exit codes.

/// Malformed or inconsistent input (dimensions, unknown ids, bad files).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Too few observations for the number of estimated coefficients.
class DegreesOfFreedomError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coefficients cannot be identified from the data (singular normal matrix).
class IdentifiabilityError : public std::runtime_error {
 public:
  IdentifiabilityError(const std::string& what, std::vector<std::string> coefficients)
      : std::runtime_error(what), coefficients_(std::move(coefficients)) {}

  const std::vector<std::string>& coefficients() const noexcept { return coefficients_; }

 private:
  std::vector<std::string> coefficients_;
};

}  // namespace suelogit
