#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace rmdm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition: wrong dimensions, bad arguments, missing classes.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input files.
class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public NumericError {
 public:
  using NumericError::NumericError;
};

class EigenFailure : public NumericError {
 public:
  explicit EigenFailure(int dim)
      : NumericError("eigensolver failed to converge on a " + std::to_string(dim) + "x" +
                     std::to_string(dim) + " matrix"),
        dim_(dim) {}
  int dim() const noexcept { return dim_; }

 private:
  int dim_;
};

class NonConvergence : public NumericError {
 public:
  NonConvergence(double residual, int iterations, std::optional<int> class_id = std::nullopt)
      : NumericError(make_message(residual, iterations, class_id)),
        residual_(residual),
        iterations_(iterations),
        class_id_(class_id) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }
  std::optional<int> class_id() const noexcept { return class_id_; }

  NonConvergence with_class(int class_id) const {
    return NonConvergence(residual_, iterations_, class_id);
  }

 private:
  static std::string make_message(double residual, int iterations, std::optional<int> class_id) {
    std::string msg = "geometric mean did not converge after " + std::to_string(iterations) +
                      " iterations (residual " + std::to_string(residual) + ")";
    if (class_id) msg += " for class " + std::to_string(*class_id);
    return msg;
  }

  double residual_;
  int iterations_;
  std::optional<int> class_id_;
};

}  // namespace rmdm
