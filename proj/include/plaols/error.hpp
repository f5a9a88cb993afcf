#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace plaols {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  InvalidArgument,    // bad parameter value or precondition on sizes
  DegenerateInput,    // zero variance, too few rows, perfectly collinear data
  ContractViolation,  // caller broke an input contract (e.g. data not centred)
  Singular,           // Cholesky failure or condition number above the guard
  NumericalFailure,   // iterative solver did not converge
  Structural,         // block/sparsity structure required by a formula is absent
  BlockMismatch,      // |Delta| != |D| when pairing eigenvectors with variables
  InputFormat,        // malformed CSV / JSON
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by match_eigen_to_block; carries the eigen index set that was found.
class BlockMismatchError : public Error {
 public:
  BlockMismatchError(const std::string& what, std::vector<std::size_t> found)
      : Error(ErrorKind::BlockMismatch, what), found_(std::move(found)) {}

  const std::vector<std::size_t>& found() const noexcept { return found_; }

 private:
  std::vector<std::size_t> found_;
};

}  // namespace plaols
