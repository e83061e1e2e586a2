#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dirinfo {

enum class ErrorKind {
  ParseError,
  IoError,
  EmptyInput,
  BadInput,
  BadBand,
  TooShort,
  DegenerateInput,
  DegenerateColumn,
  BadLambda,
  ShapeError,
  TooFewTrials,
  BadWindow,
  NumericalError,
  BadSigma,
  BadPValue,
  BadK,
  BadDims,
  EmptyCorpus,
  BadLabels,
  BadSpec,
  NoOracle,
  TooLarge,
  Validation,
};

std::string_view to_string(ErrorKind kind);

// Process exit code used by the CLI: 2 for I/O, 4 for numerical failure,
// 3 for every contract/validation violation.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  // The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace dirinfo
