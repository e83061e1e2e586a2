#include "dirinfo/error.hpp"

namespace dirinfo {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::BadInput: return "BadInput";
    case ErrorKind::BadBand: return "BadBand";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::DegenerateColumn: return "DegenerateColumn";
    case ErrorKind::BadLambda: return "BadLambda";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::TooFewTrials: return "TooFewTrials";
    case ErrorKind::BadWindow: return "BadWindow";
    case ErrorKind::NumericalError: return "NumericalError";
    case ErrorKind::BadSigma: return "BadSigma";
    case ErrorKind::BadPValue: return "BadPValue";
    case ErrorKind::BadK: return "BadK";
    case ErrorKind::BadDims: return "BadDims";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::BadLabels: return "BadLabels";
    case ErrorKind::BadSpec: return "BadSpec";
    case ErrorKind::NoOracle: return "NoOracle";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::Validation: return "Validation";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::IoError:
    case ErrorKind::EmptyInput:
      return 2;
    case ErrorKind::NumericalError:
      return 4;
    default:
      return 3;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace dirinfo
