#include "repdis/error.hpp"

namespace repdis {

std::string_view category_name(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::Dimension: return "DimensionError";
    case ErrorCategory::DegenerateVector: return "DegenerateVectorError";
    case ErrorCategory::EmptyDataset: return "EmptyDatasetError";
    case ErrorCategory::Numerical: return "NumericalError";
    case ErrorCategory::Format: return "FormatError";
    case ErrorCategory::Io: return "IoError";
    case ErrorCategory::UnknownDomain: return "UnknownDomainError";
    case ErrorCategory::InvalidArgument: return "InvalidArgumentError";
  }
  return "Error";
}

int exit_code(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::Format: return 3;
    case ErrorCategory::Dimension: return 4;
    case ErrorCategory::EmptyDataset: return 5;
    case ErrorCategory::Numerical: return 6;
    case ErrorCategory::DegenerateVector: return 7;
    case ErrorCategory::Io: return 8;
    case ErrorCategory::UnknownDomain: return 9;
    case ErrorCategory::InvalidArgument: return 2;
  }
  return 1;
}

}  // namespace repdis
