#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace repdis {

/// Failure categories. Each maps to a distinct CLI exit code.
enum class ErrorCategory {
  Dimension,
  DegenerateVector,
  EmptyDataset,
  Numerical,
  Format,
  Io,
  UnknownDomain,
  InvalidArgument,
};

std::string_view category_name(ErrorCategory c) noexcept;
int exit_code(ErrorCategory c) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, const std::string& detail)
      : std::runtime_error(detail), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

private:
  ErrorCategory category_;
};

#define REPDIS_DEFINE_ERROR(Name, Cat)                                        \
  class Name : public Error {                                                 \
  public:                                                                     \
    explicit Name(const std::string& detail) : Error(ErrorCategory::Cat, detail) {} \
  };

REPDIS_DEFINE_ERROR(DimensionError, Dimension)
REPDIS_DEFINE_ERROR(DegenerateVectorError, DegenerateVector)
REPDIS_DEFINE_ERROR(EmptyDatasetError, EmptyDataset)
REPDIS_DEFINE_ERROR(NumericalError, Numerical)
REPDIS_DEFINE_ERROR(FormatError, Format)
REPDIS_DEFINE_ERROR(IoError, Io)
REPDIS_DEFINE_ERROR(UnknownDomainError, UnknownDomain)
REPDIS_DEFINE_ERROR(InvalidArgumentError, InvalidArgument)

#undef REPDIS_DEFINE_ERROR

}  // namespace repdis
