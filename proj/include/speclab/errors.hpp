#pragma once

#include <stdexcept>
#include <string>

namespace speclab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SPECLAB_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

SPECLAB_DEFINE_ERROR(SingularMatrix);
SPECLAB_DEFINE_ERROR(NotContractive);
SPECLAB_DEFINE_ERROR(DimensionMismatch);
SPECLAB_DEFINE_ERROR(InvalidArgument);
SPECLAB_DEFINE_ERROR(SizeCap);
SPECLAB_DEFINE_ERROR(VerificationFailed);
SPECLAB_DEFINE_ERROR(InvalidPadding);
SPECLAB_DEFINE_ERROR(MismatchedRL);
SPECLAB_DEFINE_ERROR(NonIntegerElement);
SPECLAB_DEFINE_ERROR(NotCompleteResidue);

#undef SPECLAB_DEFINE_ERROR

}  // namespace speclab
