#pragma once

#include <stdexcept>
#include <string>

namespace formdet {

// Base class for every error the toolkit throws across module boundaries.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FORMDET_DEFINE_ERROR(Name)            \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

FORMDET_DEFINE_ERROR(MalformedPdf);
FORMDET_DEFINE_ERROR(EncryptedPdf);
FORMDET_DEFINE_ERROR(PageOutOfRange);
FORMDET_DEFINE_ERROR(DegenerateRect);
FORMDET_DEFINE_ERROR(InsufficientPages);
FORMDET_DEFINE_ERROR(MalformedTagFile);
FORMDET_DEFINE_ERROR(MalformedDetections);
FORMDET_DEFINE_ERROR(UnknownSliceKey);
FORMDET_DEFINE_ERROR(ExistingForm);
FORMDET_DEFINE_ERROR(GeometryMismatch);
FORMDET_DEFINE_ERROR(RenderFailure);
FORMDET_DEFINE_ERROR(IoError);
FORMDET_DEFINE_ERROR(ConfigError);

#undef FORMDET_DEFINE_ERROR

}  // namespace formdet
