#pragma once

#include <stdexcept>
#include <string>

namespace trajex {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TRAJEX_DECLARE_ERROR(Name)       \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

// geometry
TRAJEX_DECLARE_ERROR(DegenerateConfiguration);
TRAJEX_DECLARE_ERROR(TooFewCorrespondences);
TRAJEX_DECLARE_ERROR(PointAtInfinity);
TRAJEX_DECLARE_ERROR(UnknownFrame);

// tracking / post-processing
TRAJEX_DECLARE_ERROR(NumericalBreakdown);
TRAJEX_DECLARE_ERROR(TimestampRegression);
TRAJEX_DECLARE_ERROR(TooShort);

// simulation
TRAJEX_DECLARE_ERROR(InvalidLaneGeometry);

// evaluation
TRAJEX_DECLARE_ERROR(OutOfRange);
TRAJEX_DECLARE_ERROR(NoCrossing);
TRAJEX_DECLARE_ERROR(GridMismatch);
TRAJEX_DECLARE_ERROR(MissingMode);

// configuration documents and files
TRAJEX_DECLARE_ERROR(ConfigError);
TRAJEX_DECLARE_ERROR(IoError);

#undef TRAJEX_DECLARE_ERROR

}  // namespace trajex
