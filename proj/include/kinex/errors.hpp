#pragma once

#include <stdexcept>
#include <string>

namespace kinex {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define KINEX_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

KINEX_DEFINE_ERROR(InvalidConfig);
KINEX_DEFINE_ERROR(InvalidModel);
KINEX_DEFINE_ERROR(InvalidMeasure);
KINEX_DEFINE_ERROR(NonIntegrable);
KINEX_DEFINE_ERROR(ZeroMean);
KINEX_DEFINE_ERROR(EmptyMeasure);
KINEX_DEFINE_ERROR(IndexOutOfRange);
KINEX_DEFINE_ERROR(UnequalTotals);
KINEX_DEFINE_ERROR(DegenerateModel);
KINEX_DEFINE_ERROR(InvalidRate);
KINEX_DEFINE_ERROR(IoError);

#undef KINEX_DEFINE_ERROR

}  // namespace kinex
