#pragma once

#include <stdexcept>
#include <string>

namespace cpde {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CPDE_DEFINE_ERROR(Name)             \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

// measures_ot
CPDE_DEFINE_ERROR(MassMismatch);
CPDE_DEFINE_ERROR(DimensionMismatch);
CPDE_DEFINE_ERROR(EmptySupport);
CPDE_DEFINE_ERROR(InfeasiblePotentials);
CPDE_DEFINE_ERROR(ZeroRowMass);
CPDE_DEFINE_ERROR(SolverFailure);
CPDE_DEFINE_ERROR(InvalidMeasure);

// scalar conservation laws
CPDE_DEFINE_ERROR(RangeError);
CPDE_DEFINE_ERROR(NotMonotone);
CPDE_DEFINE_ERROR(CFLViolation);
CPDE_DEFINE_ERROR(GridMismatch);

// euler
CPDE_DEFINE_ERROR(SmallnessViolation);

// born-infeld
CPDE_DEFINE_ERROR(NonpositiveDensity);
CPDE_DEFINE_ERROR(PositivityLoss);

// experiment driver
CPDE_DEFINE_ERROR(ConfigError);
CPDE_DEFINE_ERROR(InvariantViolation);

#undef CPDE_DEFINE_ERROR

/// An iterative solver stopped before reaching its tolerance; carries the
/// best value it achieved.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double achieved) : Error(what), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

}  // namespace cpde
