#pragma once
#include <stdexcept>
#include <string>

namespace survens {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define SURVENS_DEFINE_ERROR(Name) \
  struct Name : Error {            \
    using Error::Error;            \
  }

// dataset
SURVENS_DEFINE_ERROR(MalformedRow);
SURVENS_DEFINE_ERROR(DuplicateVisit);
SURVENS_DEFINE_ERROR(MissingOutcome);
// synth
SURVENS_DEFINE_ERROR(InvalidConfig);
// impute
SURVENS_DEFINE_ERROR(NoCompletePredictors);
SURVENS_DEFINE_ERROR(SingularDesign);
// coxnet / survival models
SURVENS_DEFINE_ERROR(NoEvents);
SURVENS_DEFINE_ERROR(NonConvergence);
SURVENS_DEFINE_ERROR(FeatureMismatch);
SURVENS_DEFINE_ERROR(EmptySelection);
SURVENS_DEFINE_ERROR(TooFewEvents);
SURVENS_DEFINE_ERROR(DivergedLoss);
// ensemble
SURVENS_DEFINE_ERROR(LengthMismatch);
// metrics
SURVENS_DEFINE_ERROR(NoComparablePairs);
// pipeline
SURVENS_DEFINE_ERROR(EmptyBin);
// cli / config
SURVENS_DEFINE_ERROR(ConfigError);

#undef SURVENS_DEFINE_ERROR

}  // namespace survens
