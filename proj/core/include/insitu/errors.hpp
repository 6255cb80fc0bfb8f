#pragma once

#include <stdexcept>
#include <string>

namespace insitu {

/// Root of every error raised by the simulator. Callers that only care about
/// "something went wrong in the model" can catch this one type.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define INSITU_DECLARE_ERROR(Name)                                                                                     \
  class Name : public Error {                                                                                          \
  public:                                                                                                              \
    using Error::Error;                                                                                                \
  }

// Input files
INSITU_DECLARE_ERROR(ParseError);
INSITU_DECLARE_ERROR(ValidationError);
INSITU_DECLARE_ERROR(IoError);

// Platform / engine
INSITU_DECLARE_ERROR(UnknownNode);
INSITU_DECLARE_ERROR(DeadlockDetected);

// Data transport layer
INSITU_DECLARE_ERROR(DuplicateName);
INSITU_DECLARE_ERROR(QueueClosed);

// Workflow
INSITU_DECLARE_ERROR(ConfigError);
INSITU_DECLARE_ERROR(CountMismatch);
INSITU_DECLARE_ERROR(InvalidCoreCount);

// Model
INSITU_DECLARE_ERROR(DegenerateInput);
INSITU_DECLARE_ERROR(MalformedTrace);

// Experiments
INSITU_DECLARE_ERROR(InfeasibleScenario);

#undef INSITU_DECLARE_ERROR

} // namespace insitu
