#pragma once

#include <stdexcept>
#include <string>

namespace pri {

enum class ErrorKind {
  Config,
  Format,
  Argument,
  MissingChannel,
  InsufficientData,
  Sampling,
  Training,
  Experiment,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Argument: return "argument error";
    case ErrorKind::MissingChannel: return "missing channel";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Sampling: return "sampling error";
    case ErrorKind::Training: return "training error";
    case ErrorKind::Experiment: return "experiment error";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define PRI_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

PRI_DEFINE_ERROR(ConfigError, Config)
PRI_DEFINE_ERROR(FormatError, Format)
PRI_DEFINE_ERROR(ArgumentError, Argument)
PRI_DEFINE_ERROR(MissingChannelError, MissingChannel)
PRI_DEFINE_ERROR(InsufficientDataError, InsufficientData)
PRI_DEFINE_ERROR(SamplingError, Sampling)
PRI_DEFINE_ERROR(TrainingError, Training)
PRI_DEFINE_ERROR(ExperimentError, Experiment)
PRI_DEFINE_ERROR(IoError, Io)

#undef PRI_DEFINE_ERROR

}  // namespace pri
