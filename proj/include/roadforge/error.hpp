#pragma once

#include <stdexcept>
#include <string>

namespace roadforge {

enum class ErrorKind {
  Io,
  Parse,
  EmptyInput,
  Parameter,
  Config,
  Degenerate,
  Duplicate,
  Location,
  InsufficientData,
  RobustFailure,
  InconsistentHomography,
  Divergence,
  BehindCamera,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Config: return "config";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Duplicate: return "duplicate";
    case ErrorKind::Location: return "location";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::RobustFailure: return "robust-failure";
    case ErrorKind::InconsistentHomography: return "inconsistent-homography";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::BehindCamera: return "behind-camera";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require_param(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::Parameter, what);
}

}  // namespace roadforge
