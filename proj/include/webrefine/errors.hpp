#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace webrefine {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed site script text (JSON syntax). Positions are 1-based.
class ScriptSyntaxError : public Error {
 public:
  ScriptSyntaxError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed site script that violates a structural invariant.
class ScriptSemanticError : public Error {
 public:
  using Error::Error;
};

/// The environment failed in a way the agent cannot observe in-band.
class EnvironmentError : public Error {
 public:
  using Error::Error;
};

/// step() called on an environment whose episode already ended.
class EpisodeFinished : public EnvironmentError {
 public:
  using EnvironmentError::EnvironmentError;
};

/// Retryable transport failure (connection refused, 429, 5xx).
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Non-retryable provider rejection (auth, malformed request, script exhausted).
class ProviderRejection : public Error {
 public:
  using Error::Error;
};

/// The planner produced a reply that cannot become a directive.
class PlannerReplyError : public Error {
 public:
  using Error::Error;
};

/// A vision modality was requested for a trajectory with no captured screenshot.
class ScreenshotlessTrajectory : public Error {
 public:
  using Error::Error;
};

/// The multimodal validator needs a final response and the trajectory has none.
class MissingFinalResponse : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; line is 1-based (0 when not applicable).
class InputFileError : public Error {
 public:
  InputFileError(const std::string& what, std::size_t line) : Error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Archive read/write failure.
class ArchiveError : public Error {
 public:
  using Error::Error;
};

}  // namespace webrefine
