#ifndef WASMLEAK_ERROR_H_
#define WASMLEAK_ERROR_H_

#include <stdexcept>
#include <string>

namespace wasmleak {

// Process exit codes used by the command line tool. Every exception thrown by
// the library maps onto one of them.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kDataFormat = 3,
  kPrecondition = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

// Bad or missing configuration, unknown keys, missing input files.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ExitCode::kConfig, what) {}
};

// Malformed module text, trace CSV, truth CSV or database file.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error(ExitCode::kDataFormat, what) {}
};

// A pipeline stage was handed input it cannot work with (no optable pattern,
// no markers, fewer than two segment boundaries, ...).
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what)
      : Error(ExitCode::kPrecondition, what) {}
};

}  // namespace wasmleak

#endif  // WASMLEAK_ERROR_H_
