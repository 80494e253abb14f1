#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace armarecon {

// Error categories map 1:1 onto CLI exit codes (config=1, data=2, numeric=3).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad hyperparameter ranges, unknown keys, missing files named in
/// a config, malformed --set overrides.
struct ConfigError : Error {
  using Error::Error;
};

/// Invalid or inconsistent input data: parse failures, dimension mismatches, out-of-range
/// feature values.
struct DataError : Error {
  using Error::Error;
};

/// Numerical failure: non-convergence, singular or near-singular solves, filter poles.
struct NumericError : Error {
  using Error::Error;
};

using WarnHandler = std::function<void(const std::string&)>;

/// Emits a non-fatal diagnostic. The default handler writes
/// "armarecon: warning: <msg>" to stderr.
void warn(const std::string& msg);

/// Replaces the process-wide warning handler and returns the previous one.
/// Tests use this to capture warnings; pass nullptr to restore the default.
WarnHandler set_warn_handler(WarnHandler handler);

}  // namespace armarecon
