#pragma once

#include <stdexcept>
#include <string>

namespace spinamp {

/// Base class for all spinamp errors.
class error : public std::runtime_error {
  public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration or argument: bad scenario files, precondition
/// violations, out-of-range parameters. CLI exit code 2.
class config_error : public error {
  public:
    explicit config_error(const std::string& msg) : error(msg) {}
};

/// Numerical failure: NaN in an integrator, calibration outside its
/// admissible window, singular systems. CLI exit code 3.
class numeric_error : public error {
  public:
    explicit numeric_error(const std::string& msg) : error(msg) {}
};

/// Filesystem / parse failures on input or output files. CLI exit code 4.
class io_error : public error {
  public:
    explicit io_error(const std::string& msg) : error(msg) {}
};

}  // namespace spinamp
