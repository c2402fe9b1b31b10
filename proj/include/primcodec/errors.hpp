#ifndef PRIMCODEC_ERRORS_HPP_
#define PRIMCODEC_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace primcodec
{

/// Invalid configuration or arguments. CLI exit code 2.
class ConfigError : public std::runtime_error
{
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric failure (divergence, non-finite values). CLI exit code 3.
class NumericError : public std::runtime_error
{
public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem / serialization failure. CLI exit code 4.
class IoError : public std::runtime_error
{
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace primcodec

#endif  // PRIMCODEC_ERRORS_HPP_
