#pragma once

#include <stdexcept>
#include <string>

namespace dynfl {

enum class ErrorCode {
  InvalidMetric,
  InvalidStream,
  InvalidConfig,
  InvariantViolation,
  OracleLimit,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dynfl
