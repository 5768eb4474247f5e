#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hghz {

// Machine-readable error categories. The CLI maps each to a distinct exit
// status (see exit_status()).
enum class ErrorCode {
  dimension,
  validation,
  argument,
  model,
  degenerate_herald,
  insufficient_data,
  parse,
  io,
  convergence,
};

constexpr std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension: return "dimension_error";
    case ErrorCode::validation: return "validation_error";
    case ErrorCode::argument: return "argument_error";
    case ErrorCode::model: return "model_error";
    case ErrorCode::degenerate_herald: return "degenerate_herald";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::parse: return "parse_error";
    case ErrorCode::io: return "io_error";
    case ErrorCode::convergence: return "convergence_error";
  }
  return "unknown_error";
}

constexpr int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation: return 2;
    case ErrorCode::parse: return 3;
    case ErrorCode::io: return 4;
    case ErrorCode::model: return 5;
    case ErrorCode::degenerate_herald: return 6;
    case ErrorCode::insufficient_data: return 7;
    case ErrorCode::dimension: return 8;
    case ErrorCode::argument: return 9;
    case ErrorCode::convergence: return 10;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace hghz
