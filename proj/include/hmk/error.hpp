#pragma once

#include <stdexcept>
#include <string>

namespace hmk {

/// Failure categories. The numeric value doubles as the CLI exit code.
enum class ErrorKind : int {
  Input = 2,
  Numeric = 3,
  Budget = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Short identifier such as "DisjointInteriors" or "RankTooSmall".
  const std::string& code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
  std::string code_;
};

inline Error input_error(std::string code, const std::string& what) {
  return Error(ErrorKind::Input, std::move(code), what);
}
inline Error numeric_error(std::string code, const std::string& what) {
  return Error(ErrorKind::Numeric, std::move(code), what);
}
inline Error budget_error(std::string code, const std::string& what) {
  return Error(ErrorKind::Budget, std::move(code), what);
}

}  // namespace hmk
