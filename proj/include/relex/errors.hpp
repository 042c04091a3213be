#pragma once

#include <stdexcept>
#include <string>

namespace relex {

// Library-wide error with a kind that maps onto CLI exit codes:
// Usage -> 1, Data -> 2, Numeric -> 3.
class Error : public std::runtime_error {
 public:
  enum class Kind { Usage = 1, Data = 2, Numeric = 3 };

  Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}

  Kind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  Kind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
  throw Error(Error::Kind::Usage, msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
  throw Error(Error::Kind::Data, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(Error::Kind::Numeric, msg);
}

inline void require_data(bool cond, const std::string& msg) {
  if (!cond) throw_data(msg);
}

}  // namespace relex
