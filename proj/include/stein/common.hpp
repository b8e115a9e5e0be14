#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace stein {

/// Error type thrown by every operation in this library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename... Args>
std::string strf(const char* fmt, Args... args) {
  int len = std::snprintf(nullptr, 0, fmt, args...);
  std::string out(static_cast<size_t>(len), '\0');
  std::snprintf(out.data(), out.size() + 1, fmt, args...);
  return out;
}

inline std::string strf(const char* s) { return std::string(s); }

}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(const char* fmt, Args... args) {
  throw error(detail::strf(fmt, args...));
}

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.allFinite();
}

}  // namespace stein
