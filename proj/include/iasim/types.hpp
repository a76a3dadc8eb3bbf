#pragma once

#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

namespace iasim {

using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

/// Wraps an index into the user/receiver set {1,2,3}.
inline int wrap3(int x) {
  int m = ((x - 1) % 3 + 3) % 3;
  return m + 1;
}

/// Modulo-3 into {0,1,2} (used by the sub-block count formula).
inline int mod3(int x) { return ((x % 3) + 3) % 3; }

/// Signaling/extension scheme: how a complex channel coefficient is lifted
/// to its extended-model block.
struct ExtensionMode {
  enum class Kind { kAcsReal, kTimeOnlyComplex };

  Kind kind = Kind::kAcsReal;
  int extensions = 0;  // T, number of time extensions

  static ExtensionMode acs(int p) { return {Kind::kAcsReal, 2 * p + 1}; }
  static ExtensionMode time_only(int p) {
    return {Kind::kTimeOnlyComplex, 2 * p + 1};
  }

  bool is_acs() const { return kind == Kind::kAcsReal; }
  /// Side length of the block one scalar lifts to (2T real or T complex).
  int block_dim() const { return is_acs() ? 2 * extensions : extensions; }
  const char* name() const { return is_acs() ? "acs" : "time-only"; }
};

/// Exact rational, kept reduced. Used for DoF values so reports never
/// round p(p+1)/(2p+1) through floating point.
struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n, long long d) : num(n), den(d) { reduce(); }

  void reduce() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double value() const { return static_cast<double>(num) / den; }
  std::string str() const {
    return std::to_string(num) + "/" + std::to_string(den);
  }
  bool operator==(const Rational& o) const {
    return num == o.num && den == o.den;
  }
  bool operator<(const Rational& o) const {
    return num * o.den < o.num * den;
  }
};

/// Failure with a machine-readable payload (offending receiver, seed, ...).
/// The CLI serializes the payload as JSON on stderr.
class StructuredError : public std::runtime_error {
 public:
  StructuredError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {
    payload_["error"] = code_;
    payload_["message"] = message;
  }

  template <class T>
  StructuredError& with(const std::string& key, const T& value) {
    payload_[key] = value;
    return *this;
  }

  const std::string& code() const { return code_; }
  const nlohmann::json& payload() const { return payload_; }

 private:
  std::string code_;
  nlohmann::json payload_;
};

namespace tol {
// Relative thresholds used across the library. Rank decisions and solve
// residuals sit at 1e-8; structural clamps two orders tighter.
inline constexpr double kRank = 1e-8;
inline constexpr double kSolve = 1e-8;
inline constexpr double kInvert = 1e-8;
inline constexpr double kClamp = 1e-10;
inline constexpr double kDrawRank = 1e-10;
}  // namespace tol

}  // namespace iasim
