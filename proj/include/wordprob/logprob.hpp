#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <span>

namespace wordprob {

// A probability carried in natural-log space. The distinguished value for
// probability zero is -infinity; it participates in products and sums like
// any other value. Values are expected to satisfy exp(value) <= 1.
struct LogProb {
  double value = -std::numeric_limits<double>::infinity();

  static constexpr LogProb zero() {
    return LogProb{-std::numeric_limits<double>::infinity()};
  }
  static constexpr LogProb one() { return LogProb{0.0}; }

  static LogProb from_linear(double p) {
    return p > 0.0 ? LogProb{std::log(p)} : zero();
  }

  double linear() const { return std::exp(value); }
  bool is_zero() const { return std::isinf(value) && value < 0.0; }

  friend bool operator==(LogProb a, LogProb b) { return a.value == b.value; }
  friend auto operator<=>(LogProb a, LogProb b) { return a.value <=> b.value; }
};

// Product of probabilities is addition in log space.
inline LogProb operator*(LogProb a, LogProb b) {
  if (a.is_zero() || b.is_zero()) return LogProb::zero();
  return LogProb{a.value + b.value};
}

inline LogProb& operator*=(LogProb& a, LogProb b) {
  a = a * b;
  return a;
}

// log(exp(a) + exp(b)) without leaving log space.
inline LogProb log_add(LogProb a, LogProb b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const double hi = std::max(a.value, b.value);
  const double lo = std::min(a.value, b.value);
  return LogProb{hi + std::log1p(std::exp(lo - hi))};
}

LogProb logsumexp(std::span<const LogProb> terms);

// logsumexp over a dense Eigen expression of log-space values.
template <typename Derived>
double logsumexp(const Eigen::DenseBase<Derived>& x) {
  if (x.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = x.maxCoeff();
  if (std::isinf(m) && m < 0.0) return m;
  return m + std::log((x.derived().array() - m).exp().sum());
}

}  // namespace wordprob
