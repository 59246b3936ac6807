#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mqs {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  // fixed-size chunked accumulation; summation order is independent of any
  // threading configuration, so results are reproducible run to run
  constexpr std::size_t chunk = 1024;
  double total = 0.0;
  for (std::size_t base = 0; base < a.size(); base += chunk) {
    const std::size_t end = std::min(a.size(), base + chunk);
    double partial = 0.0;
    for (std::size_t i = base; i < end; ++i) partial += a[i] * b[i];
    total += partial;
  }
  return total;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vector& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// y += alpha * x
inline void axpy(double alpha, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// y = alpha * x + beta * y
inline void axpby(double alpha, const Vector& x, double beta, Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpby: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = alpha * x[i] + beta * y[i];
}

inline void scale(double alpha, Vector& x) {
  for (double& v : x) v *= alpha;
}

inline bool all_finite(const Vector& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace mqs
