#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace tempo {

// Flat parameter container shared by policies and meta-parameters.
using ParamVector = std::vector<double>;

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(std::span<double> v, double a) {
  for (double& x : v) x *= a;
}

inline void fill(std::span<double> v, double a) {
  for (double& x : v) x = a;
}

}  // namespace tempo
