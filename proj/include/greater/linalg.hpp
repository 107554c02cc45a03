#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "greater/error.hpp"
#include "greater/rng.hpp"

namespace greater {

using Vec = std::vector<double>;

// Dense row-major matrix. Deliberately minimal: the model module derives all
// gradients by hand, so everything stays explicit loops over this layout.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::WidthMismatch, "dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw Error(Errc::WidthMismatch, "axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// A x  (A: r x c, x: c) -> r
inline Vec matvec(const Mat& a, std::span<const double> x) {
  if (a.cols != x.size()) throw Error(Errc::WidthMismatch, "matvec: size mismatch");
  Vec y(a.rows, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r) y[r] = dot(a.row(r), x);
  return y;
}

// A^T x  (A: r x c, x: r) -> c
inline Vec mat_t_vec(const Mat& a, std::span<const double> x) {
  if (a.rows != x.size()) throw Error(Errc::WidthMismatch, "mat_t_vec: size mismatch");
  Vec y(a.cols, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double xr = x[r];
    const auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols; ++c) y[c] += xr * row[c];
  }
  return y;
}

// A += scale * u v^T
inline void add_outer(Mat& a, std::span<const double> u, std::span<const double> v, double scale) {
  if (a.rows != u.size() || a.cols != v.size())
    throw Error(Errc::WidthMismatch, "add_outer: size mismatch");
  for (std::size_t r = 0; r < a.rows; ++r) {
    auto row = a.row(r);
    const double s = scale * u[r];
    for (std::size_t c = 0; c < a.cols; ++c) row[c] += s * v[c];
  }
}

// Numerically stable softmax (max subtraction).
inline Vec softmax(std::span<const double> logits) {
  if (logits.empty()) throw Error(Errc::EmptyBatch, "softmax: empty logits");
  double mx = logits[0];
  for (double x : logits) mx = std::max(mx, x);
  Vec p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (double& x : p) x /= z;
  return p;
}

inline void fill_uniform(Mat& a, Rng& rng, double scale) {
  for (double& x : a.data) x = rng.uniform(-scale, scale);
}

inline void fill_uniform(Vec& v, Rng& rng, double scale) {
  for (double& x : v) x = rng.uniform(-scale, scale);
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace greater
