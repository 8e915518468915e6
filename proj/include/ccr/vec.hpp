#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ccr {

using Vector = std::vector<double>;

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  static Matrix identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// dot(a,b)/(|a||b|), clamped to [-1, 1]. Throws DataError on dim mismatch or zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

/// Component-wise mean. Throws DataError on empty input or dim mismatch.
Vector centroid(std::span<const Vector> vectors);

/// Returns a / |a|. Throws DataError for a zero vector.
Vector normalized(std::span<const double> a);

}  // namespace ccr
