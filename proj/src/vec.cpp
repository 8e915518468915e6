#include "ccr/vec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ccr/error.hpp"

namespace ccr {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DataError("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw DataError("cosine: zero-norm input");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

Vector centroid(std::span<const Vector> vectors) {
  if (vectors.empty()) throw DataError("centroid: empty input");
  const std::size_t dim = vectors.front().size();
  Vector out(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dim) throw DataError("centroid: dimension mismatch");
    for (std::size_t i = 0; i < dim; ++i) out[i] += v[i];
  }
  const auto n = static_cast<double>(vectors.size());
  for (auto& x : out) x /= n;
  return out;
}

Vector normalized(std::span<const double> a) {
  const double n = norm(a);
  if (n == 0.0) throw DataError("normalize: zero vector");
  Vector out(a.begin(), a.end());
  for (auto& x : out) x /= n;
  return out;
}

}  // namespace ccr
