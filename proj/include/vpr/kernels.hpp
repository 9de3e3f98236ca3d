#pragma once

// Similarity kernels over a contiguous row-major database. The serial versions
// are the reference the OpenMP versions are tested and benchmarked against; both
// evaluate each row with the same scalar routine, so their outputs are bit-identical.

#include <cmath>
#include <cstddef>
#include <span>

#include "vpr/descriptors.hpp"

namespace vpr::kernels {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double cosine(std::span<const double> a, std::span<const double> b) {
  double c = dot(a, b) / (norm(a) * norm(b));
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

inline double neg_l2(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return -std::sqrt(acc);
}

inline double score(std::span<const double> a, std::span<const double> b, Metric metric) {
  return metric == Metric::cosine ? cosine(a, b) : neg_l2(a, b);
}

// out[i] = score(query, row i); out.size() must equal the row count.
void score_rows_serial(std::span<const double> query, std::span<const double> rows, std::size_t dim, Metric metric,
                       std::span<double> out);
void score_rows_parallel(std::span<const double> query, std::span<const double> rows, std::size_t dim, Metric metric,
                         std::span<double> out);

}  // namespace vpr::kernels
