#include "vpr/kernels.hpp"

#include <omp.h>

namespace vpr::kernels {

namespace {

inline double score_row(std::span<const double> query, double query_norm, std::span<const double> row,
                        Metric metric) {
  if (metric == Metric::l2) return neg_l2(query, row);
  double c = dot(query, row) / (query_norm * norm(row));
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

}  // namespace

void score_rows_serial(std::span<const double> query, std::span<const double> rows, std::size_t dim, Metric metric,
                       std::span<double> out) {
  const double query_norm = norm(query);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = score_row(query, query_norm, rows.subspan(i * dim, dim), metric);
  }
}

void score_rows_parallel(std::span<const double> query, std::span<const double> rows, std::size_t dim, Metric metric,
                         std::span<double> out) {
  const double query_norm = norm(query);
  const auto count = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto row = static_cast<std::size_t>(i);
    out[row] = score_row(query, query_norm, rows.subspan(row * dim, dim), metric);
  }
}

}  // namespace vpr::kernels
