#include "collie/kernels.hpp"

#include <cassert>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace collie::kernels {

namespace {

inline double row_dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

inline double row_sq_dist(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void cross_dots(RowsView a, RowsView b, std::span<double> out) {
  assert(a.cols == b.cols);
  const std::size_t na = a.rows(), nb = b.rows(), d = a.cols;
  assert(out.size() == na * nb);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j)
      out[i * nb + j] = row_dot(a.data.data() + i * d, b.data.data() + j * d, d);
}

void gram(RowsView x, std::span<double> out) {
  const std::size_t n = x.rows(), d = x.cols;
  assert(out.size() == n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = row_dot(x.data.data() + i * d, x.data.data() + j * d, d);
      out[i * n + j] = v;
      out[j * n + i] = v;
    }
}

void dots_with(std::span<const double> q, RowsView x, std::span<double> out) {
  const std::size_t n = x.rows(), d = x.cols;
  assert(q.size() == d && out.size() == n);
  for (std::size_t j = 0; j < n; ++j) out[j] = row_dot(q.data(), x.data.data() + j * d, d);
}

void sq_distances(std::span<const double> q, RowsView x, std::span<double> out) {
  const std::size_t n = x.rows(), d = x.cols;
  assert(q.size() == d && out.size() == n);
  for (std::size_t j = 0; j < n; ++j) out[j] = row_sq_dist(q.data(), x.data.data() + j * d, d);
}

}  // namespace serial

namespace omp {

void cross_dots(RowsView a, RowsView b, std::span<double> out) {
  assert(a.cols == b.cols);
  const std::int64_t na = static_cast<std::int64_t>(a.rows());
  const std::size_t nb = b.rows(), d = a.cols;
  assert(out.size() == static_cast<std::size_t>(na) * nb);
  const bool par = static_cast<std::size_t>(na) * nb * d >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j)
      out[i * nb + j] = row_dot(a.data.data() + i * d, b.data.data() + j * d, d);
}

void gram(RowsView x, std::span<double> out) {
  const std::int64_t n = static_cast<std::int64_t>(x.rows());
  const std::size_t d = x.cols;
  assert(out.size() == static_cast<std::size_t>(n * n));
  const bool par = static_cast<std::size_t>(n * n) * d / 2 >= kParallelWork;
  // Upper triangle row by row; dynamic schedule balances the shrinking rows.
#pragma omp parallel for schedule(dynamic, 8) if (par)
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i; j < n; ++j)
      out[i * n + j] = row_dot(x.data.data() + i * d, x.data.data() + j * d, d);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < i; ++j) out[i * n + j] = out[j * n + i];
}

void dots_with(std::span<const double> q, RowsView x, std::span<double> out) {
  const std::int64_t n = static_cast<std::int64_t>(x.rows());
  const std::size_t d = x.cols;
  assert(q.size() == d && out.size() == static_cast<std::size_t>(n));
  const bool par = static_cast<std::size_t>(n) * d >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t j = 0; j < n; ++j) out[j] = row_dot(q.data(), x.data.data() + j * d, d);
}

void sq_distances(std::span<const double> q, RowsView x, std::span<double> out) {
  const std::int64_t n = static_cast<std::int64_t>(x.rows());
  const std::size_t d = x.cols;
  assert(q.size() == d && out.size() == static_cast<std::size_t>(n));
  const bool par = static_cast<std::size_t>(n) * d >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t j = 0; j < n; ++j) out[j] = row_sq_dist(q.data(), x.data.data() + j * d, d);
}

}  // namespace omp

}  // namespace collie::kernels
