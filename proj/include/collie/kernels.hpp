#pragma once

// Data-parallel inner loops. Each kernel exists twice: a plain serial
// reference used by the tests and an OpenMP version used by the library.
// Every output element is produced by the same arithmetic in both
// versions, so results are bit-identical regardless of thread count.

#include <cstddef>
#include <span>
#include <vector>

namespace collie::kernels {

/// Row-major matrix view over contiguous doubles.
struct RowsView {
  std::span<const double> data;
  std::size_t cols = 0;

  std::size_t rows() const { return cols == 0 ? 0 : data.size() / cols; }
  std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
};

namespace serial {

// out[i*b.rows()+j] = <a_i, b_j>
void cross_dots(RowsView a, RowsView b, std::span<double> out);
// out[i*n+j] = <x_i, x_j>, symmetric fill
void gram(RowsView x, std::span<double> out);
// out[j] = <q, x_j>
void dots_with(std::span<const double> q, RowsView x, std::span<double> out);
// out[j] = ||q - x_j||^2
void sq_distances(std::span<const double> q, RowsView x, std::span<double> out);

}  // namespace serial

namespace omp {

void cross_dots(RowsView a, RowsView b, std::span<double> out);
void gram(RowsView x, std::span<double> out);
void dots_with(std::span<const double> q, RowsView x, std::span<double> out);
void sq_distances(std::span<const double> q, RowsView x, std::span<double> out);

}  // namespace omp

/// Number of threads the OpenMP kernels will use (1 without OpenMP).
int max_threads();

// Library entry points: the OpenMP versions.
using omp::cross_dots;
using omp::dots_with;
using omp::gram;
using omp::sq_distances;

}  // namespace collie::kernels
