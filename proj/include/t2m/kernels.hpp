#pragma once

// Dense kernels behind every layer of the network.
//
// Each kernel has a serial reference in `kernels::serial` and an OpenMP
// version in `kernels::omp`. Both accumulate every output element in the same
// order, so their results are bitwise identical for any thread count; the
// tests and the benchmark rely on that. Matrices are row-major.

#include <cstddef>
#include <span>

#include <omp.h>

namespace t2m::kernels {

namespace serial {

/// y = W x (+ b). W is rows x cols.
template <typename W, typename T>
void matvec(std::span<const W> w, std::size_t rows, std::size_t cols, std::span<const T> x,
            std::span<const W> b, std::span<T> y) {
  for (std::size_t i = 0; i < rows; ++i) {
    const W* row = w.data() + i * cols;
    T acc = b.empty() ? T(0) : static_cast<T>(b[i]);
    for (std::size_t j = 0; j < cols; ++j) acc += static_cast<T>(row[j]) * x[j];
    y[i] = acc;
  }
}

/// dx += W^T dy
template <typename T>
void matvec_t_acc(std::span<const T> w, std::size_t rows, std::size_t cols, std::span<const T> dy,
                  std::span<T> dx) {
  for (std::size_t i = 0; i < rows; ++i) {
    const T* row = w.data() + i * cols;
    const T g = dy[i];
    for (std::size_t j = 0; j < cols; ++j) dx[j] += row[j] * g;
  }
}

/// dW += dy x^T
template <typename T>
void outer_acc(std::span<const T> dy, std::span<const T> x, std::span<T> dw) {
  const std::size_t cols = x.size();
  for (std::size_t i = 0; i < dy.size(); ++i) {
    T* row = dw.data() + i * cols;
    const T g = dy[i];
    for (std::size_t j = 0; j < cols; ++j) row[j] += g * x[j];
  }
}

}  // namespace serial

namespace omp {

template <typename W, typename T>
void matvec(std::span<const W> w, std::size_t rows, std::size_t cols, std::span<const T> x,
            std::span<const W> b, std::span<T> y) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
    const W* row = w.data() + static_cast<std::size_t>(i) * cols;
    T acc = b.empty() ? T(0) : static_cast<T>(b[i]);
    for (std::size_t j = 0; j < cols; ++j) acc += static_cast<T>(row[j]) * x[j];
    y[i] = acc;
  }
}

// Columns are split into blocks; inside a block rows are visited in order, so
// each dx[j] sees the same summation order as the serial kernel.
template <typename T>
void matvec_t_acc(std::span<const T> w, std::size_t rows, std::size_t cols, std::span<const T> dy,
                  std::span<T> dx) {
  constexpr std::size_t kBlock = 256;
  const auto blocks = static_cast<std::ptrdiff_t>((cols + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t j0 = static_cast<std::size_t>(blk) * kBlock;
    const std::size_t j1 = j0 + kBlock < cols ? j0 + kBlock : cols;
    for (std::size_t i = 0; i < rows; ++i) {
      const T* row = w.data() + i * cols;
      const T g = dy[i];
      for (std::size_t j = j0; j < j1; ++j) dx[j] += row[j] * g;
    }
  }
}

template <typename T>
void outer_acc(std::span<const T> dy, std::span<const T> x, std::span<T> dw) {
  const std::size_t cols = x.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(dy.size()); ++i) {
    T* row = dw.data() + static_cast<std::size_t>(i) * cols;
    const T g = dy[i];
    for (std::size_t j = 0; j < cols; ++j) row[j] += g * x[j];
  }
}

}  // namespace omp

/// Work (multiply-adds) below which dispatch stays serial.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

inline bool use_parallel(std::size_t work) {
  return work >= kParallelThreshold && !omp_in_parallel() && omp_get_max_threads() > 1;
}

template <typename W, typename T>
void matvec(std::span<const W> w, std::size_t rows, std::size_t cols, std::span<const T> x,
            std::span<const W> b, std::span<T> y) {
  if (use_parallel(rows * cols)) {
    omp::matvec(w, rows, cols, x, b, y);
  } else {
    serial::matvec(w, rows, cols, x, b, y);
  }
}

template <typename T>
void matvec_t_acc(std::span<const T> w, std::size_t rows, std::size_t cols, std::span<const T> dy,
                  std::span<T> dx) {
  if (use_parallel(rows * cols)) {
    omp::matvec_t_acc(w, rows, cols, dy, dx);
  } else {
    serial::matvec_t_acc(w, rows, cols, dy, dx);
  }
}

template <typename T>
void outer_acc(std::span<const T> dy, std::span<const T> x, std::span<T> dw) {
  if (use_parallel(dy.size() * x.size())) {
    omp::outer_acc(dy, x, dw);
  } else {
    serial::outer_acc(dy, x, dw);
  }
}

}  // namespace t2m::kernels
