#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Data-parallel similarity kernels. Every kernel has a serial reference
// implementation; the OpenMP variants must agree with it bitwise (each row's
// dot product is accumulated in the same order, only rows are distributed).

namespace grag::kernels {

// out[r] = clamp(dot(matrix[r], query), -1, 1) for every row of a row-major matrix.
void score_rows_serial(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                       std::span<double> out);
void score_rows_parallel(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                         std::span<double> out);

// The min(k, n) best rows: score descending, ties by ascending row.
std::vector<std::size_t> top_k_rows(std::span<const double> scores, std::size_t k);

int max_threads();

}  // namespace grag::kernels
