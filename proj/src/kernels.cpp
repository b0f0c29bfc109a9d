#include "grag/kernels.hpp"

#include <algorithm>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "grag/embedding.hpp"
#include "grag/error.hpp"

namespace grag::kernels {
namespace {

void check_shape(std::span<const float> matrix, std::size_t dim, std::span<const float> query, std::span<double> out) {
    if (dim == 0 || query.size() != dim || matrix.size() != out.size() * dim) {
        throw ContractViolation("score kernel: matrix, query and output shapes disagree");
    }
}

}  // namespace

void score_rows_serial(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                       std::span<double> out) {
    check_shape(matrix, dim, query, out);
    for (std::size_t r = 0; r < out.size(); ++r) {
        out[r] = std::clamp(dot(matrix.subspan(r * dim, dim), query), -1.0, 1.0);
    }
}

void score_rows_parallel(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                         std::span<double> out) {
    check_shape(matrix, dim, query, out);
    const auto rows = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (rows > 1024)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        out[r] = std::clamp(dot(matrix.subspan(static_cast<std::size_t>(r) * dim, dim), query), -1.0, 1.0);
    }
}

std::vector<std::size_t> top_k_rows(std::span<const double> scores, std::size_t k) {
    std::vector<std::size_t> rows(scores.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto take = std::min(k, rows.size());
    const auto better = [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    };
    std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take), rows.end(), better);
    rows.resize(take);
    return rows;
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace grag::kernels
