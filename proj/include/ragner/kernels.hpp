#pragma once

// Scoring kernels behind the vector index. Each kernel has a serial
// reference and an OpenMP version; both produce bit-identical output because
// parallelism is only across rows, never inside one dot product.

#include <cstddef>
#include <cstdint>
#include <span>

namespace ragner::kernels {

/// Dot product with four double accumulators.
double dot(const float* a, const float* b, std::size_t dim) noexcept;

/// out[i] = dot(rows + i*dim, query) for every row.
void score_rows_serial(std::span<const float> rows, std::size_t dim,
                       std::span<const float> query, std::span<double> out);
void score_rows_parallel(std::span<const float> rows, std::size_t dim,
                         std::span<const float> query, std::span<double> out);

/// out[j] = dot(row ids[j], query).
void score_subset_serial(std::span<const float> rows, std::size_t dim,
                         std::span<const std::uint32_t> ids,
                         std::span<const float> query, std::span<double> out);
void score_subset_parallel(std::span<const float> rows, std::size_t dim,
                           std::span<const std::uint32_t> ids,
                           std::span<const float> query, std::span<double> out);

/// labels[i] = argmax_c dot(point i, centroid c), lowest c on ties.
void assign_nearest_serial(std::span<const float> points, std::span<const float> centroids,
                           std::size_t dim, std::span<std::uint32_t> labels);
void assign_nearest_parallel(std::span<const float> points, std::span<const float> centroids,
                             std::size_t dim, std::span<std::uint32_t> labels);

/// Dispatchers: parallel when built with OpenMP and the work is large enough.
void score_rows(std::span<const float> rows, std::size_t dim,
                std::span<const float> query, std::span<double> out);
void score_subset(std::span<const float> rows, std::size_t dim,
                  std::span<const std::uint32_t> ids,
                  std::span<const float> query, std::span<double> out);
void assign_nearest(std::span<const float> points, std::span<const float> centroids,
                    std::size_t dim, std::span<std::uint32_t> labels);

bool parallel_enabled() noexcept;
int max_threads() noexcept;

}  // namespace ragner::kernels
