#include "ragner/kernels.hpp"

#include <cassert>

#ifdef RAGNER_HAVE_OPENMP
#include <omp.h>
#endif

namespace ragner::kernels {

namespace {
// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 16;
}  // namespace

double dot(const float* a, const float* b, std::size_t dim) noexcept {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= dim; i += 4) {
    s0 += static_cast<double>(a[i]) * b[i];
    s1 += static_cast<double>(a[i + 1]) * b[i + 1];
    s2 += static_cast<double>(a[i + 2]) * b[i + 2];
    s3 += static_cast<double>(a[i + 3]) * b[i + 3];
  }
  for (; i < dim; ++i) s0 += static_cast<double>(a[i]) * b[i];
  return (s0 + s1) + (s2 + s3);
}

void score_rows_serial(std::span<const float> rows, std::size_t dim, std::span<const float> query,
                       std::span<double> out) {
  assert(query.size() == dim && rows.size() == out.size() * dim);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dot(rows.data() + i * dim, query.data(), dim);
}

void score_rows_parallel(std::span<const float> rows, std::size_t dim, std::span<const float> query,
                         std::span<double> out) {
  assert(query.size() == dim && rows.size() == out.size() * dim);
  const auto n = static_cast<std::ptrdiff_t>(out.size());
  const float* base = rows.data();
  const float* q = query.data();
  double* dst = out.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) dst[i] = dot(base + i * static_cast<std::ptrdiff_t>(dim), q, dim);
}

void score_subset_serial(std::span<const float> rows, std::size_t dim, std::span<const std::uint32_t> ids,
                         std::span<const float> query, std::span<double> out) {
  assert(ids.size() == out.size());
  for (std::size_t j = 0; j < ids.size(); ++j) {
    out[j] = dot(rows.data() + static_cast<std::size_t>(ids[j]) * dim, query.data(), dim);
  }
}

void score_subset_parallel(std::span<const float> rows, std::size_t dim, std::span<const std::uint32_t> ids,
                           std::span<const float> query, std::span<double> out) {
  assert(ids.size() == out.size());
  const auto n = static_cast<std::ptrdiff_t>(ids.size());
  const float* base = rows.data();
  const std::uint32_t* idx = ids.data();
  const float* q = query.data();
  double* dst = out.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) dst[j] = dot(base + static_cast<std::size_t>(idx[j]) * dim, q, dim);
}

namespace {

std::uint32_t nearest(const float* point, const float* centroids, std::size_t n_centroids, std::size_t dim) {
  std::uint32_t best = 0;
  double best_score = dot(point, centroids, dim);
  for (std::size_t c = 1; c < n_centroids; ++c) {
    const double s = dot(point, centroids + c * dim, dim);
    if (s > best_score) {
      best_score = s;
      best = static_cast<std::uint32_t>(c);
    }
  }
  return best;
}

}  // namespace

void assign_nearest_serial(std::span<const float> points, std::span<const float> centroids, std::size_t dim,
                           std::span<std::uint32_t> labels) {
  const std::size_t nc = centroids.size() / dim;
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = nearest(points.data() + i * dim, centroids.data(), nc, dim);
}

void assign_nearest_parallel(std::span<const float> points, std::span<const float> centroids, std::size_t dim,
                             std::span<std::uint32_t> labels) {
  const std::size_t nc = centroids.size() / dim;
  const auto n = static_cast<std::ptrdiff_t>(labels.size());
  const float* p = points.data();
  const float* c = centroids.data();
  std::uint32_t* dst = labels.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) dst[i] = nearest(p + i * static_cast<std::ptrdiff_t>(dim), c, nc, dim);
}

bool parallel_enabled() noexcept {
#ifdef RAGNER_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() noexcept {
#ifdef RAGNER_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {
bool go_parallel(std::size_t work) noexcept { return parallel_enabled() && max_threads() > 1 && work >= kParallelWork; }
}  // namespace

void score_rows(std::span<const float> rows, std::size_t dim, std::span<const float> query, std::span<double> out) {
  if (go_parallel(rows.size())) {
    score_rows_parallel(rows, dim, query, out);
  } else {
    score_rows_serial(rows, dim, query, out);
  }
}

void score_subset(std::span<const float> rows, std::size_t dim, std::span<const std::uint32_t> ids,
                  std::span<const float> query, std::span<double> out) {
  if (go_parallel(ids.size() * dim)) {
    score_subset_parallel(rows, dim, ids, query, out);
  } else {
    score_subset_serial(rows, dim, ids, query, out);
  }
}

void assign_nearest(std::span<const float> points, std::span<const float> centroids, std::size_t dim,
                    std::span<std::uint32_t> labels) {
  if (go_parallel(labels.size() * centroids.size())) {
    assign_nearest_parallel(points, centroids, dim, labels);
  } else {
    assign_nearest_serial(points, centroids, dim, labels);
  }
}

}  // namespace ragner::kernels
