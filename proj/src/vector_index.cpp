#include "ragner/vector_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ragner/error.hpp"
#include "ragner/kernels.hpp"
#include "ragner/rng.hpp"

namespace ragner {

bool hit_before(const SearchHit& a, const SearchHit& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.record_id < b.record_id;
}

namespace {

constexpr double kUnitTolerance = 1e-3;

/// Returns 1 / ||query||.
double check_query(std::span<const float> query, std::size_t dim) {
  if (query.size() != dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "query has dimension " + std::to_string(query.size()) + ", index has " + std::to_string(dim));
  }
  const double norm = std::sqrt(kernels::dot(query.data(), query.data(), dim));
  if (!(norm > 0.0) || !std::isfinite(norm)) throw Error(ErrorCode::InvalidArgument, "query vector has zero or invalid norm");
  return 1.0 / norm;
}

std::vector<SearchHit> top_k(std::span<const std::uint32_t> ids, std::span<const double> scores, std::size_t k) {
  std::vector<SearchHit> hits(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) hits[i] = {ids[i], scores[i]};
  if (k < hits.size()) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), hit_before);
    hits.resize(k);
  } else {
    std::sort(hits.begin(), hits.end(), hit_before);
  }
  return hits;
}

}  // namespace

RecordTable RecordTable::from_records(std::vector<WordRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyCollection, "cannot index an empty collection");
  RecordTable t;
  t.dim_ = records.front().vector.size();
  if (t.dim_ == 0) throw Error(ErrorCode::DimensionMismatch, "zero-dimensional vectors");
  t.data_.reserve(records.size() * t.dim_);
  t.words_.reserve(records.size());
  t.sentence_ids_.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    if (r.record_id != i) {
      throw Error(ErrorCode::InvalidArgument, "record ids must be dense from 0; found " +
                                                  std::to_string(r.record_id) + " at position " + std::to_string(i));
    }
    if (r.vector.size() != t.dim_) {
      throw Error(ErrorCode::DimensionMismatch, "record " + std::to_string(i) + " has dimension " +
                                                    std::to_string(r.vector.size()) + ", expected " + std::to_string(t.dim_));
    }
    const double norm = std::sqrt(kernels::dot(r.vector.data(), r.vector.data(), t.dim_));
    if (!(std::abs(norm - 1.0) <= kUnitTolerance)) {
      throw Error(ErrorCode::InvalidArgument, "record " + std::to_string(i) + " is not unit norm");
    }
    t.data_.insert(t.data_.end(), r.vector.begin(), r.vector.end());
    t.words_.push_back(std::move(r.word));
    t.sentence_ids_.push_back(r.sentence_id);
  }
  t.compute_norms();
  return t;
}

void RecordTable::compute_norms() {
  inv_norms_.resize(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const double norm = std::sqrt(kernels::dot(data_.data() + i * dim_, data_.data() + i * dim_, dim_));
    inv_norms_[i] = norm > 0.0 ? 1.0 / norm : 0.0;
  }
}

// ---------------------------------------------------------------------------
// flat

FlatIndex FlatIndex::build(std::vector<WordRecord> records) {
  return FlatIndex(RecordTable::from_records(std::move(records)));
}

std::vector<SearchHit> FlatIndex::search(std::span<const float> query, std::size_t k) const {
  const double q_inv = check_query(query, records_.dim());
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  std::vector<double> scores(records_.size());
  kernels::score_rows(records_.data(), records_.dim(), query, scores);
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = scores[i] * records_.inv_norm(i) * q_inv;
  std::vector<std::uint32_t> ids(records_.size());
  std::iota(ids.begin(), ids.end(), 0u);
  return top_k(ids, scores, k);
}

// ---------------------------------------------------------------------------
// IVF

std::size_t default_nlist(std::size_t record_count) noexcept {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(record_count)))));
}

std::size_t default_nprobe(std::size_t nlist) noexcept {
  return std::max<std::size_t>(1, (nlist + 7) / 8);
}

namespace {

/// Spherical k-means: k-means++ seeding on 1 - cosine, Lloyd updates with
/// renormalized means. Empty clusters keep their previous centroid.
std::vector<float> train_centroids(std::span<const float> points, std::size_t n, std::size_t dim, std::size_t nlist,
                                   std::size_t iters, Rng& rng) {
  std::vector<float> centroids(nlist * dim);
  auto copy_point = [&](std::size_t c, std::size_t p) {
    std::copy_n(points.data() + p * dim, dim, centroids.data() + c * dim);
  };

  std::size_t first = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
  copy_point(0, first);
  std::vector<double> best(n);
  kernels::score_rows(points, dim, std::span<const float>(centroids.data(), dim), best);
  std::vector<double> sims(n);
  for (std::size_t c = 1; c < nlist; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += std::max(0.0, 1.0 - best[i]);
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += std::max(0.0, 1.0 - best[i]);
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
    }
    copy_point(c, pick);
    kernels::score_rows(points, dim, std::span<const float>(centroids.data() + c * dim, dim), sims);
    for (std::size_t i = 0; i < n; ++i) best[i] = std::max(best[i], sims[i]);
  }

  std::vector<std::uint32_t> labels(n, 0), previous(n, UINT32_MAX);
  std::vector<double> sums(nlist * dim);
  std::vector<std::size_t> counts(nlist);
  for (std::size_t it = 0; it < iters; ++it) {
    kernels::assign_nearest(points, centroids, dim, labels);
    if (labels == previous) break;
    previous = labels;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = labels[i];
      ++counts[c];
      const float* p = points.data() + i * dim;
      double* s = sums.data() + c * dim;
      for (std::size_t d = 0; d < dim; ++d) s[d] += p[d];
    }
    for (std::size_t c = 0; c < nlist; ++c) {
      if (counts[c] == 0) continue;
      const double* s = sums.data() + c * dim;
      double sq = 0.0;
      for (std::size_t d = 0; d < dim; ++d) sq += s[d] * s[d];
      if (!(sq > 0.0)) continue;
      const double inv = 1.0 / std::sqrt(sq);
      for (std::size_t d = 0; d < dim; ++d) centroids[c * dim + d] = static_cast<float>(s[d] * inv);
    }
  }
  return centroids;
}

}  // namespace

IvfIndex IvfIndex::build(std::vector<WordRecord> records, IvfParams params) {
  if (records.empty()) throw Error(ErrorCode::EmptyCollection, "cannot index an empty collection");
  return build(RecordTable::from_records(std::move(records)), params);
}

IvfIndex IvfIndex::build(RecordTable records, IvfParams params) {
  const std::size_t n = records.size();
  if (n == 0) throw Error(ErrorCode::EmptyCollection, "cannot index an empty collection");
  if (params.nlist == 0) params.nlist = default_nlist(n);
  if (params.nlist > n) {
    throw Error(ErrorCode::NlistTooLarge,
                "nlist " + std::to_string(params.nlist) + " exceeds record count " + std::to_string(n));
  }
  if (params.train_per_list == 0) throw Error(ErrorCode::InvalidArgument, "train_per_list must be positive");
  const std::size_t dim = records.dim();

  Rng rng(params.seed);
  std::vector<float> sample;
  std::span<const float> training = records.data();
  std::size_t n_train = n;
  const std::size_t cap = params.nlist * params.train_per_list;
  if (n > cap) {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    for (std::size_t i = 0; i < cap; ++i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(i, n - 1));
      std::swap(order[i], order[j]);
    }
    order.resize(cap);
    std::sort(order.begin(), order.end());
    sample.resize(cap * dim);
    for (std::size_t i = 0; i < cap; ++i) {
      const auto r = records.row(order[i]);
      std::copy(r.begin(), r.end(), sample.begin() + static_cast<std::ptrdiff_t>(i * dim));
    }
    training = sample;
    n_train = cap;
  }

  IvfIndex index;
  index.params_ = params;
  index.centroids_ = train_centroids(training, n_train, dim, params.nlist, params.kmeans_iters, rng);

  std::vector<std::uint32_t> labels(n);
  kernels::assign_nearest(records.data(), index.centroids_, dim, labels);
  index.postings_.assign(params.nlist, {});
  for (std::size_t i = 0; i < n; ++i) index.postings_[labels[i]].push_back(static_cast<std::uint32_t>(i));
  index.records_ = std::move(records);
  return index;
}

std::vector<std::uint32_t> IvfIndex::probe_order(std::span<const float> query, std::size_t nprobe) const {
  const std::size_t dim = records_.dim();
  std::vector<double> scores(nlist());
  kernels::score_rows(centroids_, dim, query, scores);
  std::vector<std::uint32_t> ids(nlist());
  std::iota(ids.begin(), ids.end(), 0u);
  const auto hits = top_k(ids, scores, nprobe);
  std::vector<std::uint32_t> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(h.record_id);
  return out;
}

std::vector<SearchHit> IvfIndex::search(std::span<const float> query, std::size_t k, std::size_t nprobe) const {
  const double q_inv = check_query(query, records_.dim());
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (nprobe == 0) nprobe = default_nprobe(nlist());
  if (nprobe > nlist()) {
    throw Error(ErrorCode::InvalidArgument,
                "nprobe " + std::to_string(nprobe) + " exceeds nlist " + std::to_string(nlist()));
  }
  std::vector<std::uint32_t> candidates;
  for (const auto list : probe_order(query, nprobe)) {
    const auto& p = postings_[list];
    candidates.insert(candidates.end(), p.begin(), p.end());
  }
  std::vector<double> scores(candidates.size());
  kernels::score_subset(records_.data(), records_.dim(), candidates, query, scores);
  for (std::size_t j = 0; j < scores.size(); ++j) scores[j] = scores[j] * records_.inv_norm(candidates[j]) * q_inv;
  return top_k(candidates, scores, k);
}

// ---------------------------------------------------------------------------

IndexKind VectorIndex::kind() const noexcept {
  return std::holds_alternative<FlatIndex>(impl_) ? IndexKind::Flat : IndexKind::Ivf;
}

const RecordTable& VectorIndex::records() const noexcept {
  return std::visit([](const auto& idx) -> const RecordTable& { return idx.records(); }, impl_);
}

std::vector<SearchHit> VectorIndex::search(std::span<const float> query, std::size_t k, std::size_t nprobe) const {
  if (const auto* f = flat()) return f->search(query, k);
  return ivf()->search(query, k, nprobe);
}

VectorIndex build_index(std::vector<WordRecord> records, const IndexOptions& options) {
  if (options.kind == IndexKind::Flat) return FlatIndex::build(std::move(records));
  auto params = options.ivf;
  if (params.nlist != 0 && params.nlist > records.size()) params.nlist = records.size();
  return IvfIndex::build(std::move(records), params);
}

}  // namespace ragner
