#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ragner/corpus.hpp"

namespace ragner {

/// A stored vector together with the word (or sentence text) it came from
/// and the labeled example that owns it.
struct WordRecord {
  std::uint32_t record_id = 0;
  std::string word;
  std::vector<float> vector;
  SentenceId sentence_id = 0;
};

struct SearchHit {
  std::uint32_t record_id = 0;
  double score = 0.0;

  bool operator==(const SearchHit&) const = default;
};

/// Descending score, then ascending record id.
bool hit_before(const SearchHit& a, const SearchHit& b) noexcept;

/// Row-major vector storage with per-row labels. Row i has record id i.
class RecordTable {
 public:
  RecordTable() = default;

  /// Validates dense ids, equal dimensions and unit norms.
  /// Throws EmptyCollection, DimensionMismatch or InvalidArgument.
  static RecordTable from_records(std::vector<WordRecord> records);

  std::size_t size() const noexcept { return sentence_ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  const std::string& word(std::size_t i) const { return words_[i]; }
  /// 1 / ||row i||, so scores are exact cosines of the stored floats.
  double inv_norm(std::size_t i) const { return inv_norms_[i]; }
  SentenceId sentence_id(std::size_t i) const { return sentence_ids_[i]; }

  bool operator==(const RecordTable&) const = default;

 private:
  friend class IndexReader;
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::vector<std::string> words_;
  std::vector<SentenceId> sentence_ids_;
  std::vector<double> inv_norms_;

  void compute_norms();
};

/// Exhaustive cosine scan.
class FlatIndex {
 public:
  explicit FlatIndex(RecordTable records) : records_(std::move(records)) {}

  /// Throws EmptyCollection, DimensionMismatch.
  static FlatIndex build(std::vector<WordRecord> records);

  /// Exact top-k by cosine (records and query are unit vectors).
  std::vector<SearchHit> search(std::span<const float> query, std::size_t k) const;

  const RecordTable& records() const noexcept { return records_; }

  bool operator==(const FlatIndex&) const = default;

 private:
  RecordTable records_;
};

struct IvfParams {
  std::size_t nlist = 0;            // 0: floor(sqrt(N)), at least 1
  std::size_t kmeans_iters = 20;
  std::uint64_t seed = 0;
  std::size_t train_per_list = 64;  // k-means trains on at most nlist * this many points

  bool operator==(const IvfParams&) const = default;
};

std::size_t default_nlist(std::size_t record_count) noexcept;
std::size_t default_nprobe(std::size_t nlist) noexcept;

/// Inverted-file index: spherical k-means centroids plus one posting list per
/// centroid. Search scans the postings of the nprobe closest centroids.
class IvfIndex {
 public:
  /// Throws EmptyCollection, NlistTooLarge, DimensionMismatch.
  static IvfIndex build(std::vector<WordRecord> records, IvfParams params);
  static IvfIndex build(RecordTable records, IvfParams params);

  /// Top-k among candidates in the nprobe nearest lists. nprobe == 0 uses
  /// default_nprobe(nlist). Throws DimensionMismatch, InvalidArgument.
  std::vector<SearchHit> search(std::span<const float> query, std::size_t k,
                                std::size_t nprobe = 0) const;

  /// The lists probed for `query`, closest first.
  std::vector<std::uint32_t> probe_order(std::span<const float> query, std::size_t nprobe) const;

  const RecordTable& records() const noexcept { return records_; }
  std::size_t nlist() const noexcept { return postings_.size(); }
  const std::vector<float>& centroids() const noexcept { return centroids_; }
  const std::vector<std::vector<std::uint32_t>>& postings() const noexcept { return postings_; }
  const IvfParams& params() const noexcept { return params_; }

  bool operator==(const IvfIndex&) const = default;

 private:
  friend class IndexReader;
  RecordTable records_;
  std::vector<float> centroids_;  // nlist x dim, unit norm
  std::vector<std::vector<std::uint32_t>> postings_;
  IvfParams params_;
};

enum class IndexKind { Flat, Ivf };

/// Either index behind one search entry point.
class VectorIndex {
 public:
  VectorIndex(FlatIndex flat) : impl_(std::move(flat)) {}
  VectorIndex(IvfIndex ivf) : impl_(std::move(ivf)) {}

  IndexKind kind() const noexcept;
  const RecordTable& records() const noexcept;
  std::size_t size() const noexcept { return records().size(); }

  /// nprobe is ignored by flat indexes.
  std::vector<SearchHit> search(std::span<const float> query, std::size_t k,
                                std::size_t nprobe = 0) const;

  const FlatIndex* flat() const noexcept { return std::get_if<FlatIndex>(&impl_); }
  const IvfIndex* ivf() const noexcept { return std::get_if<IvfIndex>(&impl_); }

  bool operator==(const VectorIndex&) const = default;

 private:
  std::variant<FlatIndex, IvfIndex> impl_;
};

struct IndexOptions {
  IndexKind kind = IndexKind::Ivf;
  IvfParams ivf;
};

VectorIndex build_index(std::vector<WordRecord> records, const IndexOptions& options);

// Binary layout (little endian), version 1:
//   char[4]  magic "RGIX"
//   u32      version
//   u32      kind (0 flat, 1 ivf)
//   u32      dim
//   u64      record count N
//   u32      metadata length, then that many bytes of UTF-8 JSON
//   N x { u32 sentence_id, u32 word length, word bytes }
//   N*dim    f32 vectors, row-major
//   ivf only:
//     u32 nlist, u32 kmeans_iters, u64 seed, u32 train_per_list
//     nlist*dim f32 centroids
//     nlist x { u64 length, length x u32 record ids }
inline constexpr std::uint32_t kIndexFormatVersion = 1;

/// Throws IoError.
void save_index(const VectorIndex& index, const std::filesystem::path& path,
                const std::string& metadata_json = "{}");

/// Throws IoError, FormatError, VersionMismatch.
VectorIndex load_index(const std::filesystem::path& path, std::string* metadata_json = nullptr);

std::string serialize_index(const VectorIndex& index, const std::string& metadata_json = "{}");
VectorIndex deserialize_index(std::string_view bytes, std::string* metadata_json = nullptr);

}  // namespace ragner
