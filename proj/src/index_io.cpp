#include <bit>
#include <cstring>

#include "ragner/error.hpp"
#include "ragner/io.hpp"
#include "ragner/vector_index.hpp"

namespace ragner {

static_assert(std::endian::native == std::endian::little, "index files are written in host order");

namespace {

constexpr char kMagic[4] = {'R', 'G', 'I', 'X'};

class Writer {
 public:
  template <class T>
  void put(T value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    out_.append(p, sizeof(T));
  }
  void put_bytes(std::string_view bytes) { out_.append(bytes); }
  void put_floats(std::span<const float> values) {
    out_.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void get_floats(std::vector<float>& dst, std::size_t n) {
    if (n > (bytes_.size() - pos_) / sizeof(float)) truncated();
    dst.resize(n);
    std::memcpy(dst.data(), bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (n > bytes_.size() - pos_) truncated();
  }
  [[noreturn]] static void truncated() { throw Error(ErrorCode::FormatError, "index file is truncated"); }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void write_records(Writer& w, const RecordTable& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    w.put<std::uint32_t>(t.sentence_id(i));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.word(i).size()));
    w.put_bytes(t.word(i));
  }
  w.put_floats(t.data());
}

}  // namespace

class IndexReader {
 public:
  static RecordTable read_records(Reader& r, std::size_t dim, std::size_t count) {
    RecordTable t;
    t.dim_ = dim;
    t.words_.reserve(count);
    t.sentence_ids_.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      t.sentence_ids_.push_back(r.get<std::uint32_t>());
      const auto len = r.get<std::uint32_t>();
      t.words_.push_back(r.get_bytes(len));
    }
    r.get_floats(t.data_, count * dim);
    t.compute_norms();
    return t;
  }

  static IvfIndex read_ivf(Reader& r, RecordTable records) {
    IvfIndex idx;
    const auto nlist = r.get<std::uint32_t>();
    idx.params_.nlist = nlist;
    idx.params_.kmeans_iters = r.get<std::uint32_t>();
    idx.params_.seed = r.get<std::uint64_t>();
    idx.params_.train_per_list = r.get<std::uint32_t>();
    if (nlist == 0 || nlist > records.size()) throw Error(ErrorCode::FormatError, "bad nlist in index file");
    r.get_floats(idx.centroids_, static_cast<std::size_t>(nlist) * records.dim());
    idx.postings_.resize(nlist);
    std::size_t total = 0;
    std::vector<bool> seen(records.size(), false);
    for (auto& list : idx.postings_) {
      const auto len = r.get<std::uint64_t>();
      if (len > records.size()) throw Error(ErrorCode::FormatError, "posting list longer than record count");
      list.reserve(len);
      for (std::uint64_t i = 0; i < len; ++i) {
        const auto id = r.get<std::uint32_t>();
        if (id >= records.size() || seen[id]) throw Error(ErrorCode::FormatError, "bad record id in posting list");
        seen[id] = true;
        list.push_back(id);
      }
      total += len;
    }
    if (total != records.size()) throw Error(ErrorCode::FormatError, "posting lists do not cover every record");
    idx.records_ = std::move(records);
    return idx;
  }
};

std::string serialize_index(const VectorIndex& index, const std::string& metadata_json) {
  const auto& t = index.records();
  Writer w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint32_t>(kIndexFormatVersion);
  w.put<std::uint32_t>(index.kind() == IndexKind::Flat ? 0u : 1u);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.dim()));
  w.put<std::uint64_t>(t.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(metadata_json.size()));
  w.put_bytes(metadata_json);
  write_records(w, t);
  if (const auto* ivf = index.ivf()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ivf->nlist()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ivf->params().kmeans_iters));
    w.put<std::uint64_t>(ivf->params().seed);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ivf->params().train_per_list));
    w.put_floats(ivf->centroids());
    for (const auto& list : ivf->postings()) {
      w.put<std::uint64_t>(list.size());
      for (const auto id : list) w.put<std::uint32_t>(id);
    }
  }
  return w.take();
}

VectorIndex deserialize_index(std::string_view bytes, std::string* metadata_json) {
  Reader r(bytes);
  if (r.get_bytes(4) != std::string_view(kMagic, 4)) throw Error(ErrorCode::FormatError, "not an index file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kIndexFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "index format version " + std::to_string(version) +
                                                " is not supported (expected " + std::to_string(kIndexFormatVersion) + ")");
  }
  const auto kind = r.get<std::uint32_t>();
  const auto dim = r.get<std::uint32_t>();
  const auto count = r.get<std::uint64_t>();
  if (kind > 1) throw Error(ErrorCode::FormatError, "unknown index kind " + std::to_string(kind));
  if (dim == 0 || count == 0) throw Error(ErrorCode::FormatError, "empty index file");
  const auto meta_len = r.get<std::uint32_t>();
  auto meta = r.get_bytes(meta_len);
  if (metadata_json) *metadata_json = std::move(meta);
  auto records = IndexReader::read_records(r, dim, count);
  std::optional<VectorIndex> out;
  if (kind == 0) {
    out.emplace(FlatIndex(std::move(records)));
  } else {
    out.emplace(IndexReader::read_ivf(r, std::move(records)));
  }
  if (!r.at_end()) throw Error(ErrorCode::FormatError, "trailing bytes after index data");
  return std::move(*out);
}

void save_index(const VectorIndex& index, const std::filesystem::path& path, const std::string& metadata_json) {
  io::write_file(path, serialize_index(index, metadata_json));
}

VectorIndex load_index(const std::filesystem::path& path, std::string* metadata_json) {
  return deserialize_index(io::read_file(path), metadata_json);
}

}  // namespace ragner
