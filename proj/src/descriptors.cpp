#include "vpr/descriptors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numeric>

#include <json.hpp>

#include "vpr/error.hpp"
#include "vpr/kernels.hpp"

namespace vpr {

using nlohmann::json;

std::string_view to_string(Metric metric) { return metric == Metric::cosine ? "cosine" : "l2"; }

Metric parse_metric(std::string_view value) {
  if (value == "cosine") return Metric::cosine;
  if (value == "l2") return Metric::l2;
  throw Error(ErrorCode::InvalidConfig, "unknown metric '" + std::string(value) + "'");
}

EmbeddingFormat parse_embedding_format(std::string_view value) {
  if (value == "jsonl") return EmbeddingFormat::jsonl;
  if (value == "binary") return EmbeddingFormat::binary;
  throw Error(ErrorCode::InvalidConfig, "unknown embeddings format '" + std::string(value) + "'");
}

EmbeddingFormat embedding_format_for(const std::filesystem::path& path) {
  return path.extension() == ".jsonl" ? EmbeddingFormat::jsonl : EmbeddingFormat::binary;
}

// ---------------------------------------------------------------------------
// DescriptorSet

void DescriptorSet::add(std::string id, std::span<const double> vector) {
  if (vector.size() != dim_) {
    throw Error(ErrorCode::DimMismatch,
                id + ": got " + std::to_string(vector.size()) + ", want " + std::to_string(dim_));
  }
  if (by_id_.contains(id)) throw Error(ErrorCode::DuplicateId, id);
  by_id_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  values_.insert(values_.end(), vector.begin(), vector.end());
}

void DescriptorSet::reserve(std::size_t rows) {
  ids_.reserve(rows);
  values_.reserve(rows * dim_);
  by_id_.reserve(rows);
}

void DescriptorSet::normalize() {
  for (std::size_t r = 0; r < size(); ++r) {
    std::span<double> row(values_.data() + r * dim_, dim_);
    if (kernels::norm(row) == 0.0) throw Error(ErrorCode::ZeroVector, ids_[r]);
    l2_normalize(row);
  }
}

std::optional<std::size_t> DescriptorSet::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> DescriptorSet::at(std::string_view id) const {
  auto row_index = find(id);
  if (!row_index) throw Error(ErrorCode::UnknownId, std::string(id));
  return row(*row_index);
}

bool DescriptorSet::operator==(const DescriptorSet& other) const {
  return dim_ == other.dim_ && ids_ == other.ids_ && values_ == other.values_;
}

// ---------------------------------------------------------------------------
// File formats

namespace {

constexpr char kMagic[4] = {'V', 'P', 'R', 'D'};

DescriptorSet read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());

  std::optional<DescriptorSet> set;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> buffer;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc = json::parse(line, nullptr, false);
    const auto where = path.string() + " line " + std::to_string(line_no);
    if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::ParseError, where);
    auto id = doc.find("id");
    auto vec = doc.find("vector");
    if (id == doc.end() || !id->is_string() || vec == doc.end() || !vec->is_array()) {
      throw Error(ErrorCode::ParseError, where + ": expected {\"id\": string, \"vector\": [numbers]}");
    }
    buffer.clear();
    for (const auto& v : *vec) {
      if (!v.is_number()) throw Error(ErrorCode::ParseError, where + ": non-numeric vector element");
      buffer.push_back(v.get<double>());
    }
    if (!set) set.emplace(buffer.size());
    set->add(id->get<std::string>(), buffer);
  }
  return set ? std::move(*set) : DescriptorSet(0);
}

class ByteReader {
 public:
  explicit ByteReader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  bool has(std::size_t n) const { return pos_ + n <= bytes_.size(); }
  bool at_end() const { return pos_ == bytes_.size(); }

  template <typename T>
  T read_le() {
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return value;
  }

  std::string read_string(std::size_t n) {
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void write_le(std::ostream& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((value >> (8 * i)) & 0xFF));
}

DescriptorSet read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  ByteReader reader(std::vector<char>(std::istreambuf_iterator<char>(in), {}));

  if (!reader.has(12) || reader.read_string(4) != std::string_view(kMagic, 4)) {
    throw Error(ErrorCode::CorruptHeader, path.string() + ": missing VPRD header");
  }
  const auto dim = reader.read_le<std::uint32_t>();
  const auto count = reader.read_le<std::uint32_t>();
  if (dim == 0) throw Error(ErrorCode::CorruptHeader, path.string() + ": zero dimension");

  DescriptorSet set(dim);
  set.reserve(count);
  std::vector<double> buffer(dim);
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto where = path.string() + " record " + std::to_string(r);
    if (!reader.has(2)) throw Error(ErrorCode::ParseError, where + ": truncated");
    const auto id_len = reader.read_le<std::uint16_t>();
    if (!reader.has(id_len + std::size_t{4} * dim)) throw Error(ErrorCode::ParseError, where + ": truncated");
    std::string id = reader.read_string(id_len);
    for (auto& v : buffer) v = static_cast<double>(std::bit_cast<float>(reader.read_le<std::uint32_t>()));
    set.add(std::move(id), buffer);
  }
  if (!reader.at_end()) throw Error(ErrorCode::ParseError, path.string() + ": trailing bytes after last record");
  return set;
}

}  // namespace

DescriptorSet load_embeddings(const std::filesystem::path& path, EmbeddingFormat format, bool normalize) {
  DescriptorSet set = format == EmbeddingFormat::jsonl ? read_jsonl(path) : read_binary(path);
  if (normalize) set.normalize();
  return set;
}

void write_embeddings(const std::filesystem::path& path, const DescriptorSet& set, EmbeddingFormat format) {
  if (format == EmbeddingFormat::jsonl) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::StoreError, "cannot write " + path.string());
    for (std::size_t r = 0; r < set.size(); ++r) {
      auto row = set.row(r);
      out << json{{"id", set.id(r)}, {"vector", std::vector<double>(row.begin(), row.end())}}.dump() << '\n';
    }
    return;
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::StoreError, "cannot write " + path.string());
  out.write(kMagic, 4);
  write_le(out, static_cast<std::uint32_t>(set.dim()));
  write_le(out, static_cast<std::uint32_t>(set.size()));
  for (std::size_t r = 0; r < set.size(); ++r) {
    const auto& id = set.id(r);
    if (id.size() > 0xFFFF) throw Error(ErrorCode::StoreError, "id longer than 65535 bytes");
    write_le(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (double v : set.row(r)) write_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
}

// ---------------------------------------------------------------------------
// Pooling and similarity

std::vector<double> gem_pool(std::span<const double> features, std::size_t dim, double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw Error(ErrorCode::NonPositiveP, std::to_string(p));
  if (dim == 0 || features.empty()) throw Error(ErrorCode::EmptyInput, "gem_pool needs at least one row");
  if (features.size() % dim != 0) {
    throw Error(ErrorCode::DimMismatch, "feature count " + std::to_string(features.size()) +
                                            " is not a multiple of dim " + std::to_string(dim));
  }
  const std::size_t rows = features.size() / dim;

  std::vector<double> pooled(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    double lo = std::max(0.0, features[c]);
    double hi = lo;
    for (std::size_t r = 1; r < rows; ++r) {
      const double v = std::max(0.0, features[r * dim + c]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi == 0.0) continue;
    // Scaling by the column max keeps x^p representable for large p.
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += std::pow(std::max(0.0, features[r * dim + c]) / hi, p);
    const double value = hi * std::pow(acc / static_cast<double>(rows), 1.0 / p);
    pooled[c] = std::clamp(value, lo, hi);
  }
  return pooled;
}

void l2_normalize(std::span<double> v) {
  const double n = kernels::norm(v);
  if (n == 0.0) throw Error(ErrorCode::ZeroVector, "cannot normalize a zero vector");
  for (auto& x : v) x /= n;
}

double similarity(std::span<const double> a, std::span<const double> b, Metric metric) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimMismatch, "got " + std::to_string(a.size()) + ", want " + std::to_string(b.size()));
  }
  if (metric == Metric::cosine && (kernels::norm(a) == 0.0 || kernels::norm(b) == 0.0)) {
    throw Error(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
  }
  return kernels::score(a, b, metric);
}

// ---------------------------------------------------------------------------
// Retrieval

namespace {

CandidateList select_top_n(std::string query_id, const DescriptorSet& db, std::span<const double> scores,
                           std::size_t n) {
  std::vector<std::size_t> order(db.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return db.id(a) < db.id(b);
  };
  const std::size_t keep = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), better);

  CandidateList list{std::move(query_id), {}};
  list.items.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    list.items.push_back({db.id(order[i]), scores[order[i]], static_cast<int>(i + 1)});
  }
  return list;
}

}  // namespace

CandidateList retrieve_top_n(std::string query_id, std::span<const double> query, const DescriptorSet& db,
                             std::size_t n, Metric metric, Exec exec) {
  if (n == 0) throw Error(ErrorCode::InvalidConfig, "top-n must be positive");
  if (query.size() != db.dim() && !db.empty()) {
    throw Error(ErrorCode::DimMismatch,
                query_id + ": got " + std::to_string(query.size()) + ", want " + std::to_string(db.dim()));
  }
  std::vector<double> scores(db.size());
  if (exec == Exec::parallel) {
    kernels::score_rows_parallel(query, db.values(), db.dim(), metric, scores);
  } else {
    kernels::score_rows_serial(query, db.values(), db.dim(), metric, scores);
  }
  return select_top_n(std::move(query_id), db, scores, n);
}

std::vector<CandidateList> retrieve_batch(const DescriptorSet& queries, const DescriptorSet& db, std::size_t n,
                                          Metric metric, Exec exec) {
  if (n == 0) throw Error(ErrorCode::InvalidConfig, "top-n must be positive");
  if (queries.dim() != db.dim() && !queries.empty() && !db.empty()) {
    throw Error(ErrorCode::DimMismatch,
                "query dim " + std::to_string(queries.dim()) + " vs database dim " + std::to_string(db.dim()));
  }
  std::vector<CandidateList> out(queries.size());
  const auto count = static_cast<std::ptrdiff_t>(queries.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t q = 0; q < count; ++q) {
      const auto row = static_cast<std::size_t>(q);
      out[row] = retrieve_top_n(queries.id(row), queries.row(row), db, n, metric, Exec::serial);
    }
  } else {
    for (std::size_t row = 0; row < queries.size(); ++row) {
      out[row] = retrieve_top_n(queries.id(row), queries.row(row), db, n, metric, Exec::serial);
    }
  }
  return out;
}

void write_candidates(const std::filesystem::path& path, const std::vector<CandidateList>& lists) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::StoreError, "cannot write " + path.string());
  for (const auto& list : lists) {
    json items = json::array();
    for (const auto& c : list.items) {
      items.push_back({{"candidate_id", c.candidate_id}, {"coarse_score", c.coarse_score}, {"coarse_rank", c.coarse_rank}});
    }
    out << json{{"query_id", list.query_id}, {"candidates", std::move(items)}}.dump() << '\n';
  }
}

std::vector<CandidateList> load_candidates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<CandidateList> lists;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json doc = json::parse(line);
      CandidateList list{doc.at("query_id").get<std::string>(), {}};
      for (const auto& item : doc.at("candidates")) {
        list.items.push_back({item.at("candidate_id").get<std::string>(), item.at("coarse_score").get<double>(),
                              item.at("coarse_rank").get<int>()});
      }
      lists.push_back(std::move(list));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return lists;
}

}  // namespace vpr
