#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vpr {

enum class Metric { cosine, l2 };
enum class EmbeddingFormat { jsonl, binary };
enum class Exec { serial, parallel };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view value);
EmbeddingFormat parse_embedding_format(std::string_view value);
// ".jsonl" -> jsonl, anything else -> binary.
EmbeddingFormat embedding_format_for(const std::filesystem::path& path);

// Id -> descriptor table, rows kept in insertion order and stored contiguously.
// Immutable once loaded; concurrent reads are safe.
class DescriptorSet {
 public:
  explicit DescriptorSet(std::size_t dim = 0) : dim_(dim) {}

  void add(std::string id, std::span<const double> vector);  // DimMismatch, DuplicateId
  void reserve(std::size_t rows);
  void normalize();  // L2 normalizes every row; ZeroVector on an all-zero row

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  const std::string& id(std::size_t row) const { return ids_[row]; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const double> row(std::size_t row) const { return {values_.data() + row * dim_, dim_}; }
  std::span<const double> values() const { return values_; }
  std::optional<std::size_t> find(std::string_view id) const;
  std::span<const double> at(std::string_view id) const;  // UnknownId

  bool operator==(const DescriptorSet& other) const;

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Rows are L2-normalized after loading unless `normalize` is false.
DescriptorSet load_embeddings(const std::filesystem::path& path, EmbeddingFormat format, bool normalize = true);
void write_embeddings(const std::filesystem::path& path, const DescriptorSet& set, EmbeddingFormat format);

// Generalized-mean pooling over the rows of a row-major n x dim matrix.
// Negative inputs are clamped to zero before pooling.
std::vector<double> gem_pool(std::span<const double> features, std::size_t dim, double p = 3.0);

void l2_normalize(std::span<double> v);  // ZeroVector

// Higher is more similar for both metrics: cosine in [-1, 1], l2 as negated distance.
double similarity(std::span<const double> a, std::span<const double> b, Metric metric);

struct Candidate {
  std::string candidate_id;
  double coarse_score = 0.0;
  int coarse_rank = 0;  // 1-based

  bool operator==(const Candidate&) const = default;
};

struct CandidateList {
  std::string query_id;
  std::vector<Candidate> items;

  bool operator==(const CandidateList&) const = default;
};

// Exact top-n by similarity; ties broken by ascending id.
CandidateList retrieve_top_n(std::string query_id, std::span<const double> query, const DescriptorSet& db,
                             std::size_t n, Metric metric, Exec exec = Exec::parallel);

// Top-n for every row of `queries`, in query order.
std::vector<CandidateList> retrieve_batch(const DescriptorSet& queries, const DescriptorSet& db, std::size_t n,
                                          Metric metric, Exec exec = Exec::parallel);

void write_candidates(const std::filesystem::path& path, const std::vector<CandidateList>& lists);
std::vector<CandidateList> load_candidates(const std::filesystem::path& path);

}  // namespace vpr
