#pragma once

// Corpus ingestion, the binary token-embedding store, and triple construction.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hycoqa/matrix.hpp"

namespace hycoqa::data {

struct CorpusItem {
  std::string id;
  std::string description;
  std::string code;
  std::string lang;

  bool operator==(const CorpusItem&) const = default;
};

/// Reads a JSON-lines corpus with keys {id, description, code, lang}. Blank
/// lines are skipped. Errors name the 1-based line number or the duplicate id.
std::vector<CorpusItem> load_corpus(const std::filesystem::path& path);
std::vector<CorpusItem> parse_corpus(std::string_view jsonl);

/// Per-item token embeddings (M x n, float32), in insertion order.
class EmbeddingStore {
 public:
  struct Entry {
    std::string id;
    std::size_t rows = 0;
    std::vector<float> values;  // rows x dim, row-major

    bool operator==(const Entry&) const = default;
  };

  explicit EmbeddingStore(std::uint32_t dim = 0) : dim_(dim) {}

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Stores `values` rounded to float32. Throws on duplicate id, zero rows,
  /// wrong width or non-finite values.
  void add(std::string id, const Matrix& values);
  void add(Entry entry);

  bool contains(const std::string& id) const { return index_.contains(id); }
  const Entry& at(const std::string& id) const;

  /// The entry promoted to float64.
  Matrix matrix(const std::string& id) const;

  bool operator==(const EmbeddingStore& other) const {
    return dim_ == other.dim_ && entries_ == other.entries_;
  }

 private:
  std::uint32_t dim_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Store layout (little-endian): "HYCQE1", u32 n, u64 count, then per item
// u32 id length, id bytes, u32 M, float32[M*n] row-major.
std::string serialize_embeddings(const EmbeddingStore& store);
EmbeddingStore deserialize_embeddings(const std::string& bytes);
void write_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore read_embeddings(const std::filesystem::path& path);

enum class Split { train, valid, test };
std::string_view split_name(Split split);

struct Triple {
  std::string qid;
  std::string pos_id;
  std::string neg_id;

  bool operator==(const Triple&) const = default;
};

struct TripleDataset {
  Split split = Split::train;
  std::vector<Triple> triples;

  bool operator==(const TripleDataset&) const = default;
};

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct TripleSplits {
  TripleDataset train{Split::train, {}};
  TripleDataset valid{Split::valid, {}};
  TripleDataset test{Split::test, {}};
};

/// Shuffles the corpus with `seed`, cuts it into train/valid/test by ratio and
/// pairs every item with a negative drawn uniformly from the other items of
/// its own split. Description and positive code share the item id, so
/// qid == pos_id. A split holding exactly one item cannot be paired and throws;
/// empty splits are allowed.
TripleSplits make_triples(const std::vector<CorpusItem>& corpus, const SplitRatios& ratios,
                          std::uint64_t seed);

/// Draws an index in [0, pool_size) other than `exclude`, uniformly, by
/// rejection. Requires pool_size >= 2.
std::size_t sample_negative(std::size_t exclude, std::size_t pool_size, std::mt19937_64& rng);

/// Replaces every neg_id with a fresh draw from the dataset's own positives.
void resample_negatives(TripleDataset& dataset, std::mt19937_64& rng);

/// JSON-lines {qid, pos_id, neg_id}.
std::string format_triples(const TripleDataset& dataset);
TripleDataset parse_triples(std::string_view jsonl, Split split);
void write_triples(const TripleDataset& dataset, const std::filesystem::path& path);
TripleDataset read_triples(const std::filesystem::path& path, Split split = Split::train);

/// Lowercased tokens split on ASCII whitespace and punctuation.
std::vector<std::string> tokenize(std::string_view text);

/// Norm of every pseudo-embedding row.
inline constexpr double kPseudoEmbedNorm = 0.1;

/// Deterministic stand-in for a frozen encoder: each token maps to a fixed
/// n-vector of norm 0.1 derived from a hash of (token, seed). Throws when the
/// text has no tokens.
Matrix pseudo_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

}  // namespace hycoqa::data
