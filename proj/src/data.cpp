#include "hycoqa/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "binary_io.hpp"
#include "hycoqa/error.hpp"

namespace hycoqa::data {

using json = nlohmann::json;

namespace {

constexpr std::string_view kStoreMagic = "HYCQE1";

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const bool blank = std::all_of(line.begin(), line.end(),
                                   [](unsigned char c) { return std::isspace(c) != 0; });
    if (!blank) fn(line_no, line);
    if (end == text.size()) break;
    start = end + 1;
  }
}

std::string required_string(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw FormatError("line " + std::to_string(line_no) + ": missing string field \"" + key + "\"");
  }
  return it->get<std::string>();
}

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::vector<CorpusItem> parse_corpus(std::string_view jsonl) {
  std::vector<CorpusItem> items;
  std::unordered_set<std::string> seen;
  for_each_line(jsonl, [&](std::size_t line_no, std::string_view line) {
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError("line " + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw FormatError("line " + std::to_string(line_no) + ": not a JSON object");
    CorpusItem item{required_string(obj, "id", line_no), required_string(obj, "description", line_no),
                    required_string(obj, "code", line_no), required_string(obj, "lang", line_no)};
    if (item.id.empty() || item.description.empty() || item.code.empty()) {
      throw FormatError("line " + std::to_string(line_no) + ": id, description and code must be nonempty");
    }
    if (!seen.insert(item.id).second) {
      throw FormatError("line " + std::to_string(line_no) + ": duplicate id \"" + item.id + "\"");
    }
    items.push_back(std::move(item));
  });
  return items;
}

std::vector<CorpusItem> load_corpus(const std::filesystem::path& path) {
  return parse_corpus(io::read_file(path));
}

void EmbeddingStore::add(std::string id, const Matrix& values) {
  Entry e;
  e.id = std::move(id);
  e.rows = values.rows;
  if (values.cols != dim_) {
    throw ShapeError("entry \"" + e.id + "\" has width " + std::to_string(values.cols) +
                     ", store dim is " + std::to_string(dim_));
  }
  e.values.reserve(values.data.size());
  for (double v : values.data) e.values.push_back(static_cast<float>(v));
  add(std::move(e));
}

void EmbeddingStore::add(Entry entry) {
  if (entry.rows == 0) throw std::invalid_argument("entry \"" + entry.id + "\" has no rows");
  if (entry.values.size() != entry.rows * dim_) {
    throw ShapeError("entry \"" + entry.id + "\" does not have " + std::to_string(dim_) + " columns");
  }
  for (float v : entry.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("entry \"" + entry.id + "\" has non-finite values");
  }
  if (index_.contains(entry.id)) throw std::invalid_argument("duplicate store id \"" + entry.id + "\"");
  index_.emplace(entry.id, entries_.size());
  entries_.push_back(std::move(entry));
}

const EmbeddingStore::Entry& EmbeddingStore::at(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown id \"" + id + "\"");
  return entries_[it->second];
}

Matrix EmbeddingStore::matrix(const std::string& id) const {
  const Entry& e = at(id);
  Matrix m(e.rows, dim_);
  std::copy(e.values.begin(), e.values.end(), m.data.begin());
  return m;
}

std::string serialize_embeddings(const EmbeddingStore& store) {
  if (store.dim() == 0) throw std::invalid_argument("store dim must be positive");
  io::ByteWriter w;
  w.raw(kStoreMagic);
  w.le(store.dim());
  w.le(static_cast<std::uint64_t>(store.size()));
  for (const auto& e : store.entries()) {
    w.le(static_cast<std::uint32_t>(e.id.size()));
    w.raw(e.id);
    w.le(static_cast<std::uint32_t>(e.rows));
    for (float v : e.values) w.le(v);
  }
  return w.take();
}

EmbeddingStore deserialize_embeddings(const std::string& bytes) {
  io::ByteReader r(bytes, "embedding store");
  if (r.raw(kStoreMagic.size()) != kStoreMagic) {
    throw FormatError("embedding store: bad magic (expected HYCQE1)");
  }
  const auto dim = r.le<std::uint32_t>();
  if (dim == 0) throw FormatError("embedding store: dim is zero");
  const auto count = r.le<std::uint64_t>();
  EmbeddingStore store(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    EmbeddingStore::Entry e;
    const auto id_len = r.le<std::uint32_t>();
    e.id = std::string(r.raw(id_len));
    e.rows = r.le<std::uint32_t>();
    if (e.rows == 0) throw FormatError("embedding store: entry \"" + e.id + "\" has zero rows");
    const std::uint64_t n_values = std::uint64_t{e.rows} * dim;
    if (n_values * 4 > r.remaining()) {
      throw FormatError("embedding store: truncated in entry \"" + e.id + "\"");
    }
    e.values.resize(n_values);
    for (float& v : e.values) v = r.le<float>();
    try {
      store.add(std::move(e));
    } catch (const std::exception& ex) {
      throw FormatError(std::string("embedding store: ") + ex.what());
    }
  }
  if (!r.done()) {
    throw FormatError("embedding store: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return store;
}

void write_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
  io::write_file(path, serialize_embeddings(store));
}

EmbeddingStore read_embeddings(const std::filesystem::path& path) {
  return deserialize_embeddings(io::read_file(path));
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "unknown";
}

std::size_t sample_negative(std::size_t exclude, std::size_t pool_size, std::mt19937_64& rng) {
  if (pool_size < 2) throw std::invalid_argument("need at least 2 items to sample a negative");
  std::uniform_int_distribution<std::size_t> pick(0, pool_size - 1);
  for (;;) {
    const std::size_t j = pick(rng);
    if (j != exclude) return j;
  }
}

TripleSplits make_triples(const std::vector<CorpusItem>& corpus, const SplitRatios& ratios,
                          std::uint64_t seed) {
  if (corpus.size() < 2) throw std::invalid_argument("corpus needs at least 2 items");
  if (!(ratios.train >= 0 && ratios.valid >= 0 && ratios.test >= 0)) {
    throw std::invalid_argument("split ratios must be nonnegative");
  }
  const double total = ratios.train + ratios.valid + ratios.test;
  if (!(total > 0)) throw std::invalid_argument("split ratios must not all be zero");

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n = static_cast<double>(corpus.size());
  const auto n_train = std::min<std::size_t>(corpus.size(), std::llround(n * ratios.train / total));
  const auto n_valid =
      std::min<std::size_t>(corpus.size() - n_train, std::llround(n * ratios.valid / total));

  TripleSplits out;
  auto fill = [&](TripleDataset& ds, std::size_t begin, std::size_t end) {
    const std::size_t size = end - begin;
    if (size == 1) {
      throw std::invalid_argument(std::string(split_name(ds.split)) +
                                  " split has a single item; cannot sample a negative");
    }
    for (std::size_t k = 0; k < size; ++k) {
      const std::size_t neg = sample_negative(k, size, rng);
      const std::string& id = corpus[order[begin + k]].id;
      ds.triples.push_back({id, id, corpus[order[begin + neg]].id});
    }
  };
  fill(out.train, 0, n_train);
  fill(out.valid, n_train, n_train + n_valid);
  fill(out.test, n_train + n_valid, corpus.size());
  return out;
}

void resample_negatives(TripleDataset& dataset, std::mt19937_64& rng) {
  auto& ts = dataset.triples;
  if (ts.empty()) return;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    ts[k].neg_id = ts[sample_negative(k, ts.size(), rng)].pos_id;
  }
}

std::string format_triples(const TripleDataset& dataset) {
  std::string out;
  for (const auto& t : dataset.triples) {
    nlohmann::ordered_json obj = {{"qid", t.qid}, {"pos_id", t.pos_id}, {"neg_id", t.neg_id}};
    out += obj.dump();
    out += '\n';
  }
  return out;
}

TripleDataset parse_triples(std::string_view jsonl, Split split) {
  TripleDataset ds{split, {}};
  for_each_line(jsonl, [&](std::size_t line_no, std::string_view line) {
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError("line " + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw FormatError("line " + std::to_string(line_no) + ": not a JSON object");
    Triple t{required_string(obj, "qid", line_no), required_string(obj, "pos_id", line_no),
             required_string(obj, "neg_id", line_no)};
    if (t.pos_id == t.neg_id) {
      throw FormatError("line " + std::to_string(line_no) + ": pos_id equals neg_id");
    }
    ds.triples.push_back(std::move(t));
  });
  return ds;
}

void write_triples(const TripleDataset& dataset, const std::filesystem::path& path) {
  io::write_file(path, format_triples(dataset));
}

TripleDataset read_triples(const std::filesystem::path& path, Split split) {
  return parse_triples(io::read_file(path), split);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (c < 0x80 && (std::isspace(c) || std::ispunct(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Matrix pseudo_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("embedding dim must be positive");
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw std::invalid_argument("text has no tokens");

  Matrix m(tokens.size(), dim);
  const std::uint64_t key = mix64(seed ^ 0x68796371'61000000ull);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto row = m.row(i);
    std::uint64_t state = fnv1a(tokens[i]) ^ key;
    double sq = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      state = mix64(state);
      // 53 high bits -> uniform in [-1, 1).
      row[k] = static_cast<double>(state >> 11) * 0x1.0p-52 - 1.0;
      sq += row[k] * row[k];
    }
    const double scale = kPseudoEmbedNorm / std::sqrt(sq);
    for (double& v : row) v *= scale;
  }
  return m;
}

}  // namespace hycoqa::data
