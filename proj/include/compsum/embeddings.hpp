#pragma once

// Word-vector table, phrase encoding and cosine similarity. Phrase vectors
// are the mean of in-vocabulary token vectors; tuples embed as
// [phrase(e1) | phrase(e2) | one-hot(relation)].

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "compsum/core.hpp"

namespace compsum {

struct EmbeddingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PhraseVector {
  std::vector<double> values;
  bool is_zero = true;  // true iff all components are zero

  static PhraseVector zeros(std::size_t dim) {
    return PhraseVector{std::vector<double>(dim, 0.0), true};
  }

  static PhraseVector of(std::vector<double> v) {
    bool zero = true;
    for (double x : v)
      if (x != 0.0) { zero = false; break; }
    return PhraseVector{std::move(v), zero};
  }

  std::size_t size() const { return values.size(); }
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dimension,
                 std::unordered_map<std::string, std::vector<double>> entries)
      : dimension_(dimension), entries_(std::move(entries)) {}

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }

  const std::vector<double>* find(const std::string& word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

  // Text format: one "word v1 v2 ... vd" line per entry; dimension inferred
  // from the first line. Duplicate words: last entry wins, warning recorded.
  static EmbeddingTable load(std::istream& in) {
    EmbeddingTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream ss(line);
      std::string word;
      ss >> word;
      std::vector<double> vec;
      double x;
      while (ss >> x) {
        if (!std::isfinite(x))
          throw EmbeddingError("non-finite component at line " + std::to_string(lineno));
        vec.push_back(x);
      }
      if (!ss.eof())
        throw EmbeddingError("bad vector component at line " + std::to_string(lineno));
      if (vec.empty())
        throw EmbeddingError("no vector components at line " + std::to_string(lineno));
      if (table.dimension_ == 0) {
        table.dimension_ = vec.size();
      } else if (vec.size() != table.dimension_) {
        throw EmbeddingError("inconsistent dimension at line " + std::to_string(lineno) +
                             ": expected " + std::to_string(table.dimension_) + ", got " +
                             std::to_string(vec.size()));
      }
      if (table.entries_.count(word))
        table.warnings_.push_back("duplicate word '" + word + "' at line " +
                                  std::to_string(lineno) + "; last entry wins");
      table.entries_[word] = std::move(vec);
    }
    if (table.entries_.empty()) throw EmbeddingError("empty embedding file");
    return table;
  }

  static EmbeddingTable load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EmbeddingError("cannot open embedding file: " + path);
    return load(in);
  }

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::vector<double>> entries_;
  std::vector<std::string> warnings_;
};

// Mean of the in-vocabulary token vectors; zero vector when nothing is in
// vocabulary. Tokens are accumulated in sorted order so the mean is exactly
// invariant to token order.
inline PhraseVector embed_phrase(const std::string& phrase, const EmbeddingTable& table) {
  std::vector<std::string> tokens;
  std::istringstream ss(phrase);
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  std::sort(tokens.begin(), tokens.end());

  std::vector<double> sum(table.dimension(), 0.0);
  std::size_t hits = 0;
  for (const std::string& t : tokens) {
    if (const std::vector<double>* v = table.find(t)) {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*v)[i];
      ++hits;
    }
  }
  if (hits == 0) return PhraseVector::zeros(table.dimension());
  for (double& x : sum) x /= static_cast<double>(hits);
  return PhraseVector::of(std::move(sum));
}

// cos(u,v) = u.v / (|u||v|); zero vectors compare as 0 by convention
inline double cosine(const PhraseVector& u, const PhraseVector& v) {
  if (u.size() != v.size())
    throw EmbeddingError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()) + ")");
  if (u.is_zero || v.is_zero) return 0.0;
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u.values[i] * v.values[i];
    nu += u.values[i] * u.values[i];
    nv += v.values[i] * v.values[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

inline std::size_t tuple_embedding_dim(const EmbeddingTable& table) {
  return 2 * table.dimension() + kNumRelationLabels;
}

// [phrase(e1) | phrase(e2) | one-hot relation]; the one-hot block keeps the
// vector nonzero even for fully out-of-vocabulary entities
inline PhraseVector tuple_embedding(const RelationTuple& t, const EmbeddingTable& table) {
  PhraseVector a = embed_phrase(t.e1.text, table);
  PhraseVector b = embed_phrase(t.e2.text, table);
  std::vector<double> out;
  out.reserve(tuple_embedding_dim(table));
  out.insert(out.end(), a.values.begin(), a.values.end());
  out.insert(out.end(), b.values.begin(), b.values.end());
  for (std::size_t i = 0; i < kNumRelationLabels; ++i)
    out.push_back(i == static_cast<std::size_t>(t.r) ? 1.0 : 0.0);
  return PhraseVector::of(std::move(out));
}

}  // namespace compsum
