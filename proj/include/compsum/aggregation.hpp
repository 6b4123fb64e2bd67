#pragma once

// Deterministic consensus classification. Input side: rule cascade over the
// selected content C in context of the mini-database (under-reported ->
// population scoping -> contradiction -> agreement). Output side: phrase
// rules over realized text, evaluated in its own order (population scoping ->
// contradiction -> under-reported -> agreement).

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "compsum/core.hpp"
#include "compsum/embeddings.hpp"

namespace compsum {

struct AggregationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AggregationThresholds {
  int min_studies = 2;         // under-reported when supporting studies < this
  int min_populations = 2;     // population scoping when 0 < descriptors < this
  double entity_match_cos = 0.7;
};

// Entity equality for the rules: normalized-string equality, or embedding
// cosine at/above the threshold. One matching notion across the system.
inline bool entity_text_match(const EntityPhrase& a, const EntityPhrase& b,
                              const EmbeddingTable& table, double threshold) {
  if (a.text == b.text) return true;
  return cosine(embed_phrase(a.text, table), embed_phrase(b.text, table)) >= threshold;
}

inline bool entities_match(const RelationTuple& a, const RelationTuple& b,
                           const EmbeddingTable& table, double threshold) {
  return entity_text_match(a.e1, b.e1, table, threshold) &&
         entity_text_match(a.e2, b.e2, table, threshold);
}

struct ContradictionEvidence {
  std::vector<std::pair<RelationTuple, RelationTuple>> pairs;

  bool empty() const { return pairs.empty(); }
};

// A pair contradicts when the entities match, the studies differ and the
// causing relations differ. Contain never contradicts: containment has no
// polarity.
inline bool tuples_contradict(const RelationTuple& a, const RelationTuple& b,
                              const EmbeddingTable& table, double threshold) {
  if (a.study_id == b.study_id) return false;
  if (!is_causing(a.r) || !is_causing(b.r)) return false;
  if (a.r == b.r) return false;
  return entities_match(a, b, table, threshold);
}

inline ContradictionEvidence find_contradictions(const MiniDatabase& db,
                                                 const EmbeddingTable& table,
                                                 double threshold) {
  ContradictionEvidence ev;
  for (std::size_t i = 0; i < db.tuples.size(); ++i)
    for (std::size_t j = i + 1; j < db.tuples.size(); ++j)
      if (tuples_contradict(db.tuples[i], db.tuples[j], table, threshold))
        ev.pairs.emplace_back(db.tuples[i], db.tuples[j]);
  return ev;
}

struct OperatorDecision {
  AggregationOperator op = AggregationOperator::Agreement;
  std::vector<std::string> supporting_study_ids;   // studies that back some c in C
  std::vector<std::string> populations;            // distinct descriptors across them
  ContradictionEvidence contradictions;            // pairs touching C, when op fires

  json to_json() const {
    json pairs = json::array();
    for (const auto& [a, b] : contradictions.pairs)
      pairs.push_back(json{{"a", tuple_to_json(a)}, {"b", tuple_to_json(b)}});
    return json{{"operator", to_string(op)},
                {"supporting_studies", supporting_study_ids},
                {"populations", populations},
                {"contradictions", std::move(pairs)}};
  }
};

// Rule cascade over (C, db), in input-table row order.
inline OperatorDecision identify_operator(const std::vector<RelationTuple>& content,
                                          const MiniDatabase& db,
                                          const AggregationThresholds& th,
                                          const EmbeddingTable& table) {
  if (content.empty()) throw AggregationError("identify_operator: no content to aggregate");

  auto matches_content = [&](const RelationTuple& t) {
    return std::any_of(content.begin(), content.end(), [&](const RelationTuple& c) {
      return entities_match(t, c, table, th.entity_match_cos);
    });
  };

  OperatorDecision out;

  // supporting studies: those holding any tuple whose entities match some c
  std::set<std::string> supporting;
  for (const RelationTuple& t : db.tuples)
    if (matches_content(t)) supporting.insert(t.study_id);
  out.supporting_study_ids.assign(supporting.begin(), supporting.end());

  if (static_cast<int>(supporting.size()) < th.min_studies) {
    out.op = AggregationOperator::UnderReported;
    return out;
  }

  std::set<std::string> populations;
  for (const StudyRecord& s : db.studies)
    if (supporting.count(s.study_id))
      for (const std::string& p : s.populations) {
        std::string norm = normalize_phrase(p);
        if (!norm.empty()) populations.insert(norm);
      }
  out.populations.assign(populations.begin(), populations.end());

  if (!populations.empty() && static_cast<int>(populations.size()) < th.min_populations) {
    out.op = AggregationOperator::PopulationScoping;
    return out;
  }

  ContradictionEvidence all = find_contradictions(db, table, th.entity_match_cos);
  for (const auto& pr : all.pairs)
    if (matches_content(pr.first) || matches_content(pr.second))
      out.contradictions.pairs.push_back(pr);
  if (!out.contradictions.empty()) {
    out.op = AggregationOperator::Contradiction;
    return out;
  }

  out.op = AggregationOperator::Agreement;
  return out;
}

// ---------------------------------------------------------------------------
// output-side classifier

struct OutputRuleLexicons {
  std::vector<std::string> population_phrases;
  std::vector<std::string> contradiction_phrases;
  std::vector<std::string> underreported_phrases;

  static OutputRuleLexicons defaults() {
    OutputRuleLexicons lx;
    lx.population_phrases = {"in animals", "animal studies", "in rats", "in mice", "test-tube"};
    lx.contradiction_phrases = {"evidence is mixed", "conflicting", "contradiction"};
    lx.underreported_phrases = {"more research is needed", "more studies are needed",
                                "more human studies"};
    return lx;
  }

  // plain text, one phrase per line; empty lines ignored
  static std::vector<std::string> load_phrase_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw AggregationError("cannot open phrase file: " + path);
    std::vector<std::string> phrases;
    std::string line;
    while (std::getline(in, line)) {
      std::string norm = normalize_phrase(line);
      if (!norm.empty()) phrases.push_back(norm);
    }
    return phrases;
  }
};

inline bool contains_any(const std::string& haystack, const std::vector<std::string>& phrases) {
  return std::any_of(phrases.begin(), phrases.end(), [&](const std::string& p) {
    return !p.empty() && haystack.find(p) != std::string::npos;
  });
}

// Phrase-rule classifier over the lowercased text, output-table row order.
inline AggregationOperator classify_output_aggregation(const std::string& text,
                                                       const OutputRuleLexicons& lx) {
  const std::string lower = lowercase(text);
  if (contains_any(lower, lx.population_phrases)) return AggregationOperator::PopulationScoping;
  if (contains_any(lower, lx.contradiction_phrases)) return AggregationOperator::Contradiction;
  if (contains_any(lower, lx.underreported_phrases)) return AggregationOperator::UnderReported;
  return AggregationOperator::Agreement;
}

inline AggregationOperator classify_output_aggregation(
    const std::string& text, const std::vector<std::string>& population_lexicon) {
  OutputRuleLexicons lx = OutputRuleLexicons::defaults();
  lx.population_phrases = population_lexicon;
  return classify_output_aggregation(text, lx);
}

inline AggregationOperator classify_output_aggregation(const std::string& text) {
  return classify_output_aggregation(text, OutputRuleLexicons::defaults());
}

}  // namespace compsum
