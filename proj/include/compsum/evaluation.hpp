#pragma once

// Automatic metrics: ROUGE-L (LCS F-measure), knowledge-tuple overlap against
// gold and input with cosine entity matching, and aggregation cognisance via
// the rule-based output classifier.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "compsum/aggregation.hpp"
#include "compsum/core.hpp"
#include "compsum/embeddings.hpp"

namespace compsum {

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalConfig {
  double kg_match_cos = 0.7;
  double rouge_beta = 1.0;
  AggregationThresholds thresholds;
  OutputRuleLexicons rules = OutputRuleLexicons::defaults();
};

// lowercased alphanumeric runs; punctuation separates tokens
inline std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

inline std::size_t lcs_length(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// LCS-based F-measure: P = LCS/|hyp|, R = LCS/|ref|, F = (1+b^2)PR/(R+b^2P)
inline double rouge_l(const std::string& hypothesis, const std::string& reference,
                      double beta = 1.0) {
  const std::vector<std::string> hyp = tokenize_words(hypothesis);
  const std::vector<std::string> ref = tokenize_words(reference);
  if (hyp.empty() || ref.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(hyp, ref));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(hyp.size());
  const double r = lcs / static_cast<double>(ref.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

// a reference tuple is matched when both entities agree (exact string or
// cosine at/above the threshold); relation labels are not compared
inline bool kg_tuples_match(const RelationTuple& out, const RelationTuple& ref,
                            const EmbeddingTable& table, double threshold) {
  return entity_text_match(out.e1, ref.e1, table, threshold) &&
         entity_text_match(out.e2, ref.e2, table, threshold);
}

// Fraction of ref tuples matched one-to-one by some out tuple, greedily in
// ref order; empty ref counts as fully covered.
inline double kg_overlap(const std::vector<RelationTuple>& out_tuples,
                         const std::vector<RelationTuple>& ref_tuples,
                         const EmbeddingTable& table, double threshold = 0.7) {
  if (ref_tuples.empty()) return 1.0;
  std::vector<bool> used(out_tuples.size(), false);
  std::size_t matched = 0;
  for (const RelationTuple& ref : ref_tuples) {
    for (std::size_t i = 0; i < out_tuples.size(); ++i) {
      if (used[i]) continue;
      if (kg_tuples_match(out_tuples[i], ref, table, threshold)) {
        used[i] = true;
        ++matched;
        break;
      }
    }
  }
  return static_cast<double>(matched) / static_cast<double>(ref_tuples.size());
}

// database tuples whose entities both occur verbatim in the text; all tuples
// when none does
inline std::vector<RelationTuple> recover_content_from_text(const std::string& text,
                                                            const MiniDatabase& db) {
  const std::string lower = lowercase(text);
  std::vector<RelationTuple> matched;
  for (const RelationTuple& t : db.tuples)
    if (lower.find(t.e1.text) != std::string::npos && lower.find(t.e2.text) != std::string::npos)
      matched.push_back(t);
  if (matched.empty()) return db.tuples;
  return matched;
}

// Fraction of outputs whose implied operator (phrase rules over the text)
// equals the operator identified from the input database.
inline double aggregation_cognisance(
    const std::vector<std::pair<std::string, MiniDatabase>>& outputs,
    const AggregationThresholds& thresholds, const OutputRuleLexicons& rules,
    const EmbeddingTable& table) {
  if (outputs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& [text, db] : outputs) {
    const std::vector<RelationTuple> content = recover_content_from_text(text, db);
    const AggregationOperator expected =
        identify_operator(content, db, thresholds, table).op;
    if (classify_output_aggregation(text, rules) == expected) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(outputs.size());
}

struct EvalReport {
  double rouge_l = 0.0;
  double kg_gold = 0.0;
  double kg_input = 0.0;
  double ag = 0.0;
  std::size_t n_examples = 0;

  json to_json() const {
    return json{{"rouge_l", rouge_l}, {"kg_gold", kg_gold},   {"kg_input", kg_input},
                {"ag", ag},           {"n_examples", n_examples}};
  }

  std::string to_table() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "metric      value\n"
                  "rouge_l     %.4f\n"
                  "kg_gold     %.4f\n"
                  "kg_input    %.4f\n"
                  "ag          %.4f\n"
                  "n_examples  %zu\n",
                  rouge_l, kg_gold, kg_input, ag, n_examples);
    return buf;
  }
};

struct EvalEntry {
  std::string output_text;
  std::vector<RelationTuple> output_tuples;
  SummaryRecord gold;
  MiniDatabase db;
};

// macro-average of the per-example metrics
inline EvalReport evaluate_corpus(const std::vector<EvalEntry>& entries, const EvalConfig& cfg,
                                  const EmbeddingTable& table) {
  if (entries.empty()) throw EvalError("evaluate_corpus: no examples");
  EvalReport report;
  report.n_examples = entries.size();
  std::vector<std::pair<std::string, MiniDatabase>> ag_inputs;
  ag_inputs.reserve(entries.size());
  for (const EvalEntry& e : entries) {
    report.rouge_l += rouge_l(e.output_text, e.gold.text, cfg.rouge_beta);
    report.kg_gold += kg_overlap(e.output_tuples, e.gold.tuples, table, cfg.kg_match_cos);
    report.kg_input += kg_overlap(e.db.tuples, e.output_tuples, table, cfg.kg_match_cos);
    ag_inputs.emplace_back(e.output_text, e.db);
  }
  const double n = static_cast<double>(entries.size());
  report.rouge_l /= n;
  report.kg_gold /= n;
  report.kg_input /= n;
  report.ag = aggregation_cognisance(ag_inputs, cfg.thresholds, cfg.rules, table);
  return report;
}

}  // namespace compsum
