#pragma once

// End-to-end orchestration: summarize a mini-database, and update an existing
// summary when new studies arrive. Updates identify the aggregation between
// the old summary's content and the new studies first, then pick new content
// conditioned on it (contradiction evidence when the studies conflict, a
// fresh rollout otherwise) and realize old + new content together.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "compsum/aggregation.hpp"
#include "compsum/core.hpp"
#include "compsum/embeddings.hpp"
#include "compsum/realization.hpp"
#include "compsum/rng.hpp"
#include "compsum/selection.hpp"

namespace compsum {

struct PipelineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  RewardConfig reward;
  AggregationThresholds thresholds;
  RolloutOptions rollout;
};

struct SummaryOutput {
  RealizedSummary summary;
  Selection selection;
  OperatorDecision decision;
  std::vector<std::string> warnings;

  json to_json() const {
    json tuples = json::array();
    for (const auto& t : summary.tuples) tuples.push_back(tuple_to_json(t));
    json j{{"text", summary.text},
           {"operator", to_string(summary.op)},
           {"tuples", std::move(tuples)},
           {"evidence", decision.to_json()},
           {"prompt", summary.prompt.to_json()}};
    if (!warnings.empty()) j["warnings"] = warnings;
    return j;
  }
};

namespace detail {

// degenerate-rollout fallback: the tuple most relevant to the database's own
// most frequent entity pair
inline RelationTuple fallback_tuple(const MiniDatabase& db, const EmbeddingTable& table) {
  std::size_t best_count = 0;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < db.tuples.size(); ++i) {
    std::size_t count = 0;
    for (const RelationTuple& t : db.tuples)
      if (t.e1.text == db.tuples[i].e1.text && t.e2.text == db.tuples[i].e2.text) ++count;
    if (count > best_count) {
      best_count = count;
      best_i = i;
    }
  }
  const std::vector<RelationTuple> pair_gold{db.tuples[best_i]};
  double best_rel = -std::numeric_limits<double>::infinity();
  std::size_t pick = 0;
  for (std::size_t i = 0; i < db.tuples.size(); ++i) {
    const double rel = reward_relevance({db.tuples[i]}, pair_gold, table);
    if (rel > best_rel) {
      best_rel = rel;
      pick = i;
    }
  }
  return db.tuples[pick];
}

inline SummaryOutput realize_decision(const std::vector<std::vector<RelationTuple>>& partitions,
                                      const Selection& selection,
                                      const OperatorDecision& decision,
                                      const PrototypeStore& prototypes,
                                      const RealizationLexicon& lexicon, Rng& rng) {
  SummaryOutput out;
  out.selection = selection;
  out.decision = decision;
  const Prototype proto = select_prototype(decision.op, prototypes, rng);
  std::vector<RelationTuple> flat;
  for (const auto& p : partitions) flat.insert(flat.end(), p.begin(), p.end());
  const InfillingPrompt prompt = build_prompt(proto, flat);
  out.summary = realize(partitions, decision.op, prompt, lexicon);
  return out;
}

}  // namespace detail

// Greedy selection, operator identification, prototype prompt, realization.
// Each NEW LIST partition becomes its own sentence.
inline SummaryOutput summarize(const MiniDatabase& db, const PolicyNetwork& policy,
                               const PipelineConfig& config, const PrototypeStore& prototypes,
                               const RealizationLexicon& lexicon, const EmbeddingTable& table,
                               Rng& rng) {
  if (db.tuples.empty()) throw PipelineError("summarize: database has no tuples");

  RolloutResult ro = rollout(policy, db, RolloutMode::Greedy, table, config.rollout);
  Selection selection = ro.selection;
  std::vector<std::string> warnings;
  if (selection.empty()) {
    selection.partitions.assign(1, {detail::fallback_tuple(db, table)});
    warnings.push_back("empty selection; fell back to the most relevant tuple");
  }

  const std::vector<RelationTuple> content = selection.flat();
  const OperatorDecision decision =
      identify_operator(content, db, config.thresholds, table);

  SummaryOutput out = detail::realize_decision(selection.partitions, selection, decision,
                                               prototypes, lexicon, rng);
  out.warnings = std::move(warnings);
  return out;
}

enum class UpdateMode { Auto, Fusion, ContradictoryCheck };

inline UpdateMode update_mode_from_string(const std::string& s) {
  if (s == "auto") return UpdateMode::Auto;
  if (s == "fusion") return UpdateMode::Fusion;
  if (s == "contradiction") return UpdateMode::ContradictoryCheck;
  throw PipelineError("unknown update mode: '" + s + "'");
}

struct UpdateRequest {
  SummaryRecord old_summary;  // its tuples are the original content C'
  MiniDatabase new_db;
  UpdateMode mode = UpdateMode::Auto;
};

// The old content joins the database as a synthetic "summary" study so the
// cross-study contradiction rule applies between old and new unchanged.
inline MiniDatabase merge_old_content(const SummaryRecord& old_summary,
                                      const MiniDatabase& new_db) {
  MiniDatabase merged = new_db;
  merged.studies.push_back({kSummaryStudyId, {}, std::nullopt});
  for (RelationTuple t : old_summary.tuples) {
    t.study_id = kSummaryStudyId;
    merged.tuples.push_back(std::move(t));
  }
  return merged;
}

inline SummaryOutput update_summary(const UpdateRequest& req, const PolicyNetwork& policy,
                                    const PipelineConfig& config,
                                    const PrototypeStore& prototypes,
                                    const RealizationLexicon& lexicon,
                                    const EmbeddingTable& table, Rng& rng) {
  if (req.old_summary.tuples.empty())
    throw PipelineError("update: old summary carries no tuples");

  std::vector<RelationTuple> old_content = req.old_summary.tuples;
  for (RelationTuple& t : old_content) t.study_id = kSummaryStudyId;

  const MiniDatabase merged = merge_old_content(req.old_summary, req.new_db);
  OperatorDecision decision =
      identify_operator(old_content, merged, config.thresholds, table);

  const bool contradictory = decision.op == AggregationOperator::Contradiction &&
                             req.mode != UpdateMode::Fusion;

  std::vector<RelationTuple> new_content;
  Selection selection;
  if (contradictory) {
    // content leading to the contradiction: the new-study side of each pair
    for (const auto& [a, b] : decision.contradictions.pairs) {
      const RelationTuple& fresh = (a.study_id == kSummaryStudyId) ? b : a;
      if (fresh.study_id == kSummaryStudyId) continue;
      const bool dup = std::any_of(new_content.begin(), new_content.end(),
                                   [&](const RelationTuple& t) { return t.same_fact(fresh); });
      if (!dup) new_content.push_back(fresh);
    }
    selection.partitions.push_back(new_content);
    selection.actions_charged = new_content.size();
  } else if (req.mode == UpdateMode::ContradictoryCheck) {
    // asked only to resolve contradictions and none exists: keep the old text
    SummaryOutput out;
    out.summary.text = req.old_summary.text;
    out.summary.tuples = req.old_summary.tuples;
    out.summary.op = AggregationOperator::Agreement;
    out.decision.op = AggregationOperator::Agreement;
    out.warnings.push_back("no contradiction found; old summary returned unchanged");
    return out;
  } else {
    if (!req.new_db.tuples.empty()) {
      RolloutResult ro = rollout(policy, req.new_db, RolloutMode::Greedy, table, config.rollout);
      selection = ro.selection;
    }
    new_content = selection.flat();
    // drop facts the old summary already states
    std::erase_if(new_content, [&](const RelationTuple& t) {
      return std::any_of(old_content.begin(), old_content.end(),
                         [&](const RelationTuple& o) { return o.same_fact(t); });
    });
    if (new_content.empty() && req.mode == UpdateMode::Auto &&
        decision.op != AggregationOperator::Contradiction) {
      // nothing new to add: old summary stands
      SummaryOutput out;
      out.summary.text = req.old_summary.text;
      out.summary.tuples = req.old_summary.tuples;
      out.summary.op = AggregationOperator::Agreement;
      out.decision.op = AggregationOperator::Agreement;
      out.warnings.push_back("no new content selected; old summary returned unchanged");
      return out;
    }
    selection.partitions.assign(1, new_content);
    selection.actions_charged = new_content.size();
  }

  // realize old + new content under the identified operator: P(y | O, C + C')
  std::vector<std::vector<RelationTuple>> partitions;
  partitions.push_back(old_content);
  if (!new_content.empty()) partitions.push_back(new_content);
  return detail::realize_decision(partitions, selection, decision, prototypes, lexicon, rng);
}

}  // namespace compsum
