#pragma once

// Synthetic benchmark corpora for the selection task and the update setting.
// Each example pairs a small mini-database with a designated two-tuple gold
// set; the gold tuples point at one semantic cluster of conditions so the
// selection signal is learnable from phrase embeddings. Conflicts (same
// entities, different causing relation, different study) can be planted at a
// configurable rate.

#include <string>
#include <vector>

#include "compsum/aggregation.hpp"
#include "compsum/core.hpp"
#include "compsum/embeddings.hpp"
#include "compsum/realization.hpp"
#include "compsum/rng.hpp"

namespace compsum {

struct SynthVocabulary {
  std::vector<std::string> foods;
  std::vector<std::string> nutrients;
  std::vector<std::string> salient_conditions;    // gold tuples draw from here
  std::vector<std::string> distractor_conditions;
  std::vector<std::string> population_descriptors;

  static SynthVocabulary defaults() {
    SynthVocabulary v;
    v.foods = {"pears", "kale", "blueberries", "bananas", "apples",
               "spinach", "oats", "walnuts", "salmon", "garlic"};
    v.nutrients = {"antioxidants", "fiber", "protein", "potassium",
                   "magnesium", "calcium", "folate", "zinc"};
    v.salient_conditions = {"breast cancer", "ovarian cancer", "lung cancer",
                            "prostate cancer", "colon cancer", "stomach cancer"};
    v.distractor_conditions = {"jet lag", "hair loss", "muscle cramps", "bad breath",
                               "dry skin", "low energy", "joint stiffness", "poor sleep"};
    v.population_descriptors = {"adults", "women", "men", "children", "mice", "rats"};
    return v;
  }
};

struct SynthOptions {
  double conflict_rate = 0.0;
  std::size_t min_fillers = 3;
  std::size_t max_fillers = 6;  // db size = 2 gold + fillers (conflicts take a slot)
  std::size_t min_studies = 2;
  std::size_t max_studies = 4;
};

namespace detail {

inline RelationLabel random_causing(Rng& rng) {
  static const RelationLabel kCausing[] = {
      RelationLabel::Increase, RelationLabel::Decrease, RelationLabel::Satisfy,
      RelationLabel::Control, RelationLabel::UnclearInsignificant};
  return kCausing[rng.uniform_index(5)];
}

inline RelationLabel different_causing(RelationLabel avoid, Rng& rng) {
  RelationLabel r = random_causing(rng);
  while (r == avoid) r = random_causing(rng);
  return r;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

}  // namespace detail

// One synthetic example: 2 gold tuples into the salient cluster plus filler
// containment/distractor tuples, spread over 2-4 studies. The gold summary is
// realized deterministically so text metrics have a meaningful reference.
inline Example make_synthetic_example(const SynthVocabulary& vocab, const SynthOptions& opts,
                                      const AggregationThresholds& thresholds,
                                      const EmbeddingTable& table, Rng& rng) {
  Example ex;
  const std::string food = vocab.foods[rng.uniform_index(vocab.foods.size())];
  ex.db.topic = food;

  const std::size_t n_studies =
      opts.min_studies + rng.uniform_index(opts.max_studies - opts.min_studies + 1);
  for (std::size_t s = 0; s < n_studies; ++s) {
    StudyRecord study;
    study.study_id = "s" + std::to_string(s + 1);
    if (rng.uniform() < 0.7) {
      // two distinct descriptors so population scoping does not fire by accident
      std::size_t a = rng.uniform_index(vocab.population_descriptors.size());
      std::size_t b = rng.uniform_index(vocab.population_descriptors.size());
      while (b == a) b = rng.uniform_index(vocab.population_descriptors.size());
      study.populations = {vocab.population_descriptors[a], vocab.population_descriptors[b]};
    }
    ex.db.studies.push_back(std::move(study));
  }
  auto random_study = [&] { return "s" + std::to_string(rng.uniform_index(n_studies) + 1); };

  const EntityPhrase subject = EntityPhrase::make(food, EntityKind::Food);

  // two designated gold tuples over distinct salient conditions
  std::size_t ci = rng.uniform_index(vocab.salient_conditions.size());
  std::size_t cj = rng.uniform_index(vocab.salient_conditions.size());
  while (cj == ci) cj = rng.uniform_index(vocab.salient_conditions.size());
  std::vector<RelationTuple> gold;
  for (std::size_t c : {ci, cj}) {
    RelationTuple t;
    t.e1 = subject;
    t.e2 = EntityPhrase::make(vocab.salient_conditions[c], EntityKind::Condition);
    t.r = detail::random_causing(rng);
    t.study_id = random_study();
    gold.push_back(std::move(t));
  }

  std::vector<RelationTuple> tuples = gold;
  std::size_t n_fillers =
      opts.min_fillers + rng.uniform_index(opts.max_fillers - opts.min_fillers + 1);

  if (n_fillers > 0 && n_studies >= 2 && rng.uniform() < opts.conflict_rate) {
    const RelationTuple& target = gold[rng.uniform_index(gold.size())];
    RelationTuple conflict = target;
    conflict.r = detail::different_causing(target.r, rng);
    conflict.study_id = random_study();
    while (conflict.study_id == target.study_id) conflict.study_id = random_study();
    tuples.push_back(std::move(conflict));
    --n_fillers;
  }

  for (std::size_t f = 0; f < n_fillers; ++f) {
    RelationTuple t;
    t.e1 = subject;
    if (rng.uniform() < 0.5) {
      t.e2 = EntityPhrase::make(vocab.nutrients[rng.uniform_index(vocab.nutrients.size())],
                                EntityKind::Nutrition);
      t.r = RelationLabel::Contain;
    } else {
      t.e2 = EntityPhrase::make(
          vocab.distractor_conditions[rng.uniform_index(vocab.distractor_conditions.size())],
          EntityKind::Condition);
      t.r = detail::random_causing(rng);
    }
    t.study_id = random_study();
    tuples.push_back(std::move(t));
  }
  detail::shuffle(tuples, rng);
  ex.db.tuples = std::move(tuples);

  SummaryRecord summary;
  summary.tuples = gold;
  for (RelationTuple& t : summary.tuples) t.study_id = kSummaryStudyId;
  const AggregationOperator op = identify_operator(gold, ex.db, thresholds, table).op;
  const PrototypeStore store = PrototypeStore::builtin();
  const Prototype proto = select_prototype(op, store, rng);
  summary.text =
      realize(gold, op, build_prompt(proto, gold), RealizationLexicon::defaults()).text;
  summary.op = op;
  ex.summary = std::move(summary);
  return ex;
}

inline std::vector<Example> make_synthetic_corpus(std::size_t n, const SynthVocabulary& vocab,
                                                  const SynthOptions& opts,
                                                  const AggregationThresholds& thresholds,
                                                  const EmbeddingTable& table, Rng& rng) {
  std::vector<Example> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(make_synthetic_example(vocab, opts, thresholds, table, rng));
  return out;
}

struct UpdateInstance {
  SummaryRecord old_summary;
  MiniDatabase new_db;
};

// Fusion instances add findings about fresh conditions; contradictory
// instances plant a cross-study conflict against an old-summary tuple.
inline UpdateInstance make_update_instance(bool contradictory, const SynthVocabulary& vocab,
                                           Rng& rng) {
  UpdateInstance inst;
  const std::string food = vocab.foods[rng.uniform_index(vocab.foods.size())];
  const EntityPhrase subject = EntityPhrase::make(food, EntityKind::Food);

  RelationTuple old_tuple;
  old_tuple.e1 = subject;
  old_tuple.e2 = EntityPhrase::make(
      vocab.salient_conditions[rng.uniform_index(vocab.salient_conditions.size())],
      EntityKind::Condition);
  old_tuple.r = detail::random_causing(rng);
  old_tuple.study_id = kSummaryStudyId;
  inst.old_summary.tuples = {old_tuple};
  inst.old_summary.op = AggregationOperator::Agreement;
  inst.old_summary.text =
      realize({old_tuple}, AggregationOperator::Agreement,
              build_prompt(select_prototype(AggregationOperator::Agreement,
                                            PrototypeStore::builtin(), rng),
                           {old_tuple}),
              RealizationLexicon::defaults())
          .text;

  inst.new_db.topic = food;
  const std::size_t n_studies = 1 + rng.uniform_index(2);
  for (std::size_t s = 0; s < n_studies; ++s)
    inst.new_db.studies.push_back({"n" + std::to_string(s + 1), {}, std::nullopt});
  auto random_study = [&] { return "n" + std::to_string(rng.uniform_index(n_studies) + 1); };

  if (contradictory) {
    RelationTuple conflict = old_tuple;
    conflict.r = detail::different_causing(old_tuple.r, rng);
    conflict.study_id = random_study();
    inst.new_db.tuples.push_back(std::move(conflict));
  }
  const std::size_t extras = 1 + rng.uniform_index(2);
  for (std::size_t i = 0; i < extras; ++i) {
    RelationTuple t;
    t.e1 = subject;
    t.e2 = EntityPhrase::make(
        vocab.distractor_conditions[rng.uniform_index(vocab.distractor_conditions.size())],
        EntityKind::Condition);
    t.r = detail::random_causing(rng);
    t.study_id = random_study();
    const bool dup = std::any_of(inst.new_db.tuples.begin(), inst.new_db.tuples.end(),
                                 [&](const RelationTuple& o) { return o.same_fact(t); });
    if (!dup) inst.new_db.tuples.push_back(std::move(t));
  }
  return inst;
}

inline std::vector<UpdateInstance> make_update_instances(std::size_t n, bool contradictory,
                                                         const SynthVocabulary& vocab, Rng& rng) {
  std::vector<UpdateInstance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(make_update_instance(contradictory, vocab, rng));
  return out;
}

}  // namespace compsum
