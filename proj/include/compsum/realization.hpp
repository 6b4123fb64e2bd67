#pragma once

// Prototype-plus-slots prompt construction and the deterministic lexicalizing
// realizer. The prompt keeps the paper-shaped surface (prototype text, |SEN|
// separator, <blank>-flanked entity/relation slots); the realizer turns the
// selected tuples and the aggregation operator into text by template
// lexicalization. A learned infilling model can be plugged in behind the same
// signatures later.

#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "compsum/aggregation.hpp"
#include "compsum/core.hpp"
#include "compsum/rng.hpp"

namespace compsum {

struct RealizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// prototypes

struct Prototype {
  std::string text;
  AggregationOperator op = AggregationOperator::Agreement;
};

struct PrototypeStore {
  std::vector<Prototype> items;

  // Built-in prototypes, two or more per operator.
  static PrototypeStore builtin() {
    PrototypeStore store;
    store.items = {
        {"Kale contains substances that help fight cancer, but the human evidence is mixed.",
         AggregationOperator::Contradiction},
        {"Some studies show that green tea may help control weight, while others report "
         "conflicting results.",
         AggregationOperator::Contradiction},
        {"Whole-grain cereals may protect against obesity and certain cancers. However, more "
         "research is needed.",
         AggregationOperator::UnderReported},
        {"Whole grains have been linked to several other potential health benefits. However, "
         "more studies are needed to draw stronger conclusions.",
         AggregationOperator::UnderReported},
        {"Flax seeds have been shown to lower cholesterol in animal studies, but results in "
         "humans are limited.",
         AggregationOperator::PopulationScoping},
        {"Turmeric has been found to reduce swelling in rats, and human trials are under way.",
         AggregationOperator::PopulationScoping},
        {"Whole grains have been shown to lower weight gain and improve type 2 diabetes risk "
         "factors.",
         AggregationOperator::Agreement},
        {"Flax seeds are rich in antioxidants, especially through lignans.",
         AggregationOperator::Agreement},
    };
    return store;
  }

  // JSON Lines {text, operator}; each prototype must classify as its own
  // operator under the output rules
  static PrototypeStore load(std::istream& in, const OutputRuleLexicons& lx) {
    PrototypeStore store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw ParseError(lineno, e.what());
      }
      Prototype p;
      p.text = j.at("text").get<std::string>();
      p.op = operator_from_string(j.at("operator").get<std::string>());
      if (classify_output_aggregation(p.text, lx) != p.op)
        throw RealizationError("prototype at line " + std::to_string(lineno) +
                               " does not classify as '" + to_string(p.op) + "'");
      store.items.push_back(std::move(p));
    }
    return store;
  }

  static PrototypeStore load_file(const std::string& path, const OutputRuleLexicons& lx) {
    std::ifstream in(path);
    if (!in) throw RealizationError("cannot open prototype store: " + path);
    return load(in, lx);
  }

  void save(std::ostream& out) const {
    for (const Prototype& p : items)
      out << json{{"text", p.text}, {"operator", to_string(p.op)}}.dump() << "\n";
  }
};

inline Prototype select_prototype(AggregationOperator op, const PrototypeStore& store,
                                  Rng& rng) {
  std::vector<const Prototype*> candidates;
  for (const Prototype& p : store.items)
    if (p.op == op) candidates.push_back(&p);
  if (candidates.empty())
    throw RealizationError("no prototype for operator '" + to_string(op) + "'");
  return *candidates[rng.uniform_index(candidates.size())];
}

// ---------------------------------------------------------------------------
// prompt

inline std::string relation_marker(RelationLabel r) {
  switch (r) {
    case RelationLabel::Increase: return "<increases>";
    case RelationLabel::Decrease: return "<decreases>";
    case RelationLabel::Satisfy: return "<satisfies>";
    case RelationLabel::Control: return "<controls>";
    case RelationLabel::UnclearInsignificant: return "<unclear>";
    case RelationLabel::Contain: return "<contains>";
  }
  return "<?>";
}

struct InfillingPrompt {
  static constexpr const char* kSeparator = "|SEN|";

  std::string prototype_text;
  std::vector<std::string> slotted;  // "<blank>" ... "<blank>"

  std::string slotted_text() const {
    std::string out;
    for (std::size_t i = 0; i < slotted.size(); ++i) {
      if (i) out += ' ';
      out += slotted[i];
    }
    return out;
  }

  std::string full_text() const {
    return prototype_text + " " + kSeparator + " " + slotted_text();
  }

  json to_json() const {
    return json{{"prototype", prototype_text},
                {"separator", kSeparator},
                {"slotted", slotted_text()},
                {"full", full_text()}};
  }
};

// Entities become fixed tokens with relation markers between them, flanked by
// <blank>; consecutive tuples sharing the subject state it once.
inline InfillingPrompt build_prompt(const Prototype& prototype,
                                    const std::vector<RelationTuple>& content) {
  if (content.empty()) throw RealizationError("build_prompt: empty content");
  InfillingPrompt prompt;
  prompt.prototype_text = prototype.text;
  prompt.slotted.push_back("<blank>");
  for (std::size_t i = 0; i < content.size(); ++i) {
    if (i == 0 || content[i].e1.text != content[i - 1].e1.text)
      prompt.slotted.push_back(content[i].e1.text);
    prompt.slotted.push_back(relation_marker(content[i].r));
    prompt.slotted.push_back(content[i].e2.text);
  }
  prompt.slotted.push_back("<blank>");
  return prompt;
}

// ---------------------------------------------------------------------------
// lexicon and realizer

struct RealizationLexicon {
  std::map<RelationLabel, std::string> relation_phrases;
  std::map<AggregationOperator, std::string> cue_clauses;  // Agreement: empty

  static RealizationLexicon defaults() {
    RealizationLexicon lx;
    lx.relation_phrases = {
        {RelationLabel::Increase, "has been shown to increase"},
        {RelationLabel::Decrease, "has been shown to decrease"},
        {RelationLabel::Satisfy, "can help satisfy"},
        {RelationLabel::Control, "may help control"},
        {RelationLabel::UnclearInsignificant, "has an unclear effect on"},
        {RelationLabel::Contain, "contain"},
    };
    lx.cue_clauses = {
        {AggregationOperator::UnderReported, "However, more research is needed."},
        {AggregationOperator::Contradiction, "However, the evidence is mixed."},
        {AggregationOperator::PopulationScoping,
         "However, these effects have mainly been observed in animal studies."},
        {AggregationOperator::Agreement, ""},
    };
    return lx;
  }

  // JSON object {"relations": {label: phrase}, "cues": {operator: clause}}
  static RealizationLexicon load(std::istream& in) {
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw RealizationError(std::string("lexicon: ") + e.what());
    }
    RealizationLexicon lx;
    for (const auto& [key, value] : j.at("relations").items())
      lx.relation_phrases[relation_from_string(key)] = value.get<std::string>();
    for (const auto& [key, value] : j.at("cues").items())
      lx.cue_clauses[operator_from_string(key)] = value.get<std::string>();
    return lx;
  }

  static RealizationLexicon load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RealizationError("cannot open lexicon: " + path);
    return load(in);
  }

  void save(std::ostream& out) const {
    json relations = json::object();
    for (const auto& [r, phrase] : relation_phrases) relations[to_string(r)] = phrase;
    json cues = json::object();
    for (const auto& [op, clause] : cue_clauses) cues[to_string(op)] = clause;
    out << json{{"relations", std::move(relations)}, {"cues", std::move(cues)}}.dump(2) << "\n";
  }

  const std::string& relation_phrase(RelationLabel r) const {
    auto it = relation_phrases.find(r);
    if (it == relation_phrases.end())
      throw RealizationError("lexicon missing relation phrase for '" + to_string(r) + "'");
    return it->second;
  }

  const std::string& cue_clause(AggregationOperator op) const {
    auto it = cue_clauses.find(op);
    if (it == cue_clauses.end())
      throw RealizationError("lexicon missing cue clause for operator '" + to_string(op) + "'");
    return it->second;
  }
};

struct RealizedSummary {
  std::string text;
  std::vector<RelationTuple> tuples;  // exactly the content passed in
  AggregationOperator op = AggregationOperator::Agreement;
  InfillingPrompt prompt;  // provenance
};

namespace detail {

inline std::string join_objects(const std::vector<std::string>& objects) {
  std::string out;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (i > 0) out += (i + 1 == objects.size()) ? " and " : ", ";
    out += objects[i];
  }
  return out;
}

// one sentence per partition: subject, then relation phrase + objects, with
// runs grouped by shared subject and shared relation
inline std::string partition_sentence(const std::vector<RelationTuple>& part,
                                      const RealizationLexicon& lexicon) {
  std::string body;
  std::size_t i = 0;
  bool first_subject = true;
  while (i < part.size()) {
    std::size_t subj_end = i + 1;
    while (subj_end < part.size() && part[subj_end].e1.text == part[i].e1.text) ++subj_end;
    if (!first_subject) body += ", and ";
    body += part[i].e1.text + " ";
    bool first_relation = true;
    std::size_t j = i;
    while (j < subj_end) {
      std::size_t rel_end = j + 1;
      while (rel_end < subj_end && part[rel_end].r == part[j].r) ++rel_end;
      std::vector<std::string> objects;
      for (std::size_t k = j; k < rel_end; ++k) objects.push_back(part[k].e2.text);
      if (!first_relation) body += " and ";
      body += lexicon.relation_phrase(part[j].r) + " " + join_objects(objects);
      first_relation = false;
      j = rel_end;
    }
    first_subject = false;
    i = subj_end;
  }
  if (!body.empty()) body[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(body[0])));
  if (body.empty() || body.back() != '.') body += '.';
  return body;
}

}  // namespace detail

// Deterministic lexicalization: every selected entity appears verbatim; the
// operator's cue clause closes the summary (Agreement adds nothing).
inline RealizedSummary realize(const std::vector<std::vector<RelationTuple>>& partitions,
                               AggregationOperator op, const InfillingPrompt& prompt,
                               const RealizationLexicon& lexicon) {
  RealizedSummary out;
  out.op = op;
  out.prompt = prompt;
  std::string text;
  for (const auto& part : partitions) {
    if (part.empty()) continue;
    out.tuples.insert(out.tuples.end(), part.begin(), part.end());
    if (!text.empty()) text += ' ';
    text += detail::partition_sentence(part, lexicon);
  }
  if (out.tuples.empty()) throw RealizationError("realize: no content to realize");
  const std::string& cue = lexicon.cue_clause(op);
  if (!cue.empty()) {
    text += ' ';
    text += cue;
  }
  out.text = std::move(text);
  return out;
}

inline RealizedSummary realize(const std::vector<RelationTuple>& content,
                               AggregationOperator op, const InfillingPrompt& prompt,
                               const RealizationLexicon& lexicon) {
  return realize(std::vector<std::vector<RelationTuple>>{content}, op, prompt, lexicon);
}

}  // namespace compsum
