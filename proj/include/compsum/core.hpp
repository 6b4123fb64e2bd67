#pragma once

// Domain types shared by the whole engine: entity phrases, relation tuples,
// study records, mini-databases and summary records, plus schema validation
// and the JSON Lines corpus format.

#include <algorithm>
#include <cctype>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace compsum {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// errors

struct ParseError : std::runtime_error {
  ParseError(std::size_t line, const std::string& reason)
      : std::runtime_error("parse error at line " + std::to_string(line) + ": " + reason),
        line_number(line) {}
  std::size_t line_number;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// normalization

// lowercase (ASCII), trim, collapse internal whitespace; applied once at
// parse time so every downstream string comparison sees a canonical form
inline std::string normalize_phrase(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char ch : raw) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// ---------------------------------------------------------------------------
// enumerations

enum class EntityKind { Food, Nutrition, Condition };

enum class RelationLabel {
  Increase,
  Decrease,
  Satisfy,
  Control,
  UnclearInsignificant,
  Contain,
};

inline constexpr std::size_t kNumRelationLabels = 6;

// Contain is the only label of the Containing family; the rest are Causing.
inline bool is_causing(RelationLabel r) { return r != RelationLabel::Contain; }

inline std::string to_string(EntityKind k) {
  switch (k) {
    case EntityKind::Food: return "food";
    case EntityKind::Nutrition: return "nutrition";
    case EntityKind::Condition: return "condition";
  }
  return "?";
}

inline EntityKind entity_kind_from_string(const std::string& s) {
  if (s == "food") return EntityKind::Food;
  if (s == "nutrition") return EntityKind::Nutrition;
  if (s == "condition") return EntityKind::Condition;
  throw ValidationError("unknown entity kind: '" + s + "'");
}

inline std::string to_string(RelationLabel r) {
  switch (r) {
    case RelationLabel::Increase: return "increase";
    case RelationLabel::Decrease: return "decrease";
    case RelationLabel::Satisfy: return "satisfy";
    case RelationLabel::Control: return "control";
    case RelationLabel::UnclearInsignificant: return "unclear/insignificant";
    case RelationLabel::Contain: return "contain";
  }
  return "?";
}

inline RelationLabel relation_from_string(const std::string& s) {
  if (s == "increase") return RelationLabel::Increase;
  if (s == "decrease") return RelationLabel::Decrease;
  if (s == "satisfy") return RelationLabel::Satisfy;
  if (s == "control") return RelationLabel::Control;
  if (s == "unclear/insignificant") return RelationLabel::UnclearInsignificant;
  if (s == "contain") return RelationLabel::Contain;
  throw ValidationError("unknown relation label: '" + s + "'");
}

enum class AggregationOperator {
  UnderReported,
  PopulationScoping,
  Contradiction,
  Agreement,
};

inline std::string to_string(AggregationOperator op) {
  switch (op) {
    case AggregationOperator::UnderReported: return "under_reported";
    case AggregationOperator::PopulationScoping: return "population_scoping";
    case AggregationOperator::Contradiction: return "contradiction";
    case AggregationOperator::Agreement: return "agreement";
  }
  return "?";
}

inline AggregationOperator operator_from_string(const std::string& s) {
  if (s == "under_reported") return AggregationOperator::UnderReported;
  if (s == "population_scoping") return AggregationOperator::PopulationScoping;
  if (s == "contradiction") return AggregationOperator::Contradiction;
  if (s == "agreement") return AggregationOperator::Agreement;
  throw ValidationError("unknown aggregation operator: '" + s + "'");
}

// ---------------------------------------------------------------------------
// records

struct EntityPhrase {
  std::string text;  // normalized
  EntityKind kind = EntityKind::Food;

  static EntityPhrase make(std::string_view raw, EntityKind kind) {
    EntityPhrase e{normalize_phrase(raw), kind};
    if (e.text.empty()) throw ValidationError("entity text empty after normalization");
    return e;
  }

  bool operator==(const EntityPhrase&) const = default;
};

// study id reserved for tuples extracted from summaries, which have no study
inline constexpr const char* kSummaryStudyId = "summary";

struct RelationTuple {
  EntityPhrase e1;
  EntityPhrase e2;
  RelationLabel r = RelationLabel::Contain;
  std::string study_id;

  bool operator==(const RelationTuple&) const = default;

  // value identity ignoring provenance; used for set-union style merges
  bool same_fact(const RelationTuple& o) const {
    return e1 == o.e1 && e2 == o.e2 && r == o.r;
  }

  std::string describe() const {
    return "(" + e1.text + ", " + e2.text + ", " + to_string(r) + ") from '" + study_id + "'";
  }
};

struct StudyRecord {
  std::string study_id;
  std::vector<std::string> populations;  // annotated descriptors, may be empty
  std::optional<std::string> source_text;

  bool operator==(const StudyRecord&) const = default;
};

struct MiniDatabase {
  std::string topic;
  std::vector<StudyRecord> studies;
  std::vector<RelationTuple> tuples;  // ordered

  bool operator==(const MiniDatabase&) const = default;

  bool has_study(const std::string& id) const {
    return std::any_of(studies.begin(), studies.end(),
                       [&](const StudyRecord& s) { return s.study_id == id; });
  }
};

struct SummaryRecord {
  std::string text;
  std::vector<RelationTuple> tuples;  // study_id may be the "summary" sentinel
  AggregationOperator op = AggregationOperator::Agreement;

  bool operator==(const SummaryRecord&) const = default;
};

struct Example {
  MiniDatabase db;
  std::optional<SummaryRecord> summary;

  bool operator==(const Example&) const = default;
};

// ---------------------------------------------------------------------------
// schema validation

struct Violation {
  std::string message;
  bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

// Table 2 schema: Contain pairs (Food|Nutrition, Nutrition); every causing
// label pairs (Food|Nutrition, Condition).
inline std::optional<std::string> check_tuple_schema(const RelationTuple& t) {
  if (t.e1.text.empty()) return "tuple " + t.describe() + ": empty e1";
  if (t.e2.text.empty()) return "tuple " + t.describe() + ": empty e2";
  if (t.r == RelationLabel::Contain) {
    if (t.e2.kind != EntityKind::Nutrition)
      return "tuple " + t.describe() + ": contain requires nutrition e2";
    if (t.e1.kind == EntityKind::Condition)
      return "tuple " + t.describe() + ": contain requires food or nutrition e1";
  } else {
    if (t.e2.kind != EntityKind::Condition)
      return "tuple " + t.describe() + ": causing relation requires condition e2";
  }
  return std::nullopt;
}

inline ValidationReport validate_database(const MiniDatabase& db) {
  ValidationReport report;
  if (db.studies.empty()) report.push_back({"empty study list"});
  for (std::size_t i = 0; i < db.studies.size(); ++i) {
    for (std::size_t j = i + 1; j < db.studies.size(); ++j) {
      if (db.studies[i].study_id == db.studies[j].study_id)
        report.push_back({"duplicate study id '" + db.studies[i].study_id + "'"});
    }
    if (db.studies[i].study_id.empty()) report.push_back({"study with empty id"});
  }
  for (const RelationTuple& t : db.tuples) {
    if (auto v = check_tuple_schema(t)) report.push_back({*v});
    if (!db.has_study(t.study_id))
      report.push_back({"tuple " + t.describe() + ": unknown study id"});
  }
  return report;
}

// summary tuples are schema-checked but their study_id may be the sentinel
inline ValidationReport validate_summary(const SummaryRecord& s) {
  ValidationReport report;
  for (const RelationTuple& t : s.tuples)
    if (auto v = check_tuple_schema(t)) report.push_back({*v});
  return report;
}

// ---------------------------------------------------------------------------
// JSON (de)serialization
//
// Corpus file: JSON Lines, one object per example:
//   {"topic": ..., "studies": [{"id", "populations", "text"?}],
//    "tuples": [{"e1", "e1_kind", "e2", "e2_kind", "r", "study_id"}],
//    "summary"?: {"text", "tuples", "operator"}}

inline json tuple_to_json(const RelationTuple& t) {
  return json{{"e1", t.e1.text},          {"e1_kind", to_string(t.e1.kind)},
              {"e2", t.e2.text},          {"e2_kind", to_string(t.e2.kind)},
              {"r", to_string(t.r)},      {"study_id", t.study_id}};
}

inline RelationTuple tuple_from_json(const json& j) {
  RelationTuple t;
  t.e1 = EntityPhrase::make(j.at("e1").get<std::string>(),
                            entity_kind_from_string(j.at("e1_kind").get<std::string>()));
  t.e2 = EntityPhrase::make(j.at("e2").get<std::string>(),
                            entity_kind_from_string(j.at("e2_kind").get<std::string>()));
  t.r = relation_from_string(j.at("r").get<std::string>());
  t.study_id = j.at("study_id").get<std::string>();
  return t;
}

inline json summary_to_json(const SummaryRecord& s) {
  json tuples = json::array();
  for (const auto& t : s.tuples) tuples.push_back(tuple_to_json(t));
  return json{{"text", s.text}, {"tuples", std::move(tuples)}, {"operator", to_string(s.op)}};
}

inline SummaryRecord summary_from_json(const json& j) {
  SummaryRecord s;
  s.text = j.at("text").get<std::string>();
  for (const auto& jt : j.at("tuples")) s.tuples.push_back(tuple_from_json(jt));
  s.op = operator_from_string(j.at("operator").get<std::string>());
  return s;
}

inline json example_to_json(const Example& ex) {
  json studies = json::array();
  for (const auto& s : ex.db.studies) {
    json js{{"id", s.study_id}, {"populations", s.populations}};
    if (s.source_text) js["text"] = *s.source_text;
    studies.push_back(std::move(js));
  }
  json tuples = json::array();
  for (const auto& t : ex.db.tuples) tuples.push_back(tuple_to_json(t));
  json j{{"topic", ex.db.topic}, {"studies", std::move(studies)}, {"tuples", std::move(tuples)}};
  if (ex.summary) j["summary"] = summary_to_json(*ex.summary);
  return j;
}

inline Example example_from_json(const json& j) {
  Example ex;
  ex.db.topic = j.at("topic").get<std::string>();
  for (const auto& js : j.at("studies")) {
    StudyRecord s;
    s.study_id = js.at("id").get<std::string>();
    if (js.contains("populations"))
      for (const auto& p : js.at("populations")) s.populations.push_back(p.get<std::string>());
    if (js.contains("text")) s.source_text = js.at("text").get<std::string>();
    ex.db.studies.push_back(std::move(s));
  }
  for (const auto& jt : j.at("tuples")) ex.db.tuples.push_back(tuple_from_json(jt));
  if (j.contains("summary")) ex.summary = summary_from_json(j.at("summary"));
  return ex;
}

// Parses a line-delimited corpus. Malformed lines raise ParseError with the
// line number; schema violations raise ValidationError naming the tuple.
inline std::vector<Example> parse_corpus(std::istream& in) {
  std::vector<Example> out;
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
    Example ex;
    try {
      ex = example_from_json(j);
    } catch (const ValidationError&) {
      throw;
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    }
    ValidationReport report = validate_database(ex.db);
    if (ex.summary) {
      auto more = validate_summary(*ex.summary);
      report.insert(report.end(), more.begin(), more.end());
    }
    if (!report.empty())
      throw ValidationError("line " + std::to_string(lineno) + ": " + report.front().message);
    out.push_back(std::move(ex));
  }
  return out;
}

inline void serialize_corpus(const std::vector<Example>& examples, std::ostream& out) {
  for (const Example& ex : examples) out << example_to_json(ex).dump() << "\n";
}

}  // namespace compsum
