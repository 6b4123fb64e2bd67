// Command-line front end: train the selection policy, summarize databases,
// update existing summaries, score predictions, and generate synthetic
// benchmark corpora. All file formats are JSON Lines except the plain-text
// embedding table and the decimal-text policy checkpoint.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "compsum/aggregation.hpp"
#include "compsum/core.hpp"
#include "compsum/embeddings.hpp"
#include "compsum/evaluation.hpp"
#include "compsum/pipeline.hpp"
#include "compsum/realization.hpp"
#include "compsum/rng.hpp"
#include "compsum/selection.hpp"
#include "compsum/synth.hpp"

namespace {

using namespace compsum;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write to '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

struct Options {
  std::string embeddings = "data/embeddings_50d.txt";
  std::string prototypes;  // builtin store when empty
  std::string lexicon;     // defaults when empty
  std::string population_lexicon;
  std::string contradiction_phrases;
  std::string underreported_phrases;
  std::uint64_t seed = 1;

  RewardConfig reward;
  AggregationThresholds thresholds;
  EvalConfig eval;
  RolloutOptions rollout;

  // train
  std::string corpus, out, log;
  TrainHyper hyper;

  // summarize / update / eval / synth
  std::string db_path, policy_path, old_path, new_path, mode = "auto";
  std::string pred_path, gold_path, inputs_path;
  std::size_t synth_n = 20;
  double conflict_rate = 0.0;
  bool synth_updates = false;
};

json resolved_config(const Options& o, const std::string& command) {
  return json{{"command", command},
              {"seed", o.seed},
              {"embeddings", o.embeddings},
              {"prototypes", o.prototypes},
              {"lexicon", o.lexicon},
              {"w_e", o.reward.w_e},
              {"w_d", o.reward.w_d},
              {"r_p", o.reward.r_p},
              {"delta", o.reward.delta},
              {"min_studies", o.thresholds.min_studies},
              {"min_populations", o.thresholds.min_populations},
              {"entity_match_cos", o.thresholds.entity_match_cos},
              {"kg_match_cos", o.eval.kg_match_cos},
              {"rouge_beta", o.eval.rouge_beta},
              {"allow_new_list", o.rollout.allow_new_list},
              {"max_steps", o.rollout.max_steps},
              {"learning_rate", o.hyper.learning_rate},
              {"episodes_per_example", o.hyper.episodes_per_example},
              {"epochs", o.hyper.epochs},
              {"baseline_decay", o.hyper.baseline_decay},
              {"hidden1", o.hyper.hidden1},
              {"hidden2", o.hyper.hidden2},
              {"conflict_rate", o.conflict_rate},
              {"n", o.synth_n}};
}

OutputRuleLexicons load_rules(const Options& o) {
  OutputRuleLexicons lx = OutputRuleLexicons::defaults();
  if (!o.population_lexicon.empty())
    lx.population_phrases = OutputRuleLexicons::load_phrase_file(o.population_lexicon);
  if (!o.contradiction_phrases.empty())
    lx.contradiction_phrases = OutputRuleLexicons::load_phrase_file(o.contradiction_phrases);
  if (!o.underreported_phrases.empty())
    lx.underreported_phrases = OutputRuleLexicons::load_phrase_file(o.underreported_phrases);
  return lx;
}

PrototypeStore load_prototypes(const Options& o, const OutputRuleLexicons& rules) {
  if (o.prototypes.empty()) return PrototypeStore::builtin();
  return PrototypeStore::load_file(o.prototypes, rules);
}

RealizationLexicon load_lexicon(const Options& o) {
  if (o.lexicon.empty()) return RealizationLexicon::defaults();
  return RealizationLexicon::load_file(o.lexicon);
}

EmbeddingTable load_table(const Options& o) {
  EmbeddingTable table = EmbeddingTable::load_file(o.embeddings);
  for (const std::string& w : table.warnings()) std::cerr << "warning: " << w << "\n";
  return table;
}

std::vector<SummaryRecord> read_summaries(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<SummaryRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(summary_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

int run_train(const Options& o, const std::string& digest) {
  EmbeddingTable table = load_table(o);
  std::ifstream in = open_in(o.corpus);
  std::vector<Example> examples = parse_corpus(in);
  TrainResult result = train_policy(examples, o.reward, o.hyper, table, o.seed);
  std::ofstream out = open_out(o.out);
  save_policy(result.policy, out,
              {{"seed", std::to_string(o.seed)}, {"config_digest", digest}});
  if (!o.log.empty()) {
    std::ofstream log = open_out(o.log);
    write_training_log(result.log, log);
  }
  if (!result.log.empty())
    std::cerr << "trained " << o.hyper.epochs << " epochs; final mean reward "
              << result.log.back().mean_reward << "\n";
  return 0;
}

int run_summarize(const Options& o, const std::string& digest) {
  EmbeddingTable table = load_table(o);
  std::ifstream pf = open_in(o.policy_path);
  PolicyNetwork policy = load_policy(pf);
  if (policy.embed_dim != tuple_embedding_dim(table))
    throw std::runtime_error("policy embed dim does not match the embedding table");
  OutputRuleLexicons rules = load_rules(o);
  PrototypeStore prototypes = load_prototypes(o, rules);
  RealizationLexicon lexicon = load_lexicon(o);
  PipelineConfig cfg{o.reward, o.thresholds, o.rollout};

  std::ifstream in = open_in(o.db_path);
  std::vector<Example> examples = parse_corpus(in);
  std::ofstream out = open_out(o.out);
  Rng rng(Rng::mix(o.seed));
  for (const Example& ex : examples) {
    SummaryOutput so = summarize(ex.db, policy, cfg, prototypes, lexicon, table, rng);
    for (const std::string& w : so.warnings) std::cerr << "warning: " << w << "\n";
    json j = so.to_json();
    j["seed"] = o.seed;
    j["config_digest"] = digest;
    out << j.dump() << "\n";
  }
  return 0;
}

int run_update(const Options& o, const std::string& digest) {
  EmbeddingTable table = load_table(o);
  std::ifstream pf = open_in(o.policy_path);
  PolicyNetwork policy = load_policy(pf);
  OutputRuleLexicons rules = load_rules(o);
  PrototypeStore prototypes = load_prototypes(o, rules);
  RealizationLexicon lexicon = load_lexicon(o);
  PipelineConfig cfg{o.reward, o.thresholds, o.rollout};

  std::vector<SummaryRecord> olds = read_summaries(o.old_path);
  std::ifstream nf = open_in(o.new_path);
  std::vector<Example> news = parse_corpus(nf);
  if (olds.size() != news.size())
    throw std::runtime_error("update: --old and --new line counts differ (" +
                             std::to_string(olds.size()) + " vs " + std::to_string(news.size()) +
                             ")");
  std::ofstream out = open_out(o.out);
  Rng rng(Rng::mix(o.seed));
  for (std::size_t i = 0; i < olds.size(); ++i) {
    UpdateRequest req{olds[i], news[i].db, update_mode_from_string(o.mode)};
    SummaryOutput so = update_summary(req, policy, cfg, prototypes, lexicon, table, rng);
    for (const std::string& w : so.warnings) std::cerr << "warning: " << w << "\n";
    json j = so.to_json();
    j["seed"] = o.seed;
    j["config_digest"] = digest;
    out << j.dump() << "\n";
  }
  return 0;
}

int run_eval(const Options& o, const std::string& digest) {
  EmbeddingTable table = load_table(o);
  EvalConfig cfg = o.eval;
  cfg.thresholds = o.thresholds;
  cfg.rules = load_rules(o);

  std::vector<EvalEntry> entries;
  {
    std::ifstream in = open_in(o.pred_path);
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
      EvalEntry entry;
      entry.output_text = j.at("text").get<std::string>();
      if (j.contains("tuples"))
        for (const auto& jt : j.at("tuples")) entry.output_tuples.push_back(tuple_from_json(jt));
      entries.push_back(std::move(entry));
    }
  }
  std::vector<SummaryRecord> golds = read_summaries(o.gold_path);
  std::ifstream inf = open_in(o.inputs_path);
  std::vector<Example> inputs = parse_corpus(inf);
  if (golds.size() != entries.size() || inputs.size() != entries.size())
    throw std::runtime_error("eval: --pred, --gold and --inputs must have equal line counts");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    entries[i].gold = golds[i];
    entries[i].db = inputs[i].db;
  }

  EvalReport report = evaluate_corpus(entries, cfg, table);
  json j = report.to_json();
  j["seed"] = o.seed;
  j["config_digest"] = digest;
  if (!o.out.empty()) {
    std::ofstream out = open_out(o.out);
    out << j.dump(2) << "\n";
  }
  std::cout << report.to_table();
  return 0;
}

int run_synth(const Options& o, const std::string& digest) {
  EmbeddingTable table = load_table(o);
  Rng rng(Rng::mix(o.seed));
  SynthVocabulary vocab = SynthVocabulary::defaults();
  if (o.synth_updates) {
    std::ofstream out_old = open_out(o.out + ".old.jsonl");
    std::ofstream out_new = open_out(o.out + ".new.jsonl");
    for (std::size_t i = 0; i < o.synth_n; ++i) {
      const bool contradictory = rng.uniform() < o.conflict_rate;
      UpdateInstance inst = make_update_instance(contradictory, vocab, rng);
      out_old << summary_to_json(inst.old_summary).dump() << "\n";
      Example ex;
      ex.db = inst.new_db;
      json j = example_to_json(ex);
      j["seed"] = o.seed;
      j["config_digest"] = digest;
      out_new << j.dump() << "\n";
    }
    std::cerr << "wrote " << o.synth_n << " update pairs to " << o.out << ".{old,new}.jsonl\n";
    return 0;
  }
  SynthOptions opts;
  opts.conflict_rate = o.conflict_rate;
  std::vector<Example> corpus =
      make_synthetic_corpus(o.synth_n, vocab, opts, o.thresholds, table, rng);
  std::ofstream out = open_out(o.out);
  for (const Example& ex : corpus) {
    json j = example_to_json(ex);
    j["seed"] = o.seed;
    j["config_digest"] = digest;
    out << j.dump() << "\n";
  }
  std::cerr << "wrote " << corpus.size() << " examples to " << o.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"consensus-aware comparative summarization over relation tuples"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "config file (key=value lines; flags override)");

  app.add_option("--seed", o.seed, "rng seed recorded in all outputs");
  app.add_option("--embeddings", o.embeddings, "word embedding table (text)");
  app.add_option("--prototypes", o.prototypes, "prototype store JSONL (builtin when absent)");
  app.add_option("--lexicon", o.lexicon, "realization lexicon JSON (defaults when absent)");
  app.add_option("--population-lexicon", o.population_lexicon, "population phrases, one per line");
  app.add_option("--contradiction-phrases", o.contradiction_phrases,
                 "contradiction phrases, one per line");
  app.add_option("--underreported-phrases", o.underreported_phrases,
                 "under-reported phrases, one per line");
  app.add_option("--we", o.reward.w_e, "relevance reward weight");
  app.add_option("--wd", o.reward.w_d, "diversity reward weight");
  app.add_option("--rp", o.reward.r_p, "per-action penalty");
  app.add_option("--delta", o.reward.delta, "diversity cosine threshold");
  app.add_option("--min-studies", o.thresholds.min_studies, "under-reported study threshold");
  app.add_option("--min-populations", o.thresholds.min_populations,
                 "population scoping threshold");
  app.add_option("--entity-match-cos", o.thresholds.entity_match_cos,
                 "entity match cosine threshold");
  app.add_option("--kg-match-cos", o.eval.kg_match_cos, "KG metric cosine threshold");
  app.add_option("--rouge-beta", o.eval.rouge_beta, "ROUGE-L beta");
  app.add_flag("--allow-new-list", o.rollout.allow_new_list, "enable the NEW LIST action");
  app.add_option("--max-steps", o.rollout.max_steps, "rollout step cap (0: |tuples|+4)");

  CLI::App* train = app.add_subcommand("train", "train the selection policy with REINFORCE");
  train->add_option("--corpus", o.corpus, "training corpus JSONL")->required();
  train->add_option("--out", o.out, "checkpoint output path")->required();
  train->add_option("--log", o.log, "training log JSONL path");
  train->add_option("--epochs", o.hyper.epochs, "training epochs");
  train->add_option("--lr", o.hyper.learning_rate, "learning rate");
  train->add_option("--episodes", o.hyper.episodes_per_example, "episodes per example");
  train->add_option("--baseline-decay", o.hyper.baseline_decay, "EMA baseline decay");
  train->add_option("--hidden1", o.hyper.hidden1, "first hidden layer size");
  train->add_option("--hidden2", o.hyper.hidden2, "second hidden layer size");
  train->add_option("--max-grad-norm", o.hyper.max_grad_norm, "gradient norm clip (0: off)");

  CLI::App* summ = app.add_subcommand("summarize", "summarize each database in a corpus");
  summ->add_option("--db", o.db_path, "input corpus JSONL")->required();
  summ->add_option("--policy", o.policy_path, "policy checkpoint")->required();
  summ->add_option("--out", o.out, "output JSONL path")->required();

  CLI::App* upd = app.add_subcommand("update", "update old summaries with new studies");
  upd->add_option("--old", o.old_path, "old summaries JSONL")->required();
  upd->add_option("--new", o.new_path, "new studies corpus JSONL")->required();
  upd->add_option("--policy", o.policy_path, "policy checkpoint")->required();
  upd->add_option("--mode", o.mode, "fusion|contradiction|auto")
      ->check(CLI::IsMember({"fusion", "contradiction", "auto"}));
  upd->add_option("--out", o.out, "output JSONL path")->required();

  CLI::App* ev = app.add_subcommand("eval", "score predictions against gold and inputs");
  ev->add_option("--pred", o.pred_path, "predictions JSONL ({text, tuples})")->required();
  ev->add_option("--gold", o.gold_path, "gold summaries JSONL")->required();
  ev->add_option("--inputs", o.inputs_path, "input corpus JSONL")->required();
  ev->add_option("--out", o.out, "report JSON path");

  CLI::App* synth = app.add_subcommand("synth", "generate synthetic benchmark data");
  synth->add_option("--n", o.synth_n, "number of examples");
  synth->add_option("--conflict-rate", o.conflict_rate, "probability of a planted conflict");
  synth->add_option("--out", o.out, "output path (prefix with --updates)")->required();
  synth->add_flag("--updates", o.synth_updates, "emit update pairs instead of a corpus");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const json cfg = resolved_config(o, command);
  const std::string digest = hex64(fnv1a(cfg.dump()));
  std::cerr << "config: " << cfg.dump() << "\n";
  std::cerr << "seed: " << o.seed << " config_digest: " << digest << "\n";

  try {
    if (command == "train") return run_train(o, digest);
    if (command == "summarize") return run_summarize(o, digest);
    if (command == "update") return run_update(o, digest);
    if (command == "eval") return run_eval(o, digest);
    if (command == "synth") return run_synth(o, digest);
    std::cerr << "error: unknown command\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
