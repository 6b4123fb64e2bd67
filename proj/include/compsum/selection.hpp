#pragma once

// Content selection as a finite MDP. A feed-forward scorer maps (step, action
// embedding, closest-selected-content embedding) to a scalar; softmax over all
// valid actions gives the policy. Episodes end on STOP. Training is REINFORCE
// with an exponential-moving-average baseline; gradients are computed
// analytically through the scorer and the softmax.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "compsum/core.hpp"
#include "compsum/embeddings.hpp"
#include "compsum/rng.hpp"

namespace compsum {

struct SelectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// actions and states

struct Action {
  enum class Kind { SelectTuple, NewList, Stop };
  Kind kind = Kind::Stop;
  std::size_t index = 0;  // into the remaining list, for SelectTuple

  static Action select(std::size_t i) { return {Kind::SelectTuple, i}; }
  static Action new_list() { return {Kind::NewList, 0}; }
  static Action stop() { return {Kind::Stop, 0}; }

  bool operator==(const Action&) const = default;

  std::string describe() const {
    switch (kind) {
      case Kind::SelectTuple: return "select(" + std::to_string(index) + ")";
      case Kind::NewList: return "new_list";
      case Kind::Stop: return "stop";
    }
    return "?";
  }
};

struct SelectionState {
  std::size_t step = 0;                     // t: actions taken so far
  std::vector<RelationTuple> selected;      // flat, in selection order
  std::vector<std::size_t> list_breaks;     // |selected| at each NEW LIST
  std::vector<RelationTuple> remaining;

  static SelectionState initial(const MiniDatabase& db) {
    SelectionState s;
    s.remaining = db.tuples;
    return s;
  }
};

// terminal result of an episode
struct Selection {
  std::vector<std::vector<RelationTuple>> partitions;  // empties possible
  std::size_t actions_charged = 0;  // selects + new-lists; stop is free

  std::vector<RelationTuple> flat() const {
    std::vector<RelationTuple> out;
    for (const auto& p : partitions) out.insert(out.end(), p.begin(), p.end());
    return out;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& p : partitions) n += p.size();
    return n;
  }

  bool empty() const { return size() == 0; }
};

inline Selection finalize_selection(const SelectionState& s) {
  Selection sel;
  sel.actions_charged = s.step;
  sel.partitions.emplace_back();
  std::size_t next_break = 0;
  for (std::size_t i = 0; i <= s.selected.size(); ++i) {
    while (next_break < s.list_breaks.size() && s.list_breaks[next_break] == i) {
      sel.partitions.emplace_back();
      ++next_break;
    }
    if (i < s.selected.size()) sel.partitions.back().push_back(s.selected[i]);
  }
  return sel;
}

// SelectTuple moves a tuple from remaining to selected; NewList records a
// partition marker; Stop finalizes. t increments on every non-stop action.
inline std::variant<SelectionState, Selection> step(const SelectionState& state,
                                                    const Action& action) {
  switch (action.kind) {
    case Action::Kind::SelectTuple: {
      if (action.index >= state.remaining.size())
        throw SelectionError("step: action index " + std::to_string(action.index) +
                             " out of range (remaining " +
                             std::to_string(state.remaining.size()) + ")");
      SelectionState next = state;
      next.selected.push_back(next.remaining[action.index]);
      next.remaining.erase(next.remaining.begin() +
                           static_cast<std::ptrdiff_t>(action.index));
      ++next.step;
      return next;
    }
    case Action::Kind::NewList: {
      SelectionState next = state;
      next.list_breaks.push_back(next.selected.size());
      ++next.step;
      return next;
    }
    case Action::Kind::Stop:
      return finalize_selection(state);
  }
  throw SelectionError("step: unknown action");
}

// ---------------------------------------------------------------------------
// policy network

struct PolicyNetwork {
  std::size_t feature_dim = 0;  // 1 + 2 * embed_dim
  std::size_t embed_dim = 0;    // tuple embedding size
  std::size_t hidden1 = 0;
  std::size_t hidden2 = 0;

  std::vector<double> w1, b1;  // hidden1 x feature_dim, hidden1
  std::vector<double> w2, b2;  // hidden2 x hidden1, hidden2
  std::vector<double> w3, b3;  // 1 x hidden2, 1

  std::vector<double> stop_embed;           // embed_dim
  std::vector<double> newlist_embed;        // embed_dim
  std::vector<double> empty_context_embed;  // embed_dim

  static PolicyNetwork init(std::size_t embed_dim, std::size_t hidden1, std::size_t hidden2,
                            Rng& rng) {
    PolicyNetwork p;
    p.embed_dim = embed_dim;
    p.feature_dim = 1 + 2 * embed_dim;
    p.hidden1 = hidden1;
    p.hidden2 = hidden2;
    auto glorot = [&](std::vector<double>& w, std::size_t out, std::size_t in) {
      const double r = std::sqrt(6.0 / static_cast<double>(in + out));
      w.resize(out * in);
      for (double& x : w) x = rng.uniform(-r, r);
    };
    glorot(p.w1, hidden1, p.feature_dim);
    glorot(p.w2, hidden2, hidden1);
    glorot(p.w3, 1, hidden2);
    p.b1.assign(hidden1, 0.0);
    p.b2.assign(hidden2, 0.0);
    p.b3.assign(1, 0.0);
    auto small = [&](std::vector<double>& v) {
      v.resize(embed_dim);
      for (double& x : v) x = rng.uniform(-0.3, 0.3);
    };
    small(p.stop_embed);
    small(p.newlist_embed);
    small(p.empty_context_embed);
    return p;
  }

  bool shapes_valid() const {
    return feature_dim == 1 + 2 * embed_dim && w1.size() == hidden1 * feature_dim &&
           b1.size() == hidden1 && w2.size() == hidden2 * hidden1 && b2.size() == hidden2 &&
           w3.size() == hidden2 && b3.size() == 1 && stop_embed.size() == embed_dim &&
           newlist_embed.size() == embed_dim && empty_context_embed.size() == embed_dim;
  }

  bool all_finite() const {
    bool ok = true;
    for_each_block([&](const std::vector<double>& v) {
      for (double x : v)
        if (!std::isfinite(x)) ok = false;
    });
    return ok;
  }

  template <typename F>
  void for_each_block(F&& f) {
    f(w1); f(b1); f(w2); f(b2); f(w3); f(b3);
    f(stop_embed); f(newlist_embed); f(empty_context_embed);
  }

  template <typename F>
  void for_each_block(F&& f) const {
    f(w1); f(b1); f(w2); f(b2); f(w3); f(b3);
    f(stop_embed); f(newlist_embed); f(empty_context_embed);
  }

  PolicyNetwork zeros_like() const {
    PolicyNetwork z = *this;
    z.for_each_block([](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); });
    return z;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for_each_block([&](const std::vector<double>& v) { n += v.size(); });
    return n;
  }

  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(param_count());
    for_each_block([&](const std::vector<double>& v) {
      out.insert(out.end(), v.begin(), v.end());
    });
    return out;
  }

  void unflatten(const std::vector<double>& flat) {
    std::size_t pos = 0;
    for_each_block([&](std::vector<double>& v) {
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                flat.begin() + static_cast<std::ptrdiff_t>(pos + v.size()), v.begin());
      pos += v.size();
    });
    if (pos != flat.size()) throw SelectionError("unflatten: size mismatch");
  }

  // in-place: this += alpha * other (same shapes)
  void axpy(double alpha, const PolicyNetwork& other) {
    std::vector<std::vector<double>*> mine;
    std::vector<const std::vector<double>*> theirs;
    for_each_block([&](std::vector<double>& v) { mine.push_back(&v); });
    other.for_each_block([&](const std::vector<double>& v) { theirs.push_back(&v); });
    for (std::size_t b = 0; b < mine.size(); ++b)
      for (std::size_t i = 0; i < mine[b]->size(); ++i)
        (*mine[b])[i] += alpha * (*theirs[b])[i];
  }

  void scale(double alpha) {
    for_each_block([&](std::vector<double>& v) {
      for (double& x : v) x *= alpha;
    });
  }

  double norm() const {
    double s = 0.0;
    for_each_block([&](const std::vector<double>& v) {
      for (double x : v) s += x * x;
    });
    return std::sqrt(s);
  }
};

struct ForwardCache {
  std::vector<double> x, z1, h1, z2, h2;
  double score = 0.0;
};

inline ForwardCache policy_forward(const PolicyNetwork& p, std::vector<double> features) {
  if (features.size() != p.feature_dim)
    throw SelectionError("policy_forward: feature size mismatch");
  ForwardCache c;
  c.x = std::move(features);
  c.z1.resize(p.hidden1);
  c.h1.resize(p.hidden1);
  for (std::size_t i = 0; i < p.hidden1; ++i) {
    double z = p.b1[i];
    const double* row = &p.w1[i * p.feature_dim];
    for (std::size_t j = 0; j < p.feature_dim; ++j) z += row[j] * c.x[j];
    c.z1[i] = z;
    c.h1[i] = z > 0.0 ? z : 0.0;
  }
  c.z2.resize(p.hidden2);
  c.h2.resize(p.hidden2);
  for (std::size_t i = 0; i < p.hidden2; ++i) {
    double z = p.b2[i];
    const double* row = &p.w2[i * p.hidden1];
    for (std::size_t j = 0; j < p.hidden1; ++j) z += row[j] * c.h1[j];
    c.z2[i] = z;
    c.h2[i] = z > 0.0 ? z : 0.0;
  }
  double s = p.b3[0];
  for (std::size_t j = 0; j < p.hidden2; ++j) s += p.w3[j] * c.h2[j];
  c.score = s;
  return c;
}

// Accumulates coeff * d(score)/d(params) into grad and coeff * d(score)/d(x)
// into x_grad (x_grad may be null).
inline void policy_backward(const PolicyNetwork& p, const ForwardCache& c, double coeff,
                            PolicyNetwork& grad, std::vector<double>* x_grad) {
  std::vector<double> d2(p.hidden2);
  for (std::size_t i = 0; i < p.hidden2; ++i) {
    grad.w3[i] += coeff * c.h2[i];
    d2[i] = c.z2[i] > 0.0 ? coeff * p.w3[i] : 0.0;
  }
  grad.b3[0] += coeff;
  std::vector<double> d1(p.hidden1, 0.0);
  for (std::size_t i = 0; i < p.hidden2; ++i) {
    if (d2[i] == 0.0) continue;
    grad.b2[i] += d2[i];
    double* grow = &grad.w2[i * p.hidden1];
    const double* row = &p.w2[i * p.hidden1];
    for (std::size_t j = 0; j < p.hidden1; ++j) {
      grow[j] += d2[i] * c.h1[j];
      d1[j] += d2[i] * row[j];
    }
  }
  for (std::size_t i = 0; i < p.hidden1; ++i) {
    if (c.z1[i] <= 0.0) d1[i] = 0.0;
    if (d1[i] == 0.0) continue;
    grad.b1[i] += d1[i];
    double* grow = &grad.w1[i * p.feature_dim];
    for (std::size_t j = 0; j < p.feature_dim; ++j) grow[j] += d1[i] * c.x[j];
  }
  if (x_grad) {
    x_grad->assign(p.feature_dim, 0.0);
    for (std::size_t i = 0; i < p.hidden1; ++i) {
      if (d1[i] == 0.0) continue;
      const double* row = &p.w1[i * p.feature_dim];
      for (std::size_t j = 0; j < p.feature_dim; ++j) (*x_grad)[j] += d1[i] * row[j];
    }
  }
}

// ---------------------------------------------------------------------------
// features

struct ActionFeatures {
  std::vector<double> values;
  // which blocks came from trainable special embeddings
  bool z_is_stop = false;
  bool z_is_newlist = false;
  bool context_is_empty = false;
};

// [t | action embedding | embedding of the selected content closest to it].
// STOP and NEW LIST use their special embeddings; an empty selection uses the
// empty-context embedding. Argmax ties break toward the earliest selection.
inline ActionFeatures action_features(const SelectionState& state, const Action& action,
                                      const EmbeddingTable& table, const PolicyNetwork& policy) {
  ActionFeatures out;
  PhraseVector z;
  switch (action.kind) {
    case Action::Kind::SelectTuple:
      if (action.index >= state.remaining.size())
        throw SelectionError("action_features: index out of range");
      z = tuple_embedding(state.remaining[action.index], table);
      break;
    case Action::Kind::Stop:
      z = PhraseVector::of(policy.stop_embed);
      out.z_is_stop = true;
      break;
    case Action::Kind::NewList:
      z = PhraseVector::of(policy.newlist_embed);
      out.z_is_newlist = true;
      break;
  }

  std::vector<double> context;
  if (state.selected.empty()) {
    context = policy.empty_context_embed;
    out.context_is_empty = true;
  } else {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    std::vector<PhraseVector> embeds;
    embeds.reserve(state.selected.size());
    for (const RelationTuple& c : state.selected)
      embeds.push_back(tuple_embedding(c, table));
    for (std::size_t i = 0; i < embeds.size(); ++i) {
      const double cs = cosine(z, embeds[i]);
      if (cs > best) {
        best = cs;
        best_i = i;
      }
    }
    context = embeds[best_i].values;
  }

  out.values.reserve(policy.feature_dim);
  out.values.push_back(static_cast<double>(state.step));
  out.values.insert(out.values.end(), z.values.begin(), z.values.end());
  out.values.insert(out.values.end(), context.begin(), context.end());
  return out;
}

// ---------------------------------------------------------------------------
// distribution, rollout

inline std::vector<double> softmax(const std::vector<double>& scores) {
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - m);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

struct RolloutOptions {
  bool allow_new_list = false;
  std::size_t max_steps = 0;  // 0: |tuples| + 4
};

inline std::vector<Action> valid_actions(const SelectionState& state,
                                         const RolloutOptions& opts) {
  std::vector<Action> actions;
  actions.reserve(state.remaining.size() + 2);
  for (std::size_t i = 0; i < state.remaining.size(); ++i) actions.push_back(Action::select(i));
  if (opts.allow_new_list) actions.push_back(Action::new_list());
  actions.push_back(Action::stop());
  return actions;
}

struct ActionDistribution {
  std::vector<Action> actions;
  std::vector<double> scores;
  std::vector<double> probs;
};

inline ActionDistribution policy_distribution(const PolicyNetwork& policy,
                                              const SelectionState& state,
                                              const EmbeddingTable& table,
                                              const RolloutOptions& opts = {}) {
  ActionDistribution dist;
  dist.actions = valid_actions(state, opts);
  dist.scores.reserve(dist.actions.size());
  for (const Action& a : dist.actions) {
    const double s = policy_forward(policy, action_features(state, a, table, policy).values).score;
    if (!std::isfinite(s))
      throw SelectionError("non-finite policy score for action " + a.describe() +
                           " (diverged training?)");
    dist.scores.push_back(s);
  }
  dist.probs = softmax(dist.scores);
  return dist;
}

enum class RolloutMode { Greedy, Sample };

struct EpisodeStep {
  SelectionState state;
  Action action;  // chosen by the policy (forced stops are not recorded)
};

struct RolloutResult {
  Selection selection;
  std::vector<EpisodeStep> steps;
  bool forced_stop = false;
};

// Samples (or greedily picks) actions until STOP; a rollout hitting max_steps
// is terminated by a forced stop that the policy is not scored on. Greedy
// ties break toward the lowest action index.
inline RolloutResult rollout(const PolicyNetwork& policy, const MiniDatabase& db,
                             RolloutMode mode, const EmbeddingTable& table,
                             const RolloutOptions& opts = {}, Rng* rng = nullptr) {
  if (mode == RolloutMode::Sample && rng == nullptr)
    throw SelectionError("rollout: sampling requires an rng");
  const std::size_t max_steps = opts.max_steps > 0 ? opts.max_steps : db.tuples.size() + 4;

  RolloutResult result;
  SelectionState state = SelectionState::initial(db);
  while (true) {
    if (state.step >= max_steps) {
      result.forced_stop = true;
      result.selection = finalize_selection(state);
      return result;
    }
    ActionDistribution dist = policy_distribution(policy, state, table, opts);
    std::size_t pick = 0;
    if (mode == RolloutMode::Greedy) {
      for (std::size_t i = 1; i < dist.probs.size(); ++i)
        if (dist.probs[i] > dist.probs[pick]) pick = i;
    } else {
      pick = rng->categorical(dist.probs);
    }
    const Action chosen = dist.actions[pick];
    result.steps.push_back({state, chosen});
    auto next = step(state, chosen);
    if (std::holds_alternative<Selection>(next)) {
      result.selection = std::get<Selection>(std::move(next));
      return result;
    }
    state = std::get<SelectionState>(std::move(next));
  }
}

// ---------------------------------------------------------------------------
// rewards

struct RewardConfig {
  double w_e = 1.0;
  double w_d = 1.0;
  double r_p = 0.05;
  double delta = 0.9;
};

// Greedy one-to-one matching of selected content against the gold structures:
// each c takes the best still-unmatched gold by summed entity cosine; once
// gold is exhausted further selections contribute nothing.
inline double reward_relevance(const std::vector<RelationTuple>& content,
                               const std::vector<RelationTuple>& gold,
                               const EmbeddingTable& table) {
  std::vector<bool> used(gold.size(), false);
  std::vector<PhraseVector> g1(gold.size()), g2(gold.size());
  for (std::size_t j = 0; j < gold.size(); ++j) {
    g1[j] = embed_phrase(gold[j].e1.text, table);
    g2[j] = embed_phrase(gold[j].e2.text, table);
  }
  double total = 0.0;
  for (const RelationTuple& c : content) {
    const PhraseVector c1 = embed_phrase(c.e1.text, table);
    const PhraseVector c2 = embed_phrase(c.e2.text, table);
    double best = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t best_j = -1;
    for (std::size_t j = 0; j < gold.size(); ++j) {
      if (used[j]) continue;
      const double s = cosine(c1, g1[j]) + cosine(c2, g2[j]);
      if (s > best) {
        best = s;
        best_j = static_cast<std::ptrdiff_t>(j);
      }
    }
    if (best_j >= 0) {
      used[static_cast<std::size_t>(best_j)] = true;
      total += best;
    }
  }
  return total;
}

// 1 iff all pairwise tuple-embedding cosines stay strictly below delta; at
// most one selection is trivially diverse
inline int reward_diversity(const std::vector<RelationTuple>& content, double delta,
                            const EmbeddingTable& table) {
  if (content.size() <= 1) return 1;
  std::vector<PhraseVector> embeds;
  embeds.reserve(content.size());
  for (const RelationTuple& c : content) embeds.push_back(tuple_embedding(c, table));
  for (std::size_t i = 0; i < embeds.size(); ++i)
    for (std::size_t j = i + 1; j < embeds.size(); ++j)
      if (cosine(embeds[i], embeds[j]) >= delta) return 0;
  return 1;
}

struct RewardBreakdown {
  double relevance = 0.0;   // R_e
  int diversity = 0;        // R_d, 0 or 1
  std::size_t steps = 0;    // actions charged the per-step penalty
  double total = 0.0;       // w_e*R_e + w_d*R_d - steps*r_p
};

// An empty selection scores zero on every component.
inline RewardBreakdown total_reward(const std::vector<RelationTuple>& content,
                                    const std::vector<RelationTuple>& gold,
                                    std::size_t actions_charged, const RewardConfig& cfg,
                                    const EmbeddingTable& table) {
  RewardBreakdown r;
  r.steps = actions_charged;
  if (!content.empty()) {
    r.relevance = reward_relevance(content, gold, table);
    r.diversity = reward_diversity(content, cfg.delta, table);
  }
  r.total = cfg.w_e * r.relevance + cfg.w_d * r.diversity -
            static_cast<double>(r.steps) * cfg.r_p;
  return r;
}

inline RewardBreakdown total_reward(const std::vector<RelationTuple>& content,
                                    const std::vector<RelationTuple>& gold,
                                    const RewardConfig& cfg, const EmbeddingTable& table) {
  return total_reward(content, gold, content.size(), cfg, table);
}

inline RewardBreakdown total_reward(const Selection& sel,
                                    const std::vector<RelationTuple>& gold,
                                    const RewardConfig& cfg, const EmbeddingTable& table) {
  return total_reward(sel.flat(), gold, sel.actions_charged, cfg, table);
}

// ---------------------------------------------------------------------------
// REINFORCE training

struct TrainHyper {
  double learning_rate = 0.01;
  int episodes_per_example = 4;
  int epochs = 50;
  double baseline_decay = 0.9;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 32;
  double max_grad_norm = 5.0;
  RolloutOptions rollout;
};

struct EpochStats {
  int epoch = 0;
  double mean_reward = 0.0;
  double mean_len = 0.0;
  double baseline = 0.0;
};

using TrainingLog = std::vector<EpochStats>;

inline void write_training_log(const TrainingLog& log, std::ostream& out) {
  for (const EpochStats& e : log)
    out << json{{"epoch", e.epoch},
                {"mean_reward", e.mean_reward},
                {"mean_len", e.mean_len},
                {"baseline", e.baseline}}
               .dump()
        << "\n";
}

// d(sum_t log pi(a_t | s_t)) / d(params), accumulated into grad. The softmax
// term is (1[j = chosen] - p_j) per valid action; input gradients are routed
// to whichever special embeddings produced the feature blocks.
inline void accumulate_episode_gradient(const PolicyNetwork& policy,
                                        const std::vector<EpisodeStep>& steps,
                                        const EmbeddingTable& table,
                                        const RolloutOptions& opts, double scale,
                                        PolicyNetwork& grad) {
  std::vector<double> x_grad;
  for (const EpisodeStep& es : steps) {
    const std::vector<Action> actions = valid_actions(es.state, opts);
    std::vector<ActionFeatures> feats;
    std::vector<ForwardCache> caches;
    std::vector<double> scores;
    feats.reserve(actions.size());
    caches.reserve(actions.size());
    scores.reserve(actions.size());
    std::size_t chosen = actions.size();
    for (std::size_t j = 0; j < actions.size(); ++j) {
      if (actions[j] == es.action) chosen = j;
      feats.push_back(action_features(es.state, actions[j], table, policy));
      caches.push_back(policy_forward(policy, feats.back().values));
      scores.push_back(caches.back().score);
    }
    if (chosen == actions.size())
      throw TrainError("episode gradient: recorded action not valid in its state");
    const std::vector<double> probs = softmax(scores);
    for (std::size_t j = 0; j < actions.size(); ++j) {
      const double coeff = ((j == chosen ? 1.0 : 0.0) - probs[j]) * scale;
      if (coeff == 0.0) continue;
      policy_backward(policy, caches[j], coeff, grad, &x_grad);
      // feature layout: [t | z block | context block]
      if (feats[j].z_is_stop)
        for (std::size_t k = 0; k < policy.embed_dim; ++k)
          grad.stop_embed[k] += x_grad[1 + k];
      if (feats[j].z_is_newlist)
        for (std::size_t k = 0; k < policy.embed_dim; ++k)
          grad.newlist_embed[k] += x_grad[1 + k];
      if (feats[j].context_is_empty)
        for (std::size_t k = 0; k < policy.embed_dim; ++k)
          grad.empty_context_embed[k] += x_grad[1 + policy.embed_dim + k];
    }
  }
}

struct TrainResult {
  PolicyNetwork policy;
  TrainingLog log;
  double baseline = 0.0;
};

// REINFORCE over the parallel examples. Episodes within one example run
// against a fixed policy and their mean gradient is applied in one update;
// each episode draws from its own seed-derived stream.
inline TrainResult train_policy(const std::vector<Example>& examples, const RewardConfig& cfg,
                                const TrainHyper& hyper, const EmbeddingTable& table,
                                std::uint64_t seed) {
  if (examples.empty()) throw TrainError("train_policy: no examples");
  for (std::size_t i = 0; i < examples.size(); ++i)
    if (!examples[i].summary)
      throw TrainError("train_policy: example " + std::to_string(i) + " has no gold summary");
  if (hyper.learning_rate <= 0.0) throw TrainError("train_policy: learning rate must be > 0");
  if (hyper.episodes_per_example < 1 || hyper.epochs < 1)
    throw TrainError("train_policy: episodes and epochs must be >= 1");
  if (hyper.baseline_decay < 0.0 || hyper.baseline_decay >= 1.0)
    throw TrainError("train_policy: baseline decay must be in [0, 1)");

  Rng init_rng(Rng::mix(seed ^ 0x1c0ffee1ULL));
  TrainResult result;
  result.policy = PolicyNetwork::init(tuple_embedding_dim(table), hyper.hidden1, hyper.hidden2,
                                      init_rng);
  double baseline = 0.0;

  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    double reward_sum = 0.0;
    double len_sum = 0.0;
    std::size_t episode_count = 0;

    for (std::size_t ex = 0; ex < examples.size(); ++ex) {
      const MiniDatabase& db = examples[ex].db;
      const std::vector<RelationTuple>& gold = examples[ex].summary->tuples;
      PolicyNetwork grad = result.policy.zeros_like();

      for (int ep = 0; ep < hyper.episodes_per_example; ++ep) {
        const std::uint64_t stream =
            Rng::mix(Rng::mix(Rng::mix(seed ^ static_cast<std::uint64_t>(epoch)) ^
                              static_cast<std::uint64_t>(ex + 1)) ^
                     static_cast<std::uint64_t>(ep + 1));
        Rng ep_rng(stream);
        RolloutResult ro =
            rollout(result.policy, db, RolloutMode::Sample, table, hyper.rollout, &ep_rng);
        const RewardBreakdown reward = total_reward(ro.selection, gold, cfg, table);
        const double advantage = reward.total - baseline;
        accumulate_episode_gradient(result.policy, ro.steps, table, hyper.rollout, advantage,
                                    grad);
        baseline = hyper.baseline_decay * baseline + (1.0 - hyper.baseline_decay) * reward.total;
        reward_sum += reward.total;
        len_sum += static_cast<double>(ro.selection.actions_charged);
        ++episode_count;
      }

      grad.scale(1.0 / static_cast<double>(hyper.episodes_per_example));
      const double gnorm = grad.norm();
      if (!std::isfinite(gnorm))
        throw TrainError("non-finite gradient at epoch " + std::to_string(epoch) + ", example " +
                         std::to_string(ex));
      if (hyper.max_grad_norm > 0.0 && gnorm > hyper.max_grad_norm)
        grad.scale(hyper.max_grad_norm / gnorm);
      result.policy.axpy(hyper.learning_rate, grad);  // ascent
    }

    result.log.push_back({epoch, reward_sum / static_cast<double>(episode_count),
                          len_sum / static_cast<double>(episode_count), baseline});
  }
  result.baseline = baseline;
  return result;
}

// ---------------------------------------------------------------------------
// checkpoint format: decimal text, one labelled block per line group

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void save_policy(const PolicyNetwork& p, std::ostream& out,
                        const std::vector<std::pair<std::string, std::string>>& meta = {}) {
  out << "compsum-policy v1\n";
  for (const auto& [k, v] : meta) out << "# " << k << "=" << v << "\n";
  out << "dims " << p.feature_dim << " " << p.embed_dim << " " << p.hidden1 << " " << p.hidden2
      << "\n";
  auto block = [&](const char* name, const std::vector<double>& v) {
    out << name << " " << v.size();
    for (double x : v) out << " " << format_double(x);
    out << "\n";
  };
  block("w1", p.w1);
  block("b1", p.b1);
  block("w2", p.w2);
  block("b2", p.b2);
  block("w3", p.w3);
  block("b3", p.b3);
  block("stop", p.stop_embed);
  block("newlist", p.newlist_embed);
  block("empty_context", p.empty_context_embed);
}

inline PolicyNetwork load_policy(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "compsum-policy v1")
    throw SelectionError("checkpoint: bad header");
  PolicyNetwork p;
  auto read_block = [&](const std::string& expect, std::vector<double>& v) {
    std::string name;
    std::size_t n;
    if (!(in >> name >> n) || name != expect)
      throw SelectionError("checkpoint: expected block '" + expect + "'");
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(in >> v[i]) || !std::isfinite(v[i]))
        throw SelectionError("checkpoint: bad value in block '" + expect + "'");
    }
  };
  while (in.peek() == '#') std::getline(in, line);
  std::string tag;
  if (!(in >> tag) || tag != "dims") throw SelectionError("checkpoint: missing dims");
  in >> p.feature_dim >> p.embed_dim >> p.hidden1 >> p.hidden2;
  read_block("w1", p.w1);
  read_block("b1", p.b1);
  read_block("w2", p.w2);
  read_block("b2", p.b2);
  read_block("w3", p.w3);
  read_block("b3", p.b3);
  read_block("stop", p.stop_embed);
  read_block("newlist", p.newlist_embed);
  read_block("empty_context", p.empty_context_embed);
  if (!p.shapes_valid()) throw SelectionError("checkpoint: layer dimensions do not chain");
  return p;
}

}  // namespace compsum
