#pragma once

// Averaged structured perceptron over lattice paths: joint segmentation
// and tagging via first-order Viterbi on the lattice, gold-minus-predicted
// updates with weight averaging.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "mlt/config.hpp"
#include "mlt/core.hpp"
#include "mlt/formats.hpp"
#include "mlt/lattice.hpp"
#include "mlt/lexicon.hpp"
#include "mlt/rng.hpp"

namespace mlt {

struct PerceptronModel {
  struct Entry {
    double w = 0.0;    // current weight
    double acc = 0.0;  // sum of w over timesteps (for averaging)
    long last = 0;     // timestep of last update
  };
  std::unordered_map<std::string, Entry> weights;
  long timestep = 0;
  bool use_average = false; // decode with averaged weights after training
  std::vector<std::string> templates = default_templates();

  static std::vector<std::string> default_templates() {
    return {"form", "tag", "form_tag", "prefix_tag", "suffix_tag",
            "token_tag", "context_tag"};
  }

  double weight(const std::string& key) const {
    auto it = weights.find(key);
    if (it == weights.end()) return 0.0;
    if (!use_average) return it->second.w;
    double total = static_cast<double>(std::max<long>(timestep, 1));
    double acc = it->second.acc +
                 it->second.w * static_cast<double>(timestep - it->second.last);
    return acc / total;
  }

  // Averaging uses the post-update weight at each timestep, so a model
  // touched by exactly one update averages to that update.
  void update(const std::string& key, double delta) {
    Entry& e = weights[key];
    e.acc += e.w * static_cast<double>(timestep - 1 - e.last);
    e.last = timestep - 1;
    e.w += delta;
  }
};

// ---------------------------------------------------------------------------
// Feature templates
// ---------------------------------------------------------------------------

namespace detail {

inline bool has_template(const PerceptronModel& m, const char* name) {
  return std::find(m.templates.begin(), m.templates.end(), name) !=
         m.templates.end();
}

} // namespace detail

inline std::vector<std::string> arc_features(const PerceptronModel& model,
                                             const Lattice& lat,
                                             const Arc& arc) {
  std::vector<std::string> feats;
  const std::string& form = arc.morpheme.form;
  const std::string& tag = arc.morpheme.tag;
  if (detail::has_template(model, "form")) feats.push_back("f=" + form);
  if (detail::has_template(model, "tag")) feats.push_back("t=" + tag);
  if (detail::has_template(model, "form_tag"))
    feats.push_back("ft=" + form + "|" + tag);
  if (detail::has_template(model, "prefix_tag"))
    for (size_t n = 1; n <= 3 && n < form.size(); ++n)
      feats.push_back("pre" + std::to_string(n) + "=" + form.substr(0, n) +
                      "|" + tag);
  if (detail::has_template(model, "suffix_tag"))
    for (size_t n = 1; n <= 3 && n < form.size(); ++n)
      feats.push_back("suf" + std::to_string(n) + "=" +
                      form.substr(form.size() - n) + "|" + tag);
  if (detail::has_template(model, "token_tag"))
    feats.push_back("wt=" + lat.surfaces[arc.token_index] + "|" + tag);
  if (detail::has_template(model, "context_tag")) {
    const std::string prev = arc.token_index > 0
                                 ? lat.surfaces[arc.token_index - 1]
                                 : std::string("<s>");
    const std::string next =
        arc.token_index + 1 < static_cast<int>(lat.surfaces.size())
            ? lat.surfaces[arc.token_index + 1]
            : std::string("</s>");
    feats.push_back("pwt=" + prev + "|" + tag);
    feats.push_back("nwt=" + next + "|" + tag);
  }
  return feats;
}

inline std::string bigram_feature(const std::string& prev_tag,
                                  const std::string& tag) {
  return "bg=" + prev_tag + "|" + tag;
}

inline double arc_score(const PerceptronModel& model, const Lattice& lat,
                        const Arc& arc) {
  double s = 0.0;
  for (const auto& f : arc_features(model, lat, arc)) s += model.weight(f);
  return s;
}

// Path score: sum of arc features plus tag-bigram features along the path
// (first morpheme pairs with the sentence-start tag).
inline double path_score(const PerceptronModel& model, const Lattice& lat,
                         const LatticePath& path) {
  std::map<int, const Arc*> by_id;
  for (const auto& a : lat.arcs) by_id[a.id] = &a;
  double s = 0.0;
  std::string prev = "<s>";
  for (int id : path.arc_ids) {
    const Arc* a = by_id.at(id);
    s += arc_score(model, lat, *a);
    s += model.weight(bigram_feature(prev, a->morpheme.tag));
    prev = a->morpheme.tag;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Viterbi decoding
// ---------------------------------------------------------------------------

// Highest-scoring source->sink path; ties broken by lexicographically
// smallest arc-id sequence. Backward DP computes suffix-optimal scores per
// (node, previous tag); greedy extraction then picks the smallest arc id
// among optimal continuations at each step.
inline LatticePath perceptron_decode(const PerceptronModel& model,
                                     const Lattice& lat) {
  std::vector<std::vector<const Arc*>> out(lat.num_nodes);
  for (const auto& a : lat.arcs) out[a.from_node].push_back(&a);
  for (auto& v : out)
    std::sort(v.begin(), v.end(),
              [](const Arc* x, const Arc* y) { return x->id < y->id; });

  // Tags that can precede each node.
  std::vector<std::vector<std::string>> prev_tags(lat.num_nodes);
  prev_tags[lat.source()].push_back("<s>");
  for (const auto& a : lat.arcs) {
    auto& v = prev_tags[a.to_node];
    if (std::find(v.begin(), v.end(), a.morpheme.tag) == v.end())
      v.push_back(a.morpheme.tag);
  }

  // Cache arc scores once.
  std::vector<double> ascore(lat.arcs.size());
  std::map<int, const Arc*> by_id;
  for (const auto& a : lat.arcs) {
    ascore[a.id] = arc_score(model, lat, a);
    by_id[a.id] = &a;
  }

  // best[node][prev_tag] = best suffix score from node to sink.
  std::vector<std::map<std::string, double>> best(lat.num_nodes);
  for (int n = lat.num_nodes - 1; n >= 0; --n) {
    for (const auto& pt : prev_tags[n]) {
      if (n == lat.sink()) {
        best[n][pt] = 0.0;
        continue;
      }
      double b = -std::numeric_limits<double>::infinity();
      for (const Arc* a : out[n]) {
        double v = ascore[a->id] +
                   model.weight(bigram_feature(pt, a->morpheme.tag)) +
                   best[a->to_node].at(a->morpheme.tag);
        b = std::max(b, v);
      }
      best[n][pt] = b;
    }
  }
  if (lat.sink() != lat.num_nodes - 1)
    throw std::runtime_error("decode: malformed lattice");

  LatticePath path;
  int node = lat.source();
  std::string pt = "<s>";
  while (node != lat.sink()) {
    double target = best[node].at(pt);
    const Arc* chosen = nullptr;
    for (const Arc* a : out[node]) {
      double v = ascore[a->id] +
                 model.weight(bigram_feature(pt, a->morpheme.tag)) +
                 best[a->to_node].at(a->morpheme.tag);
      if (v == target) { // exact: same fp expression as in the DP
        chosen = a;
        break;
      }
    }
    if (!chosen)
      throw std::runtime_error("decode: no optimal continuation (internal)");
    path.arc_ids.push_back(chosen->id);
    pt = chosen->morpheme.tag;
    node = chosen->to_node;
  }
  return path;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace detail {

inline void accumulate_path_features(
    const PerceptronModel& model, const Lattice& lat, const LatticePath& path,
    double sign, std::unordered_map<std::string, double>& delta) {
  std::map<int, const Arc*> by_id;
  for (const auto& a : lat.arcs) by_id[a.id] = &a;
  std::string prev = "<s>";
  for (int id : path.arc_ids) {
    const Arc* a = by_id.at(id);
    for (const auto& f : arc_features(model, lat, *a)) delta[f] += sign;
    delta[bigram_feature(prev, a->morpheme.tag)] += sign;
    prev = a->morpheme.tag;
  }
}

} // namespace detail

// Standard averaged-perceptron training: gold-path features minus
// predicted-path features, sentence order shuffled per epoch.
inline PerceptronModel perceptron_train(const Corpus& corpus,
                                        const Lexicon& lex, int epochs,
                                        Rng& rng,
                                        const std::vector<std::string>*
                                            templates = nullptr) {
  PerceptronModel model;
  if (templates) model.templates = *templates;

  struct Item {
    Lattice lattice;
    LatticePath gold_path;
  };
  std::vector<Item> items;
  for (const auto& sent : corpus.sentences) {
    if (!sent.has_gold())
      throw std::runtime_error("perceptron_train: sentence without gold");
    Lattice lat = inject_gold(build_lattice(sent, lex), sent.gold);
    auto gold_path = align_gold(lat, sent.gold);
    if (!gold_path)
      throw std::runtime_error("perceptron_train: gold path missing after injection");
    items.push_back({std::move(lat), *gold_path});
  }

  std::vector<size_t> order(items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t i : order) {
      ++model.timestep;
      const Item& item = items[i];
      LatticePath pred = perceptron_decode(model, item.lattice);
      if (pred == item.gold_path) continue;
      // Feature-identical paths need no update either.
      std::unordered_map<std::string, double> delta;
      detail::accumulate_path_features(model, item.lattice, item.gold_path,
                                       +1.0, delta);
      detail::accumulate_path_features(model, item.lattice, pred, -1.0, delta);
      for (const auto& [key, d] : delta)
        if (d != 0.0) model.update(key, d);
    }
  }
  model.use_average = true;
  return model;
}

// Predict analyses for a sentence from its lexicon lattice (no injection).
inline std::vector<Analysis> perceptron_predict(const PerceptronModel& model,
                                                const Sentence& sent,
                                                const Lexicon& lex) {
  Lattice lat = build_lattice(sent, lex);
  return path_analyses(lat, perceptron_decode(model, lat));
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

inline Checkpoint perceptron_to_checkpoint(const PerceptronModel& model) {
  Checkpoint ckpt;
  ckpt.config.set("model", "perceptron");
  ckpt.config.set("format", "1");
  ckpt.config.set_int("timestep", model.timestep);
  ckpt.config.set("use_average", model.use_average ? "1" : "0");
  std::string tpl;
  for (const auto& t : model.templates) {
    if (!tpl.empty()) tpl += ',';
    tpl += t;
  }
  ckpt.config.set("templates", tpl);
  std::vector<std::string> keys;
  keys.reserve(model.weights.size());
  for (const auto& [k, e] : model.weights) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  Tensor values({keys.size(), 3});
  for (size_t i = 0; i < keys.size(); ++i) {
    const auto& e = model.weights.at(keys[i]);
    values.at(i, 0) = e.w;
    values.at(i, 1) = e.acc;
    values.at(i, 2) = static_cast<double>(e.last);
  }
  ckpt.vocabs["features"] = std::move(keys);
  ckpt.tensors["weights"] = std::move(values);
  return ckpt;
}

inline PerceptronModel perceptron_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.config.get("model", "") != "perceptron")
    throw std::runtime_error("checkpoint is not a perceptron model");
  PerceptronModel model;
  model.timestep = ckpt.config.get_int("timestep", 0);
  model.use_average = ckpt.config.get("use_average", "0") == "1";
  model.templates.clear();
  std::istringstream ts(ckpt.config.get("templates", ""));
  std::string item;
  while (std::getline(ts, item, ',')) model.templates.push_back(item);
  const auto& keys = ckpt.vocabs.at("features");
  const Tensor& values = ckpt.tensors.at("weights");
  if (values.rows() != keys.size() || values.cols() != 3)
    throw std::runtime_error("perceptron checkpoint weight table malformed");
  for (size_t i = 0; i < keys.size(); ++i)
    model.weights[keys[i]] = {values.at(i, 0), values.at(i, 1),
                              static_cast<long>(values.at(i, 2))};
  return model;
}

} // namespace mlt
