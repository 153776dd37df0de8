#pragma once

// Lattice pointer network: a bidirectional encoder reads the linearized
// arcs, and a recurrent decoder selects one outgoing arc at a time by
// attending over the arc encodings, with the softmax masked to arcs that
// leave the current node. Copying an arc is the only decoding action, so
// every decode is a valid source-to-sink path by construction.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlt/config.hpp"
#include "mlt/core.hpp"
#include "mlt/formats.hpp"
#include "mlt/lattice.hpp"
#include "mlt/metrics.hpp"
#include "mlt/nn.hpp"
#include "mlt/rng.hpp"
#include "mlt/taggers/common.hpp"
#include "mlt/tensor.hpp"

namespace mlt {

class PointerModel {
 public:
  // Hyperparameters: ptr_form_dim, ptr_tag_dim, ptr_pos_dim, ptr_hidden,
  // ptr_max_positions, ptr_lr, ptr_epochs, ptr_patience.
  PointerModel(const std::vector<Lattice>& train_lattices, const Config& cfg,
               Rng& rng)
      : form_dim_(cfg.get_int("ptr_form_dim", 12)),
        tag_dim_(cfg.get_int("ptr_tag_dim", 8)),
        pos_dim_(cfg.get_int("ptr_pos_dim", 4)),
        hidden_(cfg.get_int("ptr_hidden", 16)),
        max_positions_(cfg.get_int("ptr_max_positions", 32)) {
    forms_.push_back("<unk>");
    tags_.push_back("<unk>");
    for (const auto& lat : train_lattices)
      for (const auto& arc : lat.arcs) {
        if (!form_index_.count(arc.morpheme.form)) {
          form_index_[arc.morpheme.form] = forms_.size();
          forms_.push_back(arc.morpheme.form);
        }
        if (!tag_index_.count(arc.morpheme.tag)) {
          tag_index_[arc.morpheme.tag] = tags_.size();
          tags_.push_back(arc.morpheme.tag);
        }
      }
    store_->init_embedding("form_emb", forms_.size(), form_dim_, rng);
    store_->init_embedding("tag_emb", tags_.size(), tag_dim_, rng);
    store_->init_embedding("pos_emb", max_positions_, pos_dim_, rng);
    enc_.emplace(*store_, "enc", form_dim_ + tag_dim_ + pos_dim_, hidden_, &rng);
    dec_.emplace(*store_, "dec", 2 * hidden_, 2 * hidden_, &rng);
    store_->init_glorot("q.W", 2 * hidden_, 2 * hidden_, rng);
    store_->init_zeros("q.b", 2 * hidden_);
    store_->init_zeros("dec.start", 2 * hidden_);
  }

  explicit PointerModel(const Checkpoint& ckpt) {
    if (ckpt.config.get("model", "") != "pointer")
      throw std::runtime_error("checkpoint is not a pointer model");
    form_dim_ = ckpt.config.get_int("ptr_form_dim", 0);
    tag_dim_ = ckpt.config.get_int("ptr_tag_dim", 0);
    pos_dim_ = ckpt.config.get_int("ptr_pos_dim", 0);
    hidden_ = ckpt.config.get_int("ptr_hidden", 0);
    max_positions_ = ckpt.config.get_int("ptr_max_positions", 0);
    forms_ = ckpt.vocabs.at("forms");
    tags_ = ckpt.vocabs.at("tags");
    for (size_t i = 0; i < forms_.size(); ++i) form_index_[forms_[i]] = i;
    for (size_t i = 0; i < tags_.size(); ++i) tag_index_[tags_[i]] = i;
    for (const auto& [name, t] : ckpt.tensors)
      store_->param(name, t.shape).data = t.data;
    enc_.emplace(*store_, "enc", form_dim_ + tag_dim_ + pos_dim_, hidden_);
    dec_.emplace(*store_, "dec", 2 * hidden_, 2 * hidden_);
  }

  Checkpoint to_checkpoint() const {
    Checkpoint ckpt;
    ckpt.config.set("model", "pointer");
    ckpt.config.set_int("ptr_form_dim", static_cast<long>(form_dim_));
    ckpt.config.set_int("ptr_tag_dim", static_cast<long>(tag_dim_));
    ckpt.config.set_int("ptr_pos_dim", static_cast<long>(pos_dim_));
    ckpt.config.set_int("ptr_hidden", static_cast<long>(hidden_));
    ckpt.config.set_int("ptr_max_positions", static_cast<long>(max_positions_));
    ckpt.vocabs["forms"] = forms_;
    ckpt.vocabs["tags"] = tags_;
    for (const auto& [name, t] : store_->params()) ckpt.tensors[name] = t;
    return ckpt;
  }

  ParamStore& store() { return *store_; }

  // ---------------------------------------------------------------------
  // Encoder
  // ---------------------------------------------------------------------

  struct Encoded {
    std::vector<int> order;          // arc ids in linearized order
    std::map<int, size_t> position;  // arc id -> encoder position
    std::vector<std::array<size_t, 3>> input_ids; // form, tag, pos per arc
    BiLstmCache cache;
    std::vector<Vec> enc; // one 2H vector per position
  };

  // `dropout_rng` enables form dropout: each arc form is replaced by the
  // unknown id with probability `form_dropout`, so the model learns to fall
  // back on tag and context for out-of-lexicon forms.
  void encode(const Lattice& lat, Encoded& e, Rng* dropout_rng = nullptr,
              double form_dropout = 0.0) const {
    e = Encoded{};
    const Tensor& fE = store_->params().at("form_emb");
    const Tensor& tE = store_->params().at("tag_emb");
    const Tensor& pE = store_->params().at("pos_emb");
    std::vector<Vec> inputs;
    for (const Arc& arc : linearize(lat)) {
      e.position[arc.id] = e.order.size();
      e.order.push_back(arc.id);
      size_t fid = lookup(form_index_, arc.morpheme.form);
      if (dropout_rng && dropout_rng->bernoulli(form_dropout)) fid = 0;
      size_t tid = lookup(tag_index_, arc.morpheme.tag);
      size_t pid = std::min<size_t>(arc.token_index, max_positions_ - 1);
      e.input_ids.push_back({fid, tid, pid});
      Vec x = embedding_lookup(fE, fid);
      Vec xt = embedding_lookup(tE, tid);
      Vec xp = embedding_lookup(pE, pid);
      x.insert(x.end(), xt.begin(), xt.end());
      x.insert(x.end(), xp.begin(), xp.end());
      inputs.push_back(std::move(x));
    }
    e.enc = enc_->forward(inputs, e.cache);
  }

  void encode_backward(const Encoded& e, const std::vector<Vec>& denc) {
    std::vector<Vec> dxs = enc_->backward(e.cache, denc);
    for (size_t p = 0; p < dxs.size(); ++p) {
      auto [fid, tid, pid] = e.input_ids[p];
      Vec df(dxs[p].begin(), dxs[p].begin() + form_dim_);
      Vec dt(dxs[p].begin() + form_dim_,
             dxs[p].begin() + form_dim_ + tag_dim_);
      Vec dp(dxs[p].begin() + form_dim_ + tag_dim_, dxs[p].end());
      embedding_backward(store_->grad("form_emb"), fid, df);
      embedding_backward(store_->grad("tag_emb"), tid, dt);
      embedding_backward(store_->grad("pos_emb"), pid, dp);
    }
  }

  // ---------------------------------------------------------------------
  // Decoder
  // ---------------------------------------------------------------------

  // Pointer logits for one step: scaled dot products query . enc_p.
  Vec step_logits(const Vec& query, const Encoded& e) const {
    double scale = 1.0 / std::sqrt(static_cast<double>(query.size()));
    Vec logits(e.enc.size(), 0.0);
    for (size_t p = 0; p < e.enc.size(); ++p) {
      double s = 0.0;
      for (size_t k = 0; k < query.size(); ++k) s += query[k] * e.enc[p][k];
      logits[p] = s * scale;
    }
    return logits;
  }

  // Teacher-forced negative log-likelihood of the gold path; fills
  // gradients when `backward` is set.
  double loss(const Lattice& lat, const LatticePath& gold, bool backward,
              Rng* dropout_rng = nullptr, double form_dropout = 0.0) {
    Encoded e;
    encode(lat, e, dropout_rng, form_dropout);
    std::map<int, const Arc*> by_id;
    for (const auto& arc : lat.arcs) by_id[arc.id] = &arc;

    const Tensor& qW = store_->params().at("q.W");
    const Tensor& qb = store_->params().at("q.b");
    const Tensor& start = store_->params().at("dec.start");

    size_t n = gold.arc_ids.size();
    std::vector<LstmStepCache> caches(n);
    std::vector<Vec> hs(n), queries(n), dlogits(n);
    double total = 0.0;
    LstmState state = dec_->initial_state();
    int node = lat.source();
    for (size_t t = 0; t < n; ++t) {
      const Vec input = t == 0
          ? Vec(start.data.begin(), start.data.end())
          : e.enc[e.position.at(gold.arc_ids[t - 1])];
      state = dec_->step(input, state, caches[t]);
      hs[t] = state.h;
      queries[t] = linear(qW, qb, state.h);
      Vec logits = step_logits(queries[t], e);
      std::vector<char> mask(e.enc.size(), 0);
      for (size_t p = 0; p < e.order.size(); ++p)
        if (by_id.at(e.order[p])->from_node == node) mask[p] = 1;
      const Arc* garc = by_id.at(gold.arc_ids[t]);
      if (garc->from_node != node)
        throw std::runtime_error("pointer loss: gold path is not connected");
      auto ce = softmax_cross_entropy(logits, e.position.at(garc->id), mask);
      total += ce.loss;
      dlogits[t] = ce.dlogits;
      node = garc->to_node;
    }
    if (node != lat.sink())
      throw std::runtime_error("pointer loss: gold path does not reach sink");
    if (!backward) return total;

    std::vector<Vec> denc(e.enc.size(), Vec(2 * hidden_, 0.0));
    double scale = 1.0 / std::sqrt(static_cast<double>(2 * hidden_));
    Vec dh(2 * hidden_, 0.0), dc(2 * hidden_, 0.0);
    for (size_t t = n; t-- > 0;) {
      Vec dq(2 * hidden_, 0.0);
      for (size_t p = 0; p < e.enc.size(); ++p) {
        double dl = dlogits[t][p];
        if (dl == 0.0) continue;
        for (size_t k = 0; k < dq.size(); ++k) {
          dq[k] += dl * e.enc[p][k] * scale;
          denc[p][k] += dl * queries[t][k] * scale;
        }
      }
      Vec dh_t = linear_backward(qW, store_->grad("q.W"), store_->grad("q.b"),
                                 hs[t], dq);
      for (size_t k = 0; k < dh.size(); ++k) dh[k] += dh_t[k];
      Vec dx = dec_->step_backward(caches[t], dh, dc);
      if (t == 0) {
        Tensor& dstart = store_->grad("dec.start");
        for (size_t k = 0; k < dx.size(); ++k) dstart.at(k) += dx[k];
      } else {
        Vec& target = denc[e.position.at(gold.arc_ids[t - 1])];
        for (size_t k = 0; k < dx.size(); ++k) target[k] += dx[k];
      }
    }
    encode_backward(e, denc);
    return total;
  }

  // Fraction of gold-path steps where the masked argmax (given the gold
  // prefix) picks the gold arc.
  double teacher_forced_accuracy(const Lattice& lat,
                                 const LatticePath& gold) const {
    Encoded e;
    encode(lat, e);
    std::map<int, const Arc*> by_id;
    for (const auto& arc : lat.arcs) by_id[arc.id] = &arc;
    const Tensor& qW = store_->params().at("q.W");
    const Tensor& qb = store_->params().at("q.b");
    const Tensor& start = store_->params().at("dec.start");
    LstmState state = dec_->initial_state();
    int node = lat.source();
    long hits = 0;
    for (size_t t = 0; t < gold.arc_ids.size(); ++t) {
      LstmStepCache cache;
      const Vec input = t == 0
          ? Vec(start.data.begin(), start.data.end())
          : e.enc[e.position.at(gold.arc_ids[t - 1])];
      state = dec_->step(input, state, cache);
      Vec logits = step_logits(linear(qW, qb, state.h), e);
      const Arc* best = nullptr;
      double best_score = 0.0;
      for (const auto& arc : lat.arcs) {
        if (arc.from_node != node) continue;
        double s = logits[e.position.at(arc.id)];
        if (!best || s > best_score || (s == best_score && arc.id < best->id)) {
          best = &arc;
          best_score = s;
        }
      }
      const Arc* garc = by_id.at(gold.arc_ids[t]);
      if (best && best->id == garc->id) ++hits;
      node = garc->to_node;
    }
    return gold.arc_ids.empty()
               ? 1.0
               : static_cast<double>(hits) / gold.arc_ids.size();
  }

  // Greedy decode: from the source, repeatedly copy the best-scoring
  // outgoing arc (smallest arc id on ties) until the sink.
  LatticePath decode(const Lattice& lat) const {
    Encoded e;
    encode(lat, e);
    std::vector<std::vector<const Arc*>> outgoing(lat.num_nodes);
    for (const auto& arc : lat.arcs)
      outgoing[arc.from_node].push_back(&arc);
    for (auto& v : outgoing)
      std::sort(v.begin(), v.end(),
                [](const Arc* a, const Arc* b) { return a->id < b->id; });

    const Tensor& qW = store_->params().at("q.W");
    const Tensor& qb = store_->params().at("q.b");
    const Tensor& start = store_->params().at("dec.start");

    LatticePath path;
    LstmState state = dec_->initial_state();
    int node = lat.source();
    bool first = true;
    while (node != lat.sink()) {
      LstmStepCache cache;
      const Vec input = first
          ? Vec(start.data.begin(), start.data.end())
          : e.enc[e.position.at(path.arc_ids.back())];
      first = false;
      state = dec_->step(input, state, cache);
      Vec logits = step_logits(linear(qW, qb, state.h), e);
      const Arc* best = nullptr;
      double best_score = 0.0;
      for (const Arc* arc : outgoing[node]) {
        double s = logits[e.position.at(arc->id)];
        if (!best || s > best_score) {
          best = arc;
          best_score = s;
        }
      }
      if (!best)
        throw std::runtime_error("pointer decode: dead-end node in lattice");
      path.arc_ids.push_back(best->id);
      node = best->to_node;
    }
    return path;
  }

 private:
  static size_t lookup(const std::map<std::string, size_t>& index,
                       const std::string& key) {
    auto it = index.find(key);
    return it == index.end() ? 0 : it->second;
  }

  size_t form_dim_, tag_dim_, pos_dim_, hidden_, max_positions_;
  std::vector<std::string> forms_, tags_;
  std::map<std::string, size_t> form_index_, tag_index_;
  std::unique_ptr<ParamStore> store_ = std::make_unique<ParamStore>();
  std::optional<BiLstm> enc_;
  std::optional<Lstm> dec_;
};

// ---------------------------------------------------------------------------
// Training with teacher forcing and early stopping on dev Seg/POS F1
// ---------------------------------------------------------------------------

inline Lattice pointer_input_lattice(const Sentence& sent, const Lexicon& lex,
                                     Regime regime) {
  require_compatible("pointer", regime);
  return regime == Regime::Oracle ? oracle_lattice(sent)
                                  : build_lattice(sent, lex);
}

inline std::vector<Analysis> pointer_predict(const PointerModel& model,
                                             const Sentence& sent,
                                             const Lexicon& lex,
                                             Regime regime) {
  Lattice lat = pointer_input_lattice(sent, lex, regime);
  return path_analyses(lat, model.decode(lat));
}

inline PointerModel pointer_train(const Corpus& train, const Corpus& dev,
                                  const Lexicon& lex, Regime regime,
                                  const Config& cfg, Rng& rng) {
  require_compatible("pointer", regime);
  std::vector<Lattice> lattices;
  std::vector<LatticePath> gold_paths;
  for (const auto& sent : train.sentences) {
    Lattice lat = pointer_input_lattice(sent, lex, regime);
    if (regime == Regime::RawLattices) lat = inject_gold(lat, sent.gold);
    auto path = align_gold(lat, sent.gold);
    if (!path)
      throw std::runtime_error("pointer_train: gold path missing from lattice");
    lattices.push_back(std::move(lat));
    gold_paths.push_back(*path);
  }

  PointerModel model(lattices, cfg, rng);
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.get_real("ptr_lr", 5e-3);
  Adam opt(adam_cfg);
  int epochs = static_cast<int>(cfg.get_int("ptr_epochs", 10));
  int patience = static_cast<int>(cfg.get_int("ptr_patience", 3));
  double form_dropout = cfg.get_real("ptr_form_dropout", 0.1);

  std::vector<std::vector<Analysis>> dev_gold;
  for (const auto& sent : dev.sentences) dev_gold.push_back(sent.gold);

  std::vector<size_t> order(lattices.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  double best_f1 = -1.0;
  int stale = 0;
  Checkpoint best_ckpt;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t i : order) {
      model.store().zero_grads();
      model.loss(lattices[i], gold_paths[i], true, &rng, form_dropout);
      opt.step(model.store());
    }
    if (dev.sentences.empty()) continue;
    std::vector<std::vector<Analysis>> dev_pred;
    for (const auto& sent : dev.sentences)
      dev_pred.push_back(pointer_predict(model, sent, lex, regime));
    double f1 = seg_pos_f1(dev_gold, dev_pred).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      stale = 0;
      best_ckpt = model.to_checkpoint();
    } else if (++stale >= patience) {
      break;
    }
  }
  if (best_f1 >= 0.0) return PointerModel(best_ckpt);
  return model;
}

} // namespace mlt
