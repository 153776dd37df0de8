#pragma once

// LSTM-CRF multi-tagger: one complex tag (multi-tag) per token, predicted
// over word embeddings concatenated with a character bidirectional encoder
// (the +Char variant), scored by a linear-chain CRF with start/stop states.
// Forward algorithm in log space; hand-written backward pass throughout.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlt/config.hpp"
#include "mlt/core.hpp"
#include "mlt/formats.hpp"
#include "mlt/nn.hpp"
#include "mlt/rng.hpp"
#include "mlt/tensor.hpp"

namespace mlt {

// Per-token segmentation input: the segment forms the model may condition
// on. Raw-token regimes pass a single element, the surface.
using TokenSegments = std::vector<std::string>;
using SentenceSegments = std::vector<TokenSegments>;

inline SentenceSegments raw_token_segments(const Sentence& sent) {
  SentenceSegments segs;
  for (const auto& tok : sent.tokens) segs.push_back({tok.surface});
  return segs;
}

inline SentenceSegments gold_segments(const Sentence& sent) {
  SentenceSegments segs;
  for (const auto& a : sent.gold) {
    TokenSegments t;
    for (const auto& m : a.morphemes) t.push_back(m.form);
    segs.push_back(t);
  }
  return segs;
}

inline SentenceSegments analyses_segments(const std::vector<Analysis>& as) {
  SentenceSegments segs;
  for (const auto& a : as) {
    TokenSegments t;
    for (const auto& m : a.morphemes) t.push_back(m.form);
    segs.push_back(t);
  }
  return segs;
}

class CrfModel {
 public:
  // Hyperparameters read from config: crf_word_dim, crf_char_dim,
  // crf_char_hidden, crf_hidden, crf_lr, crf_epochs.
  CrfModel(const Corpus& train, const Config& cfg, Rng& rng)
      : word_dim_(cfg.get_int("crf_word_dim", 32)),
        char_dim_(cfg.get_int("crf_char_dim", 16)),
        char_hidden_(cfg.get_int("crf_char_hidden", 16)),
        hidden_(cfg.get_int("crf_hidden", 32)) {
    labels_ = train.multitag_inventory;
    if (labels_.empty())
      throw std::runtime_error("crf: training corpus has no multi-tag inventory");
    build_vocabs(train);
    size_t L = labels_.size();
    store_->init_embedding("word_emb", words_.size(), word_dim_, rng);
    store_->init_embedding("char_emb", chars_.size(), char_dim_, rng);
    char_enc_.emplace(*store_, "char", char_dim_, char_hidden_, &rng);
    sent_enc_.emplace(*store_, "sent", word_dim_ + 2 * char_hidden_, hidden_,
                      &rng);
    store_->init_glorot("emit.W", L, 2 * hidden_, rng);
    store_->init_zeros("emit.b", L);
    store_->param("trans", {L + 2, L + 2}); // start = L, stop = L + 1
  }

  // Reconstruction from a checkpoint.
  explicit CrfModel(const Checkpoint& ckpt) {
    if (ckpt.config.get("model", "") != "crf")
      throw std::runtime_error("checkpoint is not a crf model");
    word_dim_ = ckpt.config.get_int("crf_word_dim", 0);
    char_dim_ = ckpt.config.get_int("crf_char_dim", 0);
    char_hidden_ = ckpt.config.get_int("crf_char_hidden", 0);
    hidden_ = ckpt.config.get_int("crf_hidden", 0);
    labels_ = ckpt.vocabs.at("labels");
    words_ = ckpt.vocabs.at("words");
    const auto& chars = ckpt.vocabs.at("chars");
    for (const auto& c : chars) chars_.push_back(c.empty() ? '\0' : c[0]);
    for (size_t i = 0; i < words_.size(); ++i) word_index_[words_[i]] = i;
    for (size_t i = 0; i < chars_.size(); ++i) char_index_[chars_[i]] = i;
    for (const auto& [name, t] : ckpt.tensors)
      store_->param(name, t.shape).data = t.data;
    char_enc_.emplace(*store_, "char", char_dim_, char_hidden_);
    sent_enc_.emplace(*store_, "sent", word_dim_ + 2 * char_hidden_, hidden_);
  }

  Checkpoint to_checkpoint() const {
    Checkpoint ckpt;
    ckpt.config.set("model", "crf");
    ckpt.config.set_int("crf_word_dim", static_cast<long>(word_dim_));
    ckpt.config.set_int("crf_char_dim", static_cast<long>(char_dim_));
    ckpt.config.set_int("crf_char_hidden", static_cast<long>(char_hidden_));
    ckpt.config.set_int("crf_hidden", static_cast<long>(hidden_));
    ckpt.vocabs["labels"] = labels_;
    ckpt.vocabs["words"] = words_;
    std::vector<std::string> chars;
    for (char c : chars_) chars.push_back(std::string(1, c));
    ckpt.vocabs["chars"] = chars;
    for (const auto& [name, t] : store_->params()) ckpt.tensors[name] = t;
    return ckpt;
  }

  const std::vector<std::string>& labels() const { return labels_; }
  ParamStore& store() { return *store_; }

  // ---------------------------------------------------------------------
  // Forward pass to emission scores
  // ---------------------------------------------------------------------

  struct Forward {
    std::vector<std::vector<size_t>> char_ids; // per token
    std::vector<size_t> word_ids;
    std::vector<BiLstmCache> char_caches;
    std::vector<std::vector<Vec>> char_outs;
    std::vector<Vec> token_reps;
    BiLstmCache sent_cache;
    std::vector<Vec> states;    // sentence encoder outputs
    std::vector<Vec> emissions; // per token, one logit per label
  };

  // `dropout_rng` enables word dropout: each token's word id is replaced
  // by the unknown id with probability `word_dropout`, so the model learns
  // a usable fallback for out-of-vocabulary words.
  void emissions(const SentenceSegments& segs, Forward& fw,
                 Rng* dropout_rng = nullptr, double word_dropout = 0.0) const {
    fw = Forward{};
    for (const auto& seg : segs) {
      size_t wid = word_id(word_key(seg));
      if (dropout_rng && dropout_rng->bernoulli(word_dropout)) wid = 0;
      fw.word_ids.push_back(wid);
      fw.char_ids.push_back(char_ids_of(seg));
    }
    const Tensor& wE = store_->params().at("word_emb");
    const Tensor& cE = store_->params().at("char_emb");
    fw.char_caches.resize(segs.size());
    fw.char_outs.resize(segs.size());
    for (size_t t = 0; t < segs.size(); ++t) {
      std::vector<Vec> cx;
      for (size_t id : fw.char_ids[t]) cx.push_back(embedding_lookup(cE, id));
      fw.char_outs[t] = char_enc_->forward(cx, fw.char_caches[t]);
      Vec rep = embedding_lookup(wE, fw.word_ids[t]);
      // final forward state ++ final backward state
      const Vec& last = fw.char_outs[t].back();
      const Vec& first = fw.char_outs[t].front();
      for (size_t k = 0; k < char_hidden_; ++k) rep.push_back(last[k]);
      for (size_t k = 0; k < char_hidden_; ++k)
        rep.push_back(first[char_hidden_ + k]);
      fw.token_reps.push_back(std::move(rep));
    }
    fw.states = sent_enc_->forward(fw.token_reps, fw.sent_cache);
    const Tensor& W = store_->params().at("emit.W");
    const Tensor& b = store_->params().at("emit.b");
    for (const auto& h : fw.states) fw.emissions.push_back(linear(W, b, h));
  }

  // Backprop from per-token emission gradients into all parameters.
  void emissions_backward(const Forward& fw,
                          const std::vector<Vec>& demissions) {
    const Tensor& W = store_->params().at("emit.W");
    std::vector<Vec> dstates;
    for (size_t t = 0; t < fw.states.size(); ++t)
      dstates.push_back(linear_backward(W, store_->grad("emit.W"),
                                        store_->grad("emit.b"), fw.states[t],
                                        demissions[t]));
    std::vector<Vec> dreps = sent_enc_->backward(fw.sent_cache, dstates);
    for (size_t t = 0; t < dreps.size(); ++t) {
      Vec dword(dreps[t].begin(), dreps[t].begin() + word_dim_);
      embedding_backward(store_->grad("word_emb"), fw.word_ids[t], dword);
      size_t n = fw.char_outs[t].size();
      std::vector<Vec> dchar_out(n, Vec(2 * char_hidden_, 0.0));
      for (size_t k = 0; k < char_hidden_; ++k) {
        dchar_out[n - 1][k] = dreps[t][word_dim_ + k];
        dchar_out[0][char_hidden_ + k] = dreps[t][word_dim_ + char_hidden_ + k];
      }
      std::vector<Vec> dcx = char_enc_->backward(fw.char_caches[t], dchar_out);
      for (size_t i = 0; i < fw.char_ids[t].size(); ++i)
        embedding_backward(store_->grad("char_emb"), fw.char_ids[t][i], dcx[i]);
    }
  }

  // ---------------------------------------------------------------------
  // CRF layer
  // ---------------------------------------------------------------------

  size_t label_id(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end())
      throw std::runtime_error("multi-tag label not in training inventory: " +
                               label);
    return static_cast<size_t>(it - labels_.begin());
  }

  // Log-partition over all label sequences (forward algorithm, log space).
  double log_partition(const std::vector<Vec>& emissions) const {
    const Tensor& T = store_->params().at("trans");
    size_t L = labels_.size();
    size_t start = L, stop = L + 1;
    std::vector<Vec> alpha(emissions.size(), Vec(L, 0.0));
    for (size_t l = 0; l < L; ++l)
      alpha[0][l] = T.at(start, l) + emissions[0][l];
    for (size_t t = 1; t < emissions.size(); ++t)
      for (size_t l2 = 0; l2 < L; ++l2) {
        double m = -1e300;
        for (size_t l1 = 0; l1 < L; ++l1)
          m = std::max(m, alpha[t - 1][l1] + T.at(l1, l2));
        double acc = 0;
        for (size_t l1 = 0; l1 < L; ++l1)
          acc += std::exp(alpha[t - 1][l1] + T.at(l1, l2) - m);
        alpha[t][l2] = m + std::log(acc) + emissions[t][l2];
      }
    double m = -1e300;
    size_t last = emissions.size() - 1;
    for (size_t l = 0; l < L; ++l)
      m = std::max(m, alpha[last][l] + T.at(l, stop));
    double acc = 0;
    for (size_t l = 0; l < L; ++l)
      acc += std::exp(alpha[last][l] + T.at(l, stop) - m);
    return m + std::log(acc);
  }

  double sequence_score(const std::vector<Vec>& emissions,
                        const std::vector<size_t>& y) const {
    const Tensor& T = store_->params().at("trans");
    size_t L = labels_.size();
    double s = T.at(L, y[0]) + emissions[0][y[0]];
    for (size_t t = 1; t < y.size(); ++t)
      s += T.at(y[t - 1], y[t]) + emissions[t][y[t]];
    s += T.at(y.back(), L + 1);
    return s;
  }

  // loss = logZ - score(gold); accumulates gradients for everything.
  double loss(const SentenceSegments& segs, const std::vector<size_t>& gold,
              Rng* dropout_rng = nullptr, double word_dropout = 0.0) {
    Forward fw;
    emissions(segs, fw, dropout_rng, word_dropout);
    return loss_from_forward(fw, gold, true);
  }

  // Viterbi decode to label ids; ties broken by smallest label index.
  std::vector<size_t> decode(const SentenceSegments& segs) const {
    Forward fw;
    emissions(segs, fw);
    return viterbi(fw.emissions);
  }

  std::vector<size_t> viterbi(const std::vector<Vec>& emissions) const {
    const Tensor& T = store_->params().at("trans");
    size_t L = labels_.size();
    size_t n = emissions.size();
    std::vector<Vec> delta(n, Vec(L, 0.0));
    std::vector<std::vector<size_t>> back(n, std::vector<size_t>(L, 0));
    for (size_t l = 0; l < L; ++l) delta[0][l] = T.at(L, l) + emissions[0][l];
    for (size_t t = 1; t < n; ++t)
      for (size_t l2 = 0; l2 < L; ++l2) {
        double best = -1e300;
        size_t arg = 0;
        for (size_t l1 = 0; l1 < L; ++l1) {
          double v = delta[t - 1][l1] + T.at(l1, l2);
          if (v > best) {
            best = v;
            arg = l1;
          }
        }
        delta[t][l2] = best + emissions[t][l2];
        back[t][l2] = arg;
      }
    double best = -1e300;
    size_t arg = 0;
    for (size_t l = 0; l < L; ++l) {
      double v = delta[n - 1][l] + T.at(l, L + 1);
      if (v > best) {
        best = v;
        arg = l;
      }
    }
    std::vector<size_t> y(n);
    y[n - 1] = arg;
    for (size_t t = n - 1; t > 0; --t) y[t - 1] = back[t][y[t]];
    return y;
  }

  // Decode straight to multi-tags.
  std::vector<MultiTag> predict(const SentenceSegments& segs) const {
    std::vector<MultiTag> out;
    for (size_t id : decode(segs)) out.push_back(parse_label(labels_[id]));
    return out;
  }

  double loss_from_forward(Forward& fw, const std::vector<size_t>& gold,
                           bool backward) {
    size_t L = labels_.size();
    size_t n = fw.emissions.size();
    if (gold.size() != n)
      throw std::runtime_error("crf loss: gold length mismatch");
    double logZ = log_partition(fw.emissions);
    double gold_score = sequence_score(fw.emissions, gold);
    double value = logZ - gold_score;
    if (!backward) return value;

    const Tensor& T = store_->params().at("trans");
    Tensor& dT = store_->grad("trans");
    size_t start = L, stop = L + 1;

    // Forward-backward marginals in log space.
    std::vector<Vec> alpha(n, Vec(L, 0.0)), beta(n, Vec(L, 0.0));
    for (size_t l = 0; l < L; ++l)
      alpha[0][l] = T.at(start, l) + fw.emissions[0][l];
    for (size_t t = 1; t < n; ++t)
      for (size_t l2 = 0; l2 < L; ++l2) {
        double m = -1e300;
        for (size_t l1 = 0; l1 < L; ++l1)
          m = std::max(m, alpha[t - 1][l1] + T.at(l1, l2));
        double acc = 0;
        for (size_t l1 = 0; l1 < L; ++l1)
          acc += std::exp(alpha[t - 1][l1] + T.at(l1, l2) - m);
        alpha[t][l2] = m + std::log(acc) + fw.emissions[t][l2];
      }
    for (size_t l = 0; l < L; ++l) beta[n - 1][l] = T.at(l, stop);
    for (size_t t = n - 1; t > 0; --t)
      for (size_t l1 = 0; l1 < L; ++l1) {
        double m = -1e300;
        for (size_t l2 = 0; l2 < L; ++l2)
          m = std::max(m, T.at(l1, l2) + fw.emissions[t][l2] + beta[t][l2]);
        double acc = 0;
        for (size_t l2 = 0; l2 < L; ++l2)
          acc += std::exp(T.at(l1, l2) + fw.emissions[t][l2] + beta[t][l2] - m);
        beta[t - 1][l1] = m + std::log(acc);
      }

    std::vector<Vec> demissions(n, Vec(L, 0.0));
    for (size_t t = 0; t < n; ++t)
      for (size_t l = 0; l < L; ++l)
        demissions[t][l] = std::exp(alpha[t][l] + beta[t][l] - logZ);
    for (size_t t = 0; t < n; ++t) demissions[t][gold[t]] -= 1.0;

    // Transition gradients: start, pairwise, stop.
    for (size_t l = 0; l < L; ++l)
      dT.at(start, l) += std::exp(alpha[0][l] + beta[0][l] - logZ);
    dT.at(start, gold[0]) -= 1.0;
    for (size_t t = 0; t + 1 < n; ++t) {
      for (size_t l1 = 0; l1 < L; ++l1)
        for (size_t l2 = 0; l2 < L; ++l2)
          dT.at(l1, l2) += std::exp(alpha[t][l1] + T.at(l1, l2) +
                                    fw.emissions[t + 1][l2] + beta[t + 1][l2] -
                                    logZ);
      dT.at(gold[t], gold[t + 1]) -= 1.0;
    }
    for (size_t l = 0; l < L; ++l)
      dT.at(l, stop) += std::exp(alpha[n - 1][l] + beta[n - 1][l] - logZ);
    dT.at(gold[n - 1], stop) -= 1.0;

    emissions_backward(fw, demissions);
    return value;
  }

 private:
  void build_vocabs(const Corpus& train) {
    words_.push_back("<unk>");
    chars_.push_back('\0'); // unknown char
    chars_.push_back('\x1f'); // segment boundary
    for (const auto& sent : train.sentences) {
      SentenceSegments raw = raw_token_segments(sent);
      SentenceSegments gold = sent.has_gold() ? gold_segments(sent)
                                              : SentenceSegments{};
      for (const auto* segsp : {&raw, &gold})
        for (const auto& seg : *segsp) {
          std::string key = word_key(seg);
          if (!key.empty() && !word_index_.count(key)) {
            word_index_[key] = words_.size();
            words_.push_back(key);
          }
          for (const auto& form : seg)
            for (char c : form)
              if (!char_index_.count(c)) {
                char_index_[c] = chars_.size();
                chars_.push_back(c);
              }
        }
    }
    char_index_['\0'] = 0;
    char_index_['\x1f'] = 1;
  }

  static std::string word_key(const TokenSegments& seg) {
    std::string key;
    for (size_t i = 0; i < seg.size(); ++i) {
      if (i) key += '\x1f';
      key += seg[i];
    }
    return key;
  }

  size_t word_id(const std::string& key) const {
    auto it = word_index_.find(key);
    return it == word_index_.end() ? 0 : it->second;
  }

  std::vector<size_t> char_ids_of(const TokenSegments& seg) const {
    std::vector<size_t> ids;
    for (size_t i = 0; i < seg.size(); ++i) {
      if (i) ids.push_back(1); // boundary
      for (char c : seg[i]) {
        auto it = char_index_.find(c);
        ids.push_back(it == char_index_.end() ? 0 : it->second);
      }
    }
    if (ids.empty()) ids.push_back(0);
    return ids;
  }

  size_t word_dim_, char_dim_, char_hidden_, hidden_;
  std::vector<std::string> labels_;
  std::vector<std::string> words_;
  std::vector<char> chars_;
  std::map<std::string, size_t> word_index_;
  std::map<char, size_t> char_index_;
  std::unique_ptr<ParamStore> store_ = std::make_unique<ParamStore>();
  std::optional<BiLstm> char_enc_;
  std::optional<BiLstm> sent_enc_;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

// Trains on per-sentence segmentation inputs (regime decides which); gold
// labels are the canonical multi-tags.
inline CrfModel crf_train(const Corpus& train,
                          const std::vector<SentenceSegments>& inputs,
                          const Config& cfg, Rng& rng) {
  if (inputs.size() != train.sentences.size())
    throw std::runtime_error("crf_train: input/sentence count mismatch");
  CrfModel model(train, cfg, rng);
  std::vector<std::vector<size_t>> gold_labels;
  for (const auto& sent : train.sentences) {
    std::vector<size_t> y;
    for (const auto& a : sent.gold)
      y.push_back(model.label_id(canonical_label(multitag_of(a))));
    gold_labels.push_back(y);
  }
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.get_real("crf_lr", 5e-3);
  Adam opt(adam_cfg);
  int epochs = static_cast<int>(cfg.get_int("crf_epochs", 8));
  double word_dropout = cfg.get_real("crf_word_dropout", 0.1);
  std::vector<size_t> order(train.sentences.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t i : order) {
      model.store().zero_grads();
      model.loss(inputs[i], gold_labels[i], &rng, word_dropout);
      opt.step(model.store());
    }
  }
  return model;
}

// Zip segment forms with predicted tags; a length mismatch yields
// unmatchable placeholder forms so every pair of that token scores wrong.
inline std::vector<Analysis> zip_segments_tags(const TokenSegments& forms,
                                               const MultiTag& mt) {
  Analysis a;
  if (forms.size() != mt.tags.size()) {
    for (size_t i = 0; i < mt.tags.size(); ++i)
      a.morphemes.push_back({"<len-mismatch>", mt.tags[i], "", {}});
  } else {
    for (size_t i = 0; i < forms.size(); ++i)
      a.morphemes.push_back({forms[i], mt.tags[i], "", {}});
  }
  return {a};
}

inline std::vector<Analysis> crf_predict_analyses(
    const CrfModel& model, const SentenceSegments& input_segs,
    const SentenceSegments& eval_forms) {
  auto mts = model.predict(input_segs);
  std::vector<Analysis> out;
  for (size_t t = 0; t < mts.size(); ++t)
    out.push_back(zip_segments_tags(eval_forms[t], mts[t])[0]);
  return out;
}

} // namespace mlt
