#pragma once

// The model x regime report grid: trains every compatible cell on the
// train split and scores it on the dev split with Seg/POS F1. Incompatible
// cells are reported as NA.
//
// Regime semantics at evaluation time:
//   oracle       gold segment forms are given; only tags are predicted
//   predicted    segmentation comes from the perceptron disambiguator,
//                then the CRF re-tags those segments
//   raw-tokens   surfaces only; multi-tag predictions are zipped with gold
//                forms when the lengths agree (all wrong otherwise)
//   raw-lattices lexicon-built lattice input

#include <string>
#include <vector>

#include "mlt/config.hpp"
#include "mlt/core.hpp"
#include "mlt/lattice.hpp"
#include "mlt/lexicon.hpp"
#include "mlt/metrics.hpp"
#include "mlt/rng.hpp"
#include "mlt/taggers/common.hpp"
#include "mlt/taggers/crf.hpp"
#include "mlt/taggers/perceptron.hpp"
#include "mlt/taggers/pointer.hpp"

namespace mlt {

inline std::vector<GridRow> run_regime_grid(const Corpus& train,
                                            const Corpus& dev,
                                            const Lexicon& lex,
                                            const Config& cfg) {
  uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  std::vector<std::vector<Analysis>> dev_gold;
  for (const auto& sent : dev.sentences) dev_gold.push_back(sent.gold);

  std::vector<GridRow> rows;
  auto add_na = [&](const std::string& model, Regime regime) {
    rows.push_back({model, regime_name(regime), false, {}});
  };
  auto add = [&](const std::string& model, Regime regime,
                 const std::vector<std::vector<Analysis>>& pred) {
    rows.push_back({model, regime_name(regime), true, seg_pos_f1(dev_gold, pred)});
  };

  // Perceptron over raw lattices; its dev output doubles as the segmenter
  // for the CRF's predicted regime.
  Rng perc_rng(seed * 8191 + 1);
  int perc_epochs = static_cast<int>(cfg.get_int("perc_epochs", 5));
  PerceptronModel perc = perceptron_train(train, lex, perc_epochs, perc_rng);
  std::vector<std::vector<Analysis>> perc_pred;
  for (const auto& sent : dev.sentences)
    perc_pred.push_back(perceptron_predict(perc, sent, lex));
  add("perceptron", Regime::RawLattices, perc_pred);
  add_na("perceptron", Regime::Oracle);
  add_na("perceptron", Regime::Predicted);
  add_na("perceptron", Regime::RawTokens);

  // One CRF trained on gold segments serves the oracle and predicted
  // regimes; the regimes differ only in the segments fed at prediction
  // time (re-tagging). A separate CRF is trained on raw surfaces.
  {
    std::vector<SentenceSegments> inputs;
    for (const auto& sent : train.sentences)
      inputs.push_back(gold_segments(sent));
    Rng rng(seed * 8191 + 2);
    CrfModel crf = crf_train(train, inputs, cfg, rng);

    std::vector<std::vector<Analysis>> oracle_pred, predicted_pred;
    for (size_t i = 0; i < dev.sentences.size(); ++i) {
      SentenceSegments gold_in = gold_segments(dev.sentences[i]);
      oracle_pred.push_back(crf_predict_analyses(crf, gold_in, gold_in));
      SentenceSegments perc_in = analyses_segments(perc_pred[i]);
      predicted_pred.push_back(crf_predict_analyses(crf, perc_in, perc_in));
    }
    add("crf", Regime::Oracle, oracle_pred);
    add("crf", Regime::Predicted, predicted_pred);
  }
  {
    std::vector<SentenceSegments> inputs;
    for (const auto& sent : train.sentences)
      inputs.push_back(raw_token_segments(sent));
    Rng rng(seed * 8191 + 3);
    CrfModel crf = crf_train(train, inputs, cfg, rng);
    std::vector<std::vector<Analysis>> raw_pred;
    for (const auto& sent : dev.sentences)
      raw_pred.push_back(crf_predict_analyses(crf, raw_token_segments(sent),
                                              gold_segments(sent)));
    add("crf", Regime::RawTokens, raw_pred);
  }
  add_na("crf", Regime::RawLattices);

  for (Regime regime : {Regime::Oracle, Regime::RawLattices}) {
    Rng rng(seed * 8191 + (regime == Regime::Oracle ? 4 : 5));
    PointerModel ptr = pointer_train(train, dev, lex, regime, cfg, rng);
    std::vector<std::vector<Analysis>> pred;
    for (const auto& sent : dev.sentences)
      pred.push_back(pointer_predict(ptr, sent, lex, regime));
    add("pointer", regime, pred);
  }
  add_na("pointer", Regime::Predicted);
  add_na("pointer", Regime::RawTokens);

  return rows;
}

} // namespace mlt
