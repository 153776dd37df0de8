// Command-line front end: synthetic data generation, lattice construction,
// training, prediction, evaluation, and the model x regime report grid.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "mlt/config.hpp"
#include "mlt/formats.hpp"
#include "mlt/grid.hpp"
#include "mlt/io.hpp"
#include "mlt/lattice.hpp"
#include "mlt/lexicon.hpp"
#include "mlt/metrics.hpp"
#include "mlt/synth.hpp"
#include "mlt/taggers/crf.hpp"
#include "mlt/taggers/perceptron.hpp"
#include "mlt/taggers/pointer.hpp"

namespace {

using namespace mlt;

Config load_config_or_default(const std::string& path) {
  if (path.empty()) return Config{};
  return Config::load(path);
}

Config default_config() {
  Config cfg;
  cfg.set_int("seed", 1);
  cfg.set_int("perc_epochs", 5);
  cfg.set_int("crf_word_dim", 32);
  cfg.set_int("crf_char_dim", 16);
  cfg.set_int("crf_char_hidden", 16);
  cfg.set_int("crf_hidden", 32);
  cfg.set_int("crf_epochs", 8);
  cfg.set_real("crf_lr", 5e-3);
  cfg.set_real("crf_word_dropout", 0.1);
  cfg.set_int("ptr_form_dim", 12);
  cfg.set_int("ptr_tag_dim", 8);
  cfg.set_int("ptr_pos_dim", 4);
  cfg.set_int("ptr_hidden", 16);
  cfg.set_int("ptr_max_positions", 32);
  cfg.set_int("ptr_epochs", 10);
  cfg.set_int("ptr_patience", 3);
  cfg.set_real("ptr_lr", 5e-3);
  cfg.set_real("ptr_form_dropout", 0.1);
  return cfg;
}

std::vector<std::vector<Analysis>> gold_of(const Corpus& corpus) {
  std::vector<std::vector<Analysis>> out;
  for (const auto& sent : corpus.sentences) out.push_back(sent.gold);
  return out;
}

void write_gold(const std::string& path, const Corpus& corpus) {
  write_file_atomic(path, [&](std::ostream& out) {
    write_segpos_file(gold_of(corpus), out);
  });
}

int cmd_gen_synth(const SynthSpec& spec, const std::string& out_dir) {
  SynthData data = generate_synth(spec);
  save_lexicon(data.lexicon, out_dir + "/lexicon");
  write_gold(out_dir + "/train.gold", data.train);
  write_gold(out_dir + "/dev.gold", data.dev);
  return 0;
}

int cmd_build_lattices(const std::string& input, const std::string& lexicon,
                       const std::string& regime_name_str,
                       const std::string& out) {
  Regime regime = parse_regime(regime_name_str);
  if (regime != Regime::Oracle && regime != Regime::RawLattices)
    throw std::runtime_error(
        "build-lattices supports regimes oracle and raw-lattices");
  Corpus corpus = read_gold_file(input);
  Lexicon lex = load_lexicon(lexicon);
  std::vector<Lattice> lattices;
  for (const auto& sent : corpus.sentences)
    lattices.push_back(regime == Regime::Oracle ? oracle_lattice(sent)
                                                : build_lattice(sent, lex));
  write_lattice_file(lattices, out);
  return 0;
}

int cmd_train(const std::string& model, const std::string& train_path,
              const std::string& dev_path, const std::string& lexicon,
              const std::string& config_path, const std::string& regime_str,
              long seed_flag, const std::string& out) {
  Config cfg = load_config_or_default(config_path);
  if (seed_flag >= 0) cfg.set_int("seed", seed_flag);
  uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  Regime regime = parse_regime(regime_str);
  require_compatible(model, regime);
  Corpus train = read_gold_file(train_path);
  Rng rng(seed);

  Checkpoint ckpt;
  if (model == "perceptron") {
    Lexicon lex = load_lexicon(lexicon);
    int epochs = static_cast<int>(cfg.get_int("perc_epochs", 5));
    PerceptronModel m = perceptron_train(train, lex, epochs, rng);
    ckpt = perceptron_to_checkpoint(m);
  } else if (model == "crf") {
    std::vector<SentenceSegments> inputs;
    for (const auto& sent : train.sentences)
      inputs.push_back(regime == Regime::RawTokens ? raw_token_segments(sent)
                                                   : gold_segments(sent));
    CrfModel m = crf_train(train, inputs, cfg, rng);
    ckpt = m.to_checkpoint();
  } else if (model == "pointer") {
    Lexicon lex = load_lexicon(lexicon);
    Corpus dev = dev_path.empty() ? Corpus{} : read_gold_file(dev_path);
    PointerModel m = pointer_train(train, dev, lex, regime, cfg, rng);
    ckpt = m.to_checkpoint();
  } else {
    throw std::runtime_error("unknown model '" + model + "'");
  }
  ckpt.config.set("regime", regime_name(regime));
  ckpt.config.set_int("seed", static_cast<long>(seed));
  save_checkpoint(ckpt, out);
  return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& input,
                const std::string& lexicon, const std::string& regime_str,
                const std::string& segmenter_path, const std::string& out) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  std::string model = ckpt.config.get("model", "");
  Regime regime = parse_regime(
      regime_str.empty() ? ckpt.config.get("regime", "") : regime_str);
  require_compatible(model, regime);
  Corpus corpus = read_gold_file(input);

  std::vector<std::vector<Analysis>> pred;
  if (model == "perceptron") {
    Lexicon lex = load_lexicon(lexicon);
    PerceptronModel m = perceptron_from_checkpoint(ckpt);
    for (const auto& sent : corpus.sentences)
      pred.push_back(perceptron_predict(m, sent, lex));
  } else if (model == "crf") {
    CrfModel m(ckpt);
    std::vector<std::vector<Analysis>> seg_source;
    if (regime == Regime::Predicted) {
      if (segmenter_path.empty())
        throw std::runtime_error(
            "predicted regime needs --segmenter (perceptron checkpoint)");
      Lexicon lex = load_lexicon(lexicon);
      PerceptronModel seg =
          perceptron_from_checkpoint(load_checkpoint(segmenter_path));
      for (const auto& sent : corpus.sentences)
        seg_source.push_back(perceptron_predict(seg, sent, lex));
    }
    for (size_t i = 0; i < corpus.sentences.size(); ++i) {
      const Sentence& sent = corpus.sentences[i];
      SentenceSegments input_segs, eval_forms;
      switch (regime) {
        case Regime::Oracle:
          input_segs = eval_forms = gold_segments(sent);
          break;
        case Regime::Predicted:
          input_segs = eval_forms = analyses_segments(seg_source[i]);
          break;
        case Regime::RawTokens:
          input_segs = raw_token_segments(sent);
          eval_forms = gold_segments(sent);
          break;
        default:
          throw std::runtime_error("crf does not support this regime");
      }
      pred.push_back(crf_predict_analyses(m, input_segs, eval_forms));
    }
  } else if (model == "pointer") {
    Lexicon lex = load_lexicon(lexicon);
    PointerModel m(ckpt);
    for (const auto& sent : corpus.sentences)
      pred.push_back(pointer_predict(m, sent, lex, regime));
  } else {
    throw std::runtime_error("checkpoint has unknown model '" + model + "'");
  }
  write_predictions(out, pred);
  return 0;
}

int cmd_evaluate(const std::string& gold_path, const std::string& pred_path) {
  Corpus gold = read_gold_file(gold_path);
  auto pred = read_predictions(pred_path);
  ScoreReport r = seg_pos_f1(gold_of(gold), pred);
  std::cout << "precision\t" << r.precision << "\n"
            << "recall\t" << r.recall << "\n"
            << "f1\t" << r.f1 << "\n"
            << "matched\t" << r.matched << "\n"
            << "gold_pairs\t" << r.gold_pairs << "\n"
            << "pred_pairs\t" << r.pred_pairs << "\n"
            << "multitag_accuracy\t" << multitag_accuracy(gold_of(gold), pred)
            << "\n";
  return 0;
}

int cmd_grid(const std::string& train_path, const std::string& dev_path,
             const std::string& lexicon, const std::string& config_path,
             long seed_flag, const std::string& out) {
  Config cfg = load_config_or_default(config_path);
  if (seed_flag >= 0) cfg.set_int("seed", seed_flag);
  Corpus train = read_gold_file(train_path);
  Corpus dev = read_gold_file(dev_path);
  Lexicon lex = load_lexicon(lexicon);
  auto rows = run_regime_grid(train, dev, lex, cfg);
  std::cout << report_grid(rows);
  if (!out.empty())
    write_file_atomic(out,
                      [&](std::ostream& o) { o << report_grid_tsv(rows); });
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"morphological lattice toolkit"};
  app.require_subcommand(1);

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic corpus");
  SynthSpec spec;
  std::string gen_out = ".";
  gen->add_option("--seed", spec.seed);
  gen->add_option("--stems", spec.n_stems);
  gen->add_option("--ambiguity", spec.ambiguity);
  gen->add_option("--oov", spec.oov_rate);
  gen->add_option("--min-len", spec.min_len);
  gen->add_option("--max-len", spec.max_len);
  gen->add_option("--train", spec.n_train);
  gen->add_option("--dev", spec.n_dev);
  gen->add_option("--out", gen_out, "output directory");

  // build-lattices
  auto* bl = app.add_subcommand("build-lattices", "build lattices from gold");
  std::string bl_input, bl_lexicon, bl_regime = "raw-lattices", bl_out;
  bl->add_option("--input", bl_input)->required();
  bl->add_option("--lexicon", bl_lexicon)->required();
  bl->add_option("--regime", bl_regime);
  bl->add_option("--out", bl_out)->required();

  // init-config
  auto* ic = app.add_subcommand("init-config", "write the default config");
  std::string ic_out;
  ic->add_option("--out", ic_out)->required();

  // train
  auto* tr = app.add_subcommand("train", "train a model");
  std::string tr_model, tr_train, tr_dev, tr_lexicon, tr_config, tr_regime,
      tr_out;
  long tr_seed = -1;
  tr->add_option("--model", tr_model)->required();
  tr->add_option("--train", tr_train)->required();
  tr->add_option("--dev", tr_dev);
  tr->add_option("--lexicon", tr_lexicon);
  tr->add_option("--config", tr_config);
  tr->add_option("--regime", tr_regime)->required();
  tr->add_option("--seed", tr_seed);
  tr->add_option("--out", tr_out)->required();

  // predict
  auto* pr = app.add_subcommand("predict", "predict with a checkpoint");
  std::string pr_ckpt, pr_input, pr_lexicon, pr_regime, pr_segmenter, pr_out;
  pr->add_option("--checkpoint", pr_ckpt)->required();
  pr->add_option("--input", pr_input)->required();
  pr->add_option("--lexicon", pr_lexicon);
  pr->add_option("--regime", pr_regime);
  pr->add_option("--segmenter", pr_segmenter,
                 "perceptron checkpoint for the predicted regime");
  pr->add_option("--out", pr_out)->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score predictions against gold");
  std::string ev_gold, ev_pred;
  ev->add_option("--gold", ev_gold)->required();
  ev->add_option("--pred", ev_pred)->required();

  // grid
  auto* gr = app.add_subcommand("grid", "train and score every regime cell");
  std::string gr_train, gr_dev, gr_lexicon, gr_config, gr_out;
  long gr_seed = -1;
  gr->add_option("--train", gr_train)->required();
  gr->add_option("--dev", gr_dev)->required();
  gr->add_option("--lexicon", gr_lexicon)->required();
  gr->add_option("--config", gr_config);
  gr->add_option("--seed", gr_seed);
  gr->add_option("--out", gr_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_synth(spec, gen_out);
    if (bl->parsed()) return cmd_build_lattices(bl_input, bl_lexicon, bl_regime, bl_out);
    if (ic->parsed()) {
      mlt::write_file_atomic(ic_out, [](std::ostream& out) {
        out << default_config().serialize();
      });
      return 0;
    }
    if (tr->parsed())
      return cmd_train(tr_model, tr_train, tr_dev, tr_lexicon, tr_config,
                       tr_regime, tr_seed, tr_out);
    if (pr->parsed())
      return cmd_predict(pr_ckpt, pr_input, pr_lexicon, pr_regime,
                         pr_segmenter, pr_out);
    if (ev->parsed()) return cmd_evaluate(ev_gold, ev_pred);
    if (gr->parsed())
      return cmd_grid(gr_train, gr_dev, gr_lexicon, gr_config, gr_seed, gr_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
