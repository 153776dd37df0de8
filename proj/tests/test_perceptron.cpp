#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "fixtures.hpp"
#include "mlt/taggers/perceptron.hpp"

using namespace mlt;

namespace {

// Lexicographically smallest arc-id sequence among max-scoring paths,
// by brute force.
LatticePath brute_force_argmax(const PerceptronModel& model,
                               const Lattice& lat, double* best_score) {
  auto paths = enumerate_paths(lat, 1000);
  const LatticePath* best = nullptr;
  double bs = -1e300;
  for (const auto& p : paths) {
    double s = path_score(model, lat, p);
    if (!best || s > bs + 1e-9) {
      bs = s;
      best = &p;
    } else if (s >= bs - 1e-9 && p.arc_ids < best->arc_ids) {
      bs = std::max(bs, s);
      best = &p;
    }
  }
  if (best_score) *best_score = bs;
  return *best;
}

// Token forms each ambiguous between tags A and B; gold is decided by the
// form's parity, which the form/tag features separate.
Corpus separable_corpus(Lexicon& lex, int n_sentences, Rng& rng) {
  lex = Lexicon{};
  lex.open_class_tags = {"A"};
  for (int i = 0; i < 10; ++i) {
    std::string form = "f" + std::to_string(i);
    add_entry(lex, form, fixtures::analysis({{form.c_str(), "A"}}));
    add_entry(lex, form, fixtures::analysis({{form.c_str(), "B"}}));
  }
  Corpus corpus;
  for (int s = 0; s < n_sentences; ++s) {
    Sentence sent;
    int len = 2 + static_cast<int>(rng.uniform_int(5));
    for (int t = 0; t < len; ++t) {
      int f = static_cast<int>(rng.uniform_int(10));
      std::string form = "f" + std::to_string(f);
      sent.tokens.push_back({form, t});
      sent.gold.push_back(
          fixtures::analysis({{form.c_str(), f % 2 == 0 ? "A" : "B"}}));
    }
    corpus.sentences.push_back(sent);
  }
  build_inventories(corpus);
  return corpus;
}

} // namespace

TEST_CASE("zero weights decode returns the all-smallest-arc-id path") {
  auto lex = fixtures::hebrew_lexicon();
  Lattice lat = build_lattice(fixtures::example_sentence(), lex);
  PerceptronModel model;
  LatticePath got = perceptron_decode(model, lat);
  auto paths = enumerate_paths(lat, 100);
  LatticePath smallest = paths[0];
  for (const auto& p : paths)
    if (p.arc_ids < smallest.arc_ids) smallest = p;
  CHECK(got == smallest);
}

TEST_CASE("a +1 form/tag weight flips hpil to VERB") {
  auto lex = fixtures::hebrew_lexicon();
  Lattice lat = build_lattice(fixtures::example_sentence(), lex);
  PerceptronModel model;
  model.weights["ft=hpil|VERB"].w = 1.0;
  auto analyses = path_analyses(lat, perceptron_decode(model, lat));
  CHECK(analyses[1] == fixtures::analysis({{"hpil", "VERB"}}));
  CHECK(analyses[3] == fixtures::analysis({{"hpil", "VERB"}}));
}

TEST_CASE("decode equals brute-force argmax on random weighted lattices") {
  auto lex = fixtures::hebrew_lexicon();
  Rng rng(21);
  const std::vector<std::string> tags = {"A", "B", "C"};
  const std::vector<std::string> forms = {"x", "y", "z"};
  for (int iter = 0; iter < 100; ++iter) {
    // Random lattice from random per-token analysis sets.
    int T = 1 + static_cast<int>(rng.uniform_int(4));
    std::vector<std::string> surfaces;
    std::vector<std::vector<Analysis>> per_token;
    for (int t = 0; t < T; ++t) {
      std::set<Analysis> analyses;
      int n = 1 + static_cast<int>(rng.uniform_int(3));
      for (int a = 0; a < n; ++a) {
        Analysis an;
        int m = 1 + static_cast<int>(rng.uniform_int(3));
        for (int i = 0; i < m; ++i)
          an.morphemes.push_back({forms[rng.uniform_int(3)],
                                  tags[rng.uniform_int(3)], "", {}});
        analyses.insert(an);
      }
      per_token.emplace_back(analyses.begin(), analyses.end());
      surfaces.push_back("t" + std::to_string(t));
    }
    Lattice lat = build_from_analyses(surfaces, std::move(per_token));
    if (path_count(lat) > 1000) continue;

    PerceptronModel model;
    // Random weights on a sample of features seen in this lattice.
    for (const auto& arc : lat.arcs)
      for (const auto& f : arc_features(model, lat, arc))
        if (rng.bernoulli(0.7)) model.weights[f].w = rng.uniform(-2.0, 2.0);
    for (const auto& a : tags)
      for (const auto& b : tags)
        model.weights[bigram_feature(a, b)].w = rng.uniform(-1.0, 1.0);

    LatticePath got = perceptron_decode(model, lat);
    double brute_score = 0.0;
    LatticePath brute = brute_force_argmax(model, lat, &brute_score);
    CHECK(path_score(model, lat, got) == Catch::Approx(brute_score).margin(1e-9));
    CHECK(got == brute);
  }
}

TEST_CASE("training on a separable toy corpus converges") {
  Lexicon lex;
  Rng data_rng(5);
  Corpus corpus = separable_corpus(lex, 50, data_rng);
  Rng train_rng(6);
  PerceptronModel model = perceptron_train(corpus, lex, 10, train_rng);
  int errors = 0;
  for (const auto& sent : corpus.sentences) {
    auto pred = perceptron_predict(model, sent, lex);
    if (pred != sent.gold) ++errors;
  }
  CHECK(errors == 0);
}

TEST_CASE("no update when the prediction is already correct") {
  Lexicon lex;
  lex.open_class_tags = {"A"};
  add_entry(lex, "x", fixtures::analysis({{"x", "A"}}));
  Sentence s;
  s.tokens = {{"x", 0}};
  s.gold = {fixtures::analysis({{"x", "A"}})};
  Corpus corpus;
  corpus.sentences = {s};
  build_inventories(corpus);
  Rng rng(1);
  PerceptronModel model = perceptron_train(corpus, lex, 3, rng);
  CHECK(model.weights.empty());
}

TEST_CASE("averaged model equals final model after a single update") {
  PerceptronModel model;
  model.timestep = 1;
  model.update("feat", 2.5);
  model.timestep = 10; // more timesteps pass with no further updates
  model.use_average = true;
  CHECK(model.weight("feat") == Catch::Approx(2.5));
}

TEST_CASE("perceptron checkpoint round-trip preserves predictions") {
  Lexicon lex;
  Rng data_rng(5);
  Corpus corpus = separable_corpus(lex, 20, data_rng);
  Rng train_rng(6);
  PerceptronModel model = perceptron_train(corpus, lex, 5, train_rng);

  std::ostringstream out(std::ios::binary);
  save_checkpoint(perceptron_to_checkpoint(model), out);
  std::istringstream in(out.str(), std::ios::binary);
  PerceptronModel loaded = perceptron_from_checkpoint(load_checkpoint(in));

  for (const auto& sent : corpus.sentences)
    CHECK(perceptron_predict(loaded, sent, lex) ==
          perceptron_predict(model, sent, lex));
}
