#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "mlt/core.hpp"
#include "mlt/rng.hpp"

using namespace mlt;

TEST_CASE("multitag_of projects tags in morpheme order") {
  auto a = fixtures::analysis({{"h", "DET"}, {"pil", "NOUN"}});
  CHECK(canonical_label(multitag_of(a)) == "DET+NOUN");
  CHECK(canonical_label(multitag_of(fixtures::analysis({{"hpil", "VERB"}}))) ==
        "VERB");
  CHECK(canonical_label(multitag_of(fixtures::analysis({{"x", "TAG"}}))) ==
        "TAG");
}

TEST_CASE("multitag_of is length-preserving") {
  auto a = fixtures::analysis({{"a", "A"}, {"b", "B"}, {"c", "C"}});
  CHECK(multitag_of(a).tags.size() == a.morphemes.size());
}

TEST_CASE("canonical_label round-trips through parse_label") {
  MultiTag mt{{"DET", "NOUN"}};
  CHECK(canonical_label(mt) == "DET+NOUN");
  CHECK(parse_label("DET+NOUN") == mt);
  CHECK(parse_label("VERB") == MultiTag{{"VERB"}});

  Rng rng(42);
  const std::vector<std::string> alphabet = {"DET", "NOUN", "VERB", "X", "Y9"};
  for (int iter = 0; iter < 200; ++iter) {
    MultiTag random_mt;
    size_t n = 1 + rng.uniform_int(5);
    for (size_t i = 0; i < n; ++i)
      random_mt.tags.push_back(alphabet[rng.uniform_int(alphabet.size())]);
    CHECK(parse_label(canonical_label(random_mt)) == random_mt);
  }
}

TEST_CASE("canonical_label rejects tags containing '+'") {
  CHECK_THROWS(canonical_label(MultiTag{{"A+B"}}));
}

TEST_CASE("morpheme validation") {
  CHECK_THROWS(validate_morpheme({"", "TAG", "", {}}));
  CHECK_THROWS(validate_morpheme({"a b", "TAG", "", {}}));
  CHECK_THROWS(validate_morpheme({"ab", "", "", {}}));
  CHECK_NOTHROW(validate_morpheme({"ab", "TAG", "", {}}));
}

TEST_CASE("analysis length bounds") {
  Analysis a;
  CHECK_THROWS(validate_analysis(a));
  for (int i = 0; i < 8; ++i) a.morphemes.push_back({"x", "T", "", {}});
  CHECK_THROWS(validate_analysis(a)); // 8 > default 7
  CHECK_NOTHROW(validate_analysis(a, 8));
}

TEST_CASE("build_inventories over the example corpus") {
  Corpus corpus;
  corpus.sentences.push_back(fixtures::example_sentence());
  build_inventories(corpus);
  CHECK(corpus.tag_inventory ==
        std::vector<std::string>{"DET", "NOUN", "VERB", "ACC"});
  CHECK(corpus.multitag_inventory ==
        std::vector<std::string>{"DET+NOUN", "VERB", "ACC"});
}

TEST_CASE("build_inventories errors without gold") {
  Corpus corpus;
  CHECK_THROWS(build_inventories(corpus));
  Sentence s;
  s.tokens = {{"x", 0}};
  corpus.sentences.push_back(s);
  CHECK_THROWS(build_inventories(corpus));
}

TEST_CASE("build_inventories idempotent on duplicated sentences") {
  Corpus one, two;
  one.sentences.push_back(fixtures::example_sentence());
  two.sentences.push_back(fixtures::example_sentence());
  two.sentences.push_back(fixtures::example_sentence());
  build_inventories(one);
  build_inventories(two);
  CHECK(one.tag_inventory == two.tag_inventory);
  CHECK(one.multitag_inventory == two.multitag_inventory);
}

TEST_CASE("shuffling sentences preserves inventory membership") {
  Corpus corpus;
  corpus.sentences.push_back(fixtures::example_sentence());
  Sentence extra;
  extra.tokens = {{"foo", 0}};
  extra.gold = {fixtures::analysis({{"foo", "ADJ"}})};
  corpus.sentences.push_back(extra);
  build_inventories(corpus);

  Corpus reversed;
  reversed.sentences = {corpus.sentences[1], corpus.sentences[0]};
  build_inventories(reversed);
  auto sorted = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(sorted(corpus.tag_inventory) == sorted(reversed.tag_inventory));
  CHECK(sorted(corpus.multitag_inventory) == sorted(reversed.multitag_inventory));
}
