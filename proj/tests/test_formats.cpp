#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "mlt/formats.hpp"

using namespace mlt;

TEST_CASE("lattice file: hpil fixture parses to a 2-path lattice") {
  std::string text =
      "#morpholattice-v1 lattice\n"
      "#tokens hpil\n"
      "0\t1\th\t_\tDET\tDET\t_\t0\n"
      "1\t2\tpil\t_\tNOUN\tNOUN\t_\t0\n"
      "0\t2\thpil\t_\tVERB\tVERB\t_\t0\n";
  std::istringstream in(text);
  auto lats = read_lattice_file(in);
  REQUIRE(lats.size() == 1);
  CHECK(lats[0].arcs.size() == 3);
  CHECK(path_count(lats[0]) == 2);
  CHECK(lats[0].surfaces == std::vector<std::string>{"hpil"});
}

TEST_CASE("lattice file: empty file is an empty list") {
  std::istringstream in("#morpholattice-v1 lattice\n");
  CHECK(read_lattice_file(in).empty());
}

TEST_CASE("lattice file round-trip is byte-identical") {
  auto lex = fixtures::hebrew_lexicon();
  std::vector<Lattice> lats;
  lats.push_back(build_lattice(fixtures::example_sentence(), lex));
  Sentence s2;
  s2.tokens = {{"at", 0}, {"hild", 1}};
  lats.push_back(build_lattice(s2, lex));

  std::ostringstream out;
  write_lattice_file(lats, out);
  std::istringstream in(out.str());
  auto reread = read_lattice_file(in);
  REQUIRE(reread.size() == 2);
  std::ostringstream out2;
  write_lattice_file(reread, out2);
  CHECK(out2.str() == out.str());
}

TEST_CASE("lattice file errors carry line numbers") {
  SECTION("non-numeric node id") {
    std::istringstream in(
        "#morpholattice-v1 lattice\n#tokens x\nz\t1\tx\t_\tT\tT\t_\t0\n");
    try {
      read_lattice_file(in);
      FAIL("expected error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SECTION("missing header") {
    std::istringstream in("#tokens x\n0\t1\tx\t_\tT\tT\t_\t0\n");
    CHECK_THROWS(read_lattice_file(in));
  }
  SECTION("dangling node") {
    std::istringstream in(
        "#morpholattice-v1 lattice\n"
        "#tokens x\n"
        "0\t2\tx\t_\tT\tT\t_\t0\n"
        "1\t2\ty\t_\tT\tT\t_\t0\n");
    CHECK_THROWS(read_lattice_file(in));
  }
}

TEST_CASE("gold file: example sentence has 4 tokens, 6 morphemes") {
  std::string text =
      "#morpholattice-v1\n"
      "0\th\tDET\n"
      "0\tild\tNOUN\n"
      "1\thpil\tVERB\n"
      "2\tat\tACC\n"
      "3\th\tDET\n"
      "3\tpil\tNOUN\n";
  std::istringstream in(text);
  Corpus corpus = read_gold_file(in);
  REQUIRE(corpus.sentences.size() == 1);
  const auto& s = corpus.sentences[0];
  CHECK(s.tokens.size() == 4);
  int morphemes = 0;
  for (const auto& a : s.gold) morphemes += static_cast<int>(a.morphemes.size());
  CHECK(morphemes == 6);
  CHECK(s.tokens[0].surface == "hild");
  CHECK(s.tokens[1].surface == "hpil");
  CHECK(corpus.tag_inventory ==
        std::vector<std::string>{"DET", "NOUN", "VERB", "ACC"});
}

TEST_CASE("gold file: singleton corpus and round-trip") {
  std::string text = "#morpholattice-v1\n0\tx\tT\n";
  std::istringstream in(text);
  Corpus corpus = read_gold_file(in);
  REQUIRE(corpus.sentences.size() == 1);
  CHECK(corpus.sentences[0].tokens.size() == 1);

  std::vector<std::vector<Analysis>> gold;
  for (const auto& s : corpus.sentences) gold.push_back(s.gold);
  std::ostringstream out;
  write_segpos_file(gold, out);
  CHECK(out.str() == text);
}

TEST_CASE("gold file: token index gaps are rejected") {
  std::istringstream in("#morpholattice-v1\n0\tx\tT\n2\ty\tT\n");
  try {
    read_gold_file(in);
    FAIL("expected error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("prediction file round-trip identity") {
  Sentence s = fixtures::example_sentence();
  std::vector<std::vector<Analysis>> pred = {s.gold};
  std::ostringstream out;
  write_segpos_file(pred, out);

  // Predictions equal to gold serialize identically to the gold file.
  std::vector<std::vector<Analysis>> gold = {s.gold};
  std::ostringstream gold_out;
  write_segpos_file(gold, gold_out);
  CHECK(out.str() == gold_out.str());

  auto tmpfile = std::filesystem::temp_directory_path() / "mlt_pred_test.tsv";
  {
    std::ofstream f(tmpfile);
    f << out.str();
  }
  auto reread = read_predictions(tmpfile.string());
  CHECK(reread == pred);
  std::filesystem::remove(tmpfile);
}

TEST_CASE("empty sentence list writes only the header") {
  std::ostringstream out;
  write_segpos_file({}, out);
  CHECK(out.str() == "#morpholattice-v1\n");
}

TEST_CASE("checkpoint container round-trip") {
  Checkpoint ckpt;
  ckpt.config.set("model", "demo");
  ckpt.config.set_int("dim", 4);
  ckpt.vocabs["tags"] = {"DET", "NOUN"};
  Tensor t({2, 3});
  for (size_t i = 0; i < t.data.size(); ++i)
    t.data[i] = 0.1 * static_cast<double>(i) - 0.25;
  ckpt.tensors["emb"] = t;

  std::ostringstream out(std::ios::binary);
  save_checkpoint(ckpt, out);
  std::istringstream in(out.str(), std::ios::binary);
  Checkpoint loaded = load_checkpoint(in);
  CHECK(loaded.config.get("model") == "demo");
  CHECK(loaded.config.get_int("dim", 0) == 4);
  CHECK(loaded.vocabs == ckpt.vocabs);
  REQUIRE(loaded.tensors.count("emb") == 1);
  CHECK(loaded.tensors["emb"].shape == t.shape);
  CHECK(loaded.tensors["emb"].data == t.data); // bit-exact

  // Re-serialization is byte-identical.
  std::ostringstream out2(std::ios::binary);
  save_checkpoint(loaded, out2);
  CHECK(out2.str() == out.str());
}

TEST_CASE("checkpoint rejects corrupted magic and trailing garbage") {
  Checkpoint ckpt;
  ckpt.config.set("model", "demo");
  std::ostringstream out(std::ios::binary);
  save_checkpoint(ckpt, out);

  std::string bad = out.str();
  bad[0] = 'X';
  std::istringstream bad_in(bad, std::ios::binary);
  CHECK_THROWS(load_checkpoint(bad_in));

  std::string trailing = out.str() + "junk";
  std::istringstream trail_in(trailing, std::ios::binary);
  CHECK_THROWS(load_checkpoint(trail_in));
}
