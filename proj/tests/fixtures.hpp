#pragma once

// Shared test fixtures: the clitic-ambiguity lexicon and sentence used
// across the suite ("the boy made the elephant fall").

#include "mlt/core.hpp"
#include "mlt/lattice.hpp"
#include "mlt/lexicon.hpp"

namespace fixtures {

inline mlt::Analysis analysis(
    std::initializer_list<std::pair<const char*, const char*>> items) {
  mlt::Analysis a;
  for (const auto& [form, tag] : items) a.morphemes.push_back({form, tag, "", {}});
  return a;
}

// hpil is ambiguous between h/DET+pil/NOUN and hpil/VERB.
inline mlt::Lexicon hebrew_lexicon() {
  mlt::Lexicon lex;
  lex.prefix_table = {{"h", "DET"}, {"w", "CONJ"}, {"b", "ADP"}, {"l", "ADP"}};
  lex.open_class_tags = {"NOUN", "VERB"};
  add_entry(lex, "hild", analysis({{"h", "DET"}, {"ild", "NOUN"}}));
  add_entry(lex, "hpil", analysis({{"h", "DET"}, {"pil", "NOUN"}}));
  add_entry(lex, "hpil", analysis({{"hpil", "VERB"}}));
  add_entry(lex, "at", analysis({{"at", "ACC"}}));
  add_entry(lex, "pil", analysis({{"pil", "NOUN"}}));
  return lex;
}

// "hild hpil at hpil" with its gold disambiguation.
inline mlt::Sentence example_sentence() {
  mlt::Sentence s;
  s.tokens = {{"hild", 0}, {"hpil", 1}, {"at", 2}, {"hpil", 3}};
  s.gold = {analysis({{"h", "DET"}, {"ild", "NOUN"}}),
            analysis({{"hpil", "VERB"}}),
            analysis({{"at", "ACC"}}),
            analysis({{"h", "DET"}, {"pil", "NOUN"}})};
  return s;
}

} // namespace fixtures
