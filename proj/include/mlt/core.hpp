#pragma once

// Core domain types for morphological segmentation and multi-tagging:
// morphemes, analyses, multi-tags, tokens, sentences, corpora.

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlt {

inline constexpr int kDefaultMaxMorphemesPerToken = 7;

struct Morpheme {
  std::string form;  // non-empty, no whitespace
  std::string tag;   // POS tag symbol
  std::string lemma; // optional, empty if absent
  std::map<std::string, std::string> feats;

  bool operator==(const Morpheme& o) const {
    return form == o.form && tag == o.tag;
  }
  bool operator<(const Morpheme& o) const {
    if (form != o.form) return form < o.form;
    return tag < o.tag;
  }
};

inline void validate_morpheme(const Morpheme& m) {
  if (m.form.empty())
    throw std::runtime_error("morpheme form must be non-empty");
  for (char c : m.form)
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
      throw std::runtime_error("morpheme form contains whitespace: '" + m.form + "'");
  if (m.tag.empty())
    throw std::runtime_error("morpheme tag must be non-empty");
}

// Ordered morpheme sequence for one token.
struct Analysis {
  std::vector<Morpheme> morphemes;

  bool operator==(const Analysis& o) const { return morphemes == o.morphemes; }
  bool operator<(const Analysis& o) const { return morphemes < o.morphemes; }
};

inline void validate_analysis(const Analysis& a,
                              int max_morphemes = kDefaultMaxMorphemesPerToken) {
  if (a.morphemes.empty())
    throw std::runtime_error("analysis must contain at least one morpheme");
  if (static_cast<int>(a.morphemes.size()) > max_morphemes)
    throw std::runtime_error("analysis exceeds max morphemes per token (" +
                             std::to_string(max_morphemes) + ")");
  for (const auto& m : a.morphemes) validate_morpheme(m);
}

// Tag projection of an analysis, treated as one complex label.
struct MultiTag {
  std::vector<std::string> tags;

  bool operator==(const MultiTag& o) const { return tags == o.tags; }
};

inline MultiTag multitag_of(const Analysis& a) {
  MultiTag mt;
  mt.tags.reserve(a.morphemes.size());
  for (const auto& m : a.morphemes) mt.tags.push_back(m.tag);
  return mt;
}

// Canonical textual label: tags joined by '+'. Rejects tags containing '+'
// so the encoding stays injective.
inline std::string canonical_label(const MultiTag& mt) {
  if (mt.tags.empty()) throw std::runtime_error("multi-tag must be non-empty");
  std::string out;
  for (size_t i = 0; i < mt.tags.size(); ++i) {
    if (mt.tags[i].find('+') != std::string::npos)
      throw std::runtime_error("tag symbol contains '+': " + mt.tags[i]);
    if (i) out += '+';
    out += mt.tags[i];
  }
  return out;
}

inline MultiTag parse_label(const std::string& label) {
  if (label.empty()) throw std::runtime_error("empty multi-tag label");
  MultiTag mt;
  size_t start = 0;
  while (true) {
    size_t pos = label.find('+', start);
    std::string part = label.substr(start, pos == std::string::npos
                                               ? std::string::npos
                                               : pos - start);
    if (part.empty()) throw std::runtime_error("malformed multi-tag label: " + label);
    mt.tags.push_back(part);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return mt;
}

struct Token {
  std::string surface;
  int index = 0; // 0-based position in sentence
};

struct Sentence {
  std::vector<Token> tokens;
  std::vector<Analysis> gold; // empty, or one analysis per token

  bool has_gold() const { return !gold.empty(); }
};

inline void validate_sentence(const Sentence& s) {
  for (size_t i = 0; i < s.tokens.size(); ++i) {
    if (s.tokens[i].surface.empty())
      throw std::runtime_error("token surface must be non-empty");
    if (s.tokens[i].index != static_cast<int>(i))
      throw std::runtime_error("token indices must be contiguous from 0");
  }
  if (!s.gold.empty() && s.gold.size() != s.tokens.size())
    throw std::runtime_error("gold analysis count does not match token count");
}

struct Corpus {
  std::vector<Sentence> sentences;
  // Insertion-ordered by first occurrence in gold.
  std::vector<std::string> tag_inventory;
  std::vector<std::string> multitag_inventory;
};

// Deterministic inventories by first occurrence over gold analyses.
inline void build_inventories(Corpus& corpus) {
  corpus.tag_inventory.clear();
  corpus.multitag_inventory.clear();
  bool any_gold = false;
  auto add_unique = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& sent : corpus.sentences) {
    for (const auto& a : sent.gold) {
      any_gold = true;
      for (const auto& m : a.morphemes) add_unique(corpus.tag_inventory, m.tag);
      add_unique(corpus.multitag_inventory, canonical_label(multitag_of(a)));
    }
  }
  if (!any_gold)
    throw std::runtime_error("cannot build inventories: corpus has no gold analyses");
}

} // namespace mlt
