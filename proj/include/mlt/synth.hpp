#pragma once

// Synthetic fusional language: clitic prefixes attach to open-class stems,
// and a designated set of cliticized surfaces is homographic with a fused
// verb reading (clitic+stem vs whole-surface VERB), resolved by sentence
// context. Stems may begin with clitic letters, so spelling alone never
// reveals whether a surface is cliticized — only the lexicon knows. A
// portion of the ambiguous vocabulary is held out of the training split,
// and both splits carry out-of-lexicon stems. Everything is deterministic
// in the seed.

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlt/core.hpp"
#include "mlt/lexicon.hpp"
#include "mlt/rng.hpp"

namespace mlt {

struct SynthSpec {
  uint64_t seed = 1;
  int n_stems = 40;
  double ambiguity = 0.25; // probability a token uses an ambiguous surface
  double oov_rate = 0.0;   // probability a token uses an unseen stem
  int min_len = 3;
  int max_len = 8;
  int n_train = 200;
  int n_dev = 50;
};

struct SynthData {
  Lexicon lexicon;
  Corpus train;
  Corpus dev;
};

namespace detail {

// Clitic letters are part of the stem alphabet on purpose: the first
// letter of a surface must not give its segmentation away.
inline const std::string kStemAlphabet = "blpqrstuvwyz";

inline std::string random_stem(Rng& rng) {
  int len = 3 + static_cast<int>(rng.uniform_int(3));
  std::string s;
  for (int i = 0; i < len; ++i)
    s += kStemAlphabet[rng.uniform_int(kStemAlphabet.size())];
  return s;
}

} // namespace detail

inline void validate_synth_spec(const SynthSpec& spec) {
  if (spec.n_stems < 12)
    throw std::runtime_error("synth: need at least 12 stems");
  if (spec.ambiguity < 0.0 || spec.ambiguity > 1.0)
    throw std::runtime_error("synth: ambiguity must be in [0,1]");
  if (spec.oov_rate < 0.0 || spec.oov_rate > 1.0)
    throw std::runtime_error("synth: oov_rate must be in [0,1]");
  if (spec.min_len < 1 || spec.max_len < spec.min_len)
    throw std::runtime_error("synth: invalid sentence length range");
  if (spec.n_train < 0 || spec.n_dev < 0)
    throw std::runtime_error("synth: negative corpus size");
}

inline SynthData generate_synth(const SynthSpec& spec) {
  validate_synth_spec(spec);
  Rng rng(spec.seed);
  SynthData data;
  Lexicon& lex = data.lexicon;
  lex.prefix_table = {{"w", "CONJ"}, {"b", "ADP"}, {"l", "ADP"}};
  lex.open_class_tags = {"NOUN", "VERB", "ADJ"};
  const std::vector<std::pair<std::string, std::string>> clitics = {
      {"w", "CONJ"}, {"b", "ADP"}, {"l", "ADP"}};

  // Stem inventory with cycling parts of speech; all registered surfaces
  // are tracked so no accidental homographs slip in.
  const std::vector<std::string> stem_tags = {"NOUN", "VERB", "ADJ"};
  std::vector<std::string> stems;
  std::vector<std::string> stem_pos;
  std::set<std::string> taken; // every surface or stem string in use
  while (static_cast<int>(stems.size()) < spec.n_stems) {
    std::string s = detail::random_stem(rng);
    if (!taken.insert(s).second) continue;
    stem_pos.push_back(stem_tags[stems.size() % stem_tags.size()]);
    stems.push_back(s);
  }
  for (size_t i = 0; i < stems.size(); ++i) {
    Analysis a;
    a.morphemes.push_back({stems[i], stem_pos[i], "", {}});
    add_entry(lex, stems[i], a);
  }

  // Cliticized combinations, skipping any surface collision.
  struct Combo {
    std::string surface;
    size_t stem;
    size_t clitic;
  };
  std::vector<Combo> combos;
  for (size_t i = 0; i < stems.size(); ++i)
    for (size_t c = 0; c < clitics.size(); ++c) {
      std::string surface = clitics[c].first + stems[i];
      if (!taken.insert(surface).second) continue;
      Analysis a;
      a.morphemes.push_back({clitics[c].first, clitics[c].second, "", {}});
      a.morphemes.push_back({stems[i], stem_pos[i], "", {}});
      add_entry(lex, surface, a);
      combos.push_back({surface, i, c});
    }

  // Ambiguous types: every third combination over a NOUN stem also gets a
  // fused whole-surface VERB reading. The tail of the list is held out of
  // the training split, so some dev ambiguity is lexically unseen.
  std::vector<size_t> ambiguous; // indices into combos
  for (size_t k = 0; k < combos.size(); ++k)
    if (stem_pos[combos[k].stem] == "NOUN" && ambiguous.size() < 12 &&
        k % 2 == 0) {
      Analysis fused;
      fused.morphemes.push_back({combos[k].surface, "VERB", "", {}});
      add_entry(lex, combos[k].surface, fused);
      ambiguous.push_back(k);
    }
  if (ambiguous.size() < 4)
    throw std::runtime_error("synth: too few ambiguous surfaces; raise n_stems");
  size_t n_visible = (ambiguous.size() * 2 + 2) / 3; // ~2/3 seen in train

  // Regular cliticized tokens must avoid the ambiguous surfaces.
  std::vector<size_t> plain_combos;
  {
    std::set<size_t> amb_set(ambiguous.begin(), ambiguous.end());
    for (size_t k = 0; k < combos.size(); ++k)
      if (!amb_set.count(k)) plain_combos.push_back(k);
  }

  auto gen_corpus = [&](int n_sentences, bool heldout_ambiguity) {
    Corpus corpus;
    for (int s = 0; s < n_sentences; ++s) {
      Sentence sent;
      int len = spec.min_len +
                static_cast<int>(rng.uniform_int(spec.max_len - spec.min_len + 1));
      std::string prev_tag;
      for (int t = 0; t < len; ++t) {
        std::string surface;
        Analysis gold;
        if (rng.bernoulli(spec.oov_rate)) {
          // Unseen stem; gold is the whole-surface NOUN reading, which the
          // OOV expander always proposes.
          std::string stem;
          do {
            stem = detail::random_stem(rng);
          } while (taken.count(stem));
          surface = stem;
          gold.morphemes.push_back({stem, "NOUN", "", {}});
        } else if (rng.bernoulli(spec.ambiguity)) {
          size_t pool = heldout_ambiguity ? ambiguous.size() : n_visible;
          const Combo& cb = combos[ambiguous[rng.uniform_int(pool)]];
          surface = cb.surface;
          // Context rule: after a VERB the surface is clitic + NOUN,
          // otherwise it is the fused VERB.
          if (prev_tag == "VERB") {
            gold.morphemes.push_back(
                {clitics[cb.clitic].first, clitics[cb.clitic].second, "", {}});
            gold.morphemes.push_back({stems[cb.stem], "NOUN", "", {}});
          } else {
            gold.morphemes.push_back({surface, "VERB", "", {}});
          }
        } else if (!plain_combos.empty() && rng.bernoulli(0.3)) {
          const Combo& cb = combos[plain_combos[rng.uniform_int(plain_combos.size())]];
          surface = cb.surface;
          gold.morphemes.push_back(
              {clitics[cb.clitic].first, clitics[cb.clitic].second, "", {}});
          gold.morphemes.push_back({stems[cb.stem], stem_pos[cb.stem], "", {}});
        } else {
          size_t i = rng.uniform_int(stems.size());
          surface = stems[i];
          gold.morphemes.push_back({stems[i], stem_pos[i], "", {}});
        }
        sent.tokens.push_back({surface, t});
        sent.gold.push_back(gold);
        prev_tag = gold.morphemes.back().tag;
      }
      corpus.sentences.push_back(std::move(sent));
    }
    build_inventories(corpus);
    return corpus;
  };

  data.train = gen_corpus(spec.n_train, false);
  data.dev = gen_corpus(spec.n_dev, true);
  return data;
}

// Sample statistic behind the ambiguity knob: fraction of tokens whose
// surface has more than one analysis in the lexicon.
inline double ambiguous_token_fraction(const Corpus& corpus,
                                       const Lexicon& lex) {
  long ambiguous = 0, total = 0;
  for (const auto& sent : corpus.sentences)
    for (const auto& tok : sent.tokens) {
      ++total;
      if (lookup(lex, tok.surface).size() > 1) ++ambiguous;
    }
  if (total == 0) throw std::runtime_error("ambiguous_token_fraction: empty corpus");
  return static_cast<double>(ambiguous) / static_cast<double>(total);
}

} // namespace mlt
