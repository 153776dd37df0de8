#pragma once

// Wide-coverage lexicon: exact-match token lookup plus rule-based analysis
// expansion for unknown word forms (clitic-prefix stripping over an
// open-class tag set).

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlt/core.hpp"
#include "mlt/io.hpp"

namespace mlt {

struct Lexicon {
  std::map<std::string, std::vector<Analysis>> entries;
  std::vector<std::pair<std::string, std::string>> prefix_table; // (form, tag)
  std::vector<std::string> open_class_tags;
  int max_prefix_chain = 3;
  int max_morphemes = kDefaultMaxMorphemesPerToken;
};

inline Lexicon default_lexicon_config() {
  Lexicon lex;
  lex.prefix_table = {{"h", "DET"}, {"w", "CONJ"}, {"b", "ADP"}, {"k", "ADP"},
                      {"l", "ADP"}, {"m", "ADP"}, {"f", "SCONJ"}};
  lex.open_class_tags = {"NOUN", "VERB", "ADJ", "PROPN"};
  return lex;
}

inline void add_entry(Lexicon& lex, const std::string& surface,
                      const Analysis& analysis) {
  validate_analysis(analysis, lex.max_morphemes);
  auto& v = lex.entries[surface];
  if (std::find(v.begin(), v.end(), analysis) == v.end()) v.push_back(analysis);
}

// Exact-match lookup; empty when absent (no OOV expansion here).
inline std::vector<Analysis> lookup(const Lexicon& lex,
                                    const std::string& surface) {
  if (surface.empty()) throw std::runtime_error("lookup: empty surface");
  auto it = lex.entries.find(surface);
  if (it == lex.entries.end()) return {};
  return it->second;
}

inline bool analysis_concatenates_to(const Analysis& a,
                                     const std::string& surface) {
  std::string joined;
  for (const auto& m : a.morphemes) joined += m.form;
  return joined == surface;
}

namespace detail {

inline void oov_expand(const Lexicon& lex, const std::string& rest,
                       std::vector<Morpheme>& chain,
                       std::set<Analysis>& out) {
  // Remainder as a bare open-class word.
  for (const auto& tag : lex.open_class_tags) {
    Analysis a;
    a.morphemes = chain;
    a.morphemes.push_back({rest, tag, "", {}});
    if (static_cast<int>(a.morphemes.size()) <= lex.max_morphemes)
      out.insert(a);
  }
  // Remainder attested in the lexicon: splice its analyses after the chain.
  // Only concatenative analyses qualify; OOV output must spell the surface.
  auto it = lex.entries.find(rest);
  if (it != lex.entries.end() && !chain.empty()) {
    for (const auto& sub : it->second) {
      if (!analysis_concatenates_to(sub, rest)) continue;
      Analysis a;
      a.morphemes = chain;
      a.morphemes.insert(a.morphemes.end(), sub.morphemes.begin(),
                         sub.morphemes.end());
      if (static_cast<int>(a.morphemes.size()) <= lex.max_morphemes)
        out.insert(a);
    }
  }
  if (static_cast<int>(chain.size()) >= lex.max_prefix_chain) return;
  for (const auto& [form, tag] : lex.prefix_table) {
    if (rest.size() > form.size() && rest.compare(0, form.size(), form) == 0) {
      chain.push_back({form, tag, "", {}});
      oov_expand(lex, rest.substr(form.size()), chain, out);
      chain.pop_back();
    }
  }
}

} // namespace detail

// All analyses P1..Pk + R with k <= max_prefix_chain clitics stripped from
// the left and remainder R tagged with each open-class tag (plus lexicon
// splices of attested remainders). Never empty: k=0 always contributes.
inline std::vector<Analysis> analyze_oov(const Lexicon& lex,
                                         const std::string& surface) {
  if (surface.empty()) throw std::runtime_error("analyze_oov: empty surface");
  if (lex.open_class_tags.empty())
    throw std::runtime_error("analyze_oov: no open-class tags configured");
  std::set<Analysis> out;
  std::vector<Morpheme> chain;
  detail::oov_expand(lex, surface, chain, out);
  return {out.begin(), out.end()};
}

// Lookup with OOV fallback; guaranteed non-empty.
inline std::vector<Analysis> analyses_for(const Lexicon& lex,
                                          const std::string& surface) {
  auto v = lookup(lex, surface);
  if (v.empty()) v = analyze_oov(lex, surface);
  return v;
}

// ---------------------------------------------------------------------------
// Lexicon file format (UTF-8, one token per line):
//   #morpholattice-v1
//   #prefix FORM TAG
//   #openclass TAG
//   SURFACE<TAB>ANALYSIS(<TAB>ANALYSIS)*   with ANALYSIS = "form/tag ..."
// Bare '#' starts a comment line.
// ---------------------------------------------------------------------------

inline const char* kFormatHeader = "#morpholattice-v1";

namespace detail {

inline Analysis parse_analysis_field(const std::string& field, int lineno) {
  Analysis a;
  std::istringstream items(field);
  std::string item;
  while (items >> item) {
    size_t slash = item.rfind('/');
    if (slash == std::string::npos || slash == 0 || slash + 1 == item.size())
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": malformed morpheme '" + item +
                               "' (expected form/tag)");
    a.morphemes.push_back({item.substr(0, slash), item.substr(slash + 1), "", {}});
  }
  if (a.morphemes.empty())
    throw std::runtime_error("line " + std::to_string(lineno) +
                             ": empty analysis field");
  return a;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string::npos
                                         ? std::string::npos
                                         : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

} // namespace detail

inline Lexicon load_lexicon(std::istream& in) {
  Lexicon lex;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line);
      std::string directive;
      ss >> directive;
      if (directive == "#prefix") {
        std::string form, tag;
        if (!(ss >> form >> tag))
          throw std::runtime_error("line " + std::to_string(lineno) +
                                   ": #prefix expects FORM TAG");
        auto pair = std::make_pair(form, tag);
        if (std::find(lex.prefix_table.begin(), lex.prefix_table.end(), pair) ==
            lex.prefix_table.end())
          lex.prefix_table.push_back(pair);
      } else if (directive == "#openclass") {
        std::string tag;
        if (!(ss >> tag))
          throw std::runtime_error("line " + std::to_string(lineno) +
                                   ": #openclass expects TAG");
        if (std::find(lex.open_class_tags.begin(), lex.open_class_tags.end(),
                      tag) == lex.open_class_tags.end())
          lex.open_class_tags.push_back(tag);
      }
      continue; // other '#' lines are comments / header
    }
    auto fields = detail::split_tabs(line);
    if (fields.size() < 2)
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": expected SURFACE<TAB>ANALYSIS...");
    const std::string& surface = fields[0];
    if (surface.empty())
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": empty surface");
    for (size_t i = 1; i < fields.size(); ++i)
      add_entry(lex, surface, detail::parse_analysis_field(fields[i], lineno));
  }
  return lex;
}

inline Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon file: " + path);
  return load_lexicon(in);
}

inline void save_lexicon(const Lexicon& lex, std::ostream& out) {
  out << kFormatHeader << " lexicon\n";
  for (const auto& [form, tag] : lex.prefix_table)
    out << "#prefix " << form << ' ' << tag << '\n';
  for (const auto& tag : lex.open_class_tags) out << "#openclass " << tag << '\n';
  for (const auto& [surface, analyses] : lex.entries) {
    out << surface;
    for (const auto& a : analyses) {
      out << '\t';
      for (size_t i = 0; i < a.morphemes.size(); ++i) {
        if (i) out << ' ';
        out << a.morphemes[i].form << '/' << a.morphemes[i].tag;
      }
    }
    out << '\n';
  }
}

inline void save_lexicon(const Lexicon& lex, const std::string& path) {
  write_file_atomic(path, [&](std::ostream& out) { save_lexicon(lex, out); });
}

} // namespace mlt
