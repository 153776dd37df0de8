#pragma once

// File formats: lattice files, gold/prediction token files, and binary
// model checkpoints. All text formats are UTF-8, '\n' line endings, and
// start with the `#morpholattice-v1` header line.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlt/config.hpp"
#include "mlt/core.hpp"
#include "mlt/io.hpp"
#include "mlt/lattice.hpp"
#include "mlt/tensor.hpp"

namespace mlt {

namespace detail {

inline std::runtime_error format_error(int lineno, const std::string& msg) {
  return std::runtime_error("line " + std::to_string(lineno) + ": " + msg);
}

inline int parse_int_field(const std::string& s, int lineno, const char* what) {
  if (s.empty()) throw format_error(lineno, std::string("empty ") + what);
  size_t pos = 0;
  int v;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw format_error(lineno, std::string("non-numeric ") + what + ": '" + s + "'");
  }
  if (pos != s.size())
    throw format_error(lineno, std::string("non-numeric ") + what + ": '" + s + "'");
  return v;
}

inline void expect_header(std::istream& in, int& lineno) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty file: missing format header");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind(kFormatHeader, 0) != 0)
    throw format_error(lineno, std::string("expected header ") + kFormatHeader);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Lattice files. Per sentence: a `#tokens S1 S2 ...` line, then one line per
// arc: FROM TO FORM LEMMA CPOS POS FEATS TOKEN_ID (tab-separated, '_' for
// empty lemma/feats, CPOS mirrors POS). Sentences separated by blank lines.
// ---------------------------------------------------------------------------

inline void write_lattice_file(const std::vector<Lattice>& lattices,
                               std::ostream& out) {
  out << kFormatHeader << " lattice\n";
  for (size_t s = 0; s < lattices.size(); ++s) {
    if (s) out << '\n';
    const Lattice& lat = lattices[s];
    out << "#tokens";
    for (const auto& surf : lat.surfaces) out << ' ' << surf;
    out << '\n';
    for (const auto& a : lat.arcs) {
      const std::string lemma = a.morpheme.lemma.empty() ? "_" : a.morpheme.lemma;
      std::string feats = "_";
      if (!a.morpheme.feats.empty()) {
        feats.clear();
        for (const auto& [k, v] : a.morpheme.feats) {
          if (!feats.empty()) feats += '|';
          feats += k + "=" + v;
        }
      }
      out << a.from_node << '\t' << a.to_node << '\t' << a.morpheme.form << '\t'
          << lemma << '\t' << a.morpheme.tag << '\t' << a.morpheme.tag << '\t'
          << feats << '\t' << a.token_index << '\n';
    }
  }
}

inline void write_lattice_file(const std::vector<Lattice>& lattices,
                               const std::string& path) {
  write_file_atomic(path, [&](std::ostream& out) {
    write_lattice_file(lattices, out);
  });
}

inline std::vector<Lattice> read_lattice_file(std::istream& in) {
  int lineno = 0;
  detail::expect_header(in, lineno);
  std::vector<Lattice> lattices;
  std::vector<std::string> surfaces;
  struct RawArc {
    int from, to, token;
    Morpheme m;
    int lineno;
  };
  std::vector<RawArc> raw;
  int sentence_start_line = 0;

  auto flush = [&]() {
    if (raw.empty() && surfaces.empty()) return;
    if (raw.empty())
      throw detail::format_error(sentence_start_line, "sentence has no arcs");
    // Renumber nodes densely, preserving order.
    std::vector<int> nodes;
    for (const auto& a : raw) {
      nodes.push_back(a.from);
      nodes.push_back(a.to);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    auto dense = [&](int n) {
      return static_cast<int>(std::lower_bound(nodes.begin(), nodes.end(), n) -
                              nodes.begin());
    };
    Lattice lat;
    lat.num_nodes = static_cast<int>(nodes.size());
    int max_token = -1;
    for (const auto& a : raw) max_token = std::max(max_token, a.token);
    if (static_cast<int>(surfaces.size()) != max_token + 1)
      throw detail::format_error(sentence_start_line,
                                 "#tokens count does not match arc token ids");
    lat.surfaces = surfaces;
    // Token boundaries from per-token node extents.
    lat.token_boundaries.assign(max_token + 2, 0);
    std::vector<int> lo(max_token + 1, INT32_MAX), hi(max_token + 1, -1);
    for (const auto& a : raw) {
      if (a.token < 0) throw detail::format_error(a.lineno, "negative token id");
      lo[a.token] = std::min(lo[a.token], dense(a.from));
      hi[a.token] = std::max(hi[a.token], dense(a.to));
    }
    for (int t = 0; t <= max_token; ++t) {
      if (hi[t] < 0)
        throw detail::format_error(sentence_start_line,
                                   "token " + std::to_string(t) + " has no arcs");
      lat.token_boundaries[t] = lo[t];
      if (t > 0 && lo[t] != hi[t - 1])
        throw detail::format_error(sentence_start_line,
                                   "token spans are not contiguous");
    }
    lat.token_boundaries[max_token + 1] = hi[max_token];
    int next_id = 0;
    for (const auto& a : raw)
      lat.arcs.push_back({next_id++, dense(a.from), dense(a.to), a.m, a.token});
    try {
      validate_lattice(lat);
    } catch (const std::exception& e) {
      throw detail::format_error(sentence_start_line,
                                 std::string("invalid lattice: ") + e.what());
    }
    lattices.push_back(std::move(lat));
    raw.clear();
    surfaces.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.rfind("#tokens", 0) == 0) {
      if (!surfaces.empty() || !raw.empty())
        flush();
      sentence_start_line = lineno;
      std::istringstream ss(line.substr(7));
      std::string tok;
      while (ss >> tok) surfaces.push_back(tok);
      if (surfaces.empty())
        throw detail::format_error(lineno, "#tokens line lists no tokens");
      continue;
    }
    if (line[0] == '#') continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != 8)
      throw detail::format_error(lineno, "expected 8 tab-separated columns, got " +
                                             std::to_string(fields.size()));
    if (surfaces.empty())
      throw detail::format_error(lineno, "arc line before #tokens line");
    RawArc a;
    a.from = detail::parse_int_field(fields[0], lineno, "FROM node id");
    a.to = detail::parse_int_field(fields[1], lineno, "TO node id");
    a.token = detail::parse_int_field(fields[7], lineno, "TOKEN_ID");
    if (a.from >= a.to)
      throw detail::format_error(lineno, "FROM must be less than TO");
    a.m.form = fields[2];
    if (fields[3] != "_") a.m.lemma = fields[3];
    a.m.tag = fields[5];
    if (fields[6] != "_") {
      std::istringstream fs(fields[6]);
      std::string kv;
      while (std::getline(fs, kv, '|')) {
        size_t eq = kv.find('=');
        if (eq == std::string::npos)
          throw detail::format_error(lineno, "malformed FEATS item: " + kv);
        a.m.feats[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
    }
    a.lineno = lineno;
    raw.push_back(std::move(a));
  }
  flush();
  return lattices;
}

inline std::vector<Lattice> read_lattice_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open lattice file: " + path);
  return read_lattice_file(in);
}

// ---------------------------------------------------------------------------
// Gold / prediction files: one morpheme per line `TOKEN_ID FORM TAG`
// (tab-separated), blank line between sentences. Token surfaces are the
// concatenation of their morpheme forms.
// ---------------------------------------------------------------------------

inline void write_segpos_file(
    const std::vector<std::vector<Analysis>>& sentences, std::ostream& out) {
  out << kFormatHeader << '\n';
  for (size_t s = 0; s < sentences.size(); ++s) {
    if (s) out << '\n';
    for (size_t t = 0; t < sentences[s].size(); ++t)
      for (const auto& m : sentences[s][t].morphemes)
        out << t << '\t' << m.form << '\t' << m.tag << '\n';
  }
}

inline void write_predictions(const std::string& path,
                              const std::vector<std::vector<Analysis>>& pred) {
  write_file_atomic(path, [&](std::ostream& out) {
    write_segpos_file(pred, out);
  });
}

inline Corpus read_gold_file(std::istream& in) {
  int lineno = 0;
  detail::expect_header(in, lineno);
  Corpus corpus;
  std::vector<Analysis> current; // one per token
  auto flush = [&]() {
    if (current.empty()) return;
    Sentence sent;
    for (size_t t = 0; t < current.size(); ++t) {
      std::string surface;
      for (const auto& m : current[t].morphemes) surface += m.form;
      sent.tokens.push_back({surface, static_cast<int>(t)});
    }
    sent.gold = current;
    validate_sentence(sent);
    corpus.sentences.push_back(std::move(sent));
    current.clear();
  };
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != 3)
      throw detail::format_error(lineno, "expected TOKEN_ID<TAB>FORM<TAB>TAG");
    int tok = detail::parse_int_field(fields[0], lineno, "TOKEN_ID");
    if (tok < 0) throw detail::format_error(lineno, "negative TOKEN_ID");
    if (tok > static_cast<int>(current.size()))
      throw detail::format_error(lineno, "token index gap: saw " +
                                             std::to_string(tok) + " after " +
                                             std::to_string(current.size() - 1) +
                                             " tokens");
    if (tok == static_cast<int>(current.size())) current.emplace_back();
    if (tok != static_cast<int>(current.size()) - 1)
      throw detail::format_error(lineno, "token index out of order");
    Morpheme m{fields[1], fields[2], "", {}};
    validate_morpheme(m);
    current.back().morphemes.push_back(std::move(m));
  }
  flush();
  build_inventories(corpus);
  return corpus;
}

inline Corpus read_gold_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open gold file: " + path);
  return read_gold_file(in);
}

// Predictions reuse the gold grammar; no inventories are built.
inline std::vector<std::vector<Analysis>> read_predictions(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open prediction file: " + path);
  int lineno = 0;
  detail::expect_header(in, lineno);
  std::vector<std::vector<Analysis>> result;
  std::vector<Analysis> current;
  auto flush = [&]() {
    if (!current.empty()) {
      result.push_back(current);
      current.clear();
    }
  };
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != 3)
      throw detail::format_error(lineno, "expected TOKEN_ID<TAB>FORM<TAB>TAG");
    int tok = detail::parse_int_field(fields[0], lineno, "TOKEN_ID");
    if (tok == static_cast<int>(current.size())) current.emplace_back();
    if (tok != static_cast<int>(current.size()) - 1)
      throw detail::format_error(lineno, "token index gap or disorder");
    current.back().morphemes.push_back({fields[1], fields[2], "", {}});
  }
  flush();
  return result;
}

// ---------------------------------------------------------------------------
// Model checkpoints: one self-describing binary container holding a config
// text block, named string lists (vocabularies), and named tensors.
// Bit-exact on reload.
// ---------------------------------------------------------------------------

struct Checkpoint {
  Config config;
  std::map<std::string, std::vector<std::string>> vocabs;
  std::map<std::string, Tensor> tensors;
};

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'M', 'L', 'T', 'K', 'P', 'T', '1', '\n'};

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw std::runtime_error("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

inline void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
  std::uint64_t n = get_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return s;
}

} // namespace detail

inline void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  out.write(detail::kCheckpointMagic, 8);
  detail::put_string(out, ckpt.config.serialize());
  detail::put_u64(out, ckpt.vocabs.size());
  for (const auto& [name, items] : ckpt.vocabs) {
    detail::put_string(out, name);
    detail::put_u64(out, items.size());
    for (const auto& s : items) detail::put_string(out, s);
  }
  detail::put_u64(out, ckpt.tensors.size());
  for (const auto& [name, t] : ckpt.tensors) {
    detail::put_string(out, name);
    detail::put_u64(out, t.shape.size());
    for (size_t d : t.shape) detail::put_u64(out, d);
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * 8));
  }
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  write_file_atomic(path, [&](std::ostream& out) { save_checkpoint(ckpt, out); });
}

inline Checkpoint load_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
    throw std::runtime_error("not a model checkpoint (bad magic header)");
  Checkpoint ckpt;
  std::istringstream cfg_in(detail::get_string(in));
  ckpt.config = Config::parse(cfg_in);
  std::uint64_t nvocab = detail::get_u64(in);
  for (std::uint64_t i = 0; i < nvocab; ++i) {
    std::string name = detail::get_string(in);
    std::uint64_t n = detail::get_u64(in);
    std::vector<std::string> items;
    items.reserve(n);
    for (std::uint64_t j = 0; j < n; ++j) items.push_back(detail::get_string(in));
    ckpt.vocabs.emplace(std::move(name), std::move(items));
  }
  std::uint64_t ntensor = detail::get_u64(in);
  for (std::uint64_t i = 0; i < ntensor; ++i) {
    std::string name = detail::get_string(in);
    std::uint64_t ndim = detail::get_u64(in);
    std::vector<size_t> shape;
    for (std::uint64_t d = 0; d < ndim; ++d)
      shape.push_back(static_cast<size_t>(detail::get_u64(in)));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * 8));
    if (!in) throw std::runtime_error("checkpoint truncated in tensor " + name);
    ckpt.tensors.emplace(std::move(name), std::move(t));
  }
  // Reject trailing garbage.
  if (in.peek() != std::char_traits<char>::eof())
    throw std::runtime_error("trailing bytes after checkpoint payload");
  return ckpt;
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return load_checkpoint(in);
}

} // namespace mlt
