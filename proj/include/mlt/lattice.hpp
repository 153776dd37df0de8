#pragma once

// Morphological lattices: per-sentence DAGs whose arcs carry morphemes.
// Analyses of a token are parallel disjoint sub-paths between consecutive
// token-boundary nodes (no prefix sharing).

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlt/core.hpp"
#include "mlt/lexicon.hpp"

namespace mlt {

struct Arc {
  int id = 0;
  int from_node = 0;
  int to_node = 0;
  Morpheme morpheme;
  int token_index = 0;
};

struct Lattice {
  int num_nodes = 0; // nodes are 0..num_nodes-1
  std::vector<Arc> arcs;
  // B0 < B1 < ... < BT; token t spans nodes [B(t), B(t+1)].
  std::vector<int> token_boundaries;
  std::vector<std::string> surfaces; // token surfaces, |surfaces| == T

  int token_count() const {
    return static_cast<int>(token_boundaries.size()) - 1;
  }
  int source() const { return token_boundaries.front(); }
  int sink() const { return token_boundaries.back(); }
};

struct LatticePath {
  std::vector<int> arc_ids;
  bool operator==(const LatticePath& o) const { return arc_ids == o.arc_ids; }
};

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

// Canonical constructor: each token's analyses (sorted, deduplicated) become
// parallel sub-paths; node/arc ids are dense and deterministic.
inline Lattice build_from_analyses(
    const std::vector<std::string>& surfaces,
    std::vector<std::vector<Analysis>> per_token) {
  if (surfaces.size() != per_token.size())
    throw std::runtime_error("build_from_analyses: surface/analysis count mismatch");
  Lattice lat;
  lat.surfaces = surfaces;
  lat.token_boundaries.push_back(0);
  int next_node = 1;
  int next_arc = 0;
  for (size_t t = 0; t < per_token.size(); ++t) {
    auto& analyses = per_token[t];
    if (analyses.empty())
      throw std::runtime_error("token " + std::to_string(t) + " has no analyses");
    std::sort(analyses.begin(), analyses.end());
    analyses.erase(std::unique(analyses.begin(), analyses.end()),
                   analyses.end());
    int start = lat.token_boundaries.back();
    int inner = 0;
    for (const auto& a : analyses)
      inner += static_cast<int>(a.morphemes.size()) - 1;
    int end = start + inner + 1;
    int inner_next = start + 1;
    for (const auto& a : analyses) {
      int prev = start;
      for (size_t i = 0; i < a.morphemes.size(); ++i) {
        int to = (i + 1 == a.morphemes.size()) ? end : inner_next++;
        lat.arcs.push_back({next_arc++, prev, to, a.morphemes[i],
                            static_cast<int>(t)});
        prev = to;
      }
    }
    lat.token_boundaries.push_back(end);
    next_node = end + 1;
  }
  lat.num_nodes = next_node;
  return lat;
}

inline Lattice build_lattice(const Sentence& sent, const Lexicon& lex) {
  if (sent.tokens.empty())
    throw std::runtime_error("build_lattice: empty sentence");
  std::vector<std::string> surfaces;
  std::vector<std::vector<Analysis>> per_token;
  for (const auto& tok : sent.tokens) {
    surfaces.push_back(tok.surface);
    per_token.push_back(analyses_for(lex, tok.surface));
  }
  return build_from_analyses(surfaces, std::move(per_token));
}

inline Lattice oracle_lattice(const Sentence& sent) {
  if (!sent.has_gold())
    throw std::runtime_error("oracle_lattice: sentence has no gold analyses");
  std::vector<std::string> surfaces;
  std::vector<std::vector<Analysis>> per_token;
  for (size_t t = 0; t < sent.tokens.size(); ++t) {
    surfaces.push_back(sent.tokens[t].surface);
    per_token.push_back({sent.gold[t]});
  }
  return build_from_analyses(surfaces, std::move(per_token));
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline void validate_lattice(const Lattice& lat) {
  if (lat.token_boundaries.size() < 2)
    throw std::runtime_error("lattice must have at least one token");
  if (static_cast<int>(lat.surfaces.size()) != lat.token_count())
    throw std::runtime_error("lattice surface count mismatch");
  for (size_t i = 1; i < lat.token_boundaries.size(); ++i)
    if (lat.token_boundaries[i] <= lat.token_boundaries[i - 1])
      throw std::runtime_error("token boundaries must be strictly increasing");
  if (lat.source() != 0 || lat.sink() != lat.num_nodes - 1)
    throw std::runtime_error("lattice nodes must span [source, sink]");
  std::vector<int> ids;
  for (const auto& a : lat.arcs) {
    ids.push_back(a.id);
    if (a.from_node >= a.to_node)
      throw std::runtime_error("arc " + std::to_string(a.id) +
                               ": from_node must precede to_node");
    if (a.token_index < 0 || a.token_index >= lat.token_count())
      throw std::runtime_error("arc " + std::to_string(a.id) +
                               ": invalid token index");
    int lo = lat.token_boundaries[a.token_index];
    int hi = lat.token_boundaries[a.token_index + 1];
    if (a.from_node < lo || a.to_node > hi)
      throw std::runtime_error("arc " + std::to_string(a.id) +
                               " escapes its token span");
    validate_morpheme(a.morpheme);
  }
  std::sort(ids.begin(), ids.end());
  for (size_t i = 0; i < ids.size(); ++i)
    if (ids[i] != static_cast<int>(i))
      throw std::runtime_error("arc ids must be dense 0..n-1");
  // Every node must be reachable from the source and co-reachable from the
  // sink; this also guarantees each token has a complete sub-path.
  std::vector<char> fwd(lat.num_nodes, 0), bwd(lat.num_nodes, 0);
  fwd[lat.source()] = 1;
  std::vector<std::vector<const Arc*>> out(lat.num_nodes), in(lat.num_nodes);
  for (const auto& a : lat.arcs) {
    out[a.from_node].push_back(&a);
    in[a.to_node].push_back(&a);
  }
  for (int n = 0; n < lat.num_nodes; ++n)
    if (fwd[n])
      for (const Arc* a : out[n]) fwd[a->to_node] = 1;
  bwd[lat.sink()] = 1;
  for (int n = lat.num_nodes - 1; n >= 0; --n)
    if (bwd[n])
      for (const Arc* a : in[n]) bwd[a->from_node] = 1;
  for (int n = 0; n < lat.num_nodes; ++n)
    if (!fwd[n] || !bwd[n])
      throw std::runtime_error("dead node " + std::to_string(n) +
                               " (not on any source-sink path)");
}

// ---------------------------------------------------------------------------
// Graph operations
// ---------------------------------------------------------------------------

inline std::uint64_t path_count(const Lattice& lat) {
  std::vector<std::uint64_t> count(lat.num_nodes, 0);
  count[lat.source()] = 1;
  std::vector<std::vector<const Arc*>> out(lat.num_nodes);
  for (const auto& a : lat.arcs) out[a.from_node].push_back(&a);
  for (int n = 0; n < lat.num_nodes; ++n)
    for (const Arc* a : out[n]) count[a->to_node] += count[n];
  return count[lat.sink()];
}

// All source->sink paths, DFS by ascending arc id. Errors when the lattice
// holds more than `limit` paths.
inline std::vector<LatticePath> enumerate_paths(const Lattice& lat,
                                                std::uint64_t limit) {
  std::uint64_t n = path_count(lat);
  if (n > limit)
    throw std::runtime_error("path count " + std::to_string(n) +
                             " exceeds enumeration limit " +
                             std::to_string(limit));
  std::vector<std::vector<const Arc*>> out(lat.num_nodes);
  for (const auto& a : lat.arcs) out[a.from_node].push_back(&a);
  for (auto& v : out)
    std::sort(v.begin(), v.end(),
              [](const Arc* x, const Arc* y) { return x->id < y->id; });
  std::vector<LatticePath> paths;
  std::vector<int> current;
  std::function<void(int)> dfs = [&](int node) {
    if (node == lat.sink()) {
      paths.push_back({current});
      return;
    }
    for (const Arc* a : out[node]) {
      current.push_back(a->id);
      dfs(a->to_node);
      current.pop_back();
    }
  };
  dfs(lat.source());
  return paths;
}

// Total, deterministic arc order consistent with the node partial order.
inline std::vector<Arc> linearize(const Lattice& lat) {
  std::vector<Arc> arcs = lat.arcs;
  std::sort(arcs.begin(), arcs.end(), [](const Arc& a, const Arc& b) {
    if (a.from_node != b.from_node) return a.from_node < b.from_node;
    if (a.to_node != b.to_node) return a.to_node < b.to_node;
    if (a.morpheme.form != b.morpheme.form)
      return a.morpheme.form < b.morpheme.form;
    return a.morpheme.tag < b.morpheme.tag;
  });
  return arcs;
}

// Per-token analyses encoded in the lattice, in sub-path order.
inline std::vector<std::vector<Analysis>> token_analyses(const Lattice& lat) {
  std::vector<std::vector<const Arc*>> out(lat.num_nodes);
  for (const auto& a : lat.arcs) out[a.from_node].push_back(&a);
  for (auto& v : out)
    std::sort(v.begin(), v.end(),
              [](const Arc* x, const Arc* y) { return x->id < y->id; });
  std::vector<std::vector<Analysis>> result(lat.token_count());
  for (int t = 0; t < lat.token_count(); ++t) {
    int start = lat.token_boundaries[t];
    int end = lat.token_boundaries[t + 1];
    Analysis cur;
    std::function<void(int)> dfs = [&](int node) {
      if (node == end) {
        result[t].push_back(cur);
        return;
      }
      for (const Arc* a : out[node]) {
        if (a->token_index != t) continue;
        cur.morphemes.push_back(a->morpheme);
        dfs(a->to_node);
        cur.morphemes.pop_back();
      }
    };
    dfs(start);
  }
  return result;
}

// Project a path to one Analysis per token.
inline std::vector<Analysis> path_analyses(const Lattice& lat,
                                           const LatticePath& path) {
  std::map<int, const Arc*> by_id;
  for (const auto& a : lat.arcs) by_id[a.id] = &a;
  std::vector<Analysis> result(lat.token_count());
  for (int id : path.arc_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw std::runtime_error("path references unknown arc " + std::to_string(id));
    result[it->second->token_index].morphemes.push_back(it->second->morpheme);
  }
  for (const auto& a : result)
    if (a.morphemes.empty())
      throw std::runtime_error("path does not cover every token");
  return result;
}

// The unique path whose per-token (form, tag) sequences equal gold, if any.
inline std::optional<LatticePath> align_gold(const Lattice& lat,
                                             const std::vector<Analysis>& gold) {
  if (static_cast<int>(gold.size()) != lat.token_count())
    throw std::runtime_error("align_gold: gold length does not match token count");
  std::vector<std::vector<const Arc*>> out(lat.num_nodes);
  for (const auto& a : lat.arcs) out[a.from_node].push_back(&a);
  for (auto& v : out)
    std::sort(v.begin(), v.end(),
              [](const Arc* x, const Arc* y) { return x->id < y->id; });
  LatticePath path;
  for (int t = 0; t < lat.token_count(); ++t) {
    int start = lat.token_boundaries[t];
    int end = lat.token_boundaries[t + 1];
    const auto& target = gold[t].morphemes;
    std::vector<int> sub;
    // DFS with backtracking: distinct sub-paths may share (form, tag)
    // prefixes even though their nodes are disjoint.
    std::function<bool(int, size_t)> match = [&](int node, size_t i) -> bool {
      if (i == target.size()) return node == end;
      for (const Arc* a : out[node]) {
        if (a->token_index != t) continue;
        if (!(a->morpheme == target[i])) continue;
        if (a->to_node == end && i + 1 != target.size()) continue;
        sub.push_back(a->id);
        if (match(a->to_node, i + 1)) return true;
        sub.pop_back();
      }
      return false;
    };
    if (!match(start, 0)) return std::nullopt;
    path.arc_ids.insert(path.arc_ids.end(), sub.begin(), sub.end());
  }
  return path;
}

// Lattice completion: add minimal sub-paths so align_gold succeeds.
// Rebuilds in canonical form, hence idempotent.
inline Lattice inject_gold(const Lattice& lat,
                           const std::vector<Analysis>& gold) {
  if (static_cast<int>(gold.size()) != lat.token_count())
    throw std::runtime_error("inject_gold: gold length does not match token count");
  auto per_token = token_analyses(lat);
  for (int t = 0; t < lat.token_count(); ++t) {
    auto& v = per_token[t];
    if (std::find(v.begin(), v.end(), gold[t]) == v.end())
      v.push_back(gold[t]);
  }
  return build_from_analyses(lat.surfaces, std::move(per_token));
}

} // namespace mlt
