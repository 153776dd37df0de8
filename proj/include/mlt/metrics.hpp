#pragma once

// Seg/POS evaluation: aligned per-token multisets of (form, tag) pairs,
// multi-tag token accuracy, and the model x regime report grid.

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlt/core.hpp"

namespace mlt {

struct ScoreReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long matched = 0;
  long gold_pairs = 0;
  long pred_pairs = 0;
};

// Position-insensitive multiset intersection of (form, tag) pairs, per
// token, summed over the corpus.
inline ScoreReport seg_pos_f1(
    const std::vector<std::vector<Analysis>>& gold,
    const std::vector<std::vector<Analysis>>& pred) {
  if (gold.size() != pred.size())
    throw std::runtime_error("seg_pos_f1: sentence count mismatch (" +
                             std::to_string(gold.size()) + " vs " +
                             std::to_string(pred.size()) + ")");
  ScoreReport r;
  for (size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size())
      throw std::runtime_error("seg_pos_f1: token count mismatch in sentence " +
                               std::to_string(s));
    for (size_t t = 0; t < gold[s].size(); ++t) {
      std::map<std::pair<std::string, std::string>, long> bag;
      for (const auto& m : gold[s][t].morphemes) {
        ++bag[{m.form, m.tag}];
        ++r.gold_pairs;
      }
      for (const auto& m : pred[s][t].morphemes) {
        ++r.pred_pairs;
        auto it = bag.find({m.form, m.tag});
        if (it != bag.end() && it->second > 0) {
          --it->second;
          ++r.matched;
        }
      }
    }
  }
  r.precision = r.pred_pairs ? static_cast<double>(r.matched) / r.pred_pairs : 0.0;
  r.recall = r.gold_pairs ? static_cast<double>(r.matched) / r.gold_pairs : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

// Fraction of tokens whose canonical multi-tag label matches exactly.
inline double multitag_accuracy(
    const std::vector<std::vector<Analysis>>& gold,
    const std::vector<std::vector<Analysis>>& pred) {
  if (gold.size() != pred.size())
    throw std::runtime_error("multitag_accuracy: sentence count mismatch");
  long total = 0, correct = 0;
  for (size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size())
      throw std::runtime_error("multitag_accuracy: token count mismatch in sentence " +
                               std::to_string(s));
    for (size_t t = 0; t < gold[s].size(); ++t) {
      ++total;
      if (canonical_label(multitag_of(gold[s][t])) ==
          canonical_label(multitag_of(pred[s][t])))
        ++correct;
    }
  }
  if (total == 0)
    throw std::runtime_error("multitag_accuracy: empty corpus (undefined)");
  return static_cast<double>(correct) / total;
}

// ---------------------------------------------------------------------------
// Report grid
// ---------------------------------------------------------------------------

struct GridRow {
  std::string model;
  std::string regime;
  bool applicable = true; // false renders as NA
  ScoreReport score;
};

inline std::string format_f1(const GridRow& row) {
  if (!row.applicable) return "NA";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << 100.0 * row.score.f1;
  return ss.str();
}

// Deterministic aligned text table, rows sorted by (regime, model).
inline std::string report_grid(std::vector<GridRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) {
    if (a.regime != b.regime) return a.regime < b.regime;
    return a.model < b.model;
  });
  size_t w_regime = std::string("Segmentation").size();
  size_t w_model = std::string("Model").size();
  for (const auto& r : rows) {
    w_regime = std::max(w_regime, r.regime.size());
    w_model = std::max(w_model, r.model.size());
  }
  std::ostringstream ss;
  ss << std::left << std::setw(static_cast<int>(w_regime) + 2) << "Segmentation"
     << std::setw(static_cast<int>(w_model) + 2) << "Model"
     << "Seg/POS F1\n";
  for (const auto& r : rows)
    ss << std::left << std::setw(static_cast<int>(w_regime) + 2) << r.regime
       << std::setw(static_cast<int>(w_model) + 2) << r.model << format_f1(r)
       << '\n';
  return ss.str();
}

// Machine-readable companion: REGIME<TAB>MODEL<TAB>F1 (or NA).
inline std::string report_grid_tsv(std::vector<GridRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) {
    if (a.regime != b.regime) return a.regime < b.regime;
    return a.model < b.model;
  });
  std::ostringstream ss;
  for (const auto& r : rows)
    ss << r.regime << '\t' << r.model << '\t' << format_f1(r) << '\n';
  return ss.str();
}

} // namespace mlt
