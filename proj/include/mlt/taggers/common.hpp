#pragma once

// Shared tagger contract: segmentation regimes and model/regime
// compatibility. Incompatible cells render as NA in the report grid.

#include <stdexcept>
#include <string>
#include <vector>

#include "mlt/core.hpp"

namespace mlt {

enum class Regime {
  Oracle,      // gold segmentation given
  Predicted,   // segmentation from the baseline disambiguator
  RawTokens,   // surface tokens only
  RawLattices, // lexicon-built lattice input
};

inline std::string regime_name(Regime r) {
  switch (r) {
    case Regime::Oracle: return "oracle";
    case Regime::Predicted: return "predicted";
    case Regime::RawTokens: return "raw-tokens";
    case Regime::RawLattices: return "raw-lattices";
  }
  throw std::runtime_error("unknown regime");
}

inline Regime parse_regime(const std::string& s) {
  if (s == "oracle") return Regime::Oracle;
  if (s == "predicted") return Regime::Predicted;
  if (s == "raw-tokens") return Regime::RawTokens;
  if (s == "raw-lattices") return Regime::RawLattices;
  throw std::runtime_error("unknown regime '" + s +
                           "' (expected oracle|predicted|raw-tokens|raw-lattices)");
}

// Lattices are incompatible with sequence taggers that assume a total
// order; the pointer model needs a lattice to point into.
inline bool regime_compatible(const std::string& model, Regime regime) {
  if (model == "crf")
    return regime == Regime::Oracle || regime == Regime::Predicted ||
           regime == Regime::RawTokens;
  if (model == "pointer")
    return regime == Regime::RawLattices || regime == Regime::Oracle;
  if (model == "perceptron") return regime == Regime::RawLattices;
  throw std::runtime_error("unknown model '" + model + "'");
}

inline void require_compatible(const std::string& model, Regime regime) {
  if (!regime_compatible(model, regime))
    throw std::runtime_error("model '" + model + "' does not support regime '" +
                             regime_name(regime) + "'");
}

} // namespace mlt
