#pragma once

#include <cmath>
#include <string>

#include "xbench/errors.hpp"

namespace xbench {

enum class Label { negative, positive };

inline std::string to_string(Label label) {
  return label == Label::positive ? "positive" : "negative";
}

inline Label label_from_string(const std::string& s) {
  if (s == "positive") return Label::positive;
  if (s == "negative") return Label::negative;
  throw InputFormatError("label must be 'positive' or 'negative', got '" + s + "'");
}

/// Paired probabilities produced by any model configuration. Local models
/// must sum to 1 within 1e-6; parsed LLM output gets 0.02 of slack because
/// the replies carry rounded percentages.
struct Diagnosis {
  double p_positive = 0.0;
  double p_negative = 0.0;

  bool normalized(double tol = 1e-6) const {
    return p_positive >= 0.0 && p_positive <= 1.0 && p_negative >= 0.0 && p_negative <= 1.0 &&
           std::abs(p_positive + p_negative - 1.0) <= tol;
  }
};

}  // namespace xbench
