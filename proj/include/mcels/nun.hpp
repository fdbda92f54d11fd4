#pragma once

#include "classifier.hpp"
#include "error.hpp"
#include "series.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mcels {

  /// Counterfactual target: the most probable class other than the top class.
  /// Ties go to the lowest index, both when picking the top class and the runner-up.
  inline std::size_t target_class(const ProbabilityVector& p) {
    if (p.size() < 2) { throw DataError("target_class needs at least 2 classes"); }
    const std::size_t top = p.top_class();
    std::size_t best = top == 0 ? 1 : 0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (c != top && p[c] > p[best]) { best = c; }
    }
    return best;
  }

  struct NunResult {
    Series neighbor;
    std::size_t target_class = 0;
    double distance = 0.0;
    std::size_t neighbor_index = 0;
  };

  inline double squared_euclidean(const Series& a, const Series& b) {
    const auto va = a.values();
    const auto vb = b.values();
    double s = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
      const double d = va[i] - vb[i];
      s += d * d;
    }
    return s;
  }

  /// Nearest background instance labelled `target` (Euclidean, exhaustive scan, lowest index wins ties).
  inline NunResult find_nun(const Series& x, const Dataset& background, std::size_t target) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_index = background.size();
    for (std::size_t i = 0; i < background.size(); ++i) {
      if (background.labels[i] != target) { continue; }
      require_same_shape(x, background.instances[i], "find_nun");
      const double d2 = squared_euclidean(x, background.instances[i]);
      if (d2 < best) {
        best = d2;
        best_index = i;
      }
    }
    if (best_index == background.size()) {
      throw NoNeighborError("no background instance of class " + std::to_string(target));
    }
    return {background.instances[best_index], target, std::sqrt(best), best_index};
  }

  /// Copy of `background` whose labels are the classifier's predictions instead of ground truth.
  inline Dataset relabel_with_predictions(const Dataset& background, const Fcn& model) {
    Dataset out = background;
    for (std::size_t i = 0; i < out.size(); ++i) { out.labels[i] = model.predict(out.instances[i]); }
    return out;
  }

} // namespace mcels
