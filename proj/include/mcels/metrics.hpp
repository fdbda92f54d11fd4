#pragma once

#include "classifier.hpp"
#include "error.hpp"
#include "series.hpp"

#include <cmath>
#include <span>
#include <string>

namespace mcels {

  struct InstanceMetrics {
    double target_probability = 0.0;
    bool valid = false;
    double l1_distance = 0.0;
    double sparsity = 0.0;
  };

  struct Validity {
    double target_probability = 0.0;
    bool valid = false;
  };

  inline Validity validity(const Fcn& model, const Series& counterfactual, std::size_t target) {
    const ProbabilityVector p = model.forward(counterfactual);
    if (target >= p.size()) { throw DataError("target class out of range"); }
    return {p[target], p.top_class() == target};
  }

  /// Sum of absolute pointwise differences.
  inline double l1_distance(const Series& x, const Series& xp) {
    require_same_shape(x, xp, "l1_distance");
    const auto a = x.values();
    const auto b = xp.values();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) { s += std::abs(a[i] - b[i]); }
    return s;
  }

  struct SparsityOptions {
    /// Points count as changed when |x - x'| > epsilon; the default 0 means exact inequality.
    double epsilon = 0.0;
    /// Divide the change count by T instead of T*D. Not a fraction for D > 1; audit use only.
    bool divide_by_length_only = false;
  };

  /// Fraction of points left unchanged by the perturbation.
  inline double sparsity(const Series& x, const Series& xp, const SparsityOptions& options = {}) {
    require_same_shape(x, xp, "sparsity");
    const auto a = x.values();
    const auto b = xp.values();
    std::size_t changed = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const bool differs = options.epsilon > 0.0 ? std::abs(a[i] - b[i]) > options.epsilon : a[i] != b[i];
      if (differs) { ++changed; }
    }
    const double denom = static_cast<double>(options.divide_by_length_only ? x.length() : x.size());
    return 1.0 - static_cast<double>(changed) / denom;
  }

  inline InstanceMetrics instance_metrics(const Fcn& model, const Series& x, const Series& xp, std::size_t target,
                                          const SparsityOptions& options = {}) {
    const Validity v = validity(model, xp, target);
    return {v.target_probability, v.valid, l1_distance(x, xp), sparsity(x, xp, options)};
  }

  struct AggregateReport {
    std::string dataset;
    std::string method;
    std::size_t count = 0;
    double validity_rate = 0.0;
    double mean_target_probability = 0.0;
    double mean_l1 = 0.0;
    double mean_sparsity = 0.0;
    /// Free-form snapshot of the configuration that produced the numbers.
    std::string config;
  };

  inline AggregateReport aggregate(std::span<const InstanceMetrics> results) {
    if (results.empty()) { throw DataError("cannot aggregate an empty result list"); }
    AggregateReport r;
    r.count = results.size();
    std::size_t valid = 0;
    for (const auto& m: results) {
      r.mean_target_probability += m.target_probability;
      r.mean_l1 += m.l1_distance;
      r.mean_sparsity += m.sparsity;
      if (m.valid) { ++valid; }
    }
    const double n = static_cast<double>(results.size());
    r.mean_target_probability /= n;
    r.mean_l1 /= n;
    r.mean_sparsity /= n;
    r.validity_rate = static_cast<double>(valid) / n;
    return r;
  }

} // namespace mcels
