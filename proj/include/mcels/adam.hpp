#pragma once

#include "error.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mcels {

  struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  /// Moment estimates for one parameter tensor.
  struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;

    AdamState() = default;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  };

  struct Bounds {
    double lo;
    double hi;
  };

  /// One bias-corrected ADAM update, followed by an optional elementwise clamp.
  inline void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, const AdamHyper& hyper,
                        std::optional<Bounds> clamp = std::nullopt) {
    if (grad.size() != params.size()) { throw DataError("adam_step: gradient size does not match parameter size"); }
    if (state.m.size() != params.size()) {
      state = AdamState(params.size());
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(hyper.beta1, t);
    const double c2 = 1.0 - std::pow(hyper.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i];
      state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
      state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
      const double m_hat = state.m[i] / c1;
      const double v_hat = state.v[i] / c2;
      double p = params[i] - hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
      if (clamp) { p = std::fmin(std::fmax(p, clamp->lo), clamp->hi); }
      params[i] = p;
    }
  }

} // namespace mcels
