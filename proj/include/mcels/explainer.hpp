#pragma once

#include "adam.hpp"
#include "classifier.hpp"
#include "error.hpp"
#include "nun.hpp"
#include "random.hpp"
#include "series.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace mcels {

  /// Per-point interpolation weights toward the nearest unlike neighbor, each in [0, 1].
  struct SaliencyMap {
    Matrix theta;

    static SaliencyMap constant(std::size_t T, std::size_t D, double value) { return {Matrix(T, D, value)}; }

    /// Elementwise uniform on [0, 1).
    static SaliencyMap random_uniform(std::size_t T, std::size_t D, Rng& rng) {
      Matrix m(T, D);
      for (double& v: m.values()) { v = rng.uniform01(); }
      return {std::move(m)};
    }

    bool in_unit_range() const {
      for (double v: theta.values()) {
        if (!(v >= 0.0 && v <= 1.0)) { return false; }
      }
      return true;
    }

    bool operator==(const SaliencyMap&) const = default;
  };

  struct ExplainerConfig {
    double lambda = 1.0;
    double lr = 0.1;
    std::size_t epochs = 1000;
    double threshold = 0.5;
    std::size_t patience = 100;
    double min_delta = 1e-6;
    /// Early stopping only fires while the current counterfactual is classified as the target.
    bool require_valid_to_stop = true;
    std::uint64_t seed = 42;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
      if (!(lr > 0.0)) { throw UsageError("explainer learning rate must be positive"); }
      if (epochs < 1) { throw UsageError("explainer needs at least one epoch"); }
      if (!(threshold >= 0.0 && threshold <= 1.0)) { throw UsageError("threshold must lie in [0, 1]"); }
      if (!std::isfinite(lambda)) { throw UsageError("lambda must be finite"); }
    }
  };

  struct LossTerms {
    double max = 0.0;
    double budget = 0.0;
    double treg = 0.0;
    double total = 0.0;
  };

  struct TraceEntry {
    LossTerms loss;
    double target_probability = 0.0;
  };

  struct CounterfactualResult {
    Series query;
    NunResult nun;
    std::size_t predicted_class = 0; // z
    std::size_t target_class = 0;    // z'
    SaliencyMap theta_raw;           // before thresholding
    SaliencyMap theta;               // after thresholding
    Series counterfactual;
    std::vector<TraceEntry> trace;
    std::size_t epochs_run = 0;
  };

  /// Thrown when a loss turns non-finite; carries the trace recorded so far.
  class NonFiniteLossError : public NumericError {
  public:
    NonFiniteLossError(const std::string& what, std::vector<TraceEntry> trace) : NumericError(what), trace(std::move(trace)) {}
    std::vector<TraceEntry> trace;
  };

  /// x' = x * (1 - theta) + nun * theta, elementwise.
  inline Series perturb(const Series& x, const Series& nun, const SaliencyMap& map) {
    require_same_shape(x, nun, "perturb");
    require_same_shape(x, map.theta, "perturb");
    Series out(x.length(), x.dims());
    const auto xv = x.values();
    const auto nv = nun.values();
    const auto th = map.theta.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) { ov[i] = xv[i] * (1.0 - th[i]) + nv[i] * th[i]; }
    return out;
  }

  inline double loss_max(double target_probability) { return 1.0 - target_probability; }

  /// Mean saliency over time, averaged over dimensions.
  inline double loss_budget(const SaliencyMap& map) {
    const Matrix& th = map.theta;
    double total = 0.0;
    for (std::size_t d = 0; d < th.dims(); ++d) {
      double s = 0.0;
      for (std::size_t t = 0; t < th.length(); ++t) { s += th(t, d); }
      total += s / static_cast<double>(th.length());
    }
    return total / static_cast<double>(th.dims());
  }

  /// Squared differences of temporally adjacent saliency values; the T-1 terms are divided by T.
  inline double loss_treg(const SaliencyMap& map) {
    const Matrix& th = map.theta;
    double total = 0.0;
    for (std::size_t d = 0; d < th.dims(); ++d) {
      double s = 0.0;
      for (std::size_t t = 0; t + 1 < th.length(); ++t) {
        const double diff = th(t, d) - th(t + 1, d);
        s += diff * diff;
      }
      total += s / static_cast<double>(th.length());
    }
    return total / static_cast<double>(th.dims());
  }

  inline LossTerms loss_terms(double target_probability, const SaliencyMap& map, double lambda) {
    LossTerms l;
    l.max = loss_max(target_probability);
    l.budget = loss_budget(map);
    l.treg = loss_treg(map);
    l.total = lambda * l.max + l.budget + l.treg;
    return l;
  }

  inline double total_loss(double target_probability, const SaliencyMap& map, double lambda) {
    return loss_terms(target_probability, map, lambda).total;
  }

  namespace detail {

    /// Gradient of the total loss given d p_target / d x' evaluated at the current counterfactual.
    inline Matrix loss_gradient_from(const Matrix& prob_grad, const Series& x, const Series& nun, const SaliencyMap& map,
                                     double lambda) {
      const Matrix& th = map.theta;
      const std::size_t T = th.length();
      const std::size_t D = th.dims();
      const double inv_td = 1.0 / static_cast<double>(T * D);
      Matrix g(T, D);
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t d = 0; d < D; ++d) {
          g(t, d) = -lambda * prob_grad(t, d) * (nun(t, d) - x(t, d)) + inv_td;
        }
      }
      for (std::size_t d = 0; d < D; ++d) {
        for (std::size_t t = 0; t + 1 < T; ++t) {
          const double diff = 2.0 * (th(t, d) - th(t + 1, d)) * inv_td;
          g(t, d) += diff;
          g(t + 1, d) -= diff;
        }
      }
      return g;
    }

  } // namespace detail

  /// Analytic gradient of the total loss with respect to theta.
  inline Matrix loss_gradient(const Fcn& model, const Series& x, const Series& nun, const SaliencyMap& map, double lambda,
                              std::size_t target) {
    require_same_shape(x, nun, "loss_gradient");
    require_same_shape(x, map.theta, "loss_gradient");
    const Series xp = perturb(x, nun, map);
    const Matrix prob_grad = model.class_probability_input_gradient(xp, target);
    return detail::loss_gradient_from(prob_grad, x, nun, map, lambda);
  }

  /// Keeps entries strictly above k and zeroes the rest; survivors are not binarized.
  inline SaliencyMap threshold(const SaliencyMap& map, double k) {
    SaliencyMap out = map;
    for (double& v: out.theta.values()) {
      if (!(v > k)) { v = 0.0; }
    }
    return out;
  }

  /// Called after every optimizer step with the zero-based epoch and the clamped map.
  using ExplainObserver = std::function<void(std::size_t, const SaliencyMap&)>;

  /// Learns a saliency map for `x` and returns the resulting counterfactual.
  inline CounterfactualResult explain(const Fcn& model, const Series& x, const Dataset& background, const ExplainerConfig& config,
                                      const ExplainObserver& observer = {}) {
    config.validate();
    if (background.empty()) { throw DataError("background dataset is empty"); }

    CounterfactualResult r;
    r.query = x;
    const ProbabilityVector probs = model.forward(x);
    r.predicted_class = probs.top_class();
    r.target_class = target_class(probs);
    r.nun = find_nun(x, background, r.target_class);

    Rng rng(config.seed);
    SaliencyMap map = SaliencyMap::random_uniform(x.length(), x.dims(), rng);
    AdamState state(map.theta.size());
    const AdamHyper hyper{config.lr, config.beta1, config.beta2, config.epsilon};

    double best = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      const Series xp = perturb(x, r.nun.neighbor, map);
      const auto [p, prob_grad] = model.probability_and_input_gradient(xp, r.target_class);
      const LossTerms terms = loss_terms(p[r.target_class], map, config.lambda);
      if (!std::isfinite(terms.total)) {
        throw NonFiniteLossError("non-finite loss at epoch " + std::to_string(epoch), std::move(r.trace));
      }
      r.trace.push_back({terms, p[r.target_class]});

      if (terms.total < best - config.min_delta) {
        best = terms.total;
        stale = 0;
      } else if (++stale >= config.patience) {
        const bool valid = p.top_class() == r.target_class;
        if (valid || !config.require_valid_to_stop) { break; }
      }

      const Matrix grad = detail::loss_gradient_from(prob_grad, x, r.nun.neighbor, map, config.lambda);
      adam_step(map.theta.values(), grad.values(), state, hyper, Bounds{0.0, 1.0});
      if (observer) { observer(epoch, map); }
    }

    r.epochs_run = r.trace.size();
    r.theta_raw = map;
    r.theta = threshold(map, config.threshold);
    r.counterfactual = perturb(x, r.nun.neighbor, r.theta);
    return r;
  }

  /// Sanity anchor: replace the query wholesale with its nearest unlike neighbor.
  inline CounterfactualResult full_nun_baseline(const Fcn& model, const Series& x, const Dataset& background) {
    if (background.empty()) { throw DataError("background dataset is empty"); }
    CounterfactualResult r;
    r.query = x;
    const ProbabilityVector probs = model.forward(x);
    r.predicted_class = probs.top_class();
    r.target_class = target_class(probs);
    r.nun = find_nun(x, background, r.target_class);
    r.theta_raw = SaliencyMap::constant(x.length(), x.dims(), 1.0);
    r.theta = r.theta_raw;
    r.counterfactual = perturb(x, r.nun.neighbor, r.theta);
    return r;
  }

} // namespace mcels
