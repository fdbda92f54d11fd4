#pragma once

#include "explainer.hpp"
#include "metrics.hpp"
#include "series.hpp"

#include <json.hpp>

#include <string>

namespace mcels {

  inline constexpr std::string_view kResultSchema = "mcels-result v1";

  inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t t = 0; t < m.rows(); ++t) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t d = 0; d < m.cols(); ++d) { row.push_back(m(t, d)); }
      rows.push_back(std::move(row));
    }
    return rows;
  }

  inline Matrix matrix_from_json(const nlohmann::json& j) {
    std::vector<std::vector<double>> rows;
    for (const auto& row: j) { rows.push_back(row.get<std::vector<double>>()); }
    return Matrix::from_rows(rows);
  }

  struct ResultContext {
    std::string dataset;
    std::string method;
    std::size_t instance_index = 0;
    std::size_t true_label = 0;
    /// "normalized" or "raw": the representation x, x' and the L1 distance live in.
    std::string representation = "normalized";
  };

  /// Per-instance export. theta is post-threshold; theta_raw is the optimizer's final map.
  inline nlohmann::json result_to_json(const CounterfactualResult& r, const InstanceMetrics& m, const ResultContext& ctx) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& e: r.trace) {
      trace.push_back({{"total", e.loss.total}, {"max", e.loss.max}, {"budget", e.loss.budget}, {"treg", e.loss.treg},
                       {"target_prob", e.target_probability}});
    }
    return {
      {"schema", kResultSchema},
      {"dataset", ctx.dataset},
      {"method", ctx.method},
      {"instance_index", ctx.instance_index},
      {"true_label", ctx.true_label},
      {"representation", ctx.representation},
      {"query", matrix_to_json(r.query)},
      {"nun_index", r.nun.neighbor_index},
      {"nun_distance", r.nun.distance},
      {"z", r.predicted_class},
      {"z_prime", r.target_class},
      {"theta", matrix_to_json(r.theta.theta)},
      {"theta_raw", matrix_to_json(r.theta_raw.theta)},
      {"counterfactual", matrix_to_json(r.counterfactual)},
      {"epochs_run", r.epochs_run},
      {"trace", std::move(trace)},
      {"metrics",
       {{"target_probability", m.target_probability}, {"valid", m.valid}, {"l1_distance", m.l1_distance}, {"sparsity", m.sparsity}}},
    };
  }

  /// Entry written in place of a result when an instance could not be explained.
  inline nlohmann::json error_to_json(const std::string& message, const ResultContext& ctx) {
    return {
      {"schema", kResultSchema},
      {"dataset", ctx.dataset},
      {"method", ctx.method},
      {"instance_index", ctx.instance_index},
      {"true_label", ctx.true_label},
      {"error", message},
    };
  }

} // namespace mcels
