#pragma once

// Implementations of the command-line subcommands. Kept in the library so tests can drive
// them directly; tools/mcels.cpp only parses flags and maps errors to exit codes.

#include "checkpoint.hpp"
#include "classifier.hpp"
#include "data.hpp"
#include "error.hpp"
#include "explainer.hpp"
#include "metrics.hpp"
#include "nun.hpp"
#include "parallel.hpp"
#include "report.hpp"
#include "result_json.hpp"
#include "synthetic.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mcels {

  inline constexpr std::uint64_t kDefaultSeed = 42;

  enum class Method { mcels, full_nun };
  enum class NunLabels { truth, predicted };

  inline const char* method_name(Method m) { return m == Method::mcels ? "mcels" : "full-nun"; }

  inline Method parse_method(std::string_view s) {
    if (s == "mcels") { return Method::mcels; }
    if (s == "full-nun") { return Method::full_nun; }
    throw UsageError("unknown method '" + std::string(s) + "', expected mcels or full-nun");
  }

  inline NunLabels parse_nun_labels(std::string_view s) {
    if (s == "true") { return NunLabels::truth; }
    if (s == "predicted") { return NunLabels::predicted; }
    throw UsageError("unknown --nun-labels value '" + std::string(s) + "', expected true or predicted");
  }

  struct RunConfig {
    std::filesystem::path train_path;
    std::filesystem::path test_path;
    std::filesystem::path checkpoint_path;
    std::filesystem::path out_dir;
    DataFormat format = DataFormat::native;
    bool normalize = true;
    std::vector<std::size_t> channels{32, 64, 32};
    std::vector<std::size_t> kernel_sizes{8, 5, 3};
    TrainOptions training;
    ExplainerConfig explainer;
    Method method = Method::mcels;
    NunLabels nun_labels = NunLabels::truth;
    std::optional<std::size_t> limit;
    std::size_t parallelism = default_parallelism();
    std::uint64_t seed = kDefaultSeed;
  };

  namespace detail {

    inline std::string format_fixed(double v, int digits) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.*f", digits, v);
      return buf;
    }

    inline void require_path(const std::filesystem::path& p, const char* flag) {
      if (p.empty()) { throw UsageError(std::string(flag) + " is required"); }
    }

  } // namespace detail

  // --- train --------------------------------------------------------------------------------

  struct TrainSummary {
    double train_accuracy = 0.0;
    std::optional<double> test_accuracy;
    std::filesystem::path log_path;
  };

  inline TrainSummary cmd_train(const RunConfig& cfg, std::ostream& out) {
    detail::require_path(cfg.train_path, "--train");
    detail::require_path(cfg.checkpoint_path, "--checkpoint");
    Dataset train_set = load_dataset(cfg.train_path, cfg.format);
    train_set.validate();
    if (train_set.empty()) { throw DataError(cfg.train_path.string() + ": no instances"); }
    std::optional<Dataset> test;
    if (!cfg.test_path.empty()) {
      test = load_dataset(cfg.test_path, cfg.format);
      if (!test->empty() && !test->instances.front().same_shape(train_set.instances.front())) {
        throw DataError("test set shape " + shape_string(test->instances.front()) + " does not match train shape "
                        + shape_string(train_set.instances.front()));
      }
    }

    std::optional<NormalizationStats> stats;
    if (cfg.normalize) {
      stats = fit_normalization(train_set);
      train_set = apply_normalization(train_set, *stats);
      if (test) { test = apply_normalization(*test, *stats); }
    }

    FcnConfig fcn;
    fcn.channels = cfg.channels;
    fcn.kernel_sizes = cfg.kernel_sizes;
    fcn.input_dims = train_set.dims();
    fcn.num_classes = train_set.num_classes;
    fcn.seed = cfg.seed;
    TrainOptions opts = cfg.training;
    opts.seed = cfg.seed;
    TrainResult trained = mcels::train(Fcn::init(fcn), train_set, opts);
    trained.model.set_normalization(stats);

    write_text_file(cfg.checkpoint_path, save_checkpoint(trained.model));

    TrainSummary summary;
    summary.log_path = cfg.out_dir.empty() ? std::filesystem::path(cfg.checkpoint_path.string() + ".log.csv")
                                           : cfg.out_dir / "training_log.csv";
    std::string log = "epoch,loss,accuracy\n";
    for (std::size_t e = 0; e < trained.trace.size(); ++e) {
      log += std::to_string(e + 1) + "," + text::format_exact(trained.trace[e].loss) + "," + text::format_exact(trained.trace[e].accuracy)
             + "\n";
    }
    write_text_file(summary.log_path, log);

    summary.train_accuracy = accuracy(trained.model, train_set);
    out << "train_accuracy=" << detail::format_fixed(summary.train_accuracy, 4);
    if (test) {
      summary.test_accuracy = accuracy(trained.model, *test);
      out << " test_accuracy=" << detail::format_fixed(*summary.test_accuracy, 4);
    }
    out << "\n";
    return summary;
  }

  // --- explain ------------------------------------------------------------------------------

  struct InstanceOutcome {
    std::size_t index = 0;
    std::optional<InstanceMetrics> metrics;
    std::optional<CounterfactualResult> result;
    std::string error;
  };

  struct ExplainSummary {
    AggregateReport aggregate;
    std::size_t errors = 0;
    std::filesystem::path csv_path;
    std::vector<InstanceOutcome> outcomes;
  };

  /// Loads, normalizes and checks the (background, queries) pair against a checkpoint.
  struct ExplainInputs {
    Fcn model;
    Dataset background;
    Dataset queries;
    std::string representation;
  };

  inline ExplainInputs load_explain_inputs(const RunConfig& cfg) {
    detail::require_path(cfg.checkpoint_path, "--checkpoint");
    detail::require_path(cfg.train_path, "--train");
    detail::require_path(cfg.test_path, "--test");
    ExplainInputs in;
    if (!std::filesystem::exists(cfg.checkpoint_path)) { throw DataError("file not found: " + cfg.checkpoint_path.string()); }
    try {
      in.model = load_checkpoint(read_text_file(cfg.checkpoint_path));
    } catch (const DataError& e) {
      throw DataError(cfg.checkpoint_path.string() + ": " + e.what());
    }
    in.background = load_dataset(cfg.train_path, cfg.format);
    in.queries = load_dataset(cfg.test_path, cfg.format);
    in.background.validate();
    if (in.background.empty()) { throw DataError(cfg.train_path.string() + ": background set is empty"); }
    for (const Dataset* ds: {&in.background, &in.queries}) {
      if (!ds->empty() && ds->dims() != in.model.input_dims()) {
        throw DataError("dataset " + ds->name + " has " + std::to_string(ds->dims()) + " dimensions, checkpoint expects "
                        + std::to_string(in.model.input_dims()));
      }
      if (ds->num_classes != in.model.num_classes()) {
        throw DataError("dataset " + ds->name + " has " + std::to_string(ds->num_classes) + " classes, checkpoint expects "
                        + std::to_string(in.model.num_classes()));
      }
    }
    if (!in.queries.empty() && in.queries.length() != in.background.length()) {
      throw DataError("test series length does not match background series length");
    }
    in.representation = "raw";
    if (cfg.normalize && in.model.normalization()) {
      in.background = apply_normalization(in.background, *in.model.normalization());
      in.queries = apply_normalization(in.queries, *in.model.normalization());
      in.representation = "normalized";
    }
    if (cfg.nun_labels == NunLabels::predicted) { in.background = relabel_with_predictions(in.background, in.model); }
    return in;
  }

  /// Explains every query (up to cfg.limit) and writes one JSON file per instance plus one aggregate CSV.
  inline ExplainSummary cmd_explain(const RunConfig& cfg, std::ostream& out) {
    detail::require_path(cfg.out_dir, "--out");
    const ExplainInputs in = load_explain_inputs(cfg);
    const std::size_t n = cfg.limit ? std::min(*cfg.limit, in.queries.size()) : in.queries.size();
    const std::string method = method_name(cfg.method);

    ExplainSummary summary;
    summary.outcomes.resize(n);
    parallel_for_index(n, cfg.parallelism, [&](std::size_t i) {
      InstanceOutcome& o = summary.outcomes[i];
      o.index = i;
      const Series& x = in.queries.instances[i];
      try {
        CounterfactualResult r;
        if (cfg.method == Method::mcels) {
          ExplainerConfig ec = cfg.explainer;
          ec.seed = cfg.explainer.seed ^ static_cast<std::uint64_t>(i);
          r = explain(in.model, x, in.background, ec);
        } else {
          r = full_nun_baseline(in.model, x, in.background);
        }
        o.metrics = instance_metrics(in.model, x, r.counterfactual, r.target_class);
        o.result = std::move(r);
      } catch (const Error& e) {
        o.error = e.what();
      }
    });

    // All file writes happen here, in instance order.
    const std::filesystem::path instance_dir = cfg.out_dir / (in.queries.name + "_" + method);
    std::filesystem::create_directories(instance_dir);
    std::vector<InstanceMetrics> metrics;
    for (const auto& o: summary.outcomes) {
      ResultContext ctx{in.queries.name, method, o.index, in.queries.labels[o.index], in.representation};
      char name[48];
      std::snprintf(name, sizeof name, "instance_%05zu.json", o.index);
      nlohmann::json j = o.result ? result_to_json(*o.result, *o.metrics, ctx) : error_to_json(o.error, ctx);
      write_text_file(instance_dir / name, j.dump(1) + "\n");
      if (o.metrics) {
        metrics.push_back(*o.metrics);
      } else {
        ++summary.errors;
      }
    }
    if (metrics.empty()) { throw NumericError("no instance produced a counterfactual (" + std::to_string(summary.errors) + " errors)"); }

    summary.aggregate = aggregate(metrics);
    summary.aggregate.dataset = in.queries.name;
    summary.aggregate.method = method;
    summary.csv_path = cfg.out_dir / ("aggregate_" + in.queries.name + "_" + method + ".csv");
    write_text_file(summary.csv_path, aggregate_csv(std::span<const AggregateReport>(&summary.aggregate, 1)));

    const nlohmann::json meta = {
      {"dataset", in.queries.name},
      {"method", method},
      {"representation", in.representation},
      {"instances", n},
      {"errors", summary.errors},
      {"nun_labels", cfg.nun_labels == NunLabels::truth ? "true" : "predicted"},
      {"explainer",
       {{"lambda", cfg.explainer.lambda},
        {"lr", cfg.explainer.lr},
        {"epochs", cfg.explainer.epochs},
        {"threshold", cfg.explainer.threshold},
        {"patience", cfg.explainer.patience},
        {"min_delta", cfg.explainer.min_delta},
        {"seed", cfg.explainer.seed}}},
    };
    write_text_file(cfg.out_dir / ("run_" + in.queries.name + "_" + method + ".json"), meta.dump(2) + "\n");

    out << in.queries.name << " " << method << ": n=" << summary.aggregate.count << " errors=" << summary.errors
        << " validity_rate=" << detail::format_fixed(summary.aggregate.validity_rate, 4)
        << " mean_target_prob=" << detail::format_fixed(summary.aggregate.mean_target_probability, 4)
        << " mean_l1=" << detail::format_fixed(summary.aggregate.mean_l1, 4)
        << " mean_sparsity=" << detail::format_fixed(summary.aggregate.mean_sparsity, 4) << "\n";
    return summary;
  }

  // --- report -------------------------------------------------------------------------------

  struct ReportOutputs {
    std::vector<AggregateReport> rows;
    std::vector<std::filesystem::path> files;
  };

  /// Reads every aggregate*.csv in `results_dir` and writes three SVG bar charts and summary.md.
  inline ReportOutputs cmd_report(const std::filesystem::path& results_dir, std::ostream& out) {
    if (!std::filesystem::is_directory(results_dir)) { throw DataError("results directory not found: " + results_dir.string()); }
    std::vector<std::filesystem::path> csvs;
    for (const auto& entry: std::filesystem::directory_iterator(results_dir)) {
      const auto name = entry.path().filename().string();
      if (entry.is_regular_file() && name.starts_with("aggregate") && entry.path().extension() == ".csv") {
        csvs.push_back(entry.path());
      }
    }
    if (csvs.empty()) { throw DataError("no aggregate CSV files in " + results_dir.string()); }
    std::sort(csvs.begin(), csvs.end());

    ReportOutputs res;
    for (const auto& p: csvs) {
      auto rows = parse_aggregate_csv(read_text_file(p), p.string());
      res.rows.insert(res.rows.end(), rows.begin(), rows.end());
    }
    if (res.rows.empty()) { throw DataError("aggregate CSV files in " + results_dir.string() + " contain no rows"); }

    for (auto metric: {ChartMetric::target_probability, ChartMetric::l1_distance, ChartMetric::sparsity}) {
      const auto path = results_dir / (std::string(metric_file_stem(metric)) + ".svg");
      write_text_file(path, render_bar_chart(res.rows, metric));
      res.files.push_back(path);
    }
    const auto md = results_dir / "summary.md";
    write_text_file(md, markdown_summary(res.rows));
    res.files.push_back(md);
    out << "wrote " << res.files.size() << " report files for " << res.rows.size() << " rows to " << results_dir.string() << "\n";
    return res;
  }

  // --- gen-synthetic / convert --------------------------------------------------------------

  inline std::pair<std::filesystem::path, std::filesystem::path> cmd_gen_synthetic(const SyntheticSpec& spec,
                                                                                   const std::filesystem::path& out_dir,
                                                                                   std::ostream& out) {
    detail::require_path(out_dir, "--out");
    const TrainTestSplit split = generate_synthetic(spec);
    const auto train_path = out_dir / "synthetic_TRAIN.mts";
    const auto test_path = out_dir / "synthetic_TEST.mts";
    write_text_file(train_path, serialize_native(split.train, spec.length, spec.dims));
    write_text_file(test_path, serialize_native(split.test, spec.length, spec.dims));
    out << "wrote " << split.train.size() << " train and " << split.test.size() << " test instances to " << out_dir.string() << "\n";
    return {train_path, test_path};
  }

  inline void cmd_convert(const std::filesystem::path& input, const std::filesystem::path& output, std::ostream& out) {
    detail::require_path(input, "input");
    detail::require_path(output, "output");
    const Dataset ds = load_dataset(input, DataFormat::uea_ts);
    write_text_file(output, serialize_native(ds));
    out << "converted " << ds.size() << " instances (T=" << ds.length() << " D=" << ds.dims() << " C=" << ds.num_classes << ") to "
        << output.string() << "\n";
  }

} // namespace mcels
