// mcels: train time-series classifiers, learn saliency-guided counterfactual explanations,
// evaluate them and plot the results.

#include <mcels/commands.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>

namespace {

  int fail(mcels::ErrorKind kind, const char* kind_name, std::string message) {
    std::replace(message.begin(), message.end(), '\n', ' ');
    std::cerr << "mcels: error[" << kind_name << "]: " << message << "\n";
    return static_cast<int>(kind);
  }

  void add_data_flags(CLI::App* cmd, mcels::RunConfig& cfg, std::string& format) {
    cmd->add_option("--train", cfg.train_path, "Training split (also the background set for explanations)");
    cmd->add_option("--test", cfg.test_path, "Test split");
    cmd->add_option("--format", format, "Input format: native or uea-ts")->capture_default_str();
    cmd->add_flag("--no-normalize", [&cfg](std::int64_t) { cfg.normalize = false; }, "Use raw values instead of z-normalized ones");
  }

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saliency-guided counterfactual explanations for multivariate time series classifiers"};
  app.set_config("--config", "", "TOML-style key=value file; command-line flags take precedence");
  app.require_subcommand(1);

  // One config per subcommand.
  mcels::RunConfig train_cfg, explain_cfg;
  std::string train_format = "native", explain_format = "native";
  std::string method = "mcels";
  std::string nun_labels = "true";
  std::size_t limit = 0;
  bool has_limit = false;

  // train
  auto* train = app.add_subcommand("train", "Train the FCN classifier and write a checkpoint");
  add_data_flags(train, train_cfg, train_format);
  train->add_option("--checkpoint", train_cfg.checkpoint_path, "Checkpoint output path")->required();
  train->add_option("--out", train_cfg.out_dir, "Directory for training_log.csv (default: next to the checkpoint)");
  train->add_option("--seed", train_cfg.seed, "RNG seed")->capture_default_str();
  train->add_option("--epochs", train_cfg.training.epochs, "Training epochs")->capture_default_str();
  train->add_option("--lr", train_cfg.training.lr, "ADAM learning rate")->capture_default_str();
  train->add_option("--batch-size", train_cfg.training.batch_size, "Mini-batch size")->capture_default_str();
  train->add_option("--channels", train_cfg.channels, "Channels per conv block")->delimiter(',')->capture_default_str();
  train->add_option("--kernel-sizes", train_cfg.kernel_sizes, "Kernel size per conv block")->delimiter(',')->capture_default_str();

  // explain
  auto* explain = app.add_subcommand("explain", "Generate counterfactuals for the test split and write results");
  add_data_flags(explain, explain_cfg, explain_format);
  explain->add_option("--checkpoint", explain_cfg.checkpoint_path, "Trained classifier checkpoint")->required();
  explain->add_option("--out", explain_cfg.out_dir, "Output directory")->required();
  explain->add_option("--method", method, "mcels or full-nun")->capture_default_str();
  explain->add_option("--seed", explain_cfg.explainer.seed, "Base seed; instance i uses seed XOR i")->capture_default_str();
  explain->add_option("--lambda", explain_cfg.explainer.lambda, "Weight of the validity term")->capture_default_str();
  explain->add_option("--lr", explain_cfg.explainer.lr, "ADAM learning rate for the saliency map")->capture_default_str();
  explain->add_option("--epochs", explain_cfg.explainer.epochs, "Maximum optimization epochs")->capture_default_str();
  explain->add_option("--threshold", explain_cfg.explainer.threshold, "Final saliency threshold k")->capture_default_str();
  explain->add_option("--patience", explain_cfg.explainer.patience, "Early-stopping patience in epochs")->capture_default_str();
  explain->add_option("--min-delta", explain_cfg.explainer.min_delta, "Minimum loss improvement that resets patience")->capture_default_str();
  explain->add_flag("--no-validity-gate", [&explain_cfg](std::int64_t) { explain_cfg.explainer.require_valid_to_stop = false; },
                    "Allow early stopping while the counterfactual is still invalid");
  explain->add_option("--nun-labels", nun_labels, "Neighbor eligibility by true or predicted labels")->capture_default_str();
  explain->add_option_function<std::size_t>("--limit", [&](std::size_t v) { limit = v; has_limit = true; }, "Explain only the first N test instances");
  explain->add_option("--parallelism", explain_cfg.parallelism, "Worker threads")->capture_default_str();

  // report
  auto* report = app.add_subcommand("report", "Plot aggregate CSVs as SVG bar charts plus a markdown summary");
  std::filesystem::path report_dir, synthetic_dir;
  report->add_option("--out", report_dir, "Results directory containing aggregate*.csv")->required();

  // gen-synthetic
  mcels::SyntheticSpec spec;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a two-class synthetic dataset with a planted discriminative window");
  gen->add_option("--length,-T", spec.length, "Series length")->capture_default_str();
  gen->add_option("--dims,-D", spec.dims, "Dimensions")->capture_default_str();
  gen->add_option("--count,-n", spec.count, "Total instances")->capture_default_str();
  gen->add_option("--seed", spec.seed, "RNG seed")->capture_default_str();
  gen->add_option("--out", synthetic_dir, "Output directory")->required();

  // convert
  std::string convert_in, convert_out;
  auto* convert = app.add_subcommand("convert", "Convert a UEA .ts file to the native format");
  convert->add_option("input", convert_in, "Input .ts file")->required();
  convert->add_option("output", convert_out, "Output native file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(mcels::ErrorKind::usage, "usage", e.what());
  }

  try {
    if (*train) {
      train_cfg.format = mcels::parse_format(train_format);
      mcels::cmd_train(train_cfg, std::cout);
    } else if (*explain) {
      explain_cfg.format = mcels::parse_format(explain_format);
      explain_cfg.method = mcels::parse_method(method);
      explain_cfg.nun_labels = mcels::parse_nun_labels(nun_labels);
      if (has_limit) { explain_cfg.limit = limit; }
      mcels::cmd_explain(explain_cfg, std::cout);
    } else if (*report) {
      mcels::cmd_report(report_dir, std::cout);
    } else if (*gen) {
      mcels::cmd_gen_synthetic(spec, synthetic_dir, std::cout);
    } else if (*convert) {
      mcels::cmd_convert(convert_in, convert_out, std::cout);
    }
  } catch (const mcels::Error& e) {
    return fail(e.kind(), e.kind_name(), e.what());
  } catch (const std::exception& e) {
    return fail(mcels::ErrorKind::runtime, "runtime", e.what());
  }
  return 0;
}
