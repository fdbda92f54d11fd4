#pragma once

#include "classifier.hpp"
#include "data.hpp"
#include "error.hpp"

#include <cstdio>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mcels {

  inline constexpr std::string_view kCheckpointMagic = "#MCELS-CLF v1";

  namespace detail {

    inline std::string join_sizes(const std::vector<std::size_t>& v, char sep) {
      std::string out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) { out += sep; }
        out += std::to_string(v[i]);
      }
      return out;
    }

    inline std::vector<std::size_t> split_sizes(std::string_view s, char sep, const std::string& what) {
      std::vector<std::size_t> out;
      for (auto tok: text::split(s, sep)) {
        std::size_t v = 0;
        if (!text::parse_size(tok, v)) { throw DataError("checkpoint: malformed " + what + " '" + std::string(s) + "'"); }
        out.push_back(v);
      }
      return out;
    }

    /// 17 significant digits in scientific notation.
    inline std::string format_sci(double v) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.16e", v);
      return buf;
    }

    inline void write_tensor(std::string& out, const std::string& name, const std::vector<std::size_t>& shape,
                             std::span<const double> values) {
      out += name;
      out += ' ';
      out += join_sizes(shape, 'x');
      for (double v: values) {
        out += ' ';
        out += format_sci(v);
      }
      out += '\n';
    }

    struct TensorRecord {
      std::vector<std::size_t> shape;
      std::vector<double> values;
    };

  } // namespace detail

  /// Versioned text checkpoint; reloading reproduces every parameter bit-for-bit.
  inline std::string save_checkpoint(const Fcn& model) {
    const auto& cfg = model.config();
    std::string out(kCheckpointMagic);
    out += '\n';
    out += "input_dims=" + std::to_string(cfg.input_dims) + " num_classes=" + std::to_string(cfg.num_classes)
           + " channels=" + detail::join_sizes(cfg.channels, ',') + " kernel_sizes=" + detail::join_sizes(cfg.kernel_sizes, ',')
           + " seed=" + std::to_string(cfg.seed) + " normalized=" + (model.normalization() ? "true" : "false") + "\n";
    const auto& p = model.parameters();
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
      const auto& conv = p.blocks[b];
      const std::string prefix = "block" + std::to_string(b);
      detail::write_tensor(out, prefix + ".weight", {conv.out_channels, conv.kernel, conv.in_channels}, conv.weight);
      detail::write_tensor(out, prefix + ".bias", {conv.out_channels}, conv.bias);
    }
    detail::write_tensor(out, "dense.weight", {p.dense.out_features, p.dense.in_features}, p.dense.weight);
    detail::write_tensor(out, "dense.bias", {p.dense.out_features}, p.dense.bias);
    if (const auto& stats = model.normalization()) {
      detail::write_tensor(out, "norm.mean", {stats->dims()}, stats->mean);
      detail::write_tensor(out, "norm.std", {stats->dims()}, stats->std);
    }
    return out;
  }

  inline Fcn load_checkpoint(std::string_view content) {
    const auto all = text::lines(content);
    if (all.empty() || text::trim(all[0]) != kCheckpointMagic) {
      if (!all.empty() && text::trim(all[0]).starts_with("#MCELS-CLF")) {
        throw DataError("checkpoint: unsupported version '" + std::string(text::trim(all[0])) + "'");
      }
      throw DataError("checkpoint: missing '#MCELS-CLF v1' header");
    }
    if (all.size() < 2) { throw DataError("checkpoint: truncated (no config line)"); }

    std::map<std::string, std::string, std::less<>> kv;
    for (auto tok: text::split_ws(all[1])) {
      const auto eq = tok.find('=');
      if (eq == std::string_view::npos) { throw DataError("checkpoint: malformed config entry '" + std::string(tok) + "'"); }
      kv.emplace(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
    }
    const auto get = [&](std::string_view key) -> const std::string& {
      const auto it = kv.find(key);
      if (it == kv.end()) { throw DataError("checkpoint: config is missing '" + std::string(key) + "'"); }
      return it->second;
    };

    FcnConfig cfg;
    if (!text::parse_size(get("input_dims"), cfg.input_dims)) { throw DataError("checkpoint: malformed input_dims"); }
    if (!text::parse_size(get("num_classes"), cfg.num_classes)) { throw DataError("checkpoint: malformed num_classes"); }
    cfg.channels = detail::split_sizes(get("channels"), ',', "channels");
    cfg.kernel_sizes = detail::split_sizes(get("kernel_sizes"), ',', "kernel_sizes");
    {
      const auto& s = get("seed");
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), cfg.seed);
      if (ec != std::errc() || ptr != s.data() + s.size()) { throw DataError("checkpoint: malformed seed"); }
    }
    const std::string& normalized = get("normalized");
    if (normalized != "true" && normalized != "false") { throw DataError("checkpoint: malformed normalized flag"); }
    try {
      cfg.validate();
    } catch (const UsageError& e) {
      throw DataError(std::string("checkpoint: invalid config: ") + e.what());
    }
    for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
      if (cfg.channels[i] > 100000 || cfg.kernel_sizes[i] > 100000) { throw DataError("checkpoint: implausible layer size"); }
    }
    if (cfg.input_dims > 100000 || cfg.num_classes > 100000) { throw DataError("checkpoint: implausible config"); }

    std::map<std::string, detail::TensorRecord, std::less<>> tensors;
    for (std::size_t ln = 2; ln < all.size(); ++ln) {
      const auto tokens = text::split_ws(all[ln]);
      if (tokens.empty()) { continue; }
      if (tokens.size() < 2) { throw DataError("checkpoint: line " + std::to_string(ln + 1) + " is truncated"); }
      detail::TensorRecord rec;
      rec.shape = detail::split_sizes(tokens[1], 'x', "shape");
      std::size_t count = 1;
      for (auto s: rec.shape) { count *= s; }
      if (tokens.size() - 2 != count) {
        throw DataError("checkpoint: tensor " + std::string(tokens[0]) + " expects " + std::to_string(count) + " values, found "
                        + std::to_string(tokens.size() - 2));
      }
      rec.values.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        if (!text::parse_double(tokens[i + 2], rec.values[i]) || !std::isfinite(rec.values[i])) {
          throw DataError("checkpoint: tensor " + std::string(tokens[0]) + " has a corrupt value");
        }
      }
      tensors.emplace(std::string(tokens[0]), std::move(rec));
    }

    const auto take = [&](const std::string& name, const std::vector<std::size_t>& shape, std::vector<double>& dst) {
      const auto it = tensors.find(name);
      if (it == tensors.end()) { throw DataError("checkpoint: truncated, tensor " + name + " is missing"); }
      if (it->second.shape != shape) {
        throw DataError("checkpoint: tensor " + name + " has shape " + detail::join_sizes(it->second.shape, 'x') + ", expected "
                        + detail::join_sizes(shape, 'x'));
      }
      dst = std::move(it->second.values);
    };

    Fcn model = Fcn::init(cfg);
    auto& p = model.parameters();
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
      auto& conv = p.blocks[b];
      const std::string prefix = "block" + std::to_string(b);
      take(prefix + ".weight", {conv.out_channels, conv.kernel, conv.in_channels}, conv.weight);
      take(prefix + ".bias", {conv.out_channels}, conv.bias);
    }
    take("dense.weight", {p.dense.out_features, p.dense.in_features}, p.dense.weight);
    take("dense.bias", {p.dense.out_features}, p.dense.bias);
    if (normalized == "true") {
      NormalizationStats stats;
      take("norm.mean", {cfg.input_dims}, stats.mean);
      take("norm.std", {cfg.input_dims}, stats.std);
      for (double s: stats.std) {
        if (!(s > 0.0)) { throw DataError("checkpoint: normalization std must be positive"); }
      }
      model.set_normalization(std::move(stats));
    }
    return model;
  }

} // namespace mcels
