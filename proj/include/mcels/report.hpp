#pragma once

#include "data.hpp"
#include "error.hpp"
#include "metrics.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mcels {

  inline constexpr std::string_view kAggregateHeader = "dataset,method,n,validity_rate,mean_target_prob,mean_l1,mean_sparsity";

  namespace detail {

    inline std::string fmt(const char* spec, double v) {
      char buf[64];
      std::snprintf(buf, sizeof buf, spec, v);
      return buf;
    }

    inline std::string csv_field(std::string_view s) {
      if (s.find_first_of(",\"\n") == std::string_view::npos) { return std::string(s); }
      std::string out = "\"";
      for (char c: s) {
        if (c == '"') { out += '"'; }
        out += c;
      }
      return out + "\"";
    }

    inline std::string xml_escape(std::string_view s) {
      std::string out;
      for (char c: s) {
        switch (c) {
          case '&': out += "&amp;"; break;
          case '<': out += "&lt;"; break;
          case '>': out += "&gt;"; break;
          case '"': out += "&quot;"; break;
          case '\'': out += "&apos;"; break;
          default: out += c;
        }
      }
      return out;
    }

    /// Minimal RFC-4180 field splitting (quoted fields may contain commas).
    inline std::vector<std::string> split_csv_line(std::string_view line) {
      std::vector<std::string> out(1);
      bool quoted = false;
      for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
          if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
            out.back() += '"';
            ++i;
          } else if (c == '"') {
            quoted = false;
          } else {
            out.back() += c;
          }
        } else if (c == '"') {
          quoted = true;
        } else if (c == ',') {
          out.emplace_back();
        } else {
          out.back() += c;
        }
      }
      return out;
    }

  } // namespace detail

  inline std::string aggregate_csv_row(const AggregateReport& r) {
    return detail::csv_field(r.dataset) + "," + detail::csv_field(r.method) + "," + std::to_string(r.count) + ","
           + detail::fmt("%.10g", r.validity_rate) + "," + detail::fmt("%.10g", r.mean_target_probability) + ","
           + detail::fmt("%.10g", r.mean_l1) + "," + detail::fmt("%.10g", r.mean_sparsity);
  }

  inline std::string aggregate_csv(std::span<const AggregateReport> rows) {
    std::string out(kAggregateHeader);
    out += '\n';
    for (const auto& r: rows) { out += aggregate_csv_row(r) + "\n"; }
    return out;
  }

  /// Parses an aggregate CSV; columns are located by header name.
  inline std::vector<AggregateReport> parse_aggregate_csv(std::string_view content, const std::string& source = "csv") {
    const auto all = text::lines(content);
    if (all.empty()) { throw DataError(source + ": empty aggregate CSV"); }
    const auto header = detail::split_csv_line(text::trim(all[0]));
    const auto column = [&](std::string_view name) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) { throw DataError(source + ": missing column '" + std::string(name) + "'"); }
      return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_dataset = column("dataset"), c_method = column("method"), c_n = column("n"),
                      c_valid = column("validity_rate"), c_prob = column("mean_target_prob"), c_l1 = column("mean_l1"),
                      c_sparsity = column("mean_sparsity");

    std::vector<AggregateReport> rows;
    for (std::size_t ln = 1; ln < all.size(); ++ln) {
      const auto line = text::trim(all[ln]);
      if (line.empty()) { continue; }
      const auto f = detail::split_csv_line(line);
      const std::string where = source + ": line " + std::to_string(ln + 1) + ": ";
      if (f.size() != header.size()) { throw DataError(where + "expected " + std::to_string(header.size()) + " fields"); }
      AggregateReport r;
      r.dataset = f[c_dataset];
      r.method = f[c_method];
      const auto num = [&](std::size_t c, double& out) {
        if (!text::parse_double(text::trim(f[c]), out)) { throw DataError(where + "malformed number in column '" + header[c] + "'"); }
      };
      if (!text::parse_size(text::trim(f[c_n]), r.count)) { throw DataError(where + "malformed count"); }
      num(c_valid, r.validity_rate);
      num(c_prob, r.mean_target_probability);
      num(c_l1, r.mean_l1);
      num(c_sparsity, r.mean_sparsity);
      rows.push_back(std::move(r));
    }
    return rows;
  }

  enum class ChartMetric { target_probability, l1_distance, sparsity };

  inline double metric_value(const AggregateReport& r, ChartMetric m) {
    switch (m) {
      case ChartMetric::target_probability: return r.mean_target_probability;
      case ChartMetric::l1_distance: return r.mean_l1;
      case ChartMetric::sparsity: return r.mean_sparsity;
    }
    return 0.0;
  }

  inline const char* metric_title(ChartMetric m) {
    switch (m) {
      case ChartMetric::target_probability: return "Target probability (higher is better)";
      case ChartMetric::l1_distance: return "L1 distance (lower is better)";
      case ChartMetric::sparsity: return "Sparsity (higher is better)";
    }
    return "";
  }

  inline const char* metric_file_stem(ChartMetric m) {
    switch (m) {
      case ChartMetric::target_probability: return "target_probability";
      case ChartMetric::l1_distance: return "l1_distance";
      case ChartMetric::sparsity: return "sparsity";
    }
    return "metric";
  }

  struct ChartLayout {
    double width = 720.0;
    double height = 420.0;
    double margin_left = 70.0;
    double margin_right = 150.0;
    double margin_top = 50.0;
    double margin_bottom = 60.0;

    double plot_width() const { return width - margin_left - margin_right; }
    double plot_height() const { return height - margin_top - margin_bottom; }
  };

  /// Grouped bar chart: one group per dataset, one bar per method, value printed above each bar.
  /// Each bar is a <rect class="bar"> carrying data-dataset/data-method/data-value attributes.
  inline std::string render_bar_chart(std::span<const AggregateReport> rows, ChartMetric metric, const ChartLayout& layout = {}) {
    std::vector<std::string> datasets, methods;
    for (const auto& r: rows) {
      if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) { datasets.push_back(r.dataset); }
      if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) { methods.push_back(r.method); }
    }
    double top = metric == ChartMetric::l1_distance ? 0.0 : 1.0;
    for (const auto& r: rows) { top = std::max(top, metric_value(r, metric)); }
    if (!(top > 0.0)) { top = 1.0; }

    static constexpr std::array<const char*, 6> palette{"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"};
    const double ph = layout.plot_height();
    const double base_y = layout.margin_top + ph;
    const double group_w = layout.plot_width() / static_cast<double>(std::max<std::size_t>(1, datasets.size()));
    const double bar_w = group_w * 0.8 / static_cast<double>(std::max<std::size_t>(1, methods.size()));
    const auto f = [](double v) { return detail::fmt("%.3f", v); };

    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f(layout.width) + "\" height=\"" + f(layout.height)
         + "\" viewBox=\"0 0 " + f(layout.width) + " " + f(layout.height) + "\" data-scale-max=\"" + detail::fmt("%.17g", top)
         + "\" data-plot-height=\"" + f(ph) + "\">\n";
    s += "  <rect x=\"0\" y=\"0\" width=\"" + f(layout.width) + "\" height=\"" + f(layout.height) + "\" fill=\"white\"/>\n";
    s += "  <text x=\"" + f(layout.width / 2) + "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
         + detail::xml_escape(metric_title(metric)) + "</text>\n";

    // Axes and y ticks.
    s += "  <line x1=\"" + f(layout.margin_left) + "\" y1=\"" + f(layout.margin_top) + "\" x2=\"" + f(layout.margin_left) + "\" y2=\""
         + f(base_y) + "\" stroke=\"black\"/>\n";
    s += "  <line x1=\"" + f(layout.margin_left) + "\" y1=\"" + f(base_y) + "\" x2=\"" + f(layout.margin_left + layout.plot_width())
         + "\" y2=\"" + f(base_y) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
      const double v = top * i / 5.0;
      const double y = base_y - ph * i / 5.0;
      s += "  <text x=\"" + f(layout.margin_left - 6) + "\" y=\"" + f(y + 4) + "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + detail::fmt("%.3g", v) + "</text>\n";
    }

    for (std::size_t g = 0; g < datasets.size(); ++g) {
      const double gx = layout.margin_left + group_w * static_cast<double>(g) + group_w * 0.1;
      s += "  <text x=\"" + f(gx + group_w * 0.4) + "\" y=\"" + f(base_y + 20) + "\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"12\">" + detail::xml_escape(datasets[g]) + "</text>\n";
      for (std::size_t m = 0; m < methods.size(); ++m) {
        const auto it = std::find_if(rows.begin(), rows.end(),
                                     [&](const AggregateReport& r) { return r.dataset == datasets[g] && r.method == methods[m]; });
        if (it == rows.end()) { continue; }
        const double v = metric_value(*it, metric);
        const double h = std::max(0.0, v) / top * ph;
        const double x = gx + bar_w * static_cast<double>(m);
        s += "  <rect class=\"bar\" x=\"" + f(x) + "\" y=\"" + f(base_y - h) + "\" width=\"" + f(bar_w * 0.95) + "\" height=\""
             + detail::fmt("%.6f", h) + "\" fill=\"" + palette[m % palette.size()] + "\" data-dataset=\""
             + detail::xml_escape(datasets[g]) + "\" data-method=\"" + detail::xml_escape(methods[m]) + "\" data-value=\""
             + detail::fmt("%.17g", v) + "\"/>\n";
        s += "  <text x=\"" + f(x + bar_w * 0.475) + "\" y=\"" + f(base_y - h - 4) + "\" text-anchor=\"middle\" "
             "font-family=\"sans-serif\" font-size=\"10\">" + detail::fmt("%.3f", v) + "</text>\n";
      }
    }

    for (std::size_t m = 0; m < methods.size(); ++m) {
      const double y = layout.margin_top + 18.0 * static_cast<double>(m);
      const double x = layout.width - layout.margin_right + 16;
      s += "  <rect x=\"" + f(x) + "\" y=\"" + f(y) + "\" width=\"12\" height=\"12\" fill=\"" + palette[m % palette.size()] + "\"/>\n";
      s += "  <text x=\"" + f(x + 18) + "\" y=\"" + f(y + 10) + "\" font-family=\"sans-serif\" font-size=\"12\">"
           + detail::xml_escape(methods[m]) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
  }

  inline std::string markdown_summary(std::span<const AggregateReport> rows) {
    std::string s = "# Counterfactual evaluation summary\n\n";
    s += "| dataset | method | n | validity rate | mean target prob | mean L1 | mean sparsity |\n";
    s += "|---|---|---:|---:|---:|---:|---:|\n";
    for (const auto& r: rows) {
      s += "| " + r.dataset + " | " + r.method + " | " + std::to_string(r.count) + " | " + detail::fmt("%.4f", r.validity_rate)
           + " | " + detail::fmt("%.4f", r.mean_target_probability) + " | " + detail::fmt("%.4f", r.mean_l1) + " | "
           + detail::fmt("%.4f", r.mean_sparsity) + " |\n";
    }
    return s;
  }

} // namespace mcels
