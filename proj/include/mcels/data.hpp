#pragma once

#include "error.hpp"
#include "series.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace mcels {

  namespace text {

    inline std::string_view trim(std::string_view s) {
      const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
      while (!s.empty() && is_space(s.front())) { s.remove_prefix(1); }
      while (!s.empty() && is_space(s.back())) { s.remove_suffix(1); }
      return s;
    }

    /// Splits on runs of whitespace.
    inline std::vector<std::string_view> split_ws(std::string_view s) {
      std::vector<std::string_view> out;
      std::size_t i = 0;
      while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) { ++i; }
        const std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) { ++i; }
        if (i > start) { out.push_back(s.substr(start, i - start)); }
      }
      return out;
    }

    /// Splits on a single character, keeping empty fields.
    inline std::vector<std::string_view> split(std::string_view s, char sep) {
      std::vector<std::string_view> out;
      std::size_t start = 0;
      for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
          out.push_back(s.substr(start, i - start));
          start = i + 1;
        }
      }
      return out;
    }

    /// Line-by-line iteration that tolerates \r\n endings.
    inline std::vector<std::string_view> lines(std::string_view s) {
      std::vector<std::string_view> out = split(s, '\n');
      for (auto& line: out) {
        if (!line.empty() && line.back() == '\r') { line.remove_suffix(1); }
      }
      if (!out.empty() && out.back().empty()) { out.pop_back(); }
      return out;
    }

    inline bool parse_double(std::string_view s, double& out) {
      if (!s.empty() && s.front() == '+') { s.remove_prefix(1); }
      if (s.empty()) { return false; }
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      return ec == std::errc() && ptr == s.data() + s.size();
    }

    inline bool parse_size(std::string_view s, std::size_t& out) {
      if (s.empty()) { return false; }
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      return ec == std::errc() && ptr == s.data() + s.size();
    }

    inline bool iequals(std::string_view a, std::string_view b) {
      return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
        return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
      });
    }

    /// Shortest text that parses back to the identical double (17 significant digits).
    inline std::string format_exact(double v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return buf;
    }

  } // namespace text

  inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) { throw DataError("cannot read file: " + path.string()); }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) { std::filesystem::create_directories(path.parent_path()); }
    std::ofstream out(path, std::ios::binary);
    if (!out) { throw DataError("cannot write file: " + path.string()); }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
  }

  // --- Native format -----------------------------------------------------------------------

  /// Parses `#MTS v1 T=<int> D=<int> C=<int>` followed by one instance per non-empty line:
  /// `<label> v(0,0) v(0,1) ... v(T-1,D-1)`.
  inline Dataset parse_native(std::string_view content, std::string name = {}) {
    const auto all = text::lines(content);
    if (all.empty()) { throw DataError("line 1: missing #MTS header"); }

    const auto header = text::split_ws(all.front());
    std::size_t T = 0, D = 0, C = 0;
    const auto header_field = [&](std::string_view tok, std::string_view key, std::size_t& out) {
      if (tok.size() <= key.size() || tok.substr(0, key.size()) != key || !text::parse_size(tok.substr(key.size()), out)) {
        throw DataError("line 1: malformed header field '" + std::string(tok) + "', expected " + std::string(key) + "<int>");
      }
    };
    if (header.size() != 5 || header[0] != "#MTS" || header[1] != "v1") {
      throw DataError("line 1: malformed header, expected '#MTS v1 T=<int> D=<int> C=<int>'");
    }
    header_field(header[2], "T=", T);
    header_field(header[3], "D=", D);
    header_field(header[4], "C=", C);
    if (T < 2) { throw DataError("line 1: T must be at least 2"); }
    if (D < 1) { throw DataError("line 1: D must be at least 1"); }
    if (C < 2) { throw DataError("line 1: C must be at least 2"); }
    if (T > (std::size_t{1} << 40) / D) { throw DataError("line 1: T*D is too large"); }

    Dataset ds;
    ds.name = std::move(name);
    ds.num_classes = C;
    for (std::size_t ln = 1; ln < all.size(); ++ln) {
      const std::string where = "line " + std::to_string(ln + 1) + ": ";
      const auto tokens = text::split_ws(all[ln]);
      if (tokens.empty()) { continue; }
      if (tokens.size() != 1 + T * D) {
        throw DataError(where + "expected " + std::to_string(T * D) + " values, got " + std::to_string(tokens.size() - 1));
      }
      std::size_t label = 0;
      if (!text::parse_size(tokens[0], label)) { throw DataError(where + "malformed label '" + std::string(tokens[0]) + "'"); }
      if (label >= C) { throw DataError(where + "label " + std::to_string(label) + " out of range for C=" + std::to_string(C)); }
      std::vector<double> values(T * D);
      for (std::size_t i = 0; i < T * D; ++i) {
        if (!text::parse_double(tokens[i + 1], values[i])) {
          throw DataError(where + "malformed value '" + std::string(tokens[i + 1]) + "'");
        }
        if (!std::isfinite(values[i])) { throw DataError(where + "non-finite value"); }
      }
      ds.instances.emplace_back(T, D, std::move(values));
      ds.labels.push_back(label);
    }
    return ds;
  }

  /// Writes the native format; values use 17 significant digits so parsing reproduces them exactly.
  inline std::string serialize_native(const Dataset& ds, std::size_t T, std::size_t D) {
    std::string out = "#MTS v1 T=" + std::to_string(T) + " D=" + std::to_string(D) + " C=" + std::to_string(ds.num_classes) + "\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
      out += std::to_string(ds.labels[i]);
      for (double v: ds.instances[i].values()) {
        out += ' ';
        out += text::format_exact(v);
      }
      out += '\n';
    }
    return out;
  }

  inline std::string serialize_native(const Dataset& ds) {
    if (ds.empty()) { throw DataError("cannot serialize an empty dataset without an explicit shape"); }
    return serialize_native(ds, ds.length(), ds.dims());
  }

  // --- UEA .ts subset ----------------------------------------------------------------------

  /// Reads equal-length, complete UEA `.ts` files. Class labels map to indices in the order
  /// they are declared by @classLabel.
  inline Dataset parse_uea_ts(std::string_view content) {
    Dataset ds;
    std::size_t dims = 0, length = 0;
    bool have_dims = false, have_length = false, univariate = false, in_data = false;
    bool have_labels = false;

    const auto all = text::lines(content);
    for (std::size_t ln = 0; ln < all.size(); ++ln) {
      const std::string where = "line " + std::to_string(ln + 1) + ": ";
      const auto line = text::trim(all[ln]);
      if (line.empty() || line.front() == '#') { continue; }

      if (!in_data) {
        if (line.front() != '@') { throw DataError(where + "expected a directive before @data"); }
        const auto tokens = text::split_ws(line);
        const auto key = tokens.front();
        const auto bool_arg = [&]() {
          if (tokens.size() < 2) { throw DataError(where + std::string(key) + " needs an argument"); }
          if (text::iequals(tokens[1], "true")) { return true; }
          if (text::iequals(tokens[1], "false")) { return false; }
          throw DataError(where + std::string(key) + " expects true or false");
        };
        const auto size_arg = [&]() {
          std::size_t v = 0;
          if (tokens.size() < 2 || !text::parse_size(tokens[1], v)) { throw DataError(where + std::string(key) + " expects an integer"); }
          return v;
        };
        if (text::iequals(key, "@problemName")) {
          if (tokens.size() >= 2) { ds.name = std::string(tokens[1]); }
        } else if (text::iequals(key, "@dimensions")) {
          dims = size_arg();
          have_dims = true;
        } else if (text::iequals(key, "@seriesLength")) {
          length = size_arg();
          have_length = true;
        } else if (text::iequals(key, "@univariate")) {
          univariate = bool_arg();
        } else if (text::iequals(key, "@equalLength")) {
          if (!bool_arg()) { throw DataError(where + "unequal-length series are not supported (@equalLength false)"); }
        } else if (text::iequals(key, "@classLabel")) {
          if (!bool_arg()) { throw DataError(where + "unlabelled data is not supported (@classLabel false)"); }
          for (std::size_t i = 2; i < tokens.size(); ++i) { ds.class_names.emplace_back(tokens[i]); }
          have_labels = true;
        } else if (text::iequals(key, "@data")) {
          in_data = true;
          if (!have_labels) { throw DataError(where + "@data reached without a @classLabel directive"); }
          if (!have_dims && univariate) {
            dims = 1;
            have_dims = true;
          }
        }
        // Other directives (@timeStamps, @missing, ...) carry nothing this reader needs.
        continue;
      }

      if (line.find('?') != std::string_view::npos) { throw DataError(where + "missing values ('?') are not supported"); }
      const auto fields = text::split(line, ':');
      if (fields.size() < 2) { throw DataError(where + "expected '<dim>:...:<label>'"); }
      const std::size_t got_dims = fields.size() - 1;
      if (!have_dims) {
        dims = got_dims;
        have_dims = true;
      }
      if (got_dims != dims) {
        throw DataError(where + "dimension count " + std::to_string(got_dims) + " does not match @dimensions " + std::to_string(dims));
      }

      std::vector<std::vector<double>> channels(dims);
      for (std::size_t d = 0; d < dims; ++d) {
        for (auto tok: text::split(fields[d], ',')) {
          double v = 0.0;
          if (!text::parse_double(text::trim(tok), v) || !std::isfinite(v)) {
            throw DataError(where + "malformed value '" + std::string(tok) + "' in dimension " + std::to_string(d));
          }
          channels[d].push_back(v);
        }
        if (!have_length) {
          length = channels[d].size();
          have_length = true;
        }
        if (channels[d].size() != length) {
          throw DataError(where + "series length " + std::to_string(channels[d].size()) + " in dimension " + std::to_string(d)
                          + " does not match @seriesLength " + std::to_string(length));
        }
      }

      const auto label_text = text::trim(fields.back());
      const auto it = std::find(ds.class_names.begin(), ds.class_names.end(), label_text);
      if (it == ds.class_names.end()) { throw DataError(where + "unknown class label '" + std::string(label_text) + "'"); }

      Series x(length, dims);
      for (std::size_t d = 0; d < dims; ++d) {
        for (std::size_t t = 0; t < length; ++t) { x(t, d) = channels[d][t]; }
      }
      ds.instances.push_back(std::move(x));
      ds.labels.push_back(static_cast<std::size_t>(it - ds.class_names.begin()));
    }

    if (!in_data) { throw DataError("no @data section"); }
    ds.num_classes = ds.class_names.size();
    ds.validate();
    return ds;
  }

  enum class DataFormat { native, uea_ts };

  inline DataFormat parse_format(std::string_view s) {
    if (s == "native") { return DataFormat::native; }
    if (s == "uea-ts") { return DataFormat::uea_ts; }
    throw UsageError("unknown format '" + std::string(s) + "', expected native or uea-ts");
  }

  /// Dataset name from a file stem, dropping conventional _TRAIN/_TEST suffixes.
  inline std::string dataset_name_from_path(const std::filesystem::path& path) {
    std::string stem = path.stem().string();
    for (std::string_view suffix: {"_TRAIN", "_TEST", "_train", "_test"}) {
      if (stem.size() > suffix.size() && stem.ends_with(suffix)) {
        stem.resize(stem.size() - suffix.size());
        break;
      }
    }
    return stem;
  }

  inline Dataset load_dataset(const std::filesystem::path& path, DataFormat format) {
    if (!std::filesystem::exists(path)) { throw DataError("file not found: " + path.string()); }
    const std::string content = read_text_file(path);
    try {
      Dataset ds = format == DataFormat::native ? parse_native(content) : parse_uea_ts(content);
      if (ds.name.empty()) { ds.name = dataset_name_from_path(path); }
      return ds;
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }

  // --- Normalization -----------------------------------------------------------------------

  /// Per-dimension z-normalization parameters.
  struct NormalizationStats {
    std::vector<double> mean;
    std::vector<double> std;

    std::size_t dims() const noexcept { return mean.size(); }
    bool operator==(const NormalizationStats&) const = default;
  };

  inline constexpr double kDegenerateStd = 1e-12;

  /// Population mean and std per dimension over every instance and time step (Welford).
  inline NormalizationStats fit_normalization(const Dataset& train) {
    if (train.empty()) { throw DataError("cannot fit normalization on an empty dataset"); }
    const std::size_t D = train.dims();
    NormalizationStats stats{std::vector<double>(D, 0.0), std::vector<double>(D, 0.0)};
    std::vector<double> m2(D, 0.0);
    double count = 0.0;
    for (const auto& x: train.instances) {
      for (std::size_t t = 0; t < x.length(); ++t) {
        count += 1.0;
        for (std::size_t d = 0; d < D; ++d) {
          const double delta = x(t, d) - stats.mean[d];
          stats.mean[d] += delta / count;
          m2[d] += delta * (x(t, d) - stats.mean[d]);
        }
      }
    }
    for (std::size_t d = 0; d < D; ++d) {
      const double s = std::sqrt(m2[d] / count);
      stats.std[d] = s < kDegenerateStd ? 1.0 : s;
    }
    return stats;
  }

  inline Series apply_normalization(const Series& x, const NormalizationStats& stats) {
    if (x.dims() != stats.dims()) {
      throw DataError("normalization expects " + std::to_string(stats.dims()) + " dimensions, series has " + std::to_string(x.dims()));
    }
    Series out = x;
    for (std::size_t t = 0; t < x.length(); ++t) {
      for (std::size_t d = 0; d < x.dims(); ++d) { out(t, d) = (x(t, d) - stats.mean[d]) / stats.std[d]; }
    }
    return out;
  }

  inline Series invert_normalization(const Series& z, const NormalizationStats& stats) {
    if (z.dims() != stats.dims()) { throw DataError("normalization dimension mismatch"); }
    Series out = z;
    for (std::size_t t = 0; t < z.length(); ++t) {
      for (std::size_t d = 0; d < z.dims(); ++d) { out(t, d) = z(t, d) * stats.std[d] + stats.mean[d]; }
    }
    return out;
  }

  inline Dataset apply_normalization(const Dataset& ds, const NormalizationStats& stats) {
    Dataset out = ds;
    for (auto& x: out.instances) { x = apply_normalization(x, stats); }
    return out;
  }

} // namespace mcels
