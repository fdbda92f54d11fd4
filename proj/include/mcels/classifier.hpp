#pragma once

#include "adam.hpp"
#include "data.hpp"
#include "error.hpp"
#include "random.hpp"
#include "series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mcels {

  /// Class probabilities produced by a classifier; components are nonnegative and sum to one.
  struct ProbabilityVector {
    std::vector<double> probs;

    std::size_t size() const noexcept { return probs.size(); }
    double operator[](std::size_t c) const noexcept { return probs[c]; }
    std::size_t top_class() const { return argmax(probs); }
  };

  namespace layers {

    /// 1-D convolution over time with same padding. Weights are stored [out][kernel][in] so the
    /// innermost loops run over contiguous input channels.
    struct Conv1d {
      std::size_t in_channels = 0;
      std::size_t out_channels = 0;
      std::size_t kernel = 0;
      std::vector<double> weight;
      std::vector<double> bias;

      Conv1d() = default;
      Conv1d(std::size_t in, std::size_t out, std::size_t k)
        : in_channels(in), out_channels(out), kernel(k), weight(in * out * k, 0.0), bias(out, 0.0) {}

      /// Zero padding at the front; the remainder goes at the back so output length equals input length.
      std::size_t pad_left() const noexcept { return (kernel - 1) / 2; }

      double& w(std::size_t o, std::size_t k, std::size_t i) noexcept { return weight[(o * kernel + k) * in_channels + i]; }
      double w(std::size_t o, std::size_t k, std::size_t i) const noexcept { return weight[(o * kernel + k) * in_channels + i]; }
    };

    struct Dense {
      std::size_t in_features = 0;
      std::size_t out_features = 0;
      std::vector<double> weight; // [out][in]
      std::vector<double> bias;

      Dense() = default;
      Dense(std::size_t in, std::size_t out) : in_features(in), out_features(out), weight(in * out, 0.0), bias(out, 0.0) {}
    };

    inline Matrix conv1d_forward(const Conv1d& conv, const Matrix& in) {
      const std::size_t T = in.rows();
      const std::size_t I = conv.in_channels;
      const std::size_t pad = conv.pad_left();
      Matrix out(T, conv.out_channels);
      for (std::size_t t = 0; t < T; ++t) {
        double* y = out.row(t);
        for (std::size_t o = 0; o < conv.out_channels; ++o) {
          double acc = conv.bias[o];
          for (std::size_t k = 0; k < conv.kernel; ++k) {
            const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(pad);
            if (s < 0 || s >= static_cast<std::ptrdiff_t>(T)) { continue; }
            const double* x = in.row(static_cast<std::size_t>(s));
            const double* w = &conv.weight[(o * conv.kernel + k) * I];
            for (std::size_t i = 0; i < I; ++i) { acc += w[i] * x[i]; }
          }
          y[o] = acc;
        }
      }
      return out;
    }

    /// Backpropagates grad_out through the convolution. Parameter gradients are accumulated into
    /// `grads` when it is non-null; the input gradient is returned when requested.
    inline Matrix conv1d_backward(const Conv1d& conv, const Matrix& in, const Matrix& grad_out, Conv1d* grads,
                                  bool want_input_grad = true) {
      const std::size_t T = in.rows();
      const std::size_t I = conv.in_channels;
      const std::size_t pad = conv.pad_left();
      Matrix grad_in = want_input_grad ? Matrix(T, I) : Matrix();
      for (std::size_t t = 0; t < T; ++t) {
        const double* g_row = grad_out.row(t);
        for (std::size_t o = 0; o < conv.out_channels; ++o) {
          const double g = g_row[o];
          if (g == 0.0) { continue; }
          if (grads) { grads->bias[o] += g; }
          for (std::size_t k = 0; k < conv.kernel; ++k) {
            const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(pad);
            if (s < 0 || s >= static_cast<std::ptrdiff_t>(T)) { continue; }
            const std::size_t base = (o * conv.kernel + k) * I;
            if (want_input_grad) {
              double* gi = grad_in.row(static_cast<std::size_t>(s));
              const double* w = &conv.weight[base];
              for (std::size_t i = 0; i < I; ++i) { gi[i] += g * w[i]; }
            }
            if (grads) {
              const double* x = in.row(static_cast<std::size_t>(s));
              double* gw = &grads->weight[base];
              for (std::size_t i = 0; i < I; ++i) { gw[i] += g * x[i]; }
            }
          }
        }
      }
      return grad_in;
    }

    inline Matrix relu_forward(Matrix x) {
      for (double& v: x.values()) { v = v > 0.0 ? v : 0.0; }
      return x;
    }

    /// Subgradient 0 at the kink.
    inline Matrix relu_backward(const Matrix& pre_activation, Matrix grad) {
      auto g = grad.values();
      auto p = pre_activation.values();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(p[i] > 0.0)) { g[i] = 0.0; }
      }
      return grad;
    }

    inline std::vector<double> global_average_pool(const Matrix& h) {
      std::vector<double> pooled(h.cols(), 0.0);
      for (std::size_t t = 0; t < h.rows(); ++t) {
        const double* r = h.row(t);
        for (std::size_t c = 0; c < h.cols(); ++c) { pooled[c] += r[c]; }
      }
      const double inv = 1.0 / static_cast<double>(h.rows());
      for (double& v: pooled) { v *= inv; }
      return pooled;
    }

    inline Matrix global_average_pool_backward(std::span<const double> grad_pooled, std::size_t T) {
      Matrix g(T, grad_pooled.size());
      const double inv = 1.0 / static_cast<double>(T);
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < grad_pooled.size(); ++c) { g(t, c) = grad_pooled[c] * inv; }
      }
      return g;
    }

    inline std::vector<double> dense_forward(const Dense& dense, std::span<const double> in) {
      std::vector<double> out(dense.out_features);
      for (std::size_t j = 0; j < dense.out_features; ++j) {
        double acc = dense.bias[j];
        const double* w = &dense.weight[j * dense.in_features];
        for (std::size_t i = 0; i < dense.in_features; ++i) { acc += w[i] * in[i]; }
        out[j] = acc;
      }
      return out;
    }

    inline std::vector<double> dense_backward(const Dense& dense, std::span<const double> in, std::span<const double> grad_out,
                                              Dense* grads) {
      std::vector<double> grad_in(dense.in_features, 0.0);
      for (std::size_t j = 0; j < dense.out_features; ++j) {
        const double g = grad_out[j];
        const double* w = &dense.weight[j * dense.in_features];
        for (std::size_t i = 0; i < dense.in_features; ++i) { grad_in[i] += g * w[i]; }
        if (grads) {
          grads->bias[j] += g;
          double* gw = &grads->weight[j * dense.in_features];
          for (std::size_t i = 0; i < dense.in_features; ++i) { gw[i] += g * in[i]; }
        }
      }
      return grad_in;
    }

    /// Max-subtracted softmax.
    inline std::vector<double> softmax(std::span<const double> logits) {
      const double top = *std::max_element(logits.begin(), logits.end());
      std::vector<double> p(logits.size());
      double sum = 0.0;
      for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - top);
        sum += p[i];
      }
      for (double& v: p) { v /= sum; }
      return p;
    }

    /// Vector-Jacobian product of softmax: dL/dlogit_j = p_j (g_j - sum_k g_k p_k).
    inline std::vector<double> softmax_backward(std::span<const double> probs, std::span<const double> grad_probs) {
      double dot = 0.0;
      for (std::size_t k = 0; k < probs.size(); ++k) { dot += grad_probs[k] * probs[k]; }
      std::vector<double> g(probs.size());
      for (std::size_t j = 0; j < probs.size(); ++j) { g[j] = probs[j] * (grad_probs[j] - dot); }
      return g;
    }

  } // namespace layers

  struct FcnConfig {
    std::vector<std::size_t> channels{32, 64, 32};
    std::vector<std::size_t> kernel_sizes{8, 5, 3};
    std::size_t input_dims = 1;
    std::size_t num_classes = 2;
    std::uint64_t seed = 0;

    void validate() const {
      if (channels.empty() || channels.size() != kernel_sizes.size()) {
        throw UsageError("FCN config needs matching, nonempty channel and kernel lists");
      }
      for (auto c: channels) {
        if (c == 0) { throw UsageError("FCN channel counts must be positive"); }
      }
      for (auto k: kernel_sizes) {
        if (k == 0) { throw UsageError("FCN kernel sizes must be positive"); }
      }
      if (input_dims == 0) { throw UsageError("FCN input dimension must be positive"); }
      if (num_classes < 2) { throw UsageError("FCN needs at least 2 classes"); }
    }

    bool operator==(const FcnConfig&) const = default;
  };

  /// Trainable weights of the network; also used, zero-filled, as the gradient accumulator.
  struct FcnParameters {
    std::vector<layers::Conv1d> blocks;
    layers::Dense dense;

    FcnParameters zeros_like() const {
      FcnParameters z;
      for (const auto& b: blocks) { z.blocks.emplace_back(b.in_channels, b.out_channels, b.kernel); }
      z.dense = layers::Dense(dense.in_features, dense.out_features);
      return z;
    }

    /// Flat views in a fixed order: (block weight, block bias)*, dense weight, dense bias.
    std::vector<std::span<double>> tensors() {
      std::vector<std::span<double>> out;
      for (auto& b: blocks) {
        out.emplace_back(b.weight);
        out.emplace_back(b.bias);
      }
      out.emplace_back(dense.weight);
      out.emplace_back(dense.bias);
      return out;
    }

    std::vector<std::span<const double>> tensors() const {
      std::vector<std::span<const double>> out;
      for (const auto& b: blocks) {
        out.emplace_back(b.weight);
        out.emplace_back(b.bias);
      }
      out.emplace_back(dense.weight);
      out.emplace_back(dense.bias);
      return out;
    }

    bool operator==(const FcnParameters& other) const {
      const auto a = tensors();
      const auto b = other.tensors();
      if (a.size() != b.size()) { return false; }
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::equal(a[i].begin(), a[i].end(), b[i].begin(), b[i].end())) { return false; }
      }
      return true;
    }
  };

  /// Intermediate activations retained by a forward pass for the reverse pass.
  struct ForwardCache {
    std::vector<Matrix> inputs;          // input to each block
    std::vector<Matrix> pre_activations; // conv outputs before ReLU
    Matrix last_hidden;
    std::vector<double> pooled;
    std::vector<double> logits;
    ProbabilityVector probs;
  };

  /// Fully convolutional time-series classifier: [conv -> ReLU]* -> global average pool -> dense -> softmax.
  class Fcn {
  public:
    Fcn() = default;

    /// He-style uniform initialisation: weights ~ U(-b, b) with b = sqrt(6 / fan_in); biases start at zero.
    static Fcn init(const FcnConfig& config) {
      config.validate();
      Fcn net;
      net.config_ = config;
      Rng rng(config.seed);
      std::size_t in = config.input_dims;
      for (std::size_t b = 0; b < config.channels.size(); ++b) {
        layers::Conv1d conv(in, config.channels[b], config.kernel_sizes[b]);
        const double bound = init_bound(in * conv.kernel);
        for (double& w: conv.weight) { w = rng.uniform(-bound, bound); }
        net.params_.blocks.push_back(std::move(conv));
        in = config.channels[b];
      }
      net.params_.dense = layers::Dense(in, config.num_classes);
      const double bound = init_bound(in);
      for (double& w: net.params_.dense.weight) { w = rng.uniform(-bound, bound); }
      return net;
    }

    static double init_bound(std::size_t fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }

    const FcnConfig& config() const noexcept { return config_; }
    std::size_t num_classes() const noexcept { return config_.num_classes; }
    std::size_t input_dims() const noexcept { return config_.input_dims; }

    FcnParameters& parameters() noexcept { return params_; }
    const FcnParameters& parameters() const noexcept { return params_; }

    /// Statistics the inputs were normalized with during training, if any.
    const std::optional<NormalizationStats>& normalization() const noexcept { return normalization_; }
    void set_normalization(std::optional<NormalizationStats> stats) { normalization_ = std::move(stats); }

    ForwardCache forward_cache(const Series& x) const {
      check_input(x);
      ForwardCache cache;
      Matrix h = x;
      for (const auto& conv: params_.blocks) {
        Matrix pre = layers::conv1d_forward(conv, h);
        cache.inputs.push_back(std::move(h));
        h = layers::relu_forward(pre);
        cache.pre_activations.push_back(std::move(pre));
      }
      cache.pooled = layers::global_average_pool(h);
      cache.last_hidden = std::move(h);
      cache.logits = layers::dense_forward(params_.dense, cache.pooled);
      cache.probs.probs = layers::softmax(cache.logits);
      return cache;
    }

    ProbabilityVector forward(const Series& x) const { return forward_cache(x).probs; }

    std::size_t predict(const Series& x) const { return forward(x).top_class(); }

    /// Reverse pass from a logit gradient. Accumulates parameter gradients into `grads` when given.
    Matrix backward(const ForwardCache& cache, std::span<const double> grad_logits, FcnParameters* grads,
                    bool want_input_grad) const {
      const std::size_t T = cache.last_hidden.rows();
      const auto g_pooled = layers::dense_backward(params_.dense, cache.pooled, grad_logits, grads ? &grads->dense : nullptr);
      Matrix g = layers::global_average_pool_backward(g_pooled, T);
      for (std::size_t b = params_.blocks.size(); b-- > 0;) {
        g = layers::relu_backward(cache.pre_activations[b], std::move(g));
        const bool need_in = b > 0 || want_input_grad;
        g = layers::conv1d_backward(params_.blocks[b], cache.inputs[b], g, grads ? &grads->blocks[b] : nullptr, need_in);
      }
      return g;
    }

    /// Probabilities at x together with d probs[cls] / d x[t, d].
    std::pair<ProbabilityVector, Matrix> probability_and_input_gradient(const Series& x, std::size_t cls) const {
      if (cls >= num_classes()) { throw DataError("class index " + std::to_string(cls) + " out of range"); }
      ForwardCache cache = forward_cache(x);
      std::vector<double> onehot(num_classes(), 0.0);
      onehot[cls] = 1.0;
      const auto g_logits = layers::softmax_backward(cache.probs.probs, onehot);
      Matrix grad = backward(cache, g_logits, nullptr, true);
      return {std::move(cache.probs), std::move(grad)};
    }

    Matrix class_probability_input_gradient(const Series& x, std::size_t cls) const {
      return probability_and_input_gradient(x, cls).second;
    }

  private:
    void check_input(const Series& x) const {
      if (x.dims() != config_.input_dims) {
        throw DataError("classifier expects " + std::to_string(config_.input_dims) + " dimensions, input has "
                        + std::to_string(x.dims()));
      }
      if (x.length() == 0) { throw DataError("empty input series"); }
    }

    FcnConfig config_;
    FcnParameters params_;
    std::optional<NormalizationStats> normalization_;
  };

  // --- Training -----------------------------------------------------------------------------

  struct TrainOptions {
    std::size_t epochs = 200;
    double lr = 1e-3;
    std::size_t batch_size = 16;
    std::uint64_t seed = 42;
  };

  struct EpochStats {
    double loss = 0.0;     // mean cross-entropy over the epoch
    double accuracy = 0.0; // fraction of examples classified correctly before each batch update
  };

  struct TrainResult {
    Fcn model;
    std::vector<EpochStats> trace;
  };

  inline constexpr double kLogProbFloor = 1e-12;

  inline double cross_entropy(const ProbabilityVector& p, std::size_t label) {
    return -std::log(std::max(p[label], kLogProbFloor));
  }

  /// Mini-batch ADAM on mean cross-entropy. Deterministic given (model, data, options).
  inline TrainResult train(Fcn model, const Dataset& data, const TrainOptions& options) {
    if (data.empty()) { throw DataError("cannot train on an empty dataset"); }
    if (!(options.lr > 0.0)) { throw UsageError("learning rate must be positive"); }
    if (options.batch_size == 0) { throw UsageError("batch size must be positive"); }
    if (data.dims() != model.input_dims()) {
      throw DataError("dataset has " + std::to_string(data.dims()) + " dimensions, classifier expects "
                      + std::to_string(model.input_dims()));
    }
    for (auto label: data.labels) {
      if (label >= model.num_classes()) { throw DataError("label " + std::to_string(label) + " exceeds classifier class count"); }
    }

    TrainResult result;
    Rng rng(options.seed);
    const AdamHyper hyper{options.lr, 0.9, 0.999, 1e-8};
    std::vector<AdamState> states;
    for (auto tensor: model.parameters().tensors()) { states.emplace_back(tensor.size()); }

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
      rng.shuffle(std::span<std::size_t>(order));
      double loss_sum = 0.0;
      std::size_t correct = 0;
      for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
        const std::size_t end = std::min(order.size(), start + options.batch_size);
        FcnParameters grads = model.parameters().zeros_like();
        for (std::size_t j = start; j < end; ++j) {
          const std::size_t idx = order[j];
          const std::size_t label = data.labels[idx];
          ForwardCache cache = model.forward_cache(data.instances[idx]);
          loss_sum += cross_entropy(cache.probs, label);
          if (cache.probs.top_class() == label) { ++correct; }
          std::vector<double> g_logits = cache.probs.probs;
          g_logits[label] -= 1.0;
          model.backward(cache, g_logits, &grads, false);
        }
        const double scale = 1.0 / static_cast<double>(end - start);
        auto params = model.parameters().tensors();
        auto gtensors = grads.tensors();
        for (std::size_t k = 0; k < params.size(); ++k) {
          for (double& g: gtensors[k]) { g *= scale; }
          adam_step(params[k], gtensors[k], states[k], hyper);
        }
      }
      const double n = static_cast<double>(data.size());
      result.trace.push_back({loss_sum / n, static_cast<double>(correct) / n});
      if (!std::isfinite(result.trace.back().loss)) {
        throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch));
      }
    }
    result.model = std::move(model);
    return result;
  }

  inline double accuracy(const Fcn& model, const Dataset& data) {
    if (data.empty()) { return 0.0; }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (model.predict(data.instances[i]) == data.labels[i]) { ++correct; }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
  }

} // namespace mcels
