#pragma once

#include "error.hpp"
#include "random.hpp"
#include "series.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace mcels {

  struct SyntheticSpec {
    std::size_t length = 32;
    std::size_t dims = 3;
    std::size_t count = 200;
    std::uint64_t seed = 7;
    double noise_sigma = 0.3;
    double bump_amplitude = 2.0;

    /// The planted window [T/4, T/2) in dimension 0.
    std::size_t window_begin() const noexcept { return length / 4; }
    std::size_t window_end() const noexcept { return length / 2; }
  };

  struct TrainTestSplit {
    Dataset train;
    Dataset test;
  };

  /// Two classes: class 0 is iid Gaussian noise; class 1 adds a half-sine bump to dimension 0
  /// over [T/4, T/2). Classes are balanced and each is split 70/30 into train/test.
  inline TrainTestSplit generate_synthetic(const SyntheticSpec& spec) {
    if (spec.length < 8) { throw UsageError("synthetic series length must be at least 8"); }
    if (spec.dims < 1) { throw UsageError("synthetic series need at least 1 dimension"); }
    if (spec.count < 20) { throw UsageError("synthetic dataset needs at least 20 instances"); }

    Rng rng(spec.seed);
    const std::size_t wb = spec.window_begin();
    const std::size_t we = spec.window_end();
    const double width = static_cast<double>(we - wb);

    TrainTestSplit split;
    split.train.name = split.test.name = "synthetic";
    split.train.num_classes = split.test.num_classes = 2;
    const std::size_t per_class[2] = {spec.count / 2, spec.count - spec.count / 2};
    for (std::size_t label = 0; label < 2; ++label) {
      const auto n_train = static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(per_class[label])));
      for (std::size_t i = 0; i < per_class[label]; ++i) {
        Series x(spec.length, spec.dims);
        for (double& v: x.values()) { v = spec.noise_sigma * rng.normal(); }
        if (label == 1) {
          for (std::size_t t = wb; t < we; ++t) {
            x(t, 0) += spec.bump_amplitude * std::sin(std::numbers::pi * (static_cast<double>(t - wb) + 0.5) / width);
          }
        }
        Dataset& dst = i < n_train ? split.train : split.test;
        dst.instances.push_back(std::move(x));
        dst.labels.push_back(label);
      }
    }

    for (Dataset* ds: {&split.train, &split.test}) {
      std::vector<std::size_t> order(ds->size());
      for (std::size_t i = 0; i < order.size(); ++i) { order[i] = i; }
      rng.shuffle(std::span<std::size_t>(order));
      Dataset shuffled;
      shuffled.name = ds->name;
      shuffled.num_classes = ds->num_classes;
      for (auto i: order) {
        shuffled.instances.push_back(std::move(ds->instances[i]));
        shuffled.labels.push_back(ds->labels[i]);
      }
      *ds = std::move(shuffled);
    }
    return split;
  }

} // namespace mcels
