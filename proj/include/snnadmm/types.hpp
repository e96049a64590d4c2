#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "snnadmm/errors.hpp"

namespace snnadmm {

using Matrix = Eigen::MatrixXd;

// Network architecture plus the neuron constants shared by every layer.
struct NetworkConfig {
  std::vector<int> layer_sizes;  // input size first, then one entry per weight layer
  double decay = 0.95;           // per-step membrane retention, 0 <= decay < 1
  double threshold = 1.0;        // firing threshold, > 0
  int time_steps = 1;

  int layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }

  void validate() const {
    if (layers() < 1) throw InvalidInputError("network: need at least one weight layer");
    for (int n : layer_sizes) {
      if (n < 1) throw InvalidInputError("network: layer sizes must be >= 1");
    }
    if (!(decay >= 0.0 && decay < 1.0)) throw InvalidInputError("network: decay must lie in [0, 1)");
    if (!(threshold > 0.0)) throw InvalidInputError("network: threshold must be positive");
    if (time_steps < 1) throw InvalidInputError("network: time_steps must be >= 1");
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

// One weight matrix per layer; weights[l] maps layer_sizes[l] inputs to
// layer_sizes[l + 1] neurons.
using WeightSet = std::vector<Matrix>;

inline void validate_weights(const WeightSet& weights, const NetworkConfig& net) {
  net.validate();
  if (static_cast<int>(weights.size()) != net.layers()) {
    throw InvalidInputError("weights: matrix count does not match layer count");
  }
  for (int l = 0; l < net.layers(); ++l) {
    if (weights[l].rows() != net.layer_sizes[l + 1] || weights[l].cols() != net.layer_sizes[l]) {
      throw InvalidInputError("weights: layer " + std::to_string(l) + " has the wrong shape");
    }
    if (!weights[l].allFinite()) {
      throw InvalidInputError("weights: layer " + std::to_string(l) + " has non-finite entries");
    }
  }
}

// Binary spike trains over (time, sample, neuron), one byte per spike.
struct SpikeTensor {
  int time_steps = 0;
  int samples = 0;
  int neurons = 0;
  std::vector<std::uint8_t> values;  // index ((t * samples) + m) * neurons + i

  static SpikeTensor zeros(int time_steps, int samples, int neurons) {
    SpikeTensor s;
    s.time_steps = time_steps;
    s.samples = samples;
    s.neurons = neurons;
    s.values.assign(static_cast<std::size_t>(time_steps) * samples * neurons, 0);
    return s;
  }

  std::size_t index(int t, int m, int i) const {
    return (static_cast<std::size_t>(t) * samples + m) * neurons + i;
  }
  std::uint8_t at(int t, int m, int i) const { return values[index(t, m, i)]; }
  void set(int t, int m, int i, std::uint8_t v) { values[index(t, m, i)] = v; }

  // Spikes at one time step as a dense neurons x samples matrix.
  Matrix slice(int t) const {
    Matrix out(neurons, samples);
    for (int m = 0; m < samples; ++m) {
      for (int i = 0; i < neurons; ++i) {
        out(i, m) = static_cast<double>(at(t, m, i));
      }
    }
    return out;
  }

  void validate() const {
    if (time_steps < 0 || samples < 0 || neurons < 0) {
      throw InvalidInputError("spike tensor: negative dimension");
    }
    if (values.size() != static_cast<std::size_t>(time_steps) * samples * neurons) {
      throw InvalidInputError("spike tensor: payload size does not match dimensions");
    }
    for (std::uint8_t v : values) {
      if (v > 1) throw InvalidInputError("spike tensor: entries must be 0 or 1");
    }
  }
};

inline std::vector<Matrix> spike_slices(const SpikeTensor& spikes) {
  std::vector<Matrix> slices;
  slices.reserve(spikes.time_steps);
  for (int t = 0; t < spikes.time_steps; ++t) slices.push_back(spikes.slice(t));
  return slices;
}

// Membrane and spike trajectories produced by the forward simulator,
// indexed [layer][time]. The output layer has no spike trains.
struct StateTrajectory {
  std::vector<std::vector<Matrix>> membrane;
  std::vector<std::vector<Matrix>> spikes;
};

// Desired output-layer membrane at the final step, output_size x samples.
using TargetMatrix = Matrix;

inline void validate_targets(const TargetMatrix& targets, const NetworkConfig& net, int samples) {
  if (targets.rows() != net.output_size() || targets.cols() != samples) {
    throw InvalidInputError("targets: expected output_size x samples");
  }
  if (!targets.allFinite()) throw InvalidInputError("targets: non-finite entries");
}

}  // namespace snnadmm
