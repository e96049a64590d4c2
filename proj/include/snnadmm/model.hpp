#pragma once

#include <vector>

#include "snnadmm/types.hpp"

namespace snnadmm {

inline double heaviside_scalar(double membrane, double threshold) {
  return membrane > threshold ? 1.0 : 0.0;
}

// Elementwise spike indicator: 1 where the membrane strictly exceeds the
// threshold, 0 otherwise (a membrane sitting exactly at the threshold does
// not fire).
inline Matrix heaviside(const Matrix& membrane, double threshold) {
  if (!membrane.allFinite()) throw InvalidInputError("heaviside: non-finite membrane input");
  return (membrane.array() > threshold).cast<double>().matrix();
}

// One step of the leaky integrate-and-fire recurrence. `prev_membrane` is
// null at the first step; `prev_spikes` is also null for the output layer,
// which integrates without the firing reset. Residual evaluation reuses this
// function so that simulated trajectories cancel exactly.
inline Matrix lif_step(const Matrix& drive, const Matrix* prev_membrane,
                       const Matrix* prev_spikes, double decay, double threshold) {
  if (prev_membrane == nullptr) return drive;
  if (prev_spikes == nullptr) return decay * (*prev_membrane) + drive;
  return decay * (*prev_membrane) + drive - threshold * (*prev_spikes);
}

// Simulates the network on a spike batch: each layer leaks by `decay`,
// integrates its weighted input spikes, fires strictly above `threshold`,
// and loses one threshold of potential per emitted spike. The output layer
// accumulates without firing.
inline StateTrajectory forward(const WeightSet& weights, const SpikeTensor& input,
                               const NetworkConfig& net) {
  validate_weights(weights, net);
  input.validate();
  if (input.time_steps != net.time_steps || input.neurons != net.input_size()) {
    throw InvalidInputError("forward: input tensor does not match the network dimensions");
  }
  const int layers = net.layers();
  const int steps = net.time_steps;

  StateTrajectory traj;
  traj.membrane.assign(layers, std::vector<Matrix>(steps));
  traj.spikes.assign(layers > 1 ? layers - 1 : 0, std::vector<Matrix>(steps));

  for (int t = 0; t < steps; ++t) {
    const Matrix in_slice = input.slice(t);
    for (int l = 0; l < layers; ++l) {
      const Matrix& feed = (l == 0) ? in_slice : traj.spikes[l - 1][t];
      const Matrix drive = weights[l] * feed;
      const bool hidden = l < layers - 1;
      const Matrix* prev_membrane = t > 0 ? &traj.membrane[l][t - 1] : nullptr;
      const Matrix* prev_spikes = (t > 0 && hidden) ? &traj.spikes[l][t - 1] : nullptr;
      traj.membrane[l][t] = lif_step(drive, prev_membrane, prev_spikes, net.decay, net.threshold);
      if (hidden) traj.spikes[l][t] = heaviside(traj.membrane[l][t], net.threshold);
    }
  }
  return traj;
}

// Per-column argmax; ties resolve to the lowest row index.
inline std::vector<int> argmax_labels(const Matrix& scores) {
  std::vector<int> labels(scores.cols());
  for (Eigen::Index m = 0; m < scores.cols(); ++m) {
    int best = 0;
    for (Eigen::Index i = 1; i < scores.rows(); ++i) {
      if (scores(i, m) > scores(best, m)) best = static_cast<int>(i);
    }
    labels[m] = best;
  }
  return labels;
}

// Class decisions: the output neuron with the largest final-step membrane
// wins.
inline std::vector<int> predict(const WeightSet& weights, const SpikeTensor& input,
                                const NetworkConfig& net) {
  const StateTrajectory traj = forward(weights, input, net);
  return argmax_labels(traj.membrane.back().back());
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw InvalidInputError("accuracy: label vectors differ in length");
  }
  if (predicted.empty()) throw InvalidInputError("accuracy: empty label vectors");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == truth[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace snnadmm
