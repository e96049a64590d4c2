#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "snnadmm/state.hpp"

namespace snnadmm {

// Spikes feeding weight layer l at time t; layer 0 reads the encoded input.
inline const Matrix& layer_input(const AdmmState& state, const std::vector<Matrix>& input,
                                 int l, int t) {
  return l == 0 ? input[t] : state.spikes[l - 1][t];
}

inline Matrix drive(const AdmmState& state, const std::vector<Matrix>& input, int l, int t) {
  return state.weights[l] * layer_input(state, input, l, t);
}

// Membrane value the dynamics equations predict for block (l, t), evaluated
// with the same expression forward() uses so that simulated trajectories
// yield exactly zero residuals.
inline Matrix dynamics_prediction(const AdmmState& state, const std::vector<Matrix>& input,
                                  int l, int t) {
  const Matrix drv = drive(state, input, l, t);
  const bool hidden = l < state.net.layers() - 1;
  const Matrix* prev_membrane = t > 0 ? &state.membrane[l][t - 1] : nullptr;
  const Matrix* prev_spikes = (t > 0 && hidden) ? &state.spikes[l][t - 1] : nullptr;
  return lif_step(drv, prev_membrane, prev_spikes, state.net.decay, state.net.threshold);
}

inline Matrix dynamics_residual(const AdmmState& state, const std::vector<Matrix>& input,
                                int l, int t) {
  return state.membrane[l][t] - dynamics_prediction(state, input, l, t);
}

// Final-step output-layer violation: the one constraint the multiplier
// enforces exactly.
inline Matrix exact_constraint_residual(const AdmmState& state, const std::vector<Matrix>& input) {
  return dynamics_residual(state, input, state.net.layers() - 1, state.net.time_steps - 1);
}

inline void require_layer(const AdmmState& state, int l) {
  if (l < 0 || l >= state.net.layers()) {
    throw InvalidInputError("layer index " + std::to_string(l) + " out of range");
  }
}

inline void require_hidden_layer(const AdmmState& state, int l) {
  if (l < 0 || l >= state.net.layers() - 1) {
    throw InvalidInputError("hidden layer index " + std::to_string(l) + " out of range");
  }
}

inline void require_time(const AdmmState& state, int t) {
  if (t < 0 || t >= state.net.time_steps) {
    throw InvalidInputError("time index " + std::to_string(t) + " out of range");
  }
}

// ---------------------------------------------------------------------------
// Auxiliary tensor families. The closed-form updates are written against
// per-time decompositions of the dynamics; these are always rebuilt from the
// current (weights, membrane, spikes), never cached across updates.

// Per-time targets of the weight regression: what W_l times the layer input
// must reproduce when the dynamics hold. Hidden layers add back the firing
// reset; the output layer has none.
inline std::vector<Matrix> regression_targets(const AdmmState& state, int l) {
  require_layer(state, l);
  const bool hidden = l < state.net.layers() - 1;
  const double decay = state.net.decay;
  const double threshold = state.net.threshold;
  std::vector<Matrix> targets(state.net.time_steps);
  for (int t = 0; t < state.net.time_steps; ++t) {
    Matrix x = state.membrane[l][t];
    if (t > 0) {
      x -= decay * state.membrane[l][t - 1];
      if (hidden) x += threshold * state.spikes[l][t - 1];
    }
    targets[t] = std::move(x);
  }
  return targets;
}

// Drive-side decomposition of the membrane recurrence for one layer.
struct MembraneTerms {
  std::vector<Matrix> drive;       // weighted input spikes
  std::vector<Matrix> with_decay;  // drive plus the decayed previous membrane
  std::vector<Matrix> predicted;   // with_decay minus the firing reset
  std::vector<Matrix> carry;       // membrane minus drive
};

inline MembraneTerms membrane_terms(const AdmmState& state, const std::vector<Matrix>& input,
                                    int l) {
  require_layer(state, l);
  const bool hidden = l < state.net.layers() - 1;
  const double decay = state.net.decay;
  const double threshold = state.net.threshold;
  const int steps = state.net.time_steps;
  MembraneTerms terms;
  terms.drive.resize(steps);
  terms.with_decay.resize(steps);
  terms.predicted.resize(steps);
  terms.carry.resize(steps);
  for (int t = 0; t < steps; ++t) {
    terms.drive[t] = drive(state, input, l, t);
    terms.with_decay[t] =
        t > 0 ? Matrix(terms.drive[t] + decay * state.membrane[l][t - 1]) : terms.drive[t];
    terms.predicted[t] = (t > 0 && hidden)
                             ? Matrix(terms.with_decay[t] - threshold * state.spikes[l][t - 1])
                             : terms.with_decay[t];
    terms.carry[t] = state.membrane[l][t] - terms.drive[t];
  }
  return terms;
}

// Increment-side decomposition used by the spike updates for one layer.
struct SpikeTerms {
  std::vector<Matrix> increment;     // membrane minus the decayed previous membrane
  std::vector<Matrix> drive_target;  // increment plus the firing reset
  std::vector<Matrix> drive_gap;     // increment minus drive
};

inline SpikeTerms spike_terms(const AdmmState& state, const std::vector<Matrix>& input, int l) {
  require_layer(state, l);
  const bool hidden = l < state.net.layers() - 1;
  const double decay = state.net.decay;
  const double threshold = state.net.threshold;
  const int steps = state.net.time_steps;
  SpikeTerms terms;
  terms.increment.resize(steps);
  terms.drive_target.resize(steps);
  terms.drive_gap.resize(steps);
  for (int t = 0; t < steps; ++t) {
    terms.increment[t] = t > 0 ? Matrix(state.membrane[l][t] - decay * state.membrane[l][t - 1])
                               : state.membrane[l][t];
    terms.drive_target[t] =
        (t > 0 && hidden) ? Matrix(terms.increment[t] + threshold * state.spikes[l][t - 1])
                          : terms.increment[t];
    terms.drive_gap[t] = terms.increment[t] - drive(state, input, l, t);
  }
  return terms;
}

// ---------------------------------------------------------------------------
// Objective evaluation.

// Squared Frobenius distance between the final output membrane and the
// targets.
inline double loss(const Matrix& output_membrane, const TargetMatrix& targets) {
  if (output_membrane.rows() != targets.rows() || output_membrane.cols() != targets.cols()) {
    throw InvalidInputError("loss: membrane and target shapes differ");
  }
  return (output_membrane - targets).squaredNorm();
}

// The relaxed objective: loss, quadratic penalties on every dynamics
// constraint, quadratic penalties tying hidden spikes to their thresholded
// membranes, and the inner product of the multiplier with the final-step
// output violation.
inline double lagrangian(const AdmmState& state, const std::vector<Matrix>& input,
                         const TargetMatrix& targets) {
  validate_targets(targets, state.net, state.batch());
  const int layers = state.net.layers();
  const int steps = state.net.time_steps;

  double dynamics = 0.0;
  for (int l = 0; l < layers; ++l) {
    for (int t = 0; t < steps; ++t) {
      dynamics += dynamics_residual(state, input, l, t).squaredNorm();
    }
  }
  double activation = 0.0;
  for (int l = 0; l < layers - 1; ++l) {
    for (int t = 0; t < steps; ++t) {
      activation +=
          (state.spikes[l][t] - heaviside(state.membrane[l][t], state.net.threshold)).squaredNorm();
    }
  }
  const double coupling =
      (exact_constraint_residual(state, input).array() * state.dual.array()).sum();
  return loss(state.membrane.back().back(), targets) + 0.5 * state.hyper.rho * dynamics +
         0.5 * state.hyper.sigma * activation + coupling;
}

inline double lagrangian(const AdmmState& state, const SpikeTensor& input,
                         const TargetMatrix& targets) {
  return lagrangian(state, spike_slices(input), targets);
}

inline ResidualReport residuals(const AdmmState& state, const std::vector<Matrix>& input) {
  const int layers = state.net.layers();
  const int steps = state.net.time_steps;
  const double samples = static_cast<double>(state.batch());

  ResidualReport report;
  report.primal = exact_constraint_residual(state, input).norm() /
                  std::sqrt(samples * state.net.output_size());
  report.dynamics_soft.resize(layers);
  for (int l = 0; l < layers; ++l) {
    double sum = 0.0;
    for (int t = 0; t < steps; ++t) {
      sum += dynamics_residual(state, input, l, t).squaredNorm();
    }
    report.dynamics_soft[l] = std::sqrt(sum) / std::sqrt(steps * samples * state.net.layer_sizes[l + 1]);
  }
  report.activation_soft.resize(layers - 1);
  for (int l = 0; l < layers - 1; ++l) {
    double sum = 0.0;
    for (int t = 0; t < steps; ++t) {
      sum += (state.spikes[l][t] - heaviside(state.membrane[l][t], state.net.threshold))
                 .squaredNorm();
    }
    report.activation_soft[l] =
        std::sqrt(sum) / std::sqrt(steps * samples * state.net.layer_sizes[l + 1]);
  }
  return report;
}

inline ResidualReport residuals(const AdmmState& state, const SpikeTensor& input) {
  return residuals(state, spike_slices(input));
}

}  // namespace snnadmm
