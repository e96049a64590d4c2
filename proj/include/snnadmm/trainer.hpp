#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "snnadmm/rng.hpp"
#include "snnadmm/updates.hpp"

namespace snnadmm {

struct TrainerConfig {
  long total_iters = 1000;
  long warming_iters = 300;  // iterations with the multiplier pinned to zero
  std::uint64_t seed = 1;
  bool shuffle_layers = true;
  bool shuffle_times = true;
  double residual_tol = 1e-5;
  long metrics_every = 10;
  bool test_mode_no_clip = false;  // skip spike clipping; diagnostic runs only

  void validate() const {
    if (total_iters < 0) throw InvalidInputError("trainer: total_iters must be >= 0");
    if (warming_iters < 0) throw InvalidInputError("trainer: warming_iters must be >= 0");
    if (!(residual_tol >= 0.0)) throw InvalidInputError("trainer: residual_tol must be >= 0");
    if (metrics_every < 1) throw InvalidInputError("trainer: metrics_every must be >= 1");
  }

  friend bool operator==(const TrainerConfig&, const TrainerConfig&) = default;
};

struct MetricsRecord {
  long iteration = 0;
  double lagrangian = 0.0;
  double loss = 0.0;
  double primal_residual = 0.0;
  std::vector<double> dynamics_soft;
  std::vector<double> activation_soft;
  double train_accuracy = 0.0;
  double wall_time_ms = 0.0;
};

struct IterationStats {
  long lowered = 0;
  long raised = 0;
};

// Visit order for one iteration, drawn in one step so the serial and
// data-parallel paths consume the RNG identically: hidden layer order first,
// then a time order per hidden layer in visit order, then the output-layer
// time order.
struct UpdatePlan {
  std::vector<int> hidden_layers;
  std::vector<std::vector<int>> hidden_times;  // aligned with hidden_layers
  std::vector<int> output_times;
};

inline UpdatePlan make_update_plan(int layers, int time_steps, bool shuffle_layers,
                                   bool shuffle_times, Rng& rng) {
  UpdatePlan plan;
  plan.hidden_layers.resize(layers - 1);
  std::iota(plan.hidden_layers.begin(), plan.hidden_layers.end(), 0);
  if (shuffle_layers) std::shuffle(plan.hidden_layers.begin(), plan.hidden_layers.end(), rng);

  std::vector<int> times(time_steps);
  std::iota(times.begin(), times.end(), 0);
  for (std::size_t i = 0; i < plan.hidden_layers.size(); ++i) {
    std::vector<int> order = times;
    if (shuffle_times) std::shuffle(order.begin(), order.end(), rng);
    plan.hidden_times.push_back(std::move(order));
  }
  plan.output_times = times;
  if (shuffle_times) std::shuffle(plan.output_times.begin(), plan.output_times.end(), rng);
  return plan;
}

// One pass over a hidden layer: membrane update, threshold commutation, then
// the spike update, per time step in the given order. Every update reads the
// freshest neighboring blocks. Factored out so data-parallel shards run the
// exact same sweep on their sample slices.
inline IterationStats sweep_hidden_layer(AdmmState& state, const std::vector<Matrix>& input,
                                         int l, const std::vector<int>& times, bool no_clip) {
  const PostactivationSolver solver = make_postactivation_solver(state, l);
  IterationStats stats;
  for (int t : times) {
    Matrix membrane = update_preactivation_hidden(state, input, l, t);
    const CommuteCounts counts =
        commute_threshold(membrane, state.spikes[l][t], preactivation_quad_coeff(state, t),
                          state.hyper.sigma, state.net.threshold, state.hyper.epsilon);
    stats.lowered += counts.lowered;
    stats.raised += counts.raised;
    state.membrane[l][t] = std::move(membrane);
    Matrix spikes = update_postactivation(state, input, l, t, solver);
    state.spikes[l][t] = no_clip ? std::move(spikes) : clip_activation(spikes);
  }
  return stats;
}

inline void sweep_output_layer(AdmmState& state, const std::vector<Matrix>& input,
                               const TargetMatrix& targets, const std::vector<int>& times) {
  const int l = state.net.layers() - 1;
  for (int t : times) {
    state.membrane[l][t] = update_preactivation_last(state, input, t, targets);
  }
}

// One full block-coordinate iteration under a fixed plan: per hidden layer a
// weight update followed by its sweep, then the output-layer weight update
// and membrane sweep, then (once warming is over) the multiplier step.
inline IterationStats iterate_with_plan(AdmmState& state, const std::vector<Matrix>& input,
                                        const TargetMatrix& targets, const UpdatePlan& plan,
                                        bool no_clip, bool dual_active) {
  IterationStats stats;
  for (std::size_t i = 0; i < plan.hidden_layers.size(); ++i) {
    const int l = plan.hidden_layers[i];
    state.weights[l] = update_weights_hidden(state, input, l);
    const IterationStats layer_stats =
        sweep_hidden_layer(state, input, l, plan.hidden_times[i], no_clip);
    stats.lowered += layer_stats.lowered;
    stats.raised += layer_stats.raised;
  }
  state.weights[state.net.layers() - 1] = update_weights_last(state, input);
  sweep_output_layer(state, input, targets, plan.output_times);
  if (dual_active) update_dual(state, input);
  return stats;
}

inline IterationStats iterate(AdmmState& state, const std::vector<Matrix>& input,
                              const TargetMatrix& targets, const TrainerConfig& config, Rng& rng,
                              bool dual_active) {
  const UpdatePlan plan = make_update_plan(state.net.layers(), state.net.time_steps,
                                           config.shuffle_layers, config.shuffle_times, rng);
  return iterate_with_plan(state, input, targets, plan, config.test_mode_no_clip, dual_active);
}

// Feasible starting point: weights drawn uniformly with fan-in scaling, the
// membrane and spike blocks taken from a forward simulation, and a zero
// multiplier. Every penalty term starts at zero, so the objective equals the
// loss.
inline AdmmState initialize(const NetworkConfig& net, const SpikeTensor& input,
                            const TargetMatrix& targets, const AdmmHyperparams& hyper, Rng& rng) {
  net.validate();
  hyper.validate();
  validate_targets(targets, net, input.samples);

  WeightSet weights(net.layers());
  for (int l = 0; l < net.layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.layer_sizes[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(net.layer_sizes[l + 1], net.layer_sizes[l]);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
    }
    weights[l] = std::move(w);
  }
  StateTrajectory traj = forward(weights, input, net);
  return make_state(net, hyper, std::move(weights), std::move(traj), input.samples);
}

inline MetricsRecord evaluate_metrics(const AdmmState& state, const SpikeTensor& input_tensor,
                                      const std::vector<Matrix>& input,
                                      const TargetMatrix& targets,
                                      const std::vector<int>& labels, long iteration,
                                      double wall_time_ms) {
  MetricsRecord record;
  record.iteration = iteration;
  record.lagrangian = lagrangian(state, input, targets);
  if (!std::isfinite(record.lagrangian)) {
    throw DivergenceError("training diverged: non-finite objective at iteration " +
                          std::to_string(iteration));
  }
  record.loss = loss(state.membrane.back().back(), targets);
  const ResidualReport report = residuals(state, input);
  record.primal_residual = report.primal;
  record.dynamics_soft = report.dynamics_soft;
  record.activation_soft = report.activation_soft;
  record.train_accuracy = accuracy(predict(state.weights, input_tensor, state.net), labels);
  record.wall_time_ms = wall_time_ms;
  return record;
}

struct TrainResult {
  AdmmState state;
  std::vector<MetricsRecord> history;
};

// Full training loop. Metrics are recorded for the initial state, every
// `metrics_every` iterations, and at the final iteration; the loop stops
// early once every normalized residual falls below `residual_tol`. Reference
// labels for the accuracy column are the per-column argmax of the targets.
inline TrainResult train(const SpikeTensor& input, const TargetMatrix& targets,
                         const NetworkConfig& net, const AdmmHyperparams& hyper,
                         const TrainerConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed_ms = [&start]() {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };

  Rng init_rng(derive_seed(config.seed, 0));
  Rng shuffle_rng(derive_seed(config.seed, 1));
  AdmmState state = initialize(net, input, targets, hyper, init_rng);
  const std::vector<Matrix> slices = spike_slices(input);
  const std::vector<int> labels = argmax_labels(targets);

  TrainResult result;
  result.history.push_back(
      evaluate_metrics(state, input, slices, targets, labels, 0, elapsed_ms()));
  for (long k = 1; k <= config.total_iters; ++k) {
    iterate(state, slices, targets, config, shuffle_rng, k > config.warming_iters);
    if (k % config.metrics_every == 0 || k == config.total_iters) {
      const MetricsRecord record =
          evaluate_metrics(state, input, slices, targets, labels, k, elapsed_ms());
      result.history.push_back(record);
      const ResidualReport report{record.primal_residual, record.dynamics_soft,
                                  record.activation_soft};
      if (report.max_value() < config.residual_tol) break;
    }
  }
  result.state = std::move(state);
  return result;
}

}  // namespace snnadmm
