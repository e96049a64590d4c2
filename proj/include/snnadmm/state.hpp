#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "snnadmm/model.hpp"

namespace snnadmm {

// Penalty weights and solver constants of the relaxed objective.
struct AdmmHyperparams {
  double rho = 1.0;       // dynamics penalty weight
  double sigma = 0.1;     // activation penalty weight
  double epsilon = 1e-3;  // commutation margin placed just above the threshold
  double ridge = 1e-6;    // regularizer added to the weight-update Gram matrix

  void validate() const {
    if (!(rho > 0.0)) throw InvalidInputError("hyperparams: rho must be positive");
    if (!(sigma > 0.0)) throw InvalidInputError("hyperparams: sigma must be positive");
    if (!(epsilon > 0.0)) throw InvalidInputError("hyperparams: epsilon must be positive");
    if (!(ridge >= 0.0)) throw InvalidInputError("hyperparams: ridge must be non-negative");
  }

  friend bool operator==(const AdmmHyperparams&, const AdmmHyperparams&) = default;
};

// Full optimizer state: weights, per-(layer, time) membrane and spike blocks,
// and the multiplier attached to the output layer's final-step dynamics.
// Membrane and spike blocks are neurons x samples; `spikes` covers hidden
// layers only.
struct AdmmState {
  NetworkConfig net;
  AdmmHyperparams hyper;
  WeightSet weights;
  std::vector<std::vector<Matrix>> membrane;
  std::vector<std::vector<Matrix>> spikes;
  Matrix dual;  // output_size x samples

  int batch() const { return static_cast<int>(dual.cols()); }
};

inline AdmmState make_state(const NetworkConfig& net, const AdmmHyperparams& hyper,
                            WeightSet weights, StateTrajectory traj, int samples) {
  net.validate();
  hyper.validate();
  AdmmState state;
  state.net = net;
  state.hyper = hyper;
  state.weights = std::move(weights);
  state.membrane = std::move(traj.membrane);
  state.spikes = std::move(traj.spikes);
  state.dual = Matrix::Zero(net.output_size(), samples);
  return state;
}

// Constraint violation norms, each scaled by the square root of its block
// size so values are comparable across layer widths and batch sizes.
struct ResidualReport {
  double primal = 0.0;                  // output-layer final-step violation
  std::vector<double> dynamics_soft;    // one entry per layer
  std::vector<double> activation_soft;  // one entry per hidden layer

  double max_value() const {
    double m = primal;
    for (double v : dynamics_soft) m = std::max(m, v);
    for (double v : activation_soft) m = std::max(m, v);
    return m;
  }
};

}  // namespace snnadmm
