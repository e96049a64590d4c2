#pragma once

#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "snnadmm/objective.hpp"

namespace snnadmm {

// ---------------------------------------------------------------------------
// Weight updates. Each weight matrix is the ridge-regularized least-squares
// fit of the per-time regression targets against the layer inputs; the output
// layer folds the scaled multiplier into the cross term.

// Cross-term numerator and input Gram matrix for layer l, both summed over
// time (and implicitly over samples). These are the sufficient statistics a
// data-parallel worker ships to the reducer, so the serial update and the
// reduction share this kernel.
inline std::pair<Matrix, Matrix> weight_update_stats(const AdmmState& state,
                                                     const std::vector<Matrix>& input, int l,
                                                     bool include_dual) {
  require_layer(state, l);
  const int steps = state.net.time_steps;
  const std::vector<Matrix> targets = regression_targets(state, l);
  Matrix numerator = Matrix::Zero(state.net.layer_sizes[l + 1], state.net.layer_sizes[l]);
  Matrix gram = Matrix::Zero(state.net.layer_sizes[l], state.net.layer_sizes[l]);
  for (int t = 0; t < steps; ++t) {
    const Matrix& feed = layer_input(state, input, l, t);
    numerator.noalias() += targets[t] * feed.transpose();
    gram.noalias() += feed * feed.transpose();
  }
  if (include_dual) {
    const Matrix& last_feed = layer_input(state, input, l, steps - 1);
    numerator.noalias() += (1.0 / state.hyper.rho) * state.dual * last_feed.transpose();
  }
  return {std::move(numerator), std::move(gram)};
}

// Solves W * (gram + ridge I) = numerator; the regularized Gram must be
// positive definite.
inline Matrix solve_weight_system(const Matrix& numerator, Matrix gram, double ridge) {
  gram.diagonal().array() += ridge;
  const Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("weight update: Gram matrix is not positive definite; raise the ridge");
  }
  Matrix weights = llt.solve(numerator.transpose()).transpose();
  if (!weights.allFinite()) {
    throw NumericalError("weight update: solve produced non-finite values");
  }
  return weights;
}

inline Matrix update_weights_hidden(const AdmmState& state, const std::vector<Matrix>& input,
                                    int l) {
  auto [numerator, gram] = weight_update_stats(state, input, l, false);
  return solve_weight_system(numerator, std::move(gram), state.hyper.ridge);
}

inline Matrix update_weights_last(const AdmmState& state, const std::vector<Matrix>& input) {
  auto [numerator, gram] = weight_update_stats(state, input, state.net.layers() - 1, true);
  return solve_weight_system(numerator, std::move(gram), state.hyper.ridge);
}

// ---------------------------------------------------------------------------
// Membrane updates. Minimizing the objective in one membrane block couples
// only the block's own dynamics penalty and, at interior steps, the next
// step's penalty; both are quadratic, so the minimizer is a ratio.

// Curvature of the quadratic part of the objective restricted to one hidden
// membrane entry at time t.
inline double preactivation_quad_coeff(const AdmmState& state, int t) {
  const bool interior = t < state.net.time_steps - 1;
  const double decay = state.net.decay;
  return 0.5 * state.hyper.rho * (1.0 + (interior ? decay * decay : 0.0));
}

inline Matrix update_preactivation_hidden(const AdmmState& state,
                                          const std::vector<Matrix>& input, int l, int t) {
  require_hidden_layer(state, l);
  require_time(state, t);
  const double decay = state.net.decay;
  const double threshold = state.net.threshold;

  Matrix predicted = drive(state, input, l, t);
  if (t > 0) {
    predicted += decay * state.membrane[l][t - 1] - threshold * state.spikes[l][t - 1];
  }
  if (t == state.net.time_steps - 1) return predicted;

  const Matrix carry_next = state.membrane[l][t + 1] - drive(state, input, l, t + 1);
  return (predicted + decay * (carry_next + threshold * state.spikes[l][t])) /
         (1.0 + decay * decay);
}

// Output-layer membrane update: the final step balances the dynamics penalty
// against the loss and the multiplier; the step before the final one sees the
// multiplier through the decay coupling.
inline Matrix update_preactivation_last(const AdmmState& state, const std::vector<Matrix>& input,
                                        int t, const TargetMatrix& targets) {
  require_time(state, t);
  const int l = state.net.layers() - 1;
  const int steps = state.net.time_steps;
  const double decay = state.net.decay;
  const double rho = state.hyper.rho;
  const bool interior = t < steps - 1;

  Matrix numerator = drive(state, input, l, t);
  if (t > 0) numerator += decay * state.membrane[l][t - 1];
  numerator *= rho;

  double denominator = rho;
  if (interior) {
    numerator += rho * decay * (state.membrane[l][t + 1] - drive(state, input, l, t + 1));
    denominator += rho * decay * decay;
  }
  if (t == steps - 1) {
    numerator += 2.0 * targets - state.dual;
    denominator += 2.0;
  }
  if (t == steps - 2) {
    numerator += decay * state.dual;
  }
  return numerator / denominator;
}

// ---------------------------------------------------------------------------
// Threshold commutation. A freshly minimized membrane entry sits at the
// center of its quadratic restriction, but the activation penalty is a step
// function of the entry; the only candidates that can do better are the two
// values straddling the threshold.

// Restriction of the objective to a single membrane entry, up to an additive
// constant.
struct EntryCostContext {
  double quad_coeff;   // curvature of the quadratic part, > 0
  double quad_center;  // unconstrained minimizer of the quadratic part
  double sigma;        // activation penalty weight
  double spike_value;  // current post-activation entry
  double threshold;
};

inline double entry_cost(double value, const EntryCostContext& ctx) {
  const double quad_gap = value - ctx.quad_center;
  const double spike_gap = ctx.spike_value - heaviside_scalar(value, ctx.threshold);
  return ctx.quad_coeff * quad_gap * quad_gap + 0.5 * ctx.sigma * spike_gap * spike_gap;
}

struct CommuteCounts {
  long lowered = 0;  // entries pulled down onto the threshold (stop firing)
  long raised = 0;   // entries pushed a margin above the threshold (start firing)

  CommuteCounts& operator+=(const CommuteCounts& other) {
    lowered += other.lowered;
    raised += other.raised;
    return *this;
  }
};

// Single-entry commutation. The input value must be the quadratic center. A
// firing entry commutes to the threshold on a cost tie; a non-firing entry
// commutes to threshold-plus-margin only on a strict improvement, since the
// margin is an approximation of the open boundary.
inline double commute_entry(const EntryCostContext& ctx, double epsilon, CommuteCounts& counts) {
  const double value = ctx.quad_center;
  if (value > ctx.threshold) {
    if (entry_cost(ctx.threshold, ctx) <= entry_cost(value, ctx)) {
      ++counts.lowered;
      return ctx.threshold;
    }
  } else {
    if (entry_cost(ctx.threshold + epsilon, ctx) < entry_cost(value, ctx)) {
      ++counts.raised;
      return ctx.threshold + epsilon;
    }
  }
  return value;
}

// Entrywise commutation over a freshly minimized membrane block; `spikes` is
// the block's current post-activation (not yet updated this visit).
inline CommuteCounts commute_threshold(Matrix& membrane, const Matrix& spikes, double quad_coeff,
                                       double sigma, double threshold, double epsilon) {
  CommuteCounts counts;
  for (Eigen::Index m = 0; m < membrane.cols(); ++m) {
    for (Eigen::Index i = 0; i < membrane.rows(); ++i) {
      const EntryCostContext ctx{quad_coeff, membrane(i, m), sigma, spikes(i, m), threshold};
      membrane(i, m) = commute_entry(ctx, epsilon, counts);
    }
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Spike updates. Each hidden spike block solves a small positive definite
// system whose matrix depends on t only through the final-step indicator, so
// one factorization pair per layer serves a whole sweep.

struct PostactivationSolver {
  Eigen::LLT<Matrix> interior;    // t before the final step
  Eigen::LLT<Matrix> final_step;  // t at the final step
};

inline PostactivationSolver make_postactivation_solver(const AdmmState& state, int l) {
  require_hidden_layer(state, l);
  const Matrix& next_weights = state.weights[l + 1];
  const double threshold = state.net.threshold;
  Matrix base = state.hyper.rho * (next_weights.transpose() * next_weights);
  base.diagonal().array() += state.hyper.sigma;
  Matrix interior = base;
  interior.diagonal().array() += state.hyper.rho * threshold * threshold;
  PostactivationSolver solver{Eigen::LLT<Matrix>(interior), Eigen::LLT<Matrix>(base)};
  if (solver.interior.info() != Eigen::Success || solver.final_step.info() != Eigen::Success) {
    throw NumericalError("spike update: system matrix is not positive definite");
  }
  return solver;
}

// Closed-form spike update for hidden block (l, t). The next layer's
// increment plays the role of the regression target; when the next layer is
// the output layer it has no firing reset and contributes the multiplier at
// the final step. Returns the unclipped solution.
inline Matrix update_postactivation(const AdmmState& state, const std::vector<Matrix>& input,
                                    int l, int t, const PostactivationSolver& solver) {
  require_hidden_layer(state, l);
  require_time(state, t);
  const int layers = state.net.layers();
  const int steps = state.net.time_steps;
  const double decay = state.net.decay;
  const double threshold = state.net.threshold;
  const double rho = state.hyper.rho;
  const int next = l + 1;

  Matrix next_increment = state.membrane[next][t];
  if (t > 0) next_increment -= decay * state.membrane[next][t - 1];

  Matrix rhs;
  if (next < layers - 1) {
    Matrix target = std::move(next_increment);
    if (t > 0) target += threshold * state.spikes[next][t - 1];
    rhs.noalias() = rho * (state.weights[next].transpose() * target);
  } else {
    Matrix scaled = rho * next_increment;
    if (t == steps - 1) scaled += state.dual;
    rhs.noalias() = state.weights[next].transpose() * scaled;
  }
  if (t < steps - 1) {
    const Matrix own_gap_next = state.membrane[l][t + 1] - decay * state.membrane[l][t] -
                                drive(state, input, l, t + 1);
    rhs -= rho * threshold * own_gap_next;
  }
  rhs += state.hyper.sigma * heaviside(state.membrane[l][t], threshold);

  const Eigen::LLT<Matrix>& llt = t < steps - 1 ? solver.interior : solver.final_step;
  Matrix spikes = llt.solve(rhs);
  if (!spikes.allFinite()) {
    throw NumericalError("spike update: solve produced non-finite values");
  }
  return spikes;
}

inline Matrix update_postactivation(const AdmmState& state, const std::vector<Matrix>& input,
                                    int l, int t) {
  return update_postactivation(state, input, l, t, make_postactivation_solver(state, l));
}

// Projection of a spike block onto [0, 1].
inline Matrix clip_activation(const Matrix& spikes) {
  return spikes.cwiseMax(0.0).cwiseMin(1.0);
}

// Ascent step on the multiplier: one rho-scaled step along the exact
// constraint violation.
inline void update_dual(AdmmState& state, const std::vector<Matrix>& input) {
  state.dual += state.hyper.rho * exact_constraint_residual(state, input);
}

}  // namespace snnadmm
