#include <gtest/gtest.h>

#include "snnadmm/updates.hpp"
#include "test_util.hpp"

namespace {

using namespace snnadmm;

// Zero-filled state with consistent shapes; tests mutate what they need.
struct Tiny {
  AdmmState state;
  SpikeTensor input{0, 0, 0, {}};
  std::vector<Matrix> slices;

  void reslice() { slices = spike_slices(input); }
};

Tiny make_tiny(std::vector<int> sizes, int steps, int samples) {
  Tiny tiny;
  AdmmState& s = tiny.state;
  s.net.layer_sizes = std::move(sizes);
  s.net.time_steps = steps;
  const int layers = s.net.layers();
  for (int l = 0; l < layers; ++l) {
    s.weights.push_back(Matrix::Zero(s.net.layer_sizes[l + 1], s.net.layer_sizes[l]));
  }
  s.membrane.resize(layers);
  s.spikes.resize(layers - 1);
  for (int l = 0; l < layers; ++l) {
    for (int t = 0; t < steps; ++t) {
      s.membrane[l].push_back(Matrix::Zero(s.net.layer_sizes[l + 1], samples));
      if (l < layers - 1) {
        s.spikes[l].push_back(Matrix::Zero(s.net.layer_sizes[l + 1], samples));
      }
    }
  }
  s.dual = Matrix::Zero(s.net.layer_sizes.back(), samples);
  tiny.input = SpikeTensor::zeros(steps, samples, s.net.layer_sizes.front());
  tiny.reslice();
  return tiny;
}

TEST(WeightUpdate, IdentityInputReproducesTheTarget) {
  // Two samples firing one input neuron each make the Gram the identity, so
  // the fitted weights equal the regression target exactly.
  Tiny tiny = make_tiny({2, 2}, 1, 2);
  tiny.input.values = {1, 0, 0, 1};
  tiny.reslice();
  Matrix target(2, 2);
  target << 1.0, 2.0, 3.0, 4.0;
  tiny.state.membrane[0][0] = target;
  auto [numerator, gram] = weight_update_stats(tiny.state, tiny.slices, 0, false);
  EXPECT_EQ(testutil::max_abs_diff(numerator, target), 0.0);
  EXPECT_EQ(testutil::max_abs_diff(gram, Matrix::Identity(2, 2)), 0.0);
  const Matrix solved = solve_weight_system(numerator, gram, 0.0);
  EXPECT_LT(testutil::max_abs_diff(solved, target), 1e-14);
}

TEST(WeightUpdate, ScalarRidgeShrinksTheFit) {
  // One spike, target 3: the unregularized fit is 3, ridge 1 halves it.
  Tiny tiny = make_tiny({1, 1}, 1, 1);
  tiny.input.values = {1};
  tiny.reslice();
  tiny.state.membrane[0][0](0, 0) = 3.0;
  auto [numerator, gram] = weight_update_stats(tiny.state, tiny.slices, 0, false);
  EXPECT_DOUBLE_EQ(solve_weight_system(numerator, gram, 0.0)(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(solve_weight_system(numerator, gram, 1.0)(0, 0), 1.5);
}

TEST(WeightUpdate, OutputLayerFoldsTheMultiplierIn) {
  // Scalar net, one step: target 2, multiplier 1, rho 1. The cross term
  // becomes 2 + (1/1)*1 = 3 against a unit Gram.
  Tiny tiny = make_tiny({1, 1}, 1, 1);
  tiny.input.values = {1};
  tiny.reslice();
  tiny.state.hyper.rho = 1.0;
  tiny.state.hyper.ridge = 0.0;
  tiny.state.membrane[0][0](0, 0) = 2.0;
  tiny.state.dual(0, 0) = 1.0;
  auto [numerator, gram] = weight_update_stats(tiny.state, tiny.slices, 0, true);
  EXPECT_DOUBLE_EQ(numerator(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(gram(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(update_weights_last(tiny.state, tiny.slices)(0, 0), 3.0);
}

TEST(WeightUpdate, SingularGramWithoutRidgeThrows) {
  EXPECT_THROW(solve_weight_system(Matrix::Ones(1, 1), Matrix::Zero(1, 1), 0.0), NumericalError);
}

TEST(WeightUpdate, MatchesStackedLeastSquaresOracle) {
  AdmmHyperparams hyper;
  hyper.ridge = 1e-3;
  testutil::RandomInstance inst = testutil::random_instance({3, 4, 2}, 3, 5, 71, hyper);
  const Matrix hidden = update_weights_hidden(inst.state, inst.slices, 0);
  EXPECT_LT(testutil::max_abs_diff(hidden,
                                   testutil::lstsq_weight_oracle(inst.state, inst.slices, 0, 1e-3)),
            1e-8);
  const Matrix last = update_weights_last(inst.state, inst.slices);
  EXPECT_LT(testutil::max_abs_diff(
                last, testutil::lstsq_last_weight_oracle(inst.state, inst.slices, 1e-3)),
            1e-8);
}

TEST(PreactivationQuadCoeff, DependsOnlyOnInteriority) {
  Tiny tiny = make_tiny({1, 1}, 3, 1);
  tiny.state.net.decay = 0.5;
  tiny.state.hyper.rho = 2.0;
  EXPECT_DOUBLE_EQ(preactivation_quad_coeff(tiny.state, 0), 1.25);
  EXPECT_DOUBLE_EQ(preactivation_quad_coeff(tiny.state, 1), 1.25);
  EXPECT_DOUBLE_EQ(preactivation_quad_coeff(tiny.state, 2), 1.0);
}

TEST(HiddenPreactivation, InteriorStepAveragesWithTheCarry) {
  // Unit drive, next-step carry 0.25, own spike 1, decay 0.5:
  // (1 + 0.5 * (0.25 + 1)) / (1 + 0.25) = 1.3.
  Tiny tiny = make_tiny({1, 1, 1}, 2, 1);
  tiny.input.values = {1, 1};
  tiny.reslice();
  tiny.state.net.decay = 0.5;
  tiny.state.weights[0](0, 0) = 1.0;
  tiny.state.membrane[0][1](0, 0) = 1.25;
  tiny.state.spikes[0][0](0, 0) = 1.0;
  EXPECT_DOUBLE_EQ(update_preactivation_hidden(tiny.state, tiny.slices, 0, 0)(0, 0), 1.3);
}

TEST(HiddenPreactivation, FinalStepIsThePrediction) {
  // At the last step the minimizer is drive + decayed membrane - reset.
  Tiny tiny = make_tiny({1, 1, 1}, 2, 1);
  tiny.input.values = {1, 1};
  tiny.reslice();
  tiny.state.net.decay = 0.5;
  tiny.state.weights[0](0, 0) = 1.0;
  tiny.state.spikes[0][0](0, 0) = 1.0;
  EXPECT_DOUBLE_EQ(update_preactivation_hidden(tiny.state, tiny.slices, 0, 1)(0, 0), 0.0);
}

TEST(LastPreactivation, FinalStepBalancesLossAndPenalty) {
  // Zero drive, target 1, zero multiplier, rho 1: 2 * 1 / (1 + 2) = 2/3.
  Tiny tiny = make_tiny({1, 1}, 1, 1);
  tiny.state.hyper.rho = 1.0;
  const TargetMatrix targets = Matrix::Ones(1, 1);
  EXPECT_DOUBLE_EQ(update_preactivation_last(tiny.state, tiny.slices, 0, targets)(0, 0),
                   2.0 / 3.0);
}

TEST(LastPreactivation, PenultimateStepSeesTheMultiplierThroughTheDecay) {
  Tiny tiny = make_tiny({1, 1}, 2, 1);
  tiny.state.hyper.rho = 1.0;
  tiny.state.net.decay = 0.5;
  tiny.state.membrane[0][1](0, 0) = 2.0;
  tiny.state.dual(0, 0) = 0.8;
  const TargetMatrix targets = Matrix::Zero(1, 1);
  EXPECT_DOUBLE_EQ(update_preactivation_last(tiny.state, tiny.slices, 0, targets)(0, 0),
                   (1.0 + 0.5 * 0.8) / 1.25);
}

TEST(EntryCost, QuadraticPlusActivationMismatch) {
  const EntryCostContext ctx{1.0, 1.2, 0.1, 0.0, 1.0};
  EXPECT_DOUBLE_EQ(entry_cost(1.2, ctx), 0.05);   // firing but spike says 0
  EXPECT_NEAR(entry_cost(1.0, ctx), 0.04, 1e-15);  // at threshold: not firing
}

TEST(CommuteEntry, LowersAFiringCenterWhenTheThresholdIsCheaper) {
  CommuteCounts counts;
  const EntryCostContext ctx{1.0, 1.2, 0.1, 0.0, 1.0};
  EXPECT_DOUBLE_EQ(commute_entry(ctx, 0.25, counts), 1.0);
  EXPECT_EQ(counts.lowered, 1);
  EXPECT_EQ(counts.raised, 0);
}

TEST(CommuteEntry, TieAboveTheThresholdCommutesDown) {
  // cost(center) = 0.25 * (0 - 1)^2 = 0.25 and cost(threshold) = 0.5^2 = 0.25
  // exactly; the firing branch commutes on a tie.
  CommuteCounts counts;
  const EntryCostContext ctx{1.0, 1.5, 0.5, 0.0, 1.0};
  EXPECT_DOUBLE_EQ(entry_cost(1.5, ctx), 0.25);
  EXPECT_DOUBLE_EQ(entry_cost(1.0, ctx), 0.25);
  EXPECT_DOUBLE_EQ(commute_entry(ctx, 0.25, counts), 1.0);
  EXPECT_EQ(counts.lowered, 1);
}

TEST(CommuteEntry, TieBelowTheThresholdStaysPut) {
  // cost(center) = 0.25 * (1 - 0)^2 = 0.25 and cost(threshold + margin) =
  // 0.5^2 = 0.25 exactly; the non-firing branch requires strict improvement.
  CommuteCounts counts;
  const EntryCostContext ctx{1.0, 0.75, 0.5, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(entry_cost(0.75, ctx), 0.25);
  EXPECT_DOUBLE_EQ(entry_cost(1.25, ctx), 0.25);
  EXPECT_DOUBLE_EQ(commute_entry(ctx, 0.25, counts), 0.75);
  EXPECT_EQ(counts.raised, 0);
  EXPECT_EQ(counts.lowered, 0);
}

TEST(CommuteThreshold, SweepsABlockAndCounts) {
  Matrix membrane(2, 1);
  membrane << 1.2, 0.99;
  Matrix spikes(2, 1);
  spikes << 0.0, 1.0;
  const CommuteCounts counts = commute_threshold(membrane, spikes, 1.0, 2.0, 1.0, 0.25);
  EXPECT_DOUBLE_EQ(membrane(0, 0), 1.0);   // lowered onto the threshold
  EXPECT_DOUBLE_EQ(membrane(1, 0), 1.25);  // raised past it by the margin
  EXPECT_EQ(counts.lowered, 1);
  EXPECT_EQ(counts.raised, 1);
}

TEST(PostactivationSolver, BuildsBothSystemMatrices) {
  Tiny tiny = make_tiny({1, 1, 1}, 2, 1);
  tiny.state.hyper.rho = 1.0;
  tiny.state.hyper.sigma = 0.1;
  tiny.state.weights[1](0, 0) = 2.0;
  const PostactivationSolver solver = make_postactivation_solver(tiny.state, 0);
  // Interior: rho W^T W + sigma + rho theta^2 = 5.1; final drops the theta term.
  EXPECT_NEAR(solver.interior.solve(Matrix::Constant(1, 1, 5.1))(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(solver.final_step.solve(Matrix::Constant(1, 1, 4.1))(0, 0), 1.0, 1e-12);
}

TEST(Postactivation, FinalStepFeedsTheOutputLayerAndMultiplier) {
  // rhs = W * (rho * next_membrane + dual) + sigma * H(own membrane)
  //     = 2 * (3 + 0.5) + 0.1 = 7.1 against lhs 4.1.
  Tiny tiny = make_tiny({1, 1, 1}, 1, 1);
  tiny.state.hyper.rho = 1.0;
  tiny.state.hyper.sigma = 0.1;
  tiny.state.weights[1](0, 0) = 2.0;
  tiny.state.membrane[1][0](0, 0) = 3.0;
  tiny.state.membrane[0][0](0, 0) = 1.5;
  tiny.state.dual(0, 0) = 0.5;
  EXPECT_NEAR(update_postactivation(tiny.state, tiny.slices, 0, 0)(0, 0), 7.1 / 4.1, 1e-12);
}

TEST(Postactivation, InteriorStepRepelsItsOwnNextGap) {
  // Everything zero except the own-layer gap at t+1, which is 1; the update
  // is -rho * theta / (rho W^T W + sigma + rho theta^2) = -1 / 5.1.
  Tiny tiny = make_tiny({1, 1, 1}, 2, 1);
  tiny.state.hyper.rho = 1.0;
  tiny.state.hyper.sigma = 0.1;
  tiny.state.net.decay = 0.5;
  tiny.state.weights[1](0, 0) = 2.0;
  tiny.state.membrane[0][1](0, 0) = 1.0;
  EXPECT_NEAR(update_postactivation(tiny.state, tiny.slices, 0, 0)(0, 0), -1.0 / 5.1, 1e-12);
}

TEST(Postactivation, HiddenSuccessorAddsBackItsReset) {
  // Next layer is hidden: target = increment + theta * its previous spikes.
  Tiny tiny = make_tiny({1, 1, 1, 1}, 2, 1);
  tiny.state.hyper.rho = 1.0;
  tiny.state.hyper.sigma = 0.1;
  tiny.state.net.decay = 0.5;
  tiny.state.weights[1](0, 0) = 3.0;
  tiny.state.membrane[1][0](0, 0) = 2.0;
  tiny.state.membrane[1][1](0, 0) = 2.0;  // increment = 2 - 0.5 * 2 = 1
  tiny.state.spikes[1][0](0, 0) = 1.0;    // target = 1 + 1 = 2
  tiny.state.membrane[0][1](0, 0) = 0.5;  // below threshold, H = 0
  EXPECT_NEAR(update_postactivation(tiny.state, tiny.slices, 0, 1)(0, 0), 6.0 / 9.1, 1e-12);
}

TEST(ClipActivation, ProjectsOntoTheUnitInterval) {
  Matrix spikes(3, 1);
  spikes << -0.5, 0.3, 1.7;
  const Matrix clipped = clip_activation(spikes);
  EXPECT_DOUBLE_EQ(clipped(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(clipped(1, 0), 0.3);
  EXPECT_DOUBLE_EQ(clipped(2, 0), 1.0);
}

TEST(DualUpdate, StepsAlongTheExactViolation) {
  Tiny tiny = make_tiny({1, 1}, 1, 1);
  tiny.state.hyper.rho = 0.5;
  tiny.state.membrane[0][0](0, 0) = 2.0;  // prediction is 0, so residual is 2
  tiny.state.dual(0, 0) = 0.25;
  update_dual(tiny.state, tiny.slices);
  EXPECT_DOUBLE_EQ(tiny.state.dual(0, 0), 1.25);
}

}  // namespace
