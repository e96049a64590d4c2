#include <gtest/gtest.h>

#include <functional>
#include <string>

#include <json.hpp>

#include "snnadmm/run_config.hpp"

namespace {

using namespace snnadmm;
using nlohmann::json;

std::string invalid_input_message(const std::function<void()>& call) {
  try {
    call();
  } catch (const InvalidInputError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected an InvalidInputError";
  return {};
}

TEST(Profiles, DeskProfileIsSmallAndStronglyRegularized) {
  const RunConfig config = desk_profile();
  EXPECT_EQ(config.net.layer_sizes, (std::vector<int>{64, 32, 4}));
  EXPECT_EQ(config.net.time_steps, 20);
  EXPECT_DOUBLE_EQ(config.hyper.ridge, 1.0);
  EXPECT_EQ(config.trainer.total_iters, 300);
  EXPECT_EQ(config.trainer.warming_iters, 100);
  EXPECT_EQ(config.data.synthetic.n_classes, 4);
  EXPECT_EQ(config.data.synthetic.n_inputs, 64);
  EXPECT_NO_THROW(config.validate());
}

TEST(Profiles, BenchProfileMatchesTheFullScale) {
  const RunConfig config = bench_profile();
  EXPECT_EQ(config.net.layer_sizes, (std::vector<int>{512, 512, 10}));
  EXPECT_EQ(config.net.time_steps, 150);
  EXPECT_DOUBLE_EQ(config.hyper.ridge, 1e-6);
  EXPECT_EQ(config.trainer.total_iters, 1000);
  EXPECT_EQ(config.trainer.warming_iters, 300);
  EXPECT_EQ(config.data.synthetic.n_classes, 10);
  EXPECT_NO_THROW(config.validate());
}

TEST(Profiles, TypeDefaultsMirrorTheReferenceSettings) {
  const AdmmHyperparams hyper;
  EXPECT_DOUBLE_EQ(hyper.rho, 1.0);
  EXPECT_DOUBLE_EQ(hyper.sigma, 0.1);
  EXPECT_DOUBLE_EQ(hyper.epsilon, 1e-3);
  EXPECT_DOUBLE_EQ(hyper.ridge, 1e-6);
  const NetworkConfig net;
  EXPECT_DOUBLE_EQ(net.decay, 0.95);
  EXPECT_DOUBLE_EQ(net.threshold, 1.0);
}

TEST(ParseRunConfig, EmptyDocumentKeepsTheProfile) {
  RunConfig expected = desk_profile();
  expected.hyper.epsilon = 1e-3 * expected.net.threshold;
  EXPECT_EQ(parse_run_config(json::object(), desk_profile()), expected);
}

TEST(ParseRunConfig, OverridesMergeIntoTheProfile) {
  const json doc = {
      {"network", {{"layer_sizes", {8, 6, 3}}, {"time_steps", 5}}},
      {"admm", {{"rho", 2.0}, {"ridge", 0.5}}},
      {"trainer", {{"total_iters", 40}, {"seed", 99}}},
      {"data", {{"target_amplitude", 2.0}, {"synthetic", {{"n_classes", 3}, {"n_inputs", 8}}}}},
      {"workers", 2},
      {"out_dir", "results"},
  };
  const RunConfig config = parse_run_config(doc, desk_profile());
  EXPECT_EQ(config.net.layer_sizes, (std::vector<int>{8, 6, 3}));
  EXPECT_EQ(config.net.time_steps, 5);
  EXPECT_DOUBLE_EQ(config.net.decay, 0.95);  // untouched profile value
  EXPECT_DOUBLE_EQ(config.hyper.rho, 2.0);
  EXPECT_DOUBLE_EQ(config.hyper.ridge, 0.5);
  EXPECT_DOUBLE_EQ(config.hyper.sigma, 0.1);
  EXPECT_EQ(config.trainer.total_iters, 40);
  EXPECT_EQ(config.trainer.seed, 99u);
  EXPECT_EQ(config.trainer.warming_iters, 100);
  EXPECT_DOUBLE_EQ(config.data.target_amplitude, 2.0);
  EXPECT_EQ(config.data.synthetic.n_classes, 3);
  EXPECT_EQ(config.data.synthetic.n_inputs, 8);
  EXPECT_EQ(config.data.synthetic.samples_per_class, 10);
  EXPECT_EQ(config.workers, 2);
  EXPECT_EQ(config.out_dir, "results");
}

TEST(ParseRunConfig, MarginFollowsTheThresholdByDefault) {
  const json doc = {{"network", {{"threshold", 2.0}}}};
  const RunConfig config = parse_run_config(doc, desk_profile());
  EXPECT_DOUBLE_EQ(config.hyper.epsilon, 0.002);
}

TEST(ParseRunConfig, ExplicitMarginWins) {
  const json doc = {{"network", {{"threshold", 2.0}}}, {"admm", {{"epsilon", 0.125}}}};
  const RunConfig config = parse_run_config(doc, desk_profile());
  EXPECT_DOUBLE_EQ(config.hyper.epsilon, 0.125);
}

TEST(ParseRunConfig, UnknownKeysAreNamed) {
  const std::string top = invalid_input_message(
      [] { parse_run_config(json{{"networks", json::object()}}, desk_profile()); });
  EXPECT_NE(top.find("networks"), std::string::npos);

  const std::string nested = invalid_input_message(
      [] { parse_run_config(json{{"network", {{"decat", 0.9}}}}, desk_profile()); });
  EXPECT_NE(nested.find("network.decat"), std::string::npos);

  const std::string deep = invalid_input_message([] {
    parse_run_config(json{{"data", {{"synthetic", {{"classes", 4}}}}}}, desk_profile());
  });
  EXPECT_NE(deep.find("data.synthetic.classes"), std::string::npos);
}

TEST(ParseRunConfig, NonObjectSectionsAreRejected) {
  EXPECT_THROW(parse_run_config(json::array(), desk_profile()), InvalidInputError);
  EXPECT_THROW(parse_run_config(json{{"network", 5}}, desk_profile()), InvalidInputError);
  EXPECT_THROW(parse_run_config(json{{"data", {{"synthetic", 3}}}}, desk_profile()),
               InvalidInputError);
}

TEST(ParseRunConfig, WrongValueTypesSurfaceAsExceptions) {
  EXPECT_THROW(parse_run_config(json{{"admm", {{"rho", "large"}}}}, desk_profile()),
               nlohmann::json::exception);
  EXPECT_THROW(parse_run_config(json{{"network", {{"layer_sizes", "wide"}}}}, desk_profile()),
               nlohmann::json::exception);
}

TEST(ParseRunConfig, MergedConfigIsValidated) {
  EXPECT_THROW(parse_run_config(json{{"workers", 0}}, desk_profile()), InvalidInputError);
  EXPECT_THROW(parse_run_config(json{{"admm", {{"rho", 0.0}}}}, desk_profile()),
               InvalidInputError);
  EXPECT_THROW(parse_run_config(json{{"network", {{"decay", 1.0}}}}, desk_profile()),
               InvalidInputError);
  EXPECT_THROW(
      parse_run_config(json{{"data", {{"spikes_path", "only_half.bin"}}}}, desk_profile()),
      InvalidInputError);
  EXPECT_THROW(parse_run_config(json{{"out_dir", ""}}, desk_profile()), InvalidInputError);
}

TEST(DumpRunConfig, RoundTripsThroughParse) {
  RunConfig config = bench_profile();
  config.trainer.seed = 1234;
  config.workers = 3;
  config.data.spikes_path = "spikes.bin";
  config.data.labels_path = "labels.csv";
  config.hyper.epsilon = 0.05;
  const RunConfig reparsed = parse_run_config(dump_run_config(config), desk_profile());
  EXPECT_EQ(reparsed, config);
}

TEST(DumpRunConfig, EmitsEverySection) {
  const json doc = dump_run_config(desk_profile());
  EXPECT_TRUE(doc.contains("network"));
  EXPECT_TRUE(doc.contains("admm"));
  EXPECT_TRUE(doc.contains("trainer"));
  EXPECT_TRUE(doc.contains("data"));
  EXPECT_TRUE(doc.at("data").contains("synthetic"));
  EXPECT_TRUE(doc.contains("workers"));
  EXPECT_TRUE(doc.contains("out_dir"));
  EXPECT_EQ(doc.at("admm").at("epsilon").get<double>(), desk_profile().hyper.epsilon);
}

TEST(RunConfigValidate, ChecksTheCrossFieldRules) {
  RunConfig config = desk_profile();
  config.data.spikes_path = "spikes.bin";
  EXPECT_THROW(config.validate(), InvalidInputError);
  config.data.labels_path = "labels.csv";
  EXPECT_NO_THROW(config.validate());
  config.workers = 0;
  EXPECT_THROW(config.validate(), InvalidInputError);
}

}  // namespace
