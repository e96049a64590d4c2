#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "snnadmm/state.hpp"
#include "snnadmm/trainer.hpp"

namespace snnadmm {

// Generator settings for the built-in synthetic classification task; used
// whenever no spike file is supplied.
struct SyntheticTaskConfig {
  int n_classes = 4;
  int samples_per_class = 10;
  int n_inputs = 64;
  double separation = 0.9;
  double max_prob = 0.8;

  friend bool operator==(const SyntheticTaskConfig&, const SyntheticTaskConfig&) = default;
};

struct DataConfig {
  std::string spikes_path;  // empty selects the synthetic task
  std::string labels_path;
  double target_amplitude = 1.0;
  SyntheticTaskConfig synthetic;

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

// Complete description of one training run.
struct RunConfig {
  NetworkConfig net;
  AdmmHyperparams hyper;
  TrainerConfig trainer;
  DataConfig data;
  int workers = 1;
  std::string out_dir = "out";

  void validate() const {
    net.validate();
    hyper.validate();
    trainer.validate();
    if (workers < 1) throw InvalidInputError("config: workers must be >= 1");
    if (out_dir.empty()) throw InvalidInputError("config: out_dir must be non-empty");
    if (data.spikes_path.empty() != data.labels_path.empty()) {
      throw InvalidInputError("config: spikes_path and labels_path must be given together");
    }
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Small preset: three dense layers over a short window, sized so a full run
// finishes in seconds on a laptop.
inline RunConfig desk_profile() {
  RunConfig config;
  config.net.layer_sizes = {64, 32, 4};
  config.net.time_steps = 20;
  config.hyper.ridge = 1.0;  // desk scale needs a strong Gram floor to keep
                             // the fitted weights sane under simulation
  config.trainer.total_iters = 300;
  config.trainer.warming_iters = 100;
  config.data.synthetic = SyntheticTaskConfig{4, 10, 64, 0.9, 0.8};
  return config;
}

// Larger preset matching the scale the method is normally benchmarked at.
inline RunConfig bench_profile() {
  RunConfig config;
  config.net.layer_sizes = {512, 512, 10};
  config.net.time_steps = 150;
  config.trainer.total_iters = 1000;
  config.trainer.warming_iters = 300;
  config.data.synthetic = SyntheticTaskConfig{10, 20, 512, 0.9, 0.8};
  return config;
}

namespace detail {

using Json = nlohmann::json;

inline void reject_unknown_keys(const Json& object, const std::string& section,
                                std::initializer_list<const char*> known) {
  for (const auto& item : object.items()) {
    bool found = false;
    for (const char* key : known) {
      if (item.key() == key) {
        found = true;
        break;
      }
    }
    if (!found) {
      const std::string path = section.empty() ? item.key() : section + "." + item.key();
      throw InvalidInputError("config: unknown key " + path);
    }
  }
}

inline void require_object(const Json& value, const std::string& section) {
  if (!value.is_object()) {
    throw InvalidInputError("config: " + section + " must be an object");
  }
}

}  // namespace detail

// Applies a JSON document on top of `base` (normally a profile). Unknown
// keys are rejected by name. The commutation margin defaults to a fixed
// fraction of the firing threshold when not given explicitly.
inline RunConfig parse_run_config(const nlohmann::json& doc, RunConfig base) {
  detail::require_object(doc, "document root");
  detail::reject_unknown_keys(doc, "",
                              {"network", "admm", "trainer", "data", "workers", "out_dir"});

  bool epsilon_given = false;
  if (doc.contains("network")) {
    const auto& net = doc.at("network");
    detail::require_object(net, "network");
    detail::reject_unknown_keys(net, "network",
                                {"layer_sizes", "decay", "threshold", "time_steps"});
    if (net.contains("layer_sizes")) {
      base.net.layer_sizes = net.at("layer_sizes").get<std::vector<int>>();
    }
    if (net.contains("decay")) base.net.decay = net.at("decay").get<double>();
    if (net.contains("threshold")) base.net.threshold = net.at("threshold").get<double>();
    if (net.contains("time_steps")) base.net.time_steps = net.at("time_steps").get<int>();
  }
  if (doc.contains("admm")) {
    const auto& admm = doc.at("admm");
    detail::require_object(admm, "admm");
    detail::reject_unknown_keys(admm, "admm", {"rho", "sigma", "epsilon", "ridge"});
    if (admm.contains("rho")) base.hyper.rho = admm.at("rho").get<double>();
    if (admm.contains("sigma")) base.hyper.sigma = admm.at("sigma").get<double>();
    if (admm.contains("epsilon")) {
      base.hyper.epsilon = admm.at("epsilon").get<double>();
      epsilon_given = true;
    }
    if (admm.contains("ridge")) base.hyper.ridge = admm.at("ridge").get<double>();
  }
  if (!epsilon_given) base.hyper.epsilon = 1e-3 * base.net.threshold;
  if (doc.contains("trainer")) {
    const auto& trainer = doc.at("trainer");
    detail::require_object(trainer, "trainer");
    detail::reject_unknown_keys(trainer, "trainer",
                                {"total_iters", "warming_iters", "seed", "shuffle_layers",
                                 "shuffle_times", "residual_tol", "metrics_every",
                                 "test_mode_no_clip"});
    if (trainer.contains("total_iters")) {
      base.trainer.total_iters = trainer.at("total_iters").get<long>();
    }
    if (trainer.contains("warming_iters")) {
      base.trainer.warming_iters = trainer.at("warming_iters").get<long>();
    }
    if (trainer.contains("seed")) base.trainer.seed = trainer.at("seed").get<std::uint64_t>();
    if (trainer.contains("shuffle_layers")) {
      base.trainer.shuffle_layers = trainer.at("shuffle_layers").get<bool>();
    }
    if (trainer.contains("shuffle_times")) {
      base.trainer.shuffle_times = trainer.at("shuffle_times").get<bool>();
    }
    if (trainer.contains("residual_tol")) {
      base.trainer.residual_tol = trainer.at("residual_tol").get<double>();
    }
    if (trainer.contains("metrics_every")) {
      base.trainer.metrics_every = trainer.at("metrics_every").get<long>();
    }
    if (trainer.contains("test_mode_no_clip")) {
      base.trainer.test_mode_no_clip = trainer.at("test_mode_no_clip").get<bool>();
    }
  }
  if (doc.contains("data")) {
    const auto& data = doc.at("data");
    detail::require_object(data, "data");
    detail::reject_unknown_keys(data, "data",
                                {"spikes_path", "labels_path", "target_amplitude", "synthetic"});
    if (data.contains("spikes_path")) {
      base.data.spikes_path = data.at("spikes_path").get<std::string>();
    }
    if (data.contains("labels_path")) {
      base.data.labels_path = data.at("labels_path").get<std::string>();
    }
    if (data.contains("target_amplitude")) {
      base.data.target_amplitude = data.at("target_amplitude").get<double>();
    }
    if (data.contains("synthetic")) {
      const auto& synthetic = data.at("synthetic");
      detail::require_object(synthetic, "data.synthetic");
      detail::reject_unknown_keys(synthetic, "data.synthetic",
                                  {"n_classes", "samples_per_class", "n_inputs", "separation",
                                   "max_prob"});
      if (synthetic.contains("n_classes")) {
        base.data.synthetic.n_classes = synthetic.at("n_classes").get<int>();
      }
      if (synthetic.contains("samples_per_class")) {
        base.data.synthetic.samples_per_class = synthetic.at("samples_per_class").get<int>();
      }
      if (synthetic.contains("n_inputs")) {
        base.data.synthetic.n_inputs = synthetic.at("n_inputs").get<int>();
      }
      if (synthetic.contains("separation")) {
        base.data.synthetic.separation = synthetic.at("separation").get<double>();
      }
      if (synthetic.contains("max_prob")) {
        base.data.synthetic.max_prob = synthetic.at("max_prob").get<double>();
      }
    }
  }
  if (doc.contains("workers")) base.workers = doc.at("workers").get<int>();
  if (doc.contains("out_dir")) base.out_dir = doc.at("out_dir").get<std::string>();

  base.validate();
  return base;
}

inline nlohmann::json dump_run_config(const RunConfig& config) {
  nlohmann::json doc;
  doc["network"] = {{"layer_sizes", config.net.layer_sizes},
                    {"decay", config.net.decay},
                    {"threshold", config.net.threshold},
                    {"time_steps", config.net.time_steps}};
  doc["admm"] = {{"rho", config.hyper.rho},
                 {"sigma", config.hyper.sigma},
                 {"epsilon", config.hyper.epsilon},
                 {"ridge", config.hyper.ridge}};
  doc["trainer"] = {{"total_iters", config.trainer.total_iters},
                    {"warming_iters", config.trainer.warming_iters},
                    {"seed", config.trainer.seed},
                    {"shuffle_layers", config.trainer.shuffle_layers},
                    {"shuffle_times", config.trainer.shuffle_times},
                    {"residual_tol", config.trainer.residual_tol},
                    {"metrics_every", config.trainer.metrics_every},
                    {"test_mode_no_clip", config.trainer.test_mode_no_clip}};
  doc["data"] = {{"spikes_path", config.data.spikes_path},
                 {"labels_path", config.data.labels_path},
                 {"target_amplitude", config.data.target_amplitude},
                 {"synthetic",
                  {{"n_classes", config.data.synthetic.n_classes},
                   {"samples_per_class", config.data.synthetic.samples_per_class},
                   {"n_inputs", config.data.synthetic.n_inputs},
                   {"separation", config.data.synthetic.separation},
                   {"max_prob", config.data.synthetic.max_prob}}}};
  doc["workers"] = config.workers;
  doc["out_dir"] = config.out_dir;
  return doc;
}

}  // namespace snnadmm
