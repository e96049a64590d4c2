// Command-line front end: train a network on spike data (or the built-in
// synthetic task), evaluate stored weights, or rate-encode intensities into
// the binary spike format.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "snnadmm/snnadmm.hpp"

namespace {

using nlohmann::json;
using namespace snnadmm;

constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitNumerical = 3;

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return out.str();
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return json::parse(in);
}

// One CSV row per recorded iteration; the residual columns are expanded per
// layer, 1-based, hidden activation gaps last.
void write_metrics_csv(const std::vector<MetricsRecord>& history, int layers,
                       const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "iteration,lagrangian,loss,primal_residual";
  for (int l = 1; l <= layers; ++l) out << ",dyn_soft_l" << l;
  for (int l = 1; l < layers; ++l) out << ",act_soft_l" << l;
  out << ",train_accuracy,wall_time_ms\n";
  for (const MetricsRecord& record : history) {
    out << record.iteration << "," << format_double(record.lagrangian) << ","
        << format_double(record.loss) << "," << format_double(record.primal_residual);
    for (double v : record.dynamics_soft) out << "," << format_double(v);
    for (double v : record.activation_soft) out << "," << format_double(v);
    out << "," << format_double(record.train_accuracy) << ","
        << format_double(record.wall_time_ms) << "\n";
  }
  if (!out) throw IoError("write failed on " + path);
}

struct TrainData {
  SpikeTensor spikes;
  std::vector<int> labels;
};

TrainData resolve_train_data(const RunConfig& config) {
  TrainData data;
  if (!config.data.spikes_path.empty()) {
    data.spikes = load_spike_file(config.data.spikes_path);
    data.labels = load_labels_csv(config.data.labels_path);
    if (static_cast<int>(data.labels.size()) != data.spikes.samples) {
      throw InvalidInputError("data: spike file holds " + std::to_string(data.spikes.samples) +
                              " samples but labels file holds " +
                              std::to_string(data.labels.size()));
    }
    if (data.spikes.neurons != config.net.input_size()) {
      throw InvalidInputError("data: spike file has " + std::to_string(data.spikes.neurons) +
                              " neurons but the network expects " +
                              std::to_string(config.net.input_size()) + " inputs");
    }
    if (data.spikes.time_steps != config.net.time_steps) {
      throw InvalidInputError("data: spike file has " + std::to_string(data.spikes.time_steps) +
                              " time steps but the network expects " +
                              std::to_string(config.net.time_steps));
    }
    return data;
  }
  const SyntheticTaskConfig& task = config.data.synthetic;
  if (task.n_inputs != config.net.input_size()) {
    throw InvalidInputError("data: synthetic task has " + std::to_string(task.n_inputs) +
                            " inputs but the network expects " +
                            std::to_string(config.net.input_size()));
  }
  if (task.n_classes != config.net.output_size()) {
    throw InvalidInputError("data: synthetic task has " + std::to_string(task.n_classes) +
                            " classes but the network has " +
                            std::to_string(config.net.output_size()) + " outputs");
  }
  Rng encode_rng(derive_seed(config.trainer.seed, 2));
  LabeledDataset dataset =
      synthetic_task(task.n_classes, task.samples_per_class, task.n_inputs,
                     config.net.time_steps, task.separation, task.max_prob, encode_rng);
  data.spikes = std::move(dataset.spikes);
  data.labels = std::move(dataset.labels);
  return data;
}

int run_train(const std::string& profile, const std::string& config_path,
              const std::optional<std::uint64_t>& seed, const std::optional<int>& workers,
              const std::string& out_dir, bool dump_config) {
  RunConfig config = profile == "bench" ? bench_profile() : desk_profile();
  if (!config_path.empty()) {
    config = parse_run_config(read_json_file(config_path), config);
  }
  if (seed.has_value()) config.trainer.seed = *seed;
  if (workers.has_value()) config.workers = *workers;
  if (!out_dir.empty()) config.out_dir = out_dir;
  config.validate();

  if (dump_config) {
    std::cout << dump_run_config(config).dump(2) << "\n";
    return kExitOk;
  }

  TrainData data = resolve_train_data(config);
  const TargetMatrix targets =
      make_targets(data.labels, config.net.output_size(), config.data.target_amplitude);

  TrainResult result =
      config.workers == 1
          ? train(data.spikes, targets, config.net, config.hyper, config.trainer)
          : train_distributed(data.spikes, targets, config.net, config.hyper, config.trainer,
                              config.workers);

  std::filesystem::create_directories(config.out_dir);
  write_metrics_csv(result.history, config.net.layers(), config.out_dir + "/metrics.csv");
  save_weight_set(result.state.weights, config.out_dir + "/weights.bin");
  {
    std::ofstream out(config.out_dir + "/config.json", std::ios::trunc);
    if (!out) throw IoError("cannot open " + config.out_dir + "/config.json for writing");
    out << dump_run_config(config).dump(2) << "\n";
  }

  const MetricsRecord& last = result.history.back();
  std::cout << "trained " << last.iteration << " iterations in "
            << static_cast<long>(last.wall_time_ms) << " ms; loss " << format_double(last.loss)
            << "; train accuracy " << format_double(last.train_accuracy) << "; outputs in "
            << config.out_dir << "\n";
  return kExitOk;
}

int run_eval(const std::string& weights_path, const std::string& data_path,
             const std::string& labels_path, double decay, double threshold) {
  const WeightSet weights = load_weight_set(weights_path);
  const SpikeTensor spikes = load_spike_file(data_path);
  const std::vector<int> labels = load_labels_csv(labels_path);
  if (static_cast<int>(labels.size()) != spikes.samples) {
    throw InvalidInputError("eval: spike file holds " + std::to_string(spikes.samples) +
                            " samples but labels file holds " + std::to_string(labels.size()));
  }

  NetworkConfig net;
  net.layer_sizes.push_back(static_cast<int>(weights.front().cols()));
  for (const Matrix& w : weights) net.layer_sizes.push_back(static_cast<int>(w.rows()));
  net.decay = decay;
  net.threshold = threshold;
  net.time_steps = spikes.time_steps;
  net.validate();
  validate_weights(weights, net);

  const std::vector<int> predicted = predict(weights, spikes, net);
  const double acc = accuracy(predicted, labels);

  const int n_classes = net.output_size();
  std::vector<long> count(n_classes, 0), correct(n_classes, 0);
  for (std::size_t m = 0; m < labels.size(); ++m) {
    if (labels[m] < 0 || labels[m] >= n_classes) {
      throw InvalidInputError("eval: label " + std::to_string(labels[m]) +
                              " outside the network's " + std::to_string(n_classes) + " outputs");
    }
    ++count[labels[m]];
    if (predicted[m] == labels[m]) ++correct[labels[m]];
  }

  json report;
  report["accuracy"] = acc;
  report["samples"] = spikes.samples;
  report["per_class"] = json::array();
  for (int c = 0; c < n_classes; ++c) {
    report["per_class"].push_back({{"label", c}, {"count", count[c]}, {"correct", correct[c]}});
  }
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

int run_encode(const std::string& input_path, const std::string& out_path, int time_steps,
               double max_prob, std::uint64_t seed) {
  const Matrix intensities = load_intensity_csv(input_path);
  Rng rng(derive_seed(seed, 2));
  const SpikeTensor spikes = rate_encode(intensities, time_steps, max_prob, rng);
  save_spike_file(spikes, out_path);
  std::cout << "encoded " << spikes.samples << " samples x " << spikes.neurons << " neurons over "
            << spikes.time_steps << " steps to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ADMM trainer for spiking networks"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a network and write metrics and weights");
  std::string profile = "desk";
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out_dir;
  bool dump_config = false;
  train_cmd->add_option("--profile", profile, "Preset to start from")
      ->check(CLI::IsMember({"desk", "bench"}));
  train_cmd->add_option("--config", config_path, "JSON overrides applied on top of the profile")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", seed, "Master seed override");
  train_cmd->add_option("--workers", workers, "Data-parallel worker count override");
  train_cmd->add_option("--out", out_dir, "Output directory override");
  train_cmd->add_flag("--dump-config", dump_config,
                      "Print the resolved configuration and exit without training");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate stored weights on a spike file");
  std::string weights_path, eval_data_path, eval_labels_path;
  double eval_decay = 0.95;
  double eval_threshold = 1.0;
  eval_cmd->add_option("--weights", weights_path, "Weight file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval_data_path, "Spike file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--labels", eval_labels_path, "Label CSV")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--delta", eval_decay, "Membrane decay used for inference");
  eval_cmd->add_option("--theta", eval_threshold, "Firing threshold used for inference");

  // encode
  auto* encode_cmd = app.add_subcommand("encode", "Rate-encode an intensity CSV into spikes");
  std::string encode_input, encode_out;
  int encode_steps = 0;
  double encode_max_prob = 1.0;
  std::uint64_t encode_seed = 1;
  encode_cmd->add_option("--input", encode_input, "Intensity CSV, one row per sample")
      ->required()
      ->check(CLI::ExistingFile);
  encode_cmd->add_option("--out", encode_out, "Destination spike file")->required();
  encode_cmd->add_option("--time-steps", encode_steps, "Encoding window length")
      ->required()
      ->check(CLI::PositiveNumber);
  encode_cmd->add_option("--max-prob", encode_max_prob, "Firing probability at intensity 1");
  encode_cmd->add_option("--seed", encode_seed, "Encoding seed");

  try {
    app.parse(argc, argv);
    if (train_cmd->parsed()) {
      return run_train(profile, config_path, seed, workers, out_dir, dump_config);
    }
    if (eval_cmd->parsed()) {
      return run_eval(weights_path, eval_data_path, eval_labels_path, eval_decay, eval_threshold);
    }
    return run_encode(encode_input, encode_out, encode_steps, encode_max_prob, encode_seed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return kExitUnexpected;
  }
}
