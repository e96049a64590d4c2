#pragma once

#include <bit>
#include <cstdint>
#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "snnadmm/data.hpp"
#include "snnadmm/trainer.hpp"

namespace snnadmm {

// ---------------------------------------------------------------------------
// Data-parallel training. Samples are split into contiguous column blocks,
// one per worker. Weight updates need global sums of the per-layer cross
// term and Gram matrix, so each round interleaves a reduction barrier per
// layer with purely shard-local membrane, commutation, spike and multiplier
// sweeps. With the shared per-iteration update plan this reproduces the
// serial schedule exactly, up to floating-point reassociation in the sums.

// One worker's contribution to a layer's weight update.
struct LayerStats {
  Matrix numerator;  // cross term, next-size x this-size
  Matrix gram;       // input Gram matrix, this-size x this-size
};

struct Shard {
  int worker_id = 0;
  int sample_offset = 0;     // first column of the global batch held here
  SpikeTensor spikes;        // input slice for this worker's samples
  std::vector<Matrix> input; // cached per-step views of `spikes`
  TargetMatrix targets;
  AdmmState state;

  int samples() const { return state.batch(); }
};

// Columns [offset, offset + count) of every time step.
inline SpikeTensor slice_samples(const SpikeTensor& spikes, int offset, int count) {
  if (offset < 0 || count < 1 || offset + count > spikes.samples) {
    throw InvalidInputError("slice_samples: column range out of bounds");
  }
  SpikeTensor out = SpikeTensor::zeros(spikes.time_steps, count, spikes.neurons);
  for (int t = 0; t < spikes.time_steps; ++t) {
    for (int m = 0; m < count; ++m) {
      for (int i = 0; i < spikes.neurons; ++i) {
        out.set(t, m, i, spikes.at(t, offset + m, i));
      }
    }
  }
  return out;
}

// Splits a full optimizer state into per-worker shards holding contiguous
// sample blocks. Workers receive blocks of size floor(M / workers), the
// first M mod workers of them one sample larger. Weights are replicated.
inline std::vector<Shard> make_shards(const AdmmState& state, const SpikeTensor& input,
                                      const TargetMatrix& targets, int workers) {
  const int samples = state.batch();
  if (workers < 1) throw InvalidInputError("make_shards: need at least one worker");
  if (workers > samples) {
    throw InvalidInputError("make_shards: more workers (" + std::to_string(workers) +
                            ") than samples (" + std::to_string(samples) + ")");
  }
  if (input.samples != samples || targets.cols() != samples) {
    throw InvalidInputError("make_shards: input and target batch mismatch");
  }

  std::vector<Shard> shards;
  shards.reserve(workers);
  const int base = samples / workers;
  const int remainder = samples % workers;
  int offset = 0;
  for (int w = 0; w < workers; ++w) {
    const int count = base + (w < remainder ? 1 : 0);
    Shard shard;
    shard.worker_id = w;
    shard.sample_offset = offset;
    shard.spikes = slice_samples(input, offset, count);
    shard.input = spike_slices(shard.spikes);
    shard.targets = targets.middleCols(offset, count);
    shard.state.net = state.net;
    shard.state.hyper = state.hyper;
    shard.state.weights = state.weights;
    shard.state.membrane.resize(state.net.layers());
    shard.state.spikes.resize(state.net.layers() - 1);
    for (int l = 0; l < state.net.layers(); ++l) {
      for (int t = 0; t < state.net.time_steps; ++t) {
        shard.state.membrane[l].push_back(state.membrane[l][t].middleCols(offset, count));
        if (l < state.net.layers() - 1) {
          shard.state.spikes[l].push_back(state.spikes[l][t].middleCols(offset, count));
        }
      }
    }
    shard.state.dual = state.dual.middleCols(offset, count);
    shards.push_back(std::move(shard));
    offset += count;
  }
  return shards;
}

// Reassembles the global state from shards (metrics and checkpoints only;
// training operates on the shards directly). Shards must be the unmodified
// output of make_shards, in ascending worker order.
inline AdmmState assemble(const std::vector<Shard>& shards) {
  if (shards.empty()) throw InvalidInputError("assemble: no shards");
  int samples = 0;
  for (std::size_t w = 0; w < shards.size(); ++w) {
    if (shards[w].worker_id != static_cast<int>(w) || shards[w].sample_offset != samples) {
      throw InvalidInputError("assemble: shards out of order");
    }
    samples += shards[w].samples();
  }

  const AdmmState& first = shards.front().state;
  AdmmState state;
  state.net = first.net;
  state.hyper = first.hyper;
  state.weights = first.weights;
  state.dual = Matrix::Zero(first.net.output_size(), samples);
  state.membrane.resize(first.net.layers());
  state.spikes.resize(first.net.layers() - 1);
  for (int l = 0; l < first.net.layers(); ++l) {
    for (int t = 0; t < first.net.time_steps; ++t) {
      state.membrane[l].push_back(Matrix::Zero(first.net.layer_sizes[l + 1], samples));
      if (l < first.net.layers() - 1) {
        state.spikes[l].push_back(Matrix::Zero(first.net.layer_sizes[l + 1], samples));
      }
    }
  }
  for (const Shard& shard : shards) {
    const int offset = shard.sample_offset;
    const int count = shard.samples();
    state.dual.middleCols(offset, count) = shard.state.dual;
    for (int l = 0; l < first.net.layers(); ++l) {
      for (int t = 0; t < first.net.time_steps; ++t) {
        state.membrane[l][t].middleCols(offset, count) = shard.state.membrane[l][t];
        if (l < first.net.layers() - 1) {
          state.spikes[l][t].middleCols(offset, count) = shard.state.spikes[l][t];
        }
      }
    }
  }
  return state;
}

// One worker's statistics for one layer; the output layer folds in the
// multiplier cross term exactly as the serial update does.
inline LayerStats local_layer_stats(const Shard& shard, int l) {
  const bool include_dual = l == shard.state.net.layers() - 1;
  auto [numerator, gram] = weight_update_stats(shard.state, shard.input, l, include_dual);
  return LayerStats{std::move(numerator), std::move(gram)};
}

// Sums worker contributions in ascending worker order. A missing entry means
// a worker failed to report; the round cannot proceed with partial sums.
inline LayerStats sum_layer_stats(const std::vector<std::optional<LayerStats>>& parts) {
  if (parts.empty()) throw IncompleteRoundError("reduction received no worker statistics");
  for (std::size_t w = 0; w < parts.size(); ++w) {
    if (!parts[w].has_value()) {
      throw IncompleteRoundError("reduction is missing statistics from worker " +
                                 std::to_string(w));
    }
  }
  LayerStats total{parts[0]->numerator, parts[0]->gram};
  for (std::size_t w = 1; w < parts.size(); ++w) {
    if (parts[w]->numerator.rows() != total.numerator.rows() ||
        parts[w]->numerator.cols() != total.numerator.cols() ||
        parts[w]->gram.rows() != total.gram.rows() ||
        parts[w]->gram.cols() != total.gram.cols()) {
      throw InvalidInputError("reduction: worker " + std::to_string(w) +
                              " reported mismatched statistic shapes");
    }
    total.numerator += parts[w]->numerator;
    total.gram += parts[w]->gram;
  }
  return total;
}

inline Matrix reduce_layer_weights(const std::vector<std::optional<LayerStats>>& parts,
                                   double ridge) {
  const LayerStats total = sum_layer_stats(parts);
  return solve_weight_system(total.numerator, total.gram, ridge);
}

namespace detail {

// Runs `task(w)` for every worker on its own thread and collects results in
// ascending worker order.
template <typename Task>
auto run_workers(std::size_t workers, Task task) {
  using Result = decltype(task(std::size_t{0}));
  std::vector<std::future<Result>> futures;
  futures.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, task, w));
  }
  std::vector<Result> results;
  results.reserve(workers);
  for (auto& f : futures) results.push_back(f.get());
  return results;
}

}  // namespace detail

// One data-parallel iteration under a fixed plan. Per hidden layer: a stats
// reduction barrier, a broadcast of the solved weights, then shard-local
// sweeps; then the same for the output layer, with the multiplier step (if
// active) applied by each worker to its own columns.
inline IterationStats federated_round(std::vector<Shard>& shards, const UpdatePlan& plan,
                                      bool no_clip, bool dual_active) {
  if (shards.empty()) throw InvalidInputError("federated_round: no shards");
  const double ridge = shards.front().state.hyper.ridge;
  const int last = shards.front().state.net.layers() - 1;
  IterationStats stats;

  for (std::size_t i = 0; i < plan.hidden_layers.size(); ++i) {
    const int l = plan.hidden_layers[i];
    std::vector<std::optional<LayerStats>> parts(shards.size());
    {
      auto collected = detail::run_workers(
          shards.size(), [&shards, l](std::size_t w) { return local_layer_stats(shards[w], l); });
      for (std::size_t w = 0; w < shards.size(); ++w) parts[w] = std::move(collected[w]);
    }
    const Matrix weights = reduce_layer_weights(parts, ridge);
    auto sweep_stats = detail::run_workers(
        shards.size(), [&shards, &plan, &weights, i, l, no_clip](std::size_t w) {
          shards[w].state.weights[l] = weights;
          return sweep_hidden_layer(shards[w].state, shards[w].input, l, plan.hidden_times[i],
                                    no_clip);
        });
    for (const IterationStats& s : sweep_stats) {
      stats.lowered += s.lowered;
      stats.raised += s.raised;
    }
  }

  std::vector<std::optional<LayerStats>> parts(shards.size());
  {
    auto collected = detail::run_workers(
        shards.size(), [&shards, last](std::size_t w) { return local_layer_stats(shards[w], last); });
    for (std::size_t w = 0; w < shards.size(); ++w) parts[w] = std::move(collected[w]);
  }
  const Matrix weights = reduce_layer_weights(parts, ridge);
  auto done = detail::run_workers(
      shards.size(), [&shards, &plan, &weights, last, dual_active](std::size_t w) {
        shards[w].state.weights[last] = weights;
        sweep_output_layer(shards[w].state, shards[w].input, shards[w].targets, plan.output_times);
        if (dual_active) update_dual(shards[w].state, shards[w].input);
        return 0;
      });
  (void)done;
  return stats;
}

// Data-parallel counterpart of train(): identical initialization, plan
// sequence, metric schedule and stopping rule, with each iteration executed
// as a federated round over `workers` shards.
inline TrainResult train_distributed(const SpikeTensor& input, const TargetMatrix& targets,
                                     const NetworkConfig& net, const AdmmHyperparams& hyper,
                                     const TrainerConfig& config, int workers) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed_ms = [&start]() {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };

  Rng init_rng(derive_seed(config.seed, 0));
  Rng shuffle_rng(derive_seed(config.seed, 1));
  AdmmState state = initialize(net, input, targets, hyper, init_rng);
  std::vector<Shard> shards = make_shards(state, input, targets, workers);
  const std::vector<Matrix> slices = spike_slices(input);
  const std::vector<int> labels = argmax_labels(targets);

  TrainResult result;
  result.history.push_back(
      evaluate_metrics(state, input, slices, targets, labels, 0, elapsed_ms()));
  for (long k = 1; k <= config.total_iters; ++k) {
    const UpdatePlan plan = make_update_plan(net.layers(), net.time_steps, config.shuffle_layers,
                                             config.shuffle_times, shuffle_rng);
    federated_round(shards, plan, config.test_mode_no_clip, k > config.warming_iters);
    if (k % config.metrics_every == 0 || k == config.total_iters) {
      state = assemble(shards);
      const MetricsRecord record =
          evaluate_metrics(state, input, slices, targets, labels, k, elapsed_ms());
      result.history.push_back(record);
      const ResidualReport report{record.primal_residual, record.dynamics_soft,
                                  record.activation_soft};
      if (report.max_value() < config.residual_tol) break;
    }
  }
  result.state = assemble(shards);
  return result;
}

// ---------------------------------------------------------------------------
// Binary matrix-list container, used for both weight sets and statistic
// bundles. Layout (integers and doubles little-endian):
//   bytes 0-3   magic "ADWS"
//   bytes 4-5   format version, currently 1
//   bytes 6-7   matrix count (u16, >= 1)
//   per matrix: rows (u32), cols (u32), rows * cols f64 values, row-major
// A weight set stores one matrix per layer, first layer first. A statistics
// bundle stores two matrices per layer: the cross term, then the Gram.

namespace detail {

constexpr char kMatrixMagic[4] = {'A', 'D', 'W', 'S'};
constexpr std::uint16_t kMatrixVersion = 1;

inline void append_f64(std::vector<std::uint8_t>& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
}

inline double read_f64(const std::vector<std::uint8_t>& in, std::size_t at) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_matrix_list(const std::vector<Matrix>& matrices) {
  if (matrices.empty() || matrices.size() > 0xffff) {
    throw InvalidInputError("matrix list: count must lie in [1, 65535]");
  }
  std::vector<std::uint8_t> bytes;
  bytes.insert(bytes.end(), detail::kMatrixMagic, detail::kMatrixMagic + 4);
  detail::append_u16(bytes, detail::kMatrixVersion);
  detail::append_u16(bytes, static_cast<std::uint16_t>(matrices.size()));
  for (const Matrix& m : matrices) {
    if (m.rows() < 1 || m.cols() < 1) throw InvalidInputError("matrix list: empty matrix");
    if (!m.allFinite()) throw InvalidInputError("matrix list: non-finite value");
    detail::append_u32(bytes, static_cast<std::uint32_t>(m.rows()));
    detail::append_u32(bytes, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) detail::append_f64(bytes, m(r, c));
    }
  }
  return bytes;
}

inline std::vector<Matrix> parse_matrix_list(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8) throw FormatError("matrix list: truncated header", bytes.size());
  for (std::size_t i = 0; i < 4; ++i) {
    if (bytes[i] != static_cast<std::uint8_t>(detail::kMatrixMagic[i])) {
      throw FormatError("matrix list: bad magic", i);
    }
  }
  const std::uint16_t version = detail::read_u16(bytes, 4);
  if (version != detail::kMatrixVersion) {
    throw FormatError("matrix list: unsupported version " + std::to_string(version), 4);
  }
  const std::uint16_t count = detail::read_u16(bytes, 6);
  if (count == 0) throw FormatError("matrix list: zero matrix count", 6);

  std::vector<Matrix> matrices;
  matrices.reserve(count);
  std::size_t at = 8;
  for (std::uint16_t k = 0; k < count; ++k) {
    if (bytes.size() - at < 8) throw FormatError("matrix list: truncated dimensions", at);
    const std::uint32_t rows = detail::read_u32(bytes, at);
    const std::uint32_t cols = detail::read_u32(bytes, at + 4);
    if (rows == 0) throw FormatError("matrix list: zero rows", at);
    if (cols == 0) throw FormatError("matrix list: zero cols", at + 4);
    if (rows > 0x7fffffffu || cols > 0x7fffffffu) {
      throw FormatError("matrix list: dimension too large", at);
    }
    std::uint64_t payload = rows;
    if (__builtin_mul_overflow(payload, static_cast<std::uint64_t>(cols), &payload) ||
        __builtin_mul_overflow(payload, static_cast<std::uint64_t>(8), &payload)) {
      throw FormatError("matrix list: payload size overflows", at);
    }
    at += 8;
    if (bytes.size() - at < payload) throw FormatError("matrix list: truncated payload", at);
    Matrix m(static_cast<int>(rows), static_cast<int>(cols));
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        const double v = detail::read_f64(bytes, at);
        if (!std::isfinite(v)) throw FormatError("matrix list: non-finite value", at);
        m(r, c) = v;
        at += 8;
      }
    }
    matrices.push_back(std::move(m));
  }
  if (at != bytes.size()) {
    throw FormatError("matrix list: trailing bytes after last matrix", at);
  }
  return matrices;
}

inline void save_weight_set(const WeightSet& weights, const std::string& path) {
  detail::write_file_bytes(path, serialize_matrix_list(weights));
}

inline WeightSet load_weight_set(const std::string& path) {
  return parse_matrix_list(detail::read_file_bytes(path));
}

// Statistic bundles flatten to [cross_0, gram_0, cross_1, gram_1, ...].
inline std::vector<std::uint8_t> serialize_round_stats(const std::vector<LayerStats>& stats) {
  std::vector<Matrix> flat;
  flat.reserve(2 * stats.size());
  for (const LayerStats& s : stats) {
    flat.push_back(s.numerator);
    flat.push_back(s.gram);
  }
  return serialize_matrix_list(flat);
}

inline std::vector<LayerStats> parse_round_stats(const std::vector<std::uint8_t>& bytes) {
  std::vector<Matrix> flat = parse_matrix_list(bytes);
  if (flat.size() % 2 != 0) {
    throw FormatError("statistics bundle: odd matrix count", 6);
  }
  std::vector<LayerStats> stats;
  stats.reserve(flat.size() / 2);
  for (std::size_t k = 0; k < flat.size(); k += 2) {
    if (flat[k + 1].rows() != flat[k + 1].cols() || flat[k].cols() != flat[k + 1].cols()) {
      throw InvalidInputError("statistics bundle: cross term and Gram shapes disagree at layer " +
                              std::to_string(k / 2));
    }
    stats.push_back(LayerStats{std::move(flat[k]), std::move(flat[k + 1])});
  }
  return stats;
}

inline void save_round_stats(const std::vector<LayerStats>& stats, const std::string& path) {
  detail::write_file_bytes(path, serialize_round_stats(stats));
}

inline std::vector<LayerStats> load_round_stats(const std::string& path) {
  return parse_round_stats(detail::read_file_bytes(path));
}

// All layers' statistics from one worker, in layer order; the payload a
// worker would persist or ship for one reduction round.
inline std::vector<LayerStats> local_stats(const Shard& shard) {
  std::vector<LayerStats> stats;
  stats.reserve(shard.state.net.layers());
  for (int l = 0; l < shard.state.net.layers(); ++l) stats.push_back(local_layer_stats(shard, l));
  return stats;
}

}  // namespace snnadmm
