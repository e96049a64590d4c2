#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "snnadmm/rng.hpp"
#include "snnadmm/types.hpp"

namespace snnadmm {

struct LabeledDataset {
  SpikeTensor spikes;
  std::vector<int> labels;
  int n_classes = 0;
};

// ---------------------------------------------------------------------------
// Binary spike container. Layout (integers little-endian):
//   bytes 0-3    magic "SPKT"
//   bytes 4-5    format version, currently 1
//   bytes 6-17   dimensions: time steps, samples, neurons (u32 each, all >= 1)
//   bytes 18-    payload, one byte per spike, value 0 or 1, laid out
//                time-major, then sample-major, then neuron-major
// Labels travel in a separate CSV with header "sample_index,label".

namespace detail {

constexpr char kSpikeMagic[4] = {'S', 'P', 'K', 'T'};
constexpr std::uint16_t kSpikeVersion = 1;

inline void append_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

inline std::uint16_t read_u16(const std::vector<std::uint8_t>& in, std::size_t at) {
  return static_cast<std::uint16_t>(in[at] | (in[at + 1] << 8));
}

inline std::uint32_t read_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + path);
  return bytes;
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on " + path);
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_spike_tensor(const SpikeTensor& spikes) {
  spikes.validate();
  if (spikes.time_steps < 1 || spikes.samples < 1 || spikes.neurons < 1) {
    throw InvalidInputError("spike file: all dimensions must be >= 1");
  }
  std::vector<std::uint8_t> bytes;
  bytes.reserve(18 + spikes.values.size());
  bytes.insert(bytes.end(), detail::kSpikeMagic, detail::kSpikeMagic + 4);
  detail::append_u16(bytes, detail::kSpikeVersion);
  detail::append_u32(bytes, static_cast<std::uint32_t>(spikes.time_steps));
  detail::append_u32(bytes, static_cast<std::uint32_t>(spikes.samples));
  detail::append_u32(bytes, static_cast<std::uint32_t>(spikes.neurons));
  bytes.insert(bytes.end(), spikes.values.begin(), spikes.values.end());
  return bytes;
}

inline SpikeTensor parse_spike_tensor(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 18) throw FormatError("spike file: truncated header", bytes.size());
  for (std::size_t i = 0; i < 4; ++i) {
    if (bytes[i] != static_cast<std::uint8_t>(detail::kSpikeMagic[i])) {
      throw FormatError("spike file: bad magic", i);
    }
  }
  const std::uint16_t version = detail::read_u16(bytes, 4);
  if (version != detail::kSpikeVersion) {
    throw FormatError("spike file: unsupported version " + std::to_string(version), 4);
  }
  const std::uint32_t dims[3] = {detail::read_u32(bytes, 6), detail::read_u32(bytes, 10),
                                 detail::read_u32(bytes, 14)};
  for (int d = 0; d < 3; ++d) {
    if (dims[d] == 0) throw FormatError("spike file: zero dimension", 6 + 4 * d);
    if (dims[d] > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
      throw FormatError("spike file: dimension too large", 6 + 4 * d);
    }
  }
  std::uint64_t expected = dims[0];
  if (__builtin_mul_overflow(expected, static_cast<std::uint64_t>(dims[1]), &expected) ||
      __builtin_mul_overflow(expected, static_cast<std::uint64_t>(dims[2]), &expected)) {
    throw FormatError("spike file: dimension product overflows", 6);
  }
  if (bytes.size() - 18 != expected) {
    throw FormatError("spike file: payload size mismatch, expected " + std::to_string(expected) +
                          " bytes, found " + std::to_string(bytes.size() - 18),
                      18);
  }
  SpikeTensor spikes;
  spikes.time_steps = static_cast<int>(dims[0]);
  spikes.samples = static_cast<int>(dims[1]);
  spikes.neurons = static_cast<int>(dims[2]);
  spikes.values.assign(bytes.begin() + 18, bytes.end());
  for (std::size_t i = 0; i < spikes.values.size(); ++i) {
    if (spikes.values[i] > 1) {
      throw FormatError("spike file: payload byte is not 0 or 1", 18 + i);
    }
  }
  return spikes;
}

inline void save_spike_file(const SpikeTensor& spikes, const std::string& path) {
  detail::write_file_bytes(path, serialize_spike_tensor(spikes));
}

inline SpikeTensor load_spike_file(const std::string& path) {
  return parse_spike_tensor(detail::read_file_bytes(path));
}

// ---------------------------------------------------------------------------
// Label CSV.

inline void save_labels_csv(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "sample_index,label\n";
  for (std::size_t m = 0; m < labels.size(); ++m) out << m << "," << labels[m] << "\n";
  if (!out) throw IoError("write failed on " + path);
}

inline std::vector<int> load_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::string line;
  if (!std::getline(in, line) || line != "sample_index,label") {
    throw InvalidInputError("labels csv: expected header 'sample_index,label' in " + path);
  }
  std::vector<int> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string index_text, label_text;
    if (!std::getline(fields, index_text, ',') || !std::getline(fields, label_text)) {
      throw InvalidInputError("labels csv: malformed row " + std::to_string(row) + " in " + path);
    }
    std::size_t index, label;
    try {
      index = std::stoul(index_text);
      label = std::stoul(label_text);
    } catch (const std::exception&) {
      throw InvalidInputError("labels csv: non-numeric row " + std::to_string(row) + " in " + path);
    }
    if (index != row) {
      throw InvalidInputError("labels csv: sample_index must run 0..M-1 in order, row " +
                              std::to_string(row));
    }
    labels.push_back(static_cast<int>(label));
    ++row;
  }
  return labels;
}

// Dense intensity matrix from CSV: one row per sample, one column per input
// neuron, values in [0, 1]. A single leading header line is permitted and
// skipped when its first field is not numeric.
inline Matrix load_intensity_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first_line = true;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> parsed;
    std::istringstream fields(line);
    std::string field;
    bool numeric = true;
    while (std::getline(fields, field, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used]))) ++used;
        if (used != field.size()) throw std::invalid_argument(field);
        parsed.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first_line) {
        first_line = false;
        continue;
      }
      throw InvalidInputError("intensity csv: non-numeric field in row " + std::to_string(row) +
                              " of " + path);
    }
    first_line = false;
    if (!rows.empty() && parsed.size() != rows.front().size()) {
      throw InvalidInputError("intensity csv: row " + std::to_string(row) +
                              " has a different column count in " + path);
    }
    rows.push_back(std::move(parsed));
    ++row;
  }
  if (rows.empty() || rows.front().empty()) {
    throw InvalidInputError("intensity csv: no data rows in " + path);
  }
  Matrix intensities(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (std::size_t m = 0; m < rows.size(); ++m) {
    for (std::size_t i = 0; i < rows[m].size(); ++i) {
      intensities(static_cast<int>(m), static_cast<int>(i)) = rows[m][i];
    }
  }
  return intensities;
}

// ---------------------------------------------------------------------------
// Encoding and task generation.

// Bernoulli rate code: sample m's neuron i fires at step t with probability
// intensities(m, i) * max_prob, drawn independently per step. Draws are
// consumed time-major, then sample-major, then neuron-major.
inline SpikeTensor rate_encode(const Matrix& intensities, int time_steps, double max_prob,
                               Rng& rng) {
  if (time_steps < 1) throw InvalidInputError("rate_encode: time_steps must be >= 1");
  if (!(max_prob >= 0.0 && max_prob <= 1.0)) {
    throw InvalidInputError("rate_encode: max_prob must lie in [0, 1]");
  }
  if (intensities.rows() < 1 || intensities.cols() < 1) {
    throw InvalidInputError("rate_encode: intensities must be non-empty");
  }
  if (!intensities.allFinite() || intensities.minCoeff() < 0.0 || intensities.maxCoeff() > 1.0) {
    throw InvalidInputError("rate_encode: intensities must lie in [0, 1]");
  }
  const int samples = static_cast<int>(intensities.rows());
  const int neurons = static_cast<int>(intensities.cols());
  SpikeTensor spikes = SpikeTensor::zeros(time_steps, samples, neurons);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < time_steps; ++t) {
    for (int m = 0; m < samples; ++m) {
      for (int i = 0; i < neurons; ++i) {
        const double p = intensities(m, i) * max_prob;
        if (unit(rng) < p) spikes.set(t, m, i, 1);
      }
    }
  }
  return spikes;
}

// One-hot targets scaled by `amplitude`: column m carries `amplitude` in the
// row of its label and zero elsewhere, so the per-column argmax recovers the
// label whenever amplitude > 0.
inline TargetMatrix make_targets(const std::vector<int>& labels, int n_classes, double amplitude) {
  if (n_classes < 1) throw InvalidInputError("make_targets: n_classes must be >= 1");
  if (labels.empty()) throw InvalidInputError("make_targets: empty label vector");
  TargetMatrix targets = Matrix::Zero(n_classes, static_cast<int>(labels.size()));
  for (std::size_t m = 0; m < labels.size(); ++m) {
    if (labels[m] < 0 || labels[m] >= n_classes) {
      throw InvalidInputError("make_targets: label " + std::to_string(labels[m]) +
                              " outside [0, " + std::to_string(n_classes) + ")");
    }
    targets(labels[m], m) = amplitude;
  }
  return targets;
}

// Deterministic synthetic classification task. Class c owns the input
// neurons with index i % n_classes == c; its prototype intensity is
// (1 + separation) / 2 on owned neurons and (1 - separation) / 2 elsewhere,
// so separation 1 with max_prob 1 gives disjoint always-on input sets.
// Samples are generated class-major and individually rate-encoded.
inline LabeledDataset synthetic_task(int n_classes, int samples_per_class, int n_inputs,
                                     int time_steps, double separation, double max_prob,
                                     Rng& rng) {
  if (n_classes < 1) throw InvalidInputError("synthetic_task: n_classes must be >= 1");
  if (samples_per_class < 1) throw InvalidInputError("synthetic_task: samples_per_class must be >= 1");
  if (n_inputs < n_classes) throw InvalidInputError("synthetic_task: need n_inputs >= n_classes");
  if (!(separation >= 0.0 && separation <= 1.0)) {
    throw InvalidInputError("synthetic_task: separation must lie in [0, 1]");
  }
  const double high = 0.5 * (1.0 + separation);
  const double low = 0.5 * (1.0 - separation);
  const int samples = n_classes * samples_per_class;

  Matrix intensities(samples, n_inputs);
  LabeledDataset dataset;
  dataset.n_classes = n_classes;
  dataset.labels.resize(samples);
  for (int c = 0; c < n_classes; ++c) {
    for (int j = 0; j < samples_per_class; ++j) {
      const int m = c * samples_per_class + j;
      dataset.labels[m] = c;
      for (int i = 0; i < n_inputs; ++i) {
        intensities(m, i) = (i % n_classes == c) ? high : low;
      }
    }
  }
  dataset.spikes = rate_encode(intensities, time_steps, max_prob, rng);
  return dataset;
}

}  // namespace snnadmm
