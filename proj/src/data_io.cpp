#include "dane/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>
#include <utility>

namespace dane {
namespace {

// Fixed substream tags for the generators.
constexpr std::uint64_t kFeaturesStream = 1;
constexpr std::uint64_t kTruthStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr std::uint64_t kLabelStream = 4;
constexpr std::uint64_t kShuffleStream = 5;

FeatureMatrix normal_matrix(Index rows, Index cols, Rng& rng) {
  FeatureMatrix x(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) x(i, j) = rng.normal();
  return x;
}

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

GeneratedDataset gen_ridge(Index n_total, Index p, double noise_sigma,
                           Seed seed) {
  if (n_total < 1 || p < 1) throw ContractError("gen_ridge: need n,p >= 1");
  if (noise_sigma < 0) throw ContractError("gen_ridge: negative noise");
  Rng feat_rng(derive_seed(seed, kFeaturesStream));
  Rng truth_rng(derive_seed(seed, kTruthStream));
  Rng noise_rng(derive_seed(seed, kNoiseStream));

  GeneratedDataset out;
  out.data.features = normal_matrix(n_total, p, feat_rng);
  out.w_true = Vector(p);
  for (Index j = 0; j < p; ++j) out.w_true[j] = truth_rng.normal();
  out.data.labels = out.data.features * out.w_true;
  if (noise_sigma > 0) {
    for (Index i = 0; i < n_total; ++i)
      out.data.labels[i] += noise_sigma * noise_rng.normal();
  }
  return out;
}

GeneratedDataset gen_logistic(Index n_total, Index p, Seed seed) {
  if (n_total < 1 || p < 1) throw ContractError("gen_logistic: need n,p >= 1");
  Rng feat_rng(derive_seed(seed, kFeaturesStream));
  Rng truth_rng(derive_seed(seed, kTruthStream));
  Rng label_rng(derive_seed(seed, kLabelStream));

  GeneratedDataset out;
  out.data.features = normal_matrix(n_total, p, feat_rng);
  out.w_true = Vector(p);
  for (Index j = 0; j < p; ++j) out.w_true[j] = truth_rng.normal();
  out.data.labels = Vector(n_total);
  for (Index i = 0; i < n_total; ++i) {
    double margin = out.data.features.row(i).dot(out.w_true);
    double p_plus = sigmoid(2.0 * margin);
    out.data.labels[i] = (label_rng.uniform() < p_plus) ? 1.0 : -1.0;
  }
  return out;
}

LabeledDataset parse_libsvm(std::istream& in) {
  struct Sample {
    double label;
    std::vector<std::pair<Index, double>> entries;
  };
  std::vector<Sample> samples;
  Index max_index = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // tolerate trailing CR from foreign files
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t pos = line.find_first_not_of(" \t");
    if (pos == std::string::npos) continue;  // blank line
    if (line[pos] == '#') continue;

    Sample s;
    const char* c = line.c_str() + pos;
    char* end = nullptr;
    double raw_label = std::strtod(c, &end);
    if (end == c || !std::isfinite(raw_label))
      throw ParseError("expected a numeric label", line_no);
    // Classification files use {-1,+1} or {0,1}; 0 maps to -1. Real-valued
    // labels (regression caches) pass through unchanged.
    s.label = raw_label == 0.0 ? -1.0 : raw_label;

    c = end;
    Index prev_index = 0;
    while (true) {
      while (*c == ' ' || *c == '\t') ++c;
      if (*c == '\0') break;
      long idx = std::strtol(c, &end, 10);
      if (end == c || *end != ':')
        throw ParseError("expected <index>:<value>", line_no);
      if (idx < 1) throw ParseError("feature indices are 1-based", line_no);
      if (idx <= prev_index)
        throw ParseError("feature indices must be strictly increasing",
                         line_no);
      c = end + 1;
      double val = std::strtod(c, &end);
      if (end == c) throw ParseError("expected a numeric feature value",
                                     line_no);
      c = end;
      prev_index = static_cast<Index>(idx);
      max_index = std::max(max_index, prev_index);
      s.entries.emplace_back(prev_index - 1, val);
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw ParseError("no samples in stream");
  if (max_index == 0) throw ParseError("no features in stream");

  LabeledDataset data;
  data.features = FeatureMatrix::Zero(static_cast<Index>(samples.size()),
                                      max_index);
  data.labels = Vector(static_cast<Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    data.labels[static_cast<Index>(i)] = samples[i].label;
    for (auto [j, v] : samples[i].entries)
      data.features(static_cast<Index>(i), j) = v;
  }
  return data;
}

void write_libsvm(const LabeledDataset& data, std::ostream& out) {
  char buf[64];
  for (Index i = 0; i < data.sample_count(); ++i) {
    double label = data.labels[i];
    if (label == 1.0) {
      out << "+1";
    } else if (label == -1.0) {
      out << "-1";
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g", label);
      out << buf;
    }
    for (Index j = 0; j < data.feature_dim(); ++j) {
      double v = data.features(i, j);
      if (v == 0.0) continue;
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ' ' << (j + 1) << ':' << buf;
    }
    out << '\n';
  }
}

std::vector<Partition> partition_even(const LabeledDataset& data, int m,
                                      Seed seed) {
  const Index n_rows = data.sample_count();
  if (m < 1) throw ConfigError("partition_even: m must be >= 1");
  if (static_cast<Index>(m) > n_rows)
    throw ConfigError("partition_even: more machines than samples");
  const Index kept = (n_rows / m) * m;
  const Index per_machine = kept / m;

  std::vector<Index> perm(static_cast<std::size_t>(kept));
  for (Index i = 0; i < kept; ++i) perm[static_cast<std::size_t>(i)] = i;
  // Fisher-Yates with the shuffle substream.
  Rng rng(derive_seed(seed, kShuffleStream));
  for (Index i = kept - 1; i > 0; --i) {
    Index j = rng.bounded(i + 1);
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(j)]);
  }

  std::vector<Partition> parts(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    parts[static_cast<std::size_t>(j)].machine_index = j + 1;
    auto begin = perm.begin() + static_cast<std::ptrdiff_t>(j) * per_machine;
    auto& indices = parts[static_cast<std::size_t>(j)].sample_indices;
    indices.assign(begin, begin + per_machine);
    // The permutation decides the assignment; within a machine, samples are
    // kept in ascending row order so local reductions sum in dataset order.
    std::sort(indices.begin(), indices.end());
  }
  return parts;
}

}  // namespace dane
