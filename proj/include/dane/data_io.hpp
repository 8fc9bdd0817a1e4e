#ifndef DANE_DATA_IO_HPP
#define DANE_DATA_IO_HPP

#include <iosfwd>
#include <vector>

#include "dane/dataset.hpp"
#include "dane/rng.hpp"

namespace dane {

/// One machine's share of the data: 1-based machine index plus the dataset
/// rows it owns. partition_even guarantees the m shares are disjoint, equally
/// sized and cover the (truncated) dataset.
struct Partition {
  int machine_index = 1;
  std::vector<Index> sample_indices;
};

/// A generated regression/classification task together with the planted
/// parameter vector it was built from.
struct GeneratedDataset {
  LabeledDataset data;
  Vector w_true;
};

/// Linear-model data: standard normal features, standard normal ground truth
/// w, labels y = X w + e with e ~ N(0, noise_sigma^2). Features, ground truth
/// and noise are drawn from independent substreams of `seed`.
GeneratedDataset gen_ridge(Index n_total, Index p, double noise_sigma,
                           Seed seed);

/// Binary classification data: standard normal features and ground truth w;
/// each label is +1 with probability sigmoid(2 <w, x>), else -1.
GeneratedDataset gen_logistic(Index n_total, Index p, Seed seed);

/// Parses LIBSVM text: one sample per line, `<label> <idx>:<val> ...` with
/// 1-based strictly increasing indices. Labels must be in {-1,+1} or {0,1};
/// 0 maps to -1. The feature dimension is the largest index seen.
/// Throws ParseError (with line number) on malformed input.
LabeledDataset parse_libsvm(std::istream& in);

/// Writes LIBSVM text with 17 significant digits (round-trips doubles),
/// skipping exact zeros. LF line endings.
void write_libsvm(const LabeledDataset& data, std::ostream& out);

/// Splits rows evenly over m machines: the dataset index range is truncated
/// to m * floor(N/m), permuted uniformly at random, and sliced into m
/// consecutive blocks. Machine indices are 1..m.
std::vector<Partition> partition_even(const LabeledDataset& data, int m,
                                      Seed seed);

}  // namespace dane

#endif  // DANE_DATA_IO_HPP
