#ifndef DANE_DATASET_HPP
#define DANE_DATASET_HPP

#include "dane/common.hpp"

namespace dane {

/// Training data for an empirical risk objective: N samples of dimension p,
/// one feature row per sample, with a real label per row (binary tasks use
/// labels in {-1,+1}).
struct LabeledDataset {
  FeatureMatrix features;  // N x p
  Vector labels;           // N

  Index sample_count() const { return features.rows(); }
  Index feature_dim() const { return features.cols(); }

  /// Checks N >= 1, p >= 1, matching label length and finite entries.
  void validate() const;

  /// Additionally requires every label to be exactly -1 or +1.
  void validate_binary_labels() const;
};

/// Scales all feature rows by the inverse of the largest row norm so that
/// ||x_i|| <= 1 for every sample. No-op when the largest norm is already <= 1
/// or the matrix is all zeros. Labels are untouched.
void normalize_rows(LabeledDataset& data);

}  // namespace dane

#endif  // DANE_DATASET_HPP
