#pragma once

#include "lrbm/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lrbm::data {

/// Joint tree for skeleton data; joint k occupies rows [3k, 3k+3) of the frames.
struct SkeletonTopology {
  std::vector<int> parents;  ///< parents[k] is the parent joint of k, -1 for the root

  std::size_t joints() const { return parents.size(); }
  /// Throws DataError unless there is exactly one root and every joint reaches it.
  void validate() const;
  /// Joints ordered so that every parent precedes its children.
  std::vector<int> root_to_leaf_order() const;
};

/// Variable-length input sequence. NaN entries mark missing values.
struct RawSequence {
  Matrix frames;  ///< d x n_raw
  std::optional<std::string> label;
  std::string id;

  Index dim() const { return frames.rows(); }
  Index length() const { return frames.cols(); }
};

struct PreprocessConfig {
  int target_length = 10;
  int smoothing_window = 3;
  bool normalize = false;
  std::vector<int> feature_subset;  ///< empty keeps every dimension

  void validate() const;
  bool operator==(const PreprocessConfig&) const = default;
};

struct NormStats {
  Vector mean;
  Vector stddev;  ///< already floored

  static constexpr double kStdFloor = 1e-6;
};

/// Resamples each dimension at n_t uniformly spaced positions over [0, n_raw - 1].
SequenceSample interpolate(const RawSequence& raw, int target_length);

/// Centred moving average; at the edges the window is truncated to the frames that exist.
SequenceSample smooth(const SequenceSample& sample, int window);

NormStats normalize_fit(std::span<const SequenceSample> training);
SequenceSample normalize_apply(const SequenceSample& sample, const NormStats& stats);

/// Keeps the listed dimensions, in the listed order.
RawSequence select_features(const RawSequence& raw, std::span<const int> subset);

struct RenormalizeResult {
  RawSequence sequence;
  /// Frames in which some bone had zero length and inherited the previous direction.
  int degenerate_bones = 0;
};

/// Rescales every bone to its target length along the original bone direction, root to leaf.
/// target_lengths[k] is the length of the bone from parents[k] to k (ignored for the root).
RenormalizeResult skeleton_renormalize(const RawSequence& raw, const SkeletonTopology& topology,
                                       std::span<const double> target_lengths);

/// Mean bone length per joint over every frame of every sequence (0 for the root).
std::vector<double> mean_bone_lengths(std::span<const RawSequence> sequences,
                                      const SkeletonTopology& topology);

/// Multiplies floor(fraction * d * n_t) randomly chosen entries by (1 + N(0, 1)).
SequenceSample inject_noise(const SequenceSample& sample, double fraction, Rng& rng);

struct MaskedSample {
  SequenceSample sample;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> missing;  ///< same shape as frames

  Index missing_count() const { return missing.count(); }
};

/// Marks floor(fraction * d * n_t) randomly chosen entries as missing (values become NaN).
MaskedSample inject_missing(const SequenceSample& sample, double fraction, Rng& rng);

/// Fills missing entries from available temporal neighbours (frames t-1, t+1) of the same
/// dimension; falls back to the nearest available frame, then to 0 for an all-missing dimension.
SequenceSample impute_missing(const MaskedSample& masked);

/// Masks every NaN entry of a raw sequence and imputes it.
RawSequence impute_raw(const RawSequence& raw);

/// Full pipeline on one raw sequence, without normalisation.
SequenceSample preprocess(const RawSequence& raw, const PreprocessConfig& config);

}  // namespace lrbm::data
