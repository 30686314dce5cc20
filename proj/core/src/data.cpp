#include "lrbm/data.hpp"

#include "lrbm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace lrbm::data {

namespace {

std::size_t corrupted_count(double fraction, Index entries) {
  // The epsilon keeps products such as 0.29 * 100 from flooring one short.
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(entries) + 1e-9));
}

// First `count` entries of a seeded partial Fisher-Yates shuffle of 0..entries-1.
std::vector<Index> random_subset(Index entries, std::size_t count, Rng& rng) {
  std::vector<Index> index(static_cast<std::size_t>(entries));
  std::iota(index.begin(), index.end(), Index{0});
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, index.size() - 1);
    std::swap(index[k], index[pick(rng)]);
  }
  index.resize(count);
  return index;
}

void check_fraction(double fraction) {
  detail::require(fraction >= 0.0 && fraction <= 1.0, "corruption fraction must be in [0, 1]");
}

}  // namespace

void SkeletonTopology::validate() const {
  const int n = static_cast<int>(parents.size());
  if (n == 0) throw DataError("skeleton topology has no joints");
  int roots = 0;
  for (int k = 0; k < n; ++k) {
    if (parents[k] == -1) {
      ++roots;
    } else if (parents[k] < 0 || parents[k] >= n || parents[k] == k) {
      throw DataError("joint " + std::to_string(k) + " has an invalid parent");
    }
  }
  if (roots != 1) throw DataError("skeleton topology must have exactly one root");
  for (int k = 0; k < n; ++k) {
    int steps = 0;
    for (int j = k; parents[j] != -1; j = parents[j]) {
      if (++steps > n) throw DataError("skeleton topology contains a cycle");
    }
  }
}

std::vector<int> SkeletonTopology::root_to_leaf_order() const {
  validate();
  const int n = static_cast<int>(parents.size());
  std::vector<int> order;
  order.reserve(parents.size());
  std::vector<bool> placed(parents.size(), false);
  while (static_cast<int>(order.size()) < n) {
    for (int k = 0; k < n; ++k) {
      if (!placed[k] && (parents[k] == -1 || placed[parents[k]])) {
        placed[k] = true;
        order.push_back(k);
      }
    }
  }
  return order;
}

void PreprocessConfig::validate() const {
  detail::require(target_length >= 2, "target length must be >= 2");
  detail::require(smoothing_window >= 1 && smoothing_window % 2 == 1,
                  "smoothing window must be odd and >= 1");
}

SequenceSample interpolate(const RawSequence& raw, int target_length) {
  if (raw.length() < 2) throw DataError("interpolation needs at least 2 frames (" + raw.id + ")");
  detail::require(target_length >= 1, "target length must be >= 1");
  const Index n_raw = raw.length();
  SequenceSample out{Matrix(raw.dim(), target_length), raw.label, raw.id};
  for (Index t = 0; t < target_length; ++t) {
    const double pos =
        target_length == 1
            ? 0.0
            : static_cast<double>(t * (n_raw - 1)) / static_cast<double>(target_length - 1);
    const auto lo = static_cast<Index>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0 || lo + 1 >= n_raw) {
      out.frames.col(t) = raw.frames.col(std::min(lo, n_raw - 1));
    } else {
      out.frames.col(t) = (1.0 - frac) * raw.frames.col(lo) + frac * raw.frames.col(lo + 1);
    }
  }
  return out;
}

SequenceSample smooth(const SequenceSample& sample, int window) {
  detail::require(window >= 1 && window % 2 == 1, "smoothing window must be odd");
  const Index half = window / 2;
  const Index n = sample.length();
  SequenceSample out{Matrix(sample.dim(), n), sample.label, sample.id};
  for (Index t = 0; t < n; ++t) {
    const Index lo = std::max<Index>(0, t - half);
    const Index hi = std::min<Index>(n - 1, t + half);
    out.frames.col(t) = sample.frames.middleCols(lo, hi - lo + 1).rowwise().mean();
  }
  return out;
}

NormStats normalize_fit(std::span<const SequenceSample> training) {
  detail::require(!training.empty(), "normalisation needs at least one sample");
  const Index d = training.front().dim();
  double count = 0.0;
  Vector sum = Vector::Zero(d);
  for (const auto& s : training) {
    detail::require(s.dim() == d, "normalisation samples have mixed dimensions");
    sum += s.frames.rowwise().sum();
    count += static_cast<double>(s.length());
  }
  NormStats stats{sum / count, Vector::Zero(d)};
  // Second pass corrects the mean and accumulates centred squares.
  Vector correction = Vector::Zero(d);
  Vector squares = Vector::Zero(d);
  for (const auto& s : training) {
    const Matrix centred = s.frames.colwise() - stats.mean;
    correction += centred.rowwise().sum();
    squares += centred.rowwise().squaredNorm();
  }
  stats.mean += correction / count;
  const Vector adjusted = squares / count - (correction / count).cwiseAbs2();
  stats.stddev = adjusted.cwiseMax(0.0).cwiseSqrt().cwiseMax(NormStats::kStdFloor);
  return stats;
}

SequenceSample normalize_apply(const SequenceSample& sample, const NormStats& stats) {
  detail::require(stats.mean.size() == sample.dim() && stats.stddev.size() == sample.dim(),
                  "normalisation statistics do not match the sample dimension");
  SequenceSample out{sample.frames, sample.label, sample.id};
  out.frames.colwise() -= stats.mean;
  out.frames.array().colwise() /= stats.stddev.array();
  return out;
}

RawSequence select_features(const RawSequence& raw, std::span<const int> subset) {
  if (subset.empty()) return raw;
  RawSequence out{Matrix(static_cast<Index>(subset.size()), raw.length()), raw.label, raw.id};
  for (std::size_t k = 0; k < subset.size(); ++k) {
    if (subset[k] < 0 || subset[k] >= raw.dim()) {
      throw DataError("feature index " + std::to_string(subset[k]) + " out of range");
    }
    out.frames.row(static_cast<Index>(k)) = raw.frames.row(subset[k]);
  }
  return out;
}

RenormalizeResult skeleton_renormalize(const RawSequence& raw, const SkeletonTopology& topology,
                                       std::span<const double> target_lengths) {
  const auto order = topology.root_to_leaf_order();
  const auto joints = static_cast<Index>(topology.joints());
  if (raw.dim() != 3 * joints) {
    throw DataError("skeleton has " + std::to_string(joints) + " joints but sequence has " +
                    std::to_string(raw.dim()) + " rows");
  }
  detail::require(target_lengths.size() == topology.joints(),
                  "need one target length per joint");
  for (std::size_t k = 0; k < topology.joints(); ++k) {
    detail::require(topology.parents[k] == -1 || target_lengths[k] > 0.0,
                    "target bone lengths must be positive");
  }

  RenormalizeResult result{raw, 0};
  Matrix& out = result.sequence.frames;
  std::vector<Eigen::Vector3d> last_direction(topology.joints(), Eigen::Vector3d::UnitX());
  for (Index t = 0; t < raw.length(); ++t) {
    for (int k : order) {
      const int parent = topology.parents[k];
      if (parent == -1) continue;
      const Eigen::Vector3d bone =
          raw.frames.block<3, 1>(3 * k, t) - raw.frames.block<3, 1>(3 * parent, t);
      const double length = bone.norm();
      Eigen::Vector3d direction;
      if (length > 0.0) {
        direction = bone / length;
        last_direction[k] = direction;
      } else {
        direction = last_direction[k];
        ++result.degenerate_bones;
      }
      out.block<3, 1>(3 * k, t) = out.block<3, 1>(3 * parent, t) + target_lengths[k] * direction;
    }
  }
  return result;
}

std::vector<double> mean_bone_lengths(std::span<const RawSequence> sequences,
                                      const SkeletonTopology& topology) {
  topology.validate();
  std::vector<double> total(topology.joints(), 0.0);
  double frames = 0.0;
  for (const auto& seq : sequences) {
    if (seq.dim() != 3 * static_cast<Index>(topology.joints())) {
      throw DataError("sequence " + seq.id + " does not match the skeleton topology");
    }
    for (Index t = 0; t < seq.length(); ++t) {
      for (std::size_t k = 0; k < topology.joints(); ++k) {
        const int parent = topology.parents[k];
        if (parent == -1) continue;
        const auto kk = static_cast<Index>(k);
        total[k] +=
            (seq.frames.block<3, 1>(3 * kk, t) - seq.frames.block<3, 1>(3 * parent, t)).norm();
      }
      frames += 1.0;
    }
  }
  if (frames > 0.0) {
    for (auto& v : total) v /= frames;
  }
  return total;
}

SequenceSample inject_noise(const SequenceSample& sample, double fraction, Rng& rng) {
  check_fraction(fraction);
  SequenceSample out{sample.frames, sample.label, sample.id};
  const auto chosen = random_subset(out.frames.size(), corrupted_count(fraction, out.frames.size()), rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index k : chosen) out.frames.data()[k] *= 1.0 + normal(rng);
  return out;
}

MaskedSample inject_missing(const SequenceSample& sample, double fraction, Rng& rng) {
  check_fraction(fraction);
  MaskedSample out{{sample.frames, sample.label, sample.id},
                   Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
                       sample.dim(), sample.length(), false)};
  const auto chosen =
      random_subset(out.sample.frames.size(), corrupted_count(fraction, out.sample.frames.size()), rng);
  for (Index k : chosen) {
    out.missing.data()[k] = true;
    out.sample.frames.data()[k] = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

SequenceSample impute_missing(const MaskedSample& masked) {
  const Matrix& in = masked.sample.frames;
  const auto& missing = masked.missing;
  detail::require(missing.rows() == in.rows() && missing.cols() == in.cols(),
                  "mask does not match the sample shape");
  SequenceSample out{in, masked.sample.label, masked.sample.id};
  const Index n = in.cols();
  auto available = [&](Index s, Index t) { return t >= 0 && t < n && !missing(s, t); };

  for (Index s = 0; s < in.rows(); ++s) {
    for (Index t = 0; t < n; ++t) {
      if (!missing(s, t)) continue;
      double value = 0.0;  // all-missing dimension: the normalised mean
      for (Index reach = 1; reach < n; ++reach) {
        const bool before = available(s, t - reach);
        const bool after = available(s, t + reach);
        if (before && after) {
          value = 0.5 * (in(s, t - reach) + in(s, t + reach));
        } else if (before) {
          value = in(s, t - reach);
        } else if (after) {
          value = in(s, t + reach);
        } else {
          continue;
        }
        break;
      }
      out.frames(s, t) = value;
    }
  }
  return out;
}

RawSequence impute_raw(const RawSequence& raw) {
  if (raw.frames.allFinite()) return raw;
  MaskedSample masked{{raw.frames, raw.label, raw.id}, raw.frames.array().isNaN()};
  if (!(raw.frames.array().isNaN() || raw.frames.array().isFinite()).all()) {
    throw DataError("sequence " + raw.id + " contains infinite values");
  }
  auto filled = impute_missing(masked);
  return {std::move(filled.frames), raw.label, raw.id};
}

SequenceSample preprocess(const RawSequence& raw, const PreprocessConfig& config) {
  config.validate();
  const RawSequence selected = select_features(impute_raw(raw), config.feature_subset);
  return smooth(interpolate(selected, config.target_length), config.smoothing_window);
}

}  // namespace lrbm::data
