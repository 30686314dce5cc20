#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <string>

namespace lrbm {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Deterministic generator used throughout; every stochastic operation takes one by reference.
using Rng = std::mt19937_64;

/// A d x n_t block of motion data, one column per time slice.
struct SequenceSample {
  Matrix frames;
  std::optional<std::string> label;
  std::string id;

  Index dim() const { return frames.rows(); }
  Index length() const { return frames.cols(); }

  /// Column-major view of the frames: v_1 stacked on v_2 ... v_{n_t}.
  Eigen::Map<const Vector> flat() const { return {frames.data(), frames.size()}; }
};

/// Hidden layer values, either binary samples or activation probabilities.
struct HiddenState {
  enum class Kind { Binary, Probability };

  Vector values;
  Kind kind = Kind::Probability;

  Index size() const { return values.size(); }
  bool is_binary() const { return kind == Kind::Binary; }
};

}  // namespace lrbm
