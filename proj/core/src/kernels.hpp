#pragma once

// Allocation-light building blocks shared by the public core operations and the
// training loop.

#include "lrbm/model.hpp"

namespace lrbm::kernels {

/// out = sigmoid(b + W^T x) for a flattened sequence x.
inline void hidden_probabilities(const LrbmModel& model, const Eigen::Ref<const Vector>& flat,
                                 Eigen::Ref<Vector> out) {
  out.noalias() = model.W.transpose() * flat;
  out += model.b;
  for (Index j = 0; j < out.size(); ++j) out[j] = sigmoid(out[j]);
}

/// Gauss-Seidel sweeps over every slice of `frames`, in place. When `noise` is
/// non-null each update adds a standard normal draw (Gibbs instead of mean-field).
inline void reconstruct_inplace(const LrbmModel& model, const Eigen::Ref<const Vector>& h,
                                Eigen::Ref<Matrix> frames, int sweeps, Rng* noise) {
  const Index d = model.visible_dim();
  const Index n_t = model.frames();
  Vector drive = model.W * h;
  Eigen::Map<Matrix> bias(drive.data(), d, n_t);
  bias += model.a;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < n_t; ++i) {
    auto v = frames.col(i);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      for (Index s = 0; s < d; ++s) {
        // diag(U) is exactly zero, so the full dot product only sums neighbours.
        double mean = bias(s, i) + model.U.col(s).dot(v);
        if (noise) mean += normal(*noise);
        v[s] = mean;
      }
    }
  }
}

inline double quadratic_interaction(const Matrix& U, const Matrix& frames) {
  return (frames.array() * (U * frames).array()).sum();
}

}  // namespace lrbm::kernels
