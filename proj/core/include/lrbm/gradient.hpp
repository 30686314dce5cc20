#pragma once

#include "lrbm/model.hpp"

namespace lrbm {

/// Per-parameter log-likelihood gradient (or an approximation of it).
/// dU is kept exactly symmetric with an exactly zero diagonal; each
/// off-diagonal entry is the derivative with respect to the tied pair u_rs = u_sr.
struct GradientAccumulator {
  Matrix dW;
  Vector db;
  Matrix dU;
  Matrix da;

  GradientAccumulator() = default;
  explicit GradientAccumulator(const LrbmModel& shape_of)
      : dW(Matrix::Zero(shape_of.W.rows(), shape_of.W.cols())),
        db(Vector::Zero(shape_of.hidden_dim())),
        dU(Matrix::Zero(shape_of.visible_dim(), shape_of.visible_dim())),
        da(Matrix::Zero(shape_of.visible_dim(), shape_of.frames())) {}

  /// Copies the upper triangle of dU onto the lower one and zeroes the diagonal.
  void enforce_interaction_structure() {
    for (Index r = 0; r < dU.rows(); ++r) {
      dU(r, r) = 0.0;
      for (Index s = r + 1; s < dU.cols(); ++s) dU(s, r) = dU(r, s);
    }
  }

  bool all_finite() const {
    return dW.allFinite() && db.allFinite() && dU.allFinite() && da.allFinite();
  }
};

}  // namespace lrbm
