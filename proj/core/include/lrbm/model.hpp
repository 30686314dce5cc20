#pragma once

#include "lrbm/types.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace lrbm {

struct TrainProvenance {
  std::uint64_t seed = 0;
  int epochs = 0;
  std::string config_hash;

  bool operator==(const TrainProvenance&) const = default;
};

/// Parameters of one class-conditional LRBM.
///
/// The weight tensor w (n_t x n_h x d) is stored as a (d * n_t) x n_h matrix whose
/// row block [i*d, (i+1)*d) is W_i, so column j of W_i is w_{ij.}. With this layout
/// the total hidden input is simply b + W^T vec(V).
struct LrbmModel {
  Matrix a;  ///< visible biases, d x n_t
  Vector b;  ///< hidden biases, n_h
  Matrix W;  ///< (d * n_t) x n_h
  Matrix U;  ///< d x d, symmetric with zero diagonal
  std::optional<TrainProvenance> provenance;

  LrbmModel() = default;
  LrbmModel(Index visible_dim, Index frames, Index hidden_dim);

  Index visible_dim() const { return U.rows(); }
  Index frames() const { return a.cols(); }
  Index hidden_dim() const { return b.size(); }

  auto slice_weights(Index i) { return W.middleRows(i * visible_dim(), visible_dim()); }
  auto slice_weights(Index i) const { return W.middleRows(i * visible_dim(), visible_dim()); }

  /// w_{ij.}^{(s)}
  double weight(Index i, Index j, Index s) const { return W(i * visible_dim() + s, j); }

  bool same_shape(const LrbmModel& other) const;
};

/// Largest eigenvalue of a symmetric matrix.
double max_eigenvalue(const Matrix& symmetric);

/// Throws ContractError unless U is exactly symmetric with an exactly zero diagonal,
/// every parameter is finite and lambda_max(U) <= 1 - margin.
void check_invariants(const LrbmModel& model, double stability_margin);

/// Overflow-safe log(1 + exp(x)).
inline double softplus(double x) {
  return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// E(V, h) for a binary hidden configuration.
double energy(const LrbmModel& model, const SequenceSample& V, const HiddenState& h);

/// p(h_j = 1 | V) for every hidden unit. Also the feature-extraction output.
HiddenState hidden_activation(const LrbmModel& model, const SequenceSample& V);

/// Independent Bernoulli draws from hidden_activation.
HiddenState sample_hidden(const LrbmModel& model, const SequenceSample& V, Rng& rng);
HiddenState sample_hidden(const HiddenState& probabilities, Rng& rng);

/// Mean of the unit-variance Gaussian conditional of component s in slice i,
/// given the hidden state and the other components of that slice.
double visible_conditional_mean(const LrbmModel& model, const HiddenState& h, Index slice,
                                Index component, const Vector& current_slice);

/// Gauss-Seidel mean-field reconstruction: each component is replaced by its
/// conditional mean, using updated values immediately.
SequenceSample mean_field_reconstruct(const LrbmModel& model, const HiddenState& h,
                                      const SequenceSample& init, int sweeps);

/// Same sweep order, but each component is drawn from its Gaussian conditional.
SequenceSample gibbs_reconstruct(const LrbmModel& model, const HiddenState& h,
                                 const SequenceSample& init, int sweeps, Rng& rng);

/// g(V) = log p(V) + log Z.
double unnormalized_loglik(const LrbmModel& model, const SequenceSample& V);

}  // namespace lrbm
