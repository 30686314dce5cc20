#include "lrbm/model.hpp"

#include "kernels.hpp"
#include "lrbm/error.hpp"

#include <Eigen/Eigenvalues>

#include <string>

namespace lrbm {

namespace {

void check_sample(const LrbmModel& model, const SequenceSample& V) {
  if (V.dim() != model.visible_dim() || V.length() != model.frames()) {
    detail::contract_failure("sequence is " + std::to_string(V.dim()) + "x" +
                             std::to_string(V.length()) + " but model expects " +
                             std::to_string(model.visible_dim()) + "x" +
                             std::to_string(model.frames()));
  }
}

void check_hidden(const LrbmModel& model, const HiddenState& h) {
  if (h.size() != model.hidden_dim()) {
    detail::contract_failure("hidden state has " + std::to_string(h.size()) +
                             " units but model has " + std::to_string(model.hidden_dim()));
  }
}

}  // namespace

LrbmModel::LrbmModel(Index visible_dim, Index frames, Index hidden_dim)
    : a(Matrix::Zero(visible_dim, frames)),
      b(Vector::Zero(hidden_dim)),
      W(Matrix::Zero(visible_dim * frames, hidden_dim)),
      U(Matrix::Zero(visible_dim, visible_dim)) {
  detail::require(visible_dim >= 1 && frames >= 1 && hidden_dim >= 0,
                  "model needs d >= 1, n_t >= 1 and n_h >= 0");
}

bool LrbmModel::same_shape(const LrbmModel& other) const {
  return visible_dim() == other.visible_dim() && frames() == other.frames() &&
         hidden_dim() == other.hidden_dim();
}

double max_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  if (symmetric.rows() == 1) return symmetric(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

void check_invariants(const LrbmModel& model, double stability_margin) {
  const Index d = model.visible_dim();
  detail::require(model.a.rows() == d && model.W.rows() == d * model.frames() &&
                      model.W.cols() == model.hidden_dim() && model.U.cols() == d,
                  "model parameter shapes are inconsistent");
  detail::require(model.a.allFinite() && model.b.allFinite() && model.W.allFinite() &&
                      model.U.allFinite(),
                  "model has non-finite parameters");
  for (Index r = 0; r < d; ++r) {
    detail::require(model.U(r, r) == 0.0, "U must have an exactly zero diagonal");
    for (Index s = r + 1; s < d; ++s) {
      detail::require(model.U(r, s) == model.U(s, r), "U must be exactly symmetric");
    }
  }
  // Rescaling by (1 - margin) / lambda can land a few ulps above the bound.
  const double bound = 1.0 - stability_margin;
  detail::require(max_eigenvalue(model.U) <= bound + 1e-12 * std::max(1.0, bound),
                  "lambda_max(U) exceeds the stability bound");
}

double energy(const LrbmModel& model, const SequenceSample& V, const HiddenState& h) {
  check_sample(model, V);
  check_hidden(model, h);
  detail::require(h.is_binary(), "energy needs a binary hidden configuration");
  const double quadratic = 0.5 * (V.frames - model.a).squaredNorm();
  const double hidden_bias = model.b.dot(h.values);
  const double coupling = V.flat().dot(model.W * h.values);
  const double interaction = 0.5 * kernels::quadratic_interaction(model.U, V.frames);
  return quadratic - hidden_bias - coupling - interaction;
}

HiddenState hidden_activation(const LrbmModel& model, const SequenceSample& V) {
  check_sample(model, V);
  HiddenState h{Vector(model.hidden_dim()), HiddenState::Kind::Probability};
  kernels::hidden_probabilities(model, V.flat(), h.values);
  return h;
}

HiddenState sample_hidden(const HiddenState& probabilities, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  HiddenState h{Vector(probabilities.size()), HiddenState::Kind::Binary};
  for (Index j = 0; j < h.size(); ++j) {
    h.values[j] = uniform(rng) < probabilities.values[j] ? 1.0 : 0.0;
  }
  return h;
}

HiddenState sample_hidden(const LrbmModel& model, const SequenceSample& V, Rng& rng) {
  return sample_hidden(hidden_activation(model, V), rng);
}

double visible_conditional_mean(const LrbmModel& model, const HiddenState& h, Index slice,
                                Index component, const Vector& current_slice) {
  check_hidden(model, h);
  const Index d = model.visible_dim();
  detail::require(slice >= 0 && slice < model.frames(), "time-slice index out of range");
  detail::require(component >= 0 && component < d, "component index out of range");
  detail::require(current_slice.size() == d, "slice vector has the wrong dimension");
  double mean = model.a(component, slice);
  for (Index j = 0; j < model.hidden_dim(); ++j) {
    mean += h.values[j] * model.weight(slice, j, component);
  }
  for (Index k = 0; k < d; ++k) {
    if (k != component) mean += current_slice[k] * model.U(k, component);
  }
  return mean;
}

SequenceSample mean_field_reconstruct(const LrbmModel& model, const HiddenState& h,
                                      const SequenceSample& init, int sweeps) {
  check_sample(model, init);
  check_hidden(model, h);
  detail::require(sweeps >= 1, "mean-field reconstruction needs at least one sweep");
  SequenceSample out{init.frames, init.label, init.id};
  kernels::reconstruct_inplace(model, h.values, out.frames, sweeps, nullptr);
  return out;
}

SequenceSample gibbs_reconstruct(const LrbmModel& model, const HiddenState& h,
                                 const SequenceSample& init, int sweeps, Rng& rng) {
  check_sample(model, init);
  check_hidden(model, h);
  detail::require(sweeps >= 1, "Gibbs reconstruction needs at least one sweep");
  SequenceSample out{init.frames, init.label, init.id};
  kernels::reconstruct_inplace(model, h.values, out.frames, sweeps, &rng);
  return out;
}

double unnormalized_loglik(const LrbmModel& model, const SequenceSample& V) {
  check_sample(model, V);
  const double quadratic = -0.5 * (V.frames - model.a).squaredNorm();
  const double interaction = 0.5 * kernels::quadratic_interaction(model.U, V.frames);
  const Vector input = model.b + model.W.transpose() * V.flat();
  double free_hidden = 0.0;
  for (Index j = 0; j < input.size(); ++j) free_hidden += softplus(input[j]);
  return quadratic + interaction + free_hidden;
}

}  // namespace lrbm
