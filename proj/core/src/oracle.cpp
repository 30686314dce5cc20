#include "lrbm/oracle.hpp"

#include "lrbm/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace lrbm::oracle {

namespace {

double log_sum_exp(const std::vector<double>& terms) {
  const double peak = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum);
}

Vector configuration(Index n_h, std::size_t k) {
  Vector h(n_h);
  for (Index j = 0; j < n_h; ++j) h[j] = static_cast<double>((k >> j) & 1U);
  return h;
}

// Factorisation of the visible precision I - U shared by every configuration.
struct VisibleGaussian {
  Eigen::LLT<Matrix> llt;
  Matrix covariance;  // (I - U)^{-1}
  double log_det = 0.0;

  explicit VisibleGaussian(const Matrix& U) {
    const Index d = U.rows();
    const Matrix precision = Matrix::Identity(d, d) - U;
    if (max_eigenvalue(U) >= 1.0) {
      throw NonNormalizableError("I - U is not positive definite (lambda_max(U) >= 1)");
    }
    llt.compute(precision);
    if (llt.info() != Eigen::Success) {
      throw NonNormalizableError("Cholesky factorisation of I - U failed");
    }
    covariance = llt.solve(Matrix::Identity(d, d));
    log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }
};

// Per-slice conditional means (a_i + W_i h) mapped through the covariance.
Matrix slice_drive(const LrbmModel& model, const Vector& h) {
  Vector drive = model.W * h;
  return Eigen::Map<Matrix>(drive.data(), model.visible_dim(), model.frames()) + model.a;
}

// log of the visible integral of exp(-E(V, h)) up to the h-independent Gaussian constant.
double configuration_log_weight(const LrbmModel& model, const VisibleGaussian& gauss,
                                const Vector& h) {
  const Matrix drive = slice_drive(model, h);
  const Matrix means = gauss.covariance * drive;
  return model.b.dot(h) + 0.5 * (drive.array() * means.array()).sum() -
         0.5 * model.a.squaredNorm();
}

std::vector<double> enumerate_log_weights(const LrbmModel& model, const VisibleGaussian& gauss) {
  const std::size_t configs = std::size_t{1} << model.hidden_dim();
  std::vector<double> log_weights(configs);
  for (std::size_t k = 0; k < configs; ++k) {
    log_weights[k] = configuration_log_weight(model, gauss, configuration(model.hidden_dim(), k));
  }
  return log_weights;
}

double gaussian_constant(const LrbmModel& model, const VisibleGaussian& gauss) {
  const auto d = static_cast<double>(model.visible_dim());
  const auto n_t = static_cast<double>(model.frames());
  return n_t * 0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * n_t * gauss.log_det;
}

std::vector<double> normalised_weights(const std::vector<double>& log_weights) {
  const double total = log_sum_exp(log_weights);
  std::vector<double> weights(log_weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) weights[k] = std::exp(log_weights[k] - total);
  return weights;
}

void check_sample(const LrbmModel& model, const SequenceSample& V) {
  detail::require(V.dim() == model.visible_dim() && V.length() == model.frames(),
                  "sample does not match the model dimensions");
}

}  // namespace

void check_limits(const LrbmModel& model, const OracleLimits& limits) {
  detail::require(model.hidden_dim() <= limits.max_hidden && model.hidden_dim() < 31,
                  "model has too many hidden units for exact enumeration");
  detail::require(model.visible_dim() <= limits.max_visible,
                  "model visible dimension exceeds the oracle limit");
  detail::require(model.frames() <= limits.max_frames,
                  "model sequence length exceeds the oracle limit");
}

double exact_log_partition(const LrbmModel& model, const OracleLimits& limits) {
  check_limits(model, limits);
  const VisibleGaussian gauss(model.U);
  return log_sum_exp(enumerate_log_weights(model, gauss)) + gaussian_constant(model, gauss);
}

double exact_free_log_weight(const LrbmModel& model, const SequenceSample& V,
                             const OracleLimits& limits) {
  check_limits(model, limits);
  check_sample(model, V);
  const Eigen::Map<const Vector> x = V.flat();
  // Terms of -E(V, h) that do not depend on h.
  const double visible_part = -0.5 * (V.frames - model.a).squaredNorm() +
                              0.5 * (V.frames.transpose() * model.U * V.frames).trace();
  const Vector hidden_input = model.b + model.W.transpose() * x;
  const std::size_t configs = std::size_t{1} << model.hidden_dim();
  std::vector<double> terms(configs);
  for (std::size_t k = 0; k < configs; ++k) {
    terms[k] = visible_part + hidden_input.dot(configuration(model.hidden_dim(), k));
  }
  return log_sum_exp(terms);
}

double exact_loglik(const LrbmModel& model, const SequenceSample& V, const OracleLimits& limits) {
  return exact_free_log_weight(model, V, limits) - exact_log_partition(model, limits);
}

Matrix conditional_means(const LrbmModel& model, const Vector& h) {
  const Index d = model.visible_dim();
  const Matrix precision = Matrix::Identity(d, d) - model.U;
  return precision.partialPivLu().solve(slice_drive(model, h));
}

ModelMoments exact_model_moments(const LrbmModel& model, const OracleLimits& limits) {
  check_limits(model, limits);
  const VisibleGaussian gauss(model.U);
  const auto weights = normalised_weights(enumerate_log_weights(model, gauss));
  const Index d = model.visible_dim();
  const Index n_h = model.hidden_dim();

  ModelMoments m{Vector::Zero(n_h), Matrix::Zero(d * model.frames(), n_h),
                 static_cast<double>(model.frames()) * gauss.covariance,
                 Matrix::Zero(d, model.frames())};
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const Vector h = configuration(n_h, k);
    const Matrix means = gauss.covariance * slice_drive(model, h);
    const Eigen::Map<const Vector> flat(means.data(), means.size());
    m.hidden_mean += weights[k] * h;
    m.visible_hidden += weights[k] * flat * h.transpose();
    m.second_moment += weights[k] * means * means.transpose();
    m.visible_mean += weights[k] * means;
  }
  return m;
}

GradientAccumulator exact_gradient(const LrbmModel& model, const SequenceSample& V,
                                   const OracleLimits& limits) {
  check_sample(model, V);
  const ModelMoments moments = exact_model_moments(model, limits);
  const Eigen::Map<const Vector> x = V.flat();
  Vector posterior = model.b + model.W.transpose() * x;
  for (Index j = 0; j < posterior.size(); ++j) posterior[j] = sigmoid(posterior[j]);

  GradientAccumulator g(model);
  g.dW = x * posterior.transpose() - moments.visible_hidden;
  g.db = posterior - moments.hidden_mean;
  g.dU = V.frames * V.frames.transpose() - moments.second_moment;
  g.da = V.frames - moments.visible_mean;
  g.enforce_interaction_structure();
  return g;
}

ExactSampler::ExactSampler(const LrbmModel& model, const OracleLimits& limits) : model_(model) {
  check_limits(model, limits);
  const VisibleGaussian gauss(model.U);
  marginal_ = normalised_weights(enumerate_log_weights(model, gauss));
  cumulative_.resize(marginal_.size());
  double running = 0.0;
  for (std::size_t k = 0; k < marginal_.size(); ++k) {
    running += marginal_[k];
    cumulative_[k] = running;
  }
  const Index d = model.visible_dim();
  const Matrix lower = gauss.llt.matrixL();
  covariance_factor_ = lower.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d)).transpose();
  precision_inverse_ = gauss.covariance;
}

SequenceSample ExactSampler::sample_given(const Vector& h, Rng& rng) const {
  detail::require(h.size() == model_.hidden_dim(), "hidden configuration has the wrong size");
  std::normal_distribution<double> normal(0.0, 1.0);
  SequenceSample out{precision_inverse_ * slice_drive(model_, h), std::nullopt, {}};
  Vector z(model_.visible_dim());
  for (Index i = 0; i < model_.frames(); ++i) {
    for (Index s = 0; s < z.size(); ++s) z[s] = normal(rng);
    out.frames.col(i) += covariance_factor_ * z;
  }
  return out;
}

SequenceSample ExactSampler::sample(Rng& rng) const {
  std::uniform_real_distribution<double> uniform(0.0, cumulative_.back());
  const double u = uniform(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto k = static_cast<std::size_t>(
      std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                               static_cast<std::ptrdiff_t>(cumulative_.size()) - 1));
  return sample_given(configuration(model_.hidden_dim(), k), rng);
}

SequenceSample exact_sample(const LrbmModel& model, Rng& rng, const OracleLimits& limits) {
  return ExactSampler(model, limits).sample(rng);
}

LrbmModel random_model(const SyntheticSpec& spec, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  LrbmModel model(spec.visible_dim, spec.frames, spec.hidden_dim);
  const double scale = spec.separation * spec.weight_scale;
  for (Index k = 0; k < model.W.size(); ++k) model.W.data()[k] = scale * normal(rng);
  for (Index j = 0; j < model.b.size(); ++j) model.b[j] = scale * normal(rng);

  const Index d = spec.visible_dim;
  Matrix U = Matrix::Zero(d, d);
  for (Index r = 0; r < d; ++r) {
    for (Index s = r + 1; s < d; ++s) U(r, s) = U(s, r) = normal(rng);
  }
  if (d > 1) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(U, Eigen::EigenvaluesOnly);
    const double radius = solver.eigenvalues().cwiseAbs().maxCoeff();
    const double target =
        std::min(spec.interaction_radius * spec.separation, 1.0 - spec.stability_margin);
    if (radius > 0.0) U *= target / radius;
  }
  model.U = U;
  return model;
}

std::string synthetic_label(int k) { return "class_" + std::to_string(k); }

SyntheticDataset make_synthetic_dataset(const SyntheticSpec& spec, const OracleLimits& limits) {
  detail::require(spec.classes >= 2, "synthetic dataset needs at least 2 classes");
  detail::require(spec.per_class >= 0, "per_class must be >= 0");
  Rng rng(spec.seed);
  SyntheticDataset out;
  for (int c = 0; c < spec.classes; ++c) {
    out.models.push_back(random_model(spec, rng));
    out.labels.push_back(synthetic_label(c));
  }
  for (int c = 0; c < spec.classes; ++c) {
    const ExactSampler sampler(out.models[static_cast<std::size_t>(c)], limits);
    for (int n = 0; n < spec.per_class; ++n) {
      SequenceSample s = sampler.sample(rng);
      s.label = out.labels[static_cast<std::size_t>(c)];
      char id[48];
      std::snprintf(id, sizeof id, "%s/%05d", out.labels[static_cast<std::size_t>(c)].c_str(), n);
      s.id = id;
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace lrbm::oracle
