#pragma once

// Exact computations for tiny models, by enumeration of every hidden configuration
// and closed-form Gaussian integrals over the visible layer. Ground truth for tests.

#include "lrbm/gradient.hpp"
#include "lrbm/model.hpp"

#include <string>
#include <vector>

namespace lrbm::oracle {

struct OracleLimits {
  Index max_hidden = 12;
  Index max_visible = 4;
  Index max_frames = 4;
};

/// Throws ContractError when the model exceeds the limits.
void check_limits(const LrbmModel& model, const OracleLimits& limits = {});

/// log Z. Throws NonNormalizableError unless I - U is positive definite.
double exact_log_partition(const LrbmModel& model, const OracleLimits& limits = {});

/// log sum_h exp(-E(V, h)), by enumeration.
double exact_free_log_weight(const LrbmModel& model, const SequenceSample& V,
                             const OracleLimits& limits = {});

/// log p(V), computed from the enumerated free weight and exact log Z.
double exact_loglik(const LrbmModel& model, const SequenceSample& V,
                    const OracleLimits& limits = {});

/// Exact gradient of log p(V) with respect to W, b, U (tied pairs) and a.
GradientAccumulator exact_gradient(const LrbmModel& model, const SequenceSample& V,
                                   const OracleLimits& limits = {});

/// Model-side expectations used by exact_gradient, exposed for tests.
struct ModelMoments {
  Vector hidden_mean;  ///< E[h]
  Matrix visible_hidden;  ///< E[vec(V) h^T]
  Matrix second_moment;  ///< E[sum_i v_i v_i^T]
  Matrix visible_mean;  ///< E[V], d x n_t
};
ModelMoments exact_model_moments(const LrbmModel& model, const OracleLimits& limits = {});

/// Exact ancestral sampler: h from its enumerated marginal, then V | h per slice
/// from N(m_i(h), (I - U)^{-1}). Construction cost is one enumeration.
class ExactSampler {
 public:
  explicit ExactSampler(const LrbmModel& model, const OracleLimits& limits = {});

  SequenceSample sample(Rng& rng) const;
  /// V | h for a fixed binary configuration.
  SequenceSample sample_given(const Vector& h, Rng& rng) const;
  /// Posterior-free marginal of h (2^n_h entries, configuration k has bit j = h_j).
  const std::vector<double>& hidden_marginal() const { return marginal_; }

 private:
  LrbmModel model_;
  Matrix covariance_factor_;  ///< L^{-T} where I - U = L L^T
  Matrix precision_inverse_;
  std::vector<double> cumulative_;
  std::vector<double> marginal_;
};

SequenceSample exact_sample(const LrbmModel& model, Rng& rng, const OracleLimits& limits = {});

/// Fixed point of the per-slice mean-field update: (I - U)^{-1}(a_i + W_i h) for every slice.
Matrix conditional_means(const LrbmModel& model, const Vector& h);

struct SyntheticSpec {
  int classes = 3;
  int per_class = 100;
  Index visible_dim = 3;
  Index frames = 4;
  Index hidden_dim = 8;
  /// Scales W, b and U of each generated model; 0 makes all classes identical.
  double separation = 1.0;
  /// Extra factor on W and b only, to plant class differences mostly in U.
  double weight_scale = 1.0;
  /// Target lambda_max(|U|) before scaling by separation, capped at 1 - margin.
  double interaction_radius = 0.5;
  double stability_margin = 0.05;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  std::vector<SequenceSample> samples;  ///< grouped by class, labels set
  std::vector<LrbmModel> models;
  std::vector<std::string> labels;
};

/// A random tiny model; every parameter family is proportional to `separation`.
LrbmModel random_model(const SyntheticSpec& spec, Rng& rng);

SyntheticDataset make_synthetic_dataset(const SyntheticSpec& spec, const OracleLimits& limits = {});

/// Label string used by make_synthetic_dataset for class k.
std::string synthetic_label(int k);

}  // namespace lrbm::oracle
