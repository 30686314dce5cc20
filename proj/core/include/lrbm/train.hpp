#pragma once

#include "lrbm/gradient.hpp"
#include "lrbm/model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lrbm {

struct TrainConfig {
  int hidden_units = 80;
  int epochs = 250;
  double learning_rate = 1e-3;
  int cd_steps = 1;
  int mf_sweeps = 10;
  double momentum = 0.5;
  double weight_decay = 1e-4;
  int minibatch = 16;
  int candidates = 10;
  double stability_margin = 0.05;
  std::uint64_t seed = 0;
  bool learn_visible_bias = false;
  /// Keep U at zero for the whole run (plain Gaussian-binary RBM).
  bool freeze_u = false;
  /// Add unit-variance noise to each reconstructed component (Gibbs instead of mean-field).
  bool stochastic_reconstruction = false;
  double init_weight_std = 0.01;

  /// Throws ContractError when a field is out of range.
  void validate() const;
};

/// Stable 16-hex-digit fingerprint of every field of the config.
std::string config_fingerprint(const TrainConfig& config);

/// Seed of the k-th candidate model, derived from the master seed by a fixed offset.
std::uint64_t candidate_seed(std::uint64_t master_seed, int candidate);

/// Contrastive-divergence estimate of the log-likelihood gradient, averaged over the batch.
GradientAccumulator cd_gradient(const LrbmModel& model, std::span<const SequenceSample> batch,
                                const TrainConfig& config, Rng& rng);

/// Momentum buffer for apply_update; starts at zero.
struct UpdateState {
  GradientAccumulator velocity;
  explicit UpdateState(const LrbmModel& model) : velocity(model) {}
};

/// One ascent step followed by stabilize_interactions. Throws NumericalError on a non-finite result.
void apply_update(LrbmModel& model, const GradientAccumulator& grads, const TrainConfig& config,
                  UpdateState& state);
LrbmModel apply_update(const LrbmModel& model, const GradientAccumulator& grads,
                       const TrainConfig& config);

/// Rescales U so that lambda_max(U) <= 1 - margin; no-op when the bound already holds.
Matrix stabilize_interactions(const Matrix& U, double margin);

struct TrainTrace {
  /// Mean squared reconstruction error per entry, one value per epoch.
  std::vector<double> reconstruction_error;
};

/// Trains one model from `config.seed`. Deterministic given (samples, config).
LrbmModel train_class_model(std::span<const SequenceSample> samples, const TrainConfig& config,
                            TrainTrace* trace = nullptr);

/// `config.candidates` models trained from candidate_seed(config.seed, k).
std::vector<LrbmModel> train_candidates(std::span<const SequenceSample> samples,
                                        const TrainConfig& config);

/// Sum of the (1-based, mid-ranked) positions of own-class instances when all instances
/// are sorted by descending g(V). Lower is better.
double own_class_rank_sum(const LrbmModel& model, std::span<const SequenceSample> own,
                          std::span<const SequenceSample> other);

/// Index of the candidate with minimal rank sum; ties go to the lowest index.
std::size_t select_candidate(std::span<const LrbmModel> candidates,
                             std::span<const SequenceSample> own,
                             std::span<const SequenceSample> other);

}  // namespace lrbm
