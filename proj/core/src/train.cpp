#include "lrbm/train.hpp"

#include "kernels.hpp"
#include "lrbm/error.hpp"
#include "lrbm/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

namespace lrbm {

namespace {

void check_batch(const LrbmModel& model, std::span<const SequenceSample> batch) {
  detail::require(!batch.empty(), "batch is empty");
  for (const auto& V : batch) {
    detail::require(V.dim() == model.visible_dim() && V.length() == model.frames(),
                    "batch sample does not match the model dimensions");
  }
}

void check_uniform(std::span<const SequenceSample> samples) {
  detail::require(!samples.empty(), "no training samples");
  for (const auto& V : samples) {
    detail::require(V.dim() == samples.front().dim() && V.length() == samples.front().length(),
                    "training samples have mixed dimensions");
    detail::require(V.frames.allFinite(), "training sample has non-finite entries");
  }
}

// Scratch buffers reused across every sample of a training run.
struct CdWorkspace {
  Vector p_data;
  Vector p_recon;
  HiddenState h;
  Matrix recon;

  explicit CdWorkspace(const LrbmModel& model)
      : p_data(model.hidden_dim()),
        p_recon(model.hidden_dim()),
        h{Vector(model.hidden_dim()), HiddenState::Kind::Binary},
        recon(model.visible_dim(), model.frames()) {}
};

void draw_hidden(const Vector& p, Vector& out, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (Index j = 0; j < p.size(); ++j) out[j] = uniform(rng) < p[j] ? 1.0 : 0.0;
}

// Accumulates (unnormalised) CD statistics of one sample into `grads`; returns the
// squared reconstruction error.
double accumulate_cd(const LrbmModel& model, const Matrix& V, const TrainConfig& config,
                     Rng& rng, CdWorkspace& ws, GradientAccumulator& grads) {
  Eigen::Map<const Vector> x(V.data(), V.size());
  kernels::hidden_probabilities(model, x, ws.p_data);
  grads.dW.noalias() += x * ws.p_data.transpose();
  grads.db += ws.p_data;
  grads.dU.noalias() += V * V.transpose();
  grads.da += V;

  draw_hidden(ws.p_data, ws.h.values, rng);
  ws.recon = V;
  Eigen::Map<const Vector> r(ws.recon.data(), ws.recon.size());
  for (int step = 0; step < config.cd_steps; ++step) {
    kernels::reconstruct_inplace(model, ws.h.values, ws.recon, config.mf_sweeps,
                                 config.stochastic_reconstruction ? &rng : nullptr);
    kernels::hidden_probabilities(model, r, ws.p_recon);
    if (step + 1 < config.cd_steps) draw_hidden(ws.p_recon, ws.h.values, rng);
  }
  grads.dW.noalias() -= r * ws.p_recon.transpose();
  grads.db -= ws.p_recon;
  grads.dU.noalias() -= ws.recon * ws.recon.transpose();
  grads.da -= ws.recon;
  return (V - ws.recon).squaredNorm();
}

template <typename SampleAt>
GradientAccumulator batch_gradient(const LrbmModel& model, std::size_t count, SampleAt&& at,
                                   const TrainConfig& config, Rng& rng, CdWorkspace& ws,
                                   double* recon_error) {
  GradientAccumulator grads(model);
  double error = 0.0;
  for (std::size_t k = 0; k < count; ++k) error += accumulate_cd(model, at(k), config, rng, ws, grads);
  const double scale = 1.0 / static_cast<double>(count);
  grads.dW *= scale;
  grads.db *= scale;
  grads.dU *= scale;
  grads.da *= scale;
  grads.enforce_interaction_structure();
  if (recon_error) *recon_error = error;
  return grads;
}

void append_field(std::string& out, const char* name, double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  out += name;
  out += '=';
  out.append(buf, end);
  out += ';';
}

}  // namespace

void TrainConfig::validate() const {
  detail::require(hidden_units >= 0, "hidden_units must be >= 0");
  detail::require(epochs >= 1, "epochs must be >= 1");
  detail::require(learning_rate >= 0.0 && std::isfinite(learning_rate),
                  "learning_rate must be finite and >= 0");
  detail::require(cd_steps >= 1, "cd_steps must be >= 1");
  detail::require(mf_sweeps >= 1, "mf_sweeps must be >= 1");
  detail::require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
  detail::require(weight_decay >= 0.0, "weight_decay must be >= 0");
  detail::require(minibatch >= 1, "minibatch must be >= 1");
  detail::require(candidates >= 1, "candidates must be >= 1");
  detail::require(stability_margin > 0.0 && stability_margin < 1.0,
                  "stability_margin must be in (0, 1)");
  detail::require(init_weight_std >= 0.0, "init_weight_std must be >= 0");
}

std::string config_fingerprint(const TrainConfig& config) {
  std::string canonical;
  append_field(canonical, "hidden_units", config.hidden_units);
  append_field(canonical, "epochs", config.epochs);
  append_field(canonical, "learning_rate", config.learning_rate);
  append_field(canonical, "cd_steps", config.cd_steps);
  append_field(canonical, "mf_sweeps", config.mf_sweeps);
  append_field(canonical, "momentum", config.momentum);
  append_field(canonical, "weight_decay", config.weight_decay);
  append_field(canonical, "minibatch", config.minibatch);
  append_field(canonical, "candidates", config.candidates);
  append_field(canonical, "stability_margin", config.stability_margin);
  canonical += "seed=" + std::to_string(config.seed) + ";";
  append_field(canonical, "learn_visible_bias", config.learn_visible_bias);
  append_field(canonical, "freeze_u", config.freeze_u);
  append_field(canonical, "stochastic_reconstruction", config.stochastic_reconstruction);
  append_field(canonical, "init_weight_std", config.init_weight_std);

  // 64-bit FNV-1a
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

std::uint64_t candidate_seed(std::uint64_t master_seed, int candidate) {
  return master_seed + static_cast<std::uint64_t>(candidate) * 0x9E3779B97F4A7C15ULL;
}

GradientAccumulator cd_gradient(const LrbmModel& model, std::span<const SequenceSample> batch,
                                const TrainConfig& config, Rng& rng) {
  check_batch(model, batch);
  CdWorkspace ws(model);
  return batch_gradient(
      model, batch.size(), [&](std::size_t k) -> const Matrix& { return batch[k].frames; },
      config, rng, ws, nullptr);
}

Matrix stabilize_interactions(const Matrix& U, double margin) {
  const double bound = 1.0 - margin;
  // Gershgorin: the largest absolute row sum bounds every eigenvalue.
  if (U.size() == 0 || U.cwiseAbs().rowwise().sum().maxCoeff() <= bound) return U;
  const double lambda = max_eigenvalue(U);
  if (lambda <= bound) return U;
  return U * (bound / lambda);
}

void apply_update(LrbmModel& model, const GradientAccumulator& grads, const TrainConfig& config,
                  UpdateState& state) {
  detail::require(grads.dW.rows() == model.W.rows() && grads.dW.cols() == model.W.cols() &&
                      grads.db.size() == model.b.size() && grads.dU.rows() == model.U.rows() &&
                      grads.da.rows() == model.a.rows() && grads.da.cols() == model.a.cols(),
                  "gradient shape does not match the model");
  const double lr = config.learning_rate;
  const double decay = lr * config.weight_decay;
  auto& vel = state.velocity;

  vel.dW = config.momentum * vel.dW + grads.dW;
  vel.db = config.momentum * vel.db + grads.db;
  model.W += lr * vel.dW - decay * model.W;
  model.b += lr * vel.db - decay * model.b;

  if (!config.freeze_u) {
    vel.dU = config.momentum * vel.dU + grads.dU;
    vel.enforce_interaction_structure();
    model.U += lr * vel.dU - decay * model.U;
  }
  if (config.learn_visible_bias) {
    vel.da = config.momentum * vel.da + grads.da;
    model.a += lr * vel.da - decay * model.a;
  }

  if (!(model.W.allFinite() && model.b.allFinite() && model.U.allFinite() &&
        model.a.allFinite())) {
    throw NumericalError("parameter update produced non-finite values");
  }
  model.U = stabilize_interactions(model.U, config.stability_margin);
}

LrbmModel apply_update(const LrbmModel& model, const GradientAccumulator& grads,
                       const TrainConfig& config) {
  LrbmModel next = model;
  UpdateState state(model);
  apply_update(next, grads, config, state);
  return next;
}

LrbmModel train_class_model(std::span<const SequenceSample> samples, const TrainConfig& config,
                            TrainTrace* trace) {
  config.validate();
  check_uniform(samples);

  Rng rng(config.seed);
  LrbmModel model(samples.front().dim(), samples.front().length(), config.hidden_units);
  std::normal_distribution<double> init(0.0, config.init_weight_std);
  for (Index k = 0; k < model.W.size(); ++k) model.W.data()[k] = init(rng);

  UpdateState state(model);
  CdWorkspace ws(model);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch_size = static_cast<std::size_t>(config.minibatch);
  const double entries = static_cast<double>(samples.size() * samples.front().frames.size());
  if (trace) trace->reconstruction_error.clear();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_error = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t count = std::min(batch_size, order.size() - start);
      double batch_error = 0.0;
      const auto grads = batch_gradient(
          model, count,
          [&](std::size_t k) -> const Matrix& { return samples[order[start + k]].frames; },
          config, rng, ws, &batch_error);
      apply_update(model, grads, config, state);
      epoch_error += batch_error;
    }
    epoch_error /= entries;
    if (!std::isfinite(epoch_error)) {
      throw NumericalError("reconstruction error became non-finite at epoch " +
                           std::to_string(epoch));
    }
    if (trace) trace->reconstruction_error.push_back(epoch_error);
  }

  model.provenance = TrainProvenance{config.seed, config.epochs, config_fingerprint(config)};
  return model;
}

std::vector<LrbmModel> train_candidates(std::span<const SequenceSample> samples,
                                        const TrainConfig& config) {
  config.validate();
  std::vector<LrbmModel> models(static_cast<std::size_t>(config.candidates));
  parallel_for(models.size(), [&](std::size_t k) {
    TrainConfig local = config;
    local.seed = candidate_seed(config.seed, static_cast<int>(k));
    models[k] = train_class_model(samples, local);
  });
  return models;
}

double own_class_rank_sum(const LrbmModel& model, std::span<const SequenceSample> own,
                          std::span<const SequenceSample> other) {
  detail::require(!own.empty() && !other.empty(), "rank criterion needs both sample sets");
  std::vector<double> g;
  g.reserve(own.size() + other.size());
  for (const auto& V : own) g.push_back(unnormalized_loglik(model, V));
  for (const auto& V : other) g.push_back(unnormalized_loglik(model, V));

  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return g[l] > g[r]; });

  std::vector<double> rank(g.size());
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start + 1;
    while (end < order.size() && g[order[end]] == g[order[start]]) ++end;
    const double mid = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) rank[order[k]] = mid;
    start = end;
  }
  return std::accumulate(rank.begin(), rank.begin() + static_cast<std::ptrdiff_t>(own.size()),
                         0.0);
}

std::size_t select_candidate(std::span<const LrbmModel> candidates,
                             std::span<const SequenceSample> own,
                             std::span<const SequenceSample> other) {
  detail::require(!candidates.empty(), "no candidate models");
  if (candidates.size() == 1) return 0;
  std::vector<double> scores(candidates.size());
  parallel_for(candidates.size(),
               [&](std::size_t k) { scores[k] = own_class_rank_sum(candidates[k], own, other); });
  return static_cast<std::size_t>(std::min_element(scores.begin(), scores.end()) - scores.begin());
}

}  // namespace lrbm
