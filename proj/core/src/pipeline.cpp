#include "lrbm/pipeline.hpp"

#include "lrbm/error.hpp"
#include "lrbm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace lrbm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t class_seed(std::uint64_t master_seed, std::size_t class_index) {
  return splitmix64(master_seed ^ splitmix64(class_index + 1));
}

ClassSplit split_by_class(std::span<const SequenceSample> samples, double validation_fraction,
                          std::uint64_t seed) {
  detail::require(validation_fraction > 0.0 && validation_fraction < 1.0,
                  "validation fraction must be in (0, 1)");
  std::map<std::string, std::vector<const SequenceSample*>> by_label;
  for (const auto& s : samples) {
    if (!s.label) throw DataError("sample " + s.id + " has no label");
    by_label[*s.label].push_back(&s);
  }
  if (by_label.size() < 2) throw DataError("training needs at least two classes");

  ClassSplit split;
  Rng rng(seed);
  for (auto& [label, members] : by_label) {
    if (members.size() < 2) {
      throw DataError("class '" + label + "' has fewer than 2 samples");
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto n = members.size();
    auto held = static_cast<std::size_t>(std::ceil(validation_fraction * static_cast<double>(n)));
    held = std::clamp<std::size_t>(held, 1, n - 1);
    split.labels.push_back(label);
    auto& val = split.validation.emplace_back();
    auto& train = split.train.emplace_back();
    for (std::size_t k = 0; k < n; ++k) (k < held ? val : train).push_back(*members[k]);
  }
  return split;
}

ClassifierBundle train_bundle(const ClassSplit& split, const TrainConfig& config, ScoringMode mode,
                              BundleTrainingLog* log) {
  config.validate();
  const std::size_t classes = split.labels.size();
  detail::require(classes >= 2 && split.train.size() == classes &&
                      split.validation.size() == classes,
                  "split must hold train and validation sets for at least two classes");
  const auto per_class = static_cast<std::size_t>(config.candidates);

  std::vector<LrbmModel> candidates(classes * per_class);
  parallel_for(candidates.size(), [&](std::size_t task) {
    const std::size_t c = task / per_class;
    TrainConfig local = config;
    local.seed = candidate_seed(class_seed(config.seed, c), static_cast<int>(task % per_class));
    candidates[task] = train_class_model(split.train[c], local);
  });

  ClassifierBundle bundle;
  BundleTrainingLog local_log;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<SequenceSample> others;
    for (std::size_t o = 0; o < classes; ++o) {
      if (o != c) others.insert(others.end(), split.validation[o].begin(), split.validation[o].end());
    }
    std::span<const LrbmModel> family(candidates.data() + c * per_class, per_class);
    std::vector<double> sums(per_class);
    parallel_for(per_class, [&](std::size_t k) {
      sums[k] = own_class_rank_sum(family[k], split.validation[c], others);
    });
    const auto best = static_cast<std::size_t>(std::min_element(sums.begin(), sums.end()) - sums.begin());
    local_log.selected_candidate.push_back(best);
    local_log.rank_sums.push_back(std::move(sums));
    bundle.models.push_back(family[best]);
  }

  bundle.calibration =
      calibrate_pairs(bundle.models, split.labels, split.validation, &local_log.degenerate_pairs);
  std::vector<SequenceSample> validation;
  for (const auto& v : split.validation) validation.insert(validation.end(), v.begin(), v.end());
  bundle.calibration.set_alpha(fit_alpha(bundle.models, bundle.calibration, validation, mode));
  bundle.provenance["seed"] = std::to_string(config.seed);
  bundle.provenance["config_hash"] = config_fingerprint(config);
  bundle.provenance["scoring"] = mode == ScoringMode::Soft ? "soft" : "vote";
  if (log) *log = std::move(local_log);
  return bundle;
}

}  // namespace lrbm
