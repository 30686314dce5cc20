#pragma once

// End-to-end training of a ClassifierBundle: per-class candidate models, rank-based
// candidate selection, pairwise offsets and alpha, all fitted on a validation split.

#include "lrbm/classify.hpp"
#include "lrbm/train.hpp"

#include <span>
#include <string>
#include <vector>

namespace lrbm {

struct ClassSplit {
  std::vector<std::string> labels;  ///< sorted
  std::vector<std::vector<SequenceSample>> train;
  std::vector<std::vector<SequenceSample>> validation;
};

/// Groups labelled samples by class and holds out ceil(fraction * n_c) samples of each class
/// (at least one, leaving at least one for training), chosen by a seeded shuffle.
/// Throws DataError for unlabelled samples, fewer than two classes or a class with < 2 samples.
ClassSplit split_by_class(std::span<const SequenceSample> samples, double validation_fraction,
                          std::uint64_t seed);

/// Seed for class c's candidate family.
std::uint64_t class_seed(std::uint64_t master_seed, std::size_t class_index);

struct BundleTrainingLog {
  std::vector<std::size_t> selected_candidate;  ///< per class
  std::vector<std::vector<double>> rank_sums;  ///< per class, per candidate
  std::vector<std::size_t> degenerate_pairs;
};

ClassifierBundle train_bundle(const ClassSplit& split, const TrainConfig& config,
                              ScoringMode mode = ScoringMode::Soft,
                              BundleTrainingLog* log = nullptr);

}  // namespace lrbm
