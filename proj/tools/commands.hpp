#pragma once

// Subcommands of the `lrbm` tool as plain functions, so tests can drive them without a
// process boundary. Each returns normally on success and throws ContractError (usage),
// DataError (bad input) or NumericalError (numerical failure) otherwise.

#include "lrbm/classify.hpp"
#include "lrbm/train.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lrbm::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 2,
  kDataError = 3,
  kNumericalError = 4,
};

struct PreprocessOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  int target_length = 0;  ///< 0 keeps the original lengths
  int smooth_window = 1;
  std::vector<int> feature_subset;
  std::optional<std::filesystem::path> skeleton;
  std::optional<std::filesystem::path> normalize_stats;
  /// Fit the statistics on this dataset and write them to normalize_stats instead of reading.
  bool fit_stats = false;
};
void cmd_preprocess(const PreprocessOptions& options);

struct TrainOptions {
  std::filesystem::path dataset;
  std::filesystem::path output;
  TrainConfig config;
  double val_fraction = 0.2;
  bool normalize = false;
  ScoringMode scoring = ScoringMode::Soft;
};
void cmd_train(const TrainOptions& options, std::ostream* log = nullptr);

struct PredictOptions {
  std::filesystem::path bundle;
  std::filesystem::path dataset;
  std::filesystem::path output;
  ScoringMode scoring = ScoringMode::Soft;
};
void cmd_predict(const PredictOptions& options);

struct EvaluateOptions {
  std::filesystem::path bundle;
  std::filesystem::path dataset;
  std::filesystem::path output;  ///< JSON report
  std::optional<std::filesystem::path> confusion_csv;
  /// JSON object mapping class label to group name, for the per-group F1 table.
  std::optional<std::filesystem::path> groups;
  ScoringMode scoring = ScoringMode::Soft;
};
void cmd_evaluate(const EvaluateOptions& options);

enum class Corruption { Noise, Missing };

struct RobustnessOptions {
  std::filesystem::path bundle;
  std::filesystem::path dataset;
  std::filesystem::path output;
  Corruption mode = Corruption::Noise;
  std::vector<double> fractions{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  ScoringMode scoring = ScoringMode::Soft;
};

struct RobustnessRow {
  double fraction;
  double mean_accuracy;
  double std_accuracy;
  std::size_t runs;
};
std::vector<RobustnessRow> cmd_robustness(const RobustnessOptions& options);

struct SynthOptions {
  int classes = 3;
  int per_class = 100;
  int visible_dim = 3;
  int frames = 4;
  int hidden_dim = 8;
  double separation = 1.5;
  double weight_scale = 1.0;
  double interaction_radius = 0.5;
  std::uint64_t seed = 0;
  std::filesystem::path output;
  std::optional<std::filesystem::path> models_output;
};
void cmd_synth(const SynthOptions& options);

struct InspectOptions {
  std::filesystem::path bundle;
};
void cmd_inspect(const InspectOptions& options, std::ostream& out);

/// Maps the exception currently being handled to an exit code, printing it to `err`.
int report_exception(std::ostream& err);

}  // namespace lrbm::cli
