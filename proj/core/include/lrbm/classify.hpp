#pragma once

#include "lrbm/data.hpp"
#include "lrbm/model.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lrbm {

/// Antisymmetric matrix of relative log-partition estimates c_ij = log Z_i - log Z_j
/// plus the sharpness alpha of the soft pairwise classifiers. Only the strict upper
/// triangle is stored, so c_ij = -c_ji and c_ii = 0 hold exactly.
class PairwiseCalibration {
 public:
  static constexpr double kMinAlpha = 0.01;
  static constexpr double kMaxAlpha = 100.0;

  PairwiseCalibration() = default;
  explicit PairwiseCalibration(std::vector<std::string> labels, double alpha = 1.0);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

  double offset(std::size_t i, std::size_t j) const;
  /// Sets c_ij (and therefore c_ji = -value). Requires i != j.
  void set_offset(std::size_t i, std::size_t j, double value);

  /// Row-major strict upper triangle: c_01, c_02, ..., c_12, ...
  const std::vector<double>& upper() const { return upper_; }
  void set_upper(std::vector<double> upper);

  double alpha() const { return alpha_; }
  void set_alpha(double alpha);

  /// Index of a label, or nullopt.
  std::optional<std::size_t> index_of(const std::string& label) const;

 private:
  std::size_t slot(std::size_t i, std::size_t j) const;

  std::vector<std::string> labels_;
  std::vector<double> upper_;
  double alpha_ = 1.0;
};

/// The unit of persistence for prediction.
struct ClassifierBundle {
  static constexpr int kFormatVersion = 1;

  std::vector<LrbmModel> models;
  PairwiseCalibration calibration;
  std::optional<data::NormStats> norm_stats;
  std::optional<data::PreprocessConfig> preprocess;
  std::map<std::string, std::string> provenance;

  std::size_t classes() const { return models.size(); }
  /// Throws ContractError unless N >= 2, shapes agree and the calibration matches.
  void validate() const;
};

enum class ScoringMode {
  Soft,  ///< sum of soft pairwise confidences
  Vote,  ///< each pairwise decision is one vote (0.5 each on an exact tie)
};

struct CijEstimate {
  double value = 0.0;
  bool degenerate = false;  ///< every log-likelihood difference was identical
};

/// Threshold c on t = g_i - g_j maximising the balanced accuracy of [t > c => class i],
/// searched over midpoints of consecutive sorted t values.
CijEstimate estimate_offset_from_differences(std::span<const double> t_class_i,
                                             std::span<const double> t_class_j);

CijEstimate estimate_cij(const LrbmModel& model_i, const LrbmModel& model_j,
                         std::span<const SequenceSample> samples_i,
                         std::span<const SequenceSample> samples_j);

/// Estimates every i < j offset; samples_by_class[k] holds class k's calibration samples.
PairwiseCalibration calibrate_pairs(std::span<const LrbmModel> models,
                                    std::vector<std::string> labels,
                                    const std::vector<std::vector<SequenceSample>>& samples_by_class,
                                    std::vector<std::size_t>* degenerate_pairs = nullptr);

/// g(V | M_k) for every class model.
Vector class_logliks(std::span<const LrbmModel> models, const SequenceSample& V);

struct Prediction {
  Vector scores;
  std::size_t index = 0;
  std::string label;
};

/// F_ij from precomputed class log-likelihoods.
double soft_pairwise_from_loglik(const Vector& g, const PairwiseCalibration& cal, std::size_t i,
                                 std::size_t j);
Matrix preference_from_loglik(const Vector& g, const PairwiseCalibration& cal,
                              ScoringMode mode = ScoringMode::Soft);
/// Row sums of a preference matrix and the lowest-index argmax.
Prediction predict_from_preference(const Matrix& R, const PairwiseCalibration& cal);
Prediction predict_from_loglik(const Vector& g, const PairwiseCalibration& cal,
                               ScoringMode mode = ScoringMode::Soft);

/// Bundle-level operations on model-space (already preprocessed and normalised) data.
double soft_pairwise(const ClassifierBundle& bundle, const SequenceSample& V, std::size_t i,
                     std::size_t j);
Matrix preference_matrix(const ClassifierBundle& bundle, const SequenceSample& V,
                         ScoringMode mode = ScoringMode::Soft);
Prediction score_and_predict(const ClassifierBundle& bundle, const SequenceSample& V,
                             ScoringMode mode = ScoringMode::Soft);

/// 30 log-spaced values from 0.01 to 100.
std::vector<double> alpha_grid();

/// Grid-searched alpha maximising accuracy on labelled samples; ties go to the smaller alpha.
double fit_alpha(std::span<const LrbmModel> models, const PairwiseCalibration& calibration,
                 std::span<const SequenceSample> labelled, ScoringMode mode = ScoringMode::Soft);

/// Same search from a precomputed (samples x classes) log-likelihood matrix.
double fit_alpha_from_loglik(const Matrix& g, std::span<const std::size_t> truth,
                             const PairwiseCalibration& calibration,
                             ScoringMode mode = ScoringMode::Soft);

struct TransitivityDefect {
  std::size_t i, j, k;
  double defect;  ///< |c_ij - (c_ik + c_kj)|
};
std::vector<TransitivityDefect> transitivity_defects(const PairwiseCalibration& calibration);

struct EvaluationReport {
  std::vector<std::string> labels;
  Eigen::MatrixXi confusion;  ///< rows: true class, columns: predicted class
  Matrix confusion_percent;  ///< row-normalised, in percent
  Vector hit_rate;  ///< per class, NaN when the class has no samples
  double macro_accuracy = 0.0;  ///< mean hit rate over classes with samples
  double accuracy = 0.0;  ///< fraction of samples predicted correctly
  Vector auc;  ///< one-vs-rest ROC area from the scores, NaN when undefined
  std::vector<std::string> groups;
  Vector group_f1;  ///< NaN when undefined
  std::vector<Prediction> predictions;
};

/// One-vs-rest ROC area (trapezoidal) of `scores` for the positive set.
double roc_auc(std::span<const double> scores, std::span<const bool> positive);

/// Metrics from predicted class indices and score vectors. `group_of` maps a label to its
/// group for the F1 table; labels without an entry form their own group.
EvaluationReport summarize(const std::vector<std::string>& labels,
                           std::span<const std::size_t> truth,
                           std::vector<Prediction> predictions,
                           const std::map<std::string, std::string>& group_of = {});

/// Predicts every labelled sample and summarises. Throws DataError on an unknown label.
EvaluationReport evaluate(const ClassifierBundle& bundle,
                          std::span<const SequenceSample> labelled,
                          ScoringMode mode = ScoringMode::Soft,
                          const std::map<std::string, std::string>& group_of = {});

/// Class indices of labelled samples; throws DataError on an unknown or missing label.
std::vector<std::size_t> label_indices(const PairwiseCalibration& calibration,
                                       std::span<const SequenceSample> labelled);

}  // namespace lrbm
