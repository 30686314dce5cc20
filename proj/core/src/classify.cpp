#include "lrbm/classify.hpp"

#include "lrbm/error.hpp"
#include "lrbm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>

namespace lrbm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

// ---------------------------------------------------------------------------
// PairwiseCalibration

PairwiseCalibration::PairwiseCalibration(std::vector<std::string> labels, double alpha)
    : labels_(std::move(labels)),
      upper_(labels_.size() < 2 ? 0 : labels_.size() * (labels_.size() - 1) / 2, 0.0) {
  set_alpha(alpha);
}

std::size_t PairwiseCalibration::slot(std::size_t i, std::size_t j) const {
  // i < j; row i of the strict upper triangle starts after sum_{r<i} (N - 1 - r) entries.
  const std::size_t n = size();
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

double PairwiseCalibration::offset(std::size_t i, std::size_t j) const {
  detail::require(i < size() && j < size(), "class index out of range");
  if (i == j) return 0.0;
  return i < j ? upper_[slot(i, j)] : -upper_[slot(j, i)];
}

void PairwiseCalibration::set_offset(std::size_t i, std::size_t j, double value) {
  detail::require(i < size() && j < size() && i != j, "invalid class pair");
  if (i < j) {
    upper_[slot(i, j)] = value;
  } else {
    upper_[slot(j, i)] = -value;
  }
}

void PairwiseCalibration::set_upper(std::vector<double> upper) {
  detail::require(upper.size() == upper_.size(), "upper triangle has the wrong length");
  upper_ = std::move(upper);
}

void PairwiseCalibration::set_alpha(double alpha) {
  detail::require(alpha >= kMinAlpha && alpha <= kMaxAlpha, "alpha must lie in [0.01, 100]");
  alpha_ = alpha;
}

std::optional<std::size_t> PairwiseCalibration::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

void ClassifierBundle::validate() const {
  detail::require(models.size() >= 2, "a bundle needs at least two class models");
  detail::require(calibration.size() == models.size(),
                  "calibration size does not match the number of models");
  for (const auto& m : models) {
    detail::require(m.visible_dim() == models.front().visible_dim() &&
                        m.frames() == models.front().frames(),
                    "bundle models disagree on (d, n_t)");
  }
  if (norm_stats) {
    detail::require(norm_stats->mean.size() == models.front().visible_dim(),
                    "normalisation statistics do not match the model dimension");
  }
}

// ---------------------------------------------------------------------------
// Relative log-partition estimation

CijEstimate estimate_offset_from_differences(std::span<const double> t_class_i,
                                             std::span<const double> t_class_j) {
  detail::require(!t_class_i.empty() && !t_class_j.empty(),
                  "offset estimation needs samples from both classes");
  struct Entry {
    double t;
    bool from_i;
  };
  std::vector<Entry> all;
  all.reserve(t_class_i.size() + t_class_j.size());
  for (double t : t_class_i) all.push_back({t, true});
  for (double t : t_class_j) all.push_back({t, false});
  for (const auto& e : all) {
    if (!std::isfinite(e.t)) throw NumericalError("non-finite log-likelihood difference");
  }
  std::sort(all.begin(), all.end(), [](const Entry& l, const Entry& r) { return l.t < r.t; });

  if (all.front().t == all.back().t) return {all.front().t, true};

  std::vector<double> values(all.size());
  std::transform(all.begin(), all.end(), values.begin(), [](const Entry& e) { return e.t; });
  const double median = median_of(values);

  const auto n_i = static_cast<std::int64_t>(t_class_i.size());
  const auto n_j = static_cast<std::int64_t>(t_class_j.size());
  // Balanced accuracy scaled by 2 * n_i * n_j, so comparisons are exact integers.
  std::int64_t best_score = -1;
  double best_c = 0.0;
  std::int64_t i_at_or_below = 0;
  std::int64_t j_at_or_below = 0;
  for (std::size_t k = 0; k < all.size();) {
    const double value = all[k].t;
    for (; k < all.size() && all[k].t == value; ++k) {
      (all[k].from_i ? i_at_or_below : j_at_or_below) += 1;
    }
    if (k == all.size()) break;
    const double c = 0.5 * (value + all[k].t);
    const std::int64_t score = (n_i - i_at_or_below) * n_j + j_at_or_below * n_i;
    const bool better = score > best_score;
    const bool tie_closer =
        score == best_score && (std::abs(c - median) < std::abs(best_c - median) ||
                                (std::abs(c - median) == std::abs(best_c - median) && c < best_c));
    if (better || tie_closer) {
      best_score = score;
      best_c = c;
    }
  }
  return {best_c, false};
}

CijEstimate estimate_cij(const LrbmModel& model_i, const LrbmModel& model_j,
                         std::span<const SequenceSample> samples_i,
                         std::span<const SequenceSample> samples_j) {
  auto differences = [&](std::span<const SequenceSample> samples) {
    std::vector<double> t(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
      t[k] = unnormalized_loglik(model_i, samples[k]) - unnormalized_loglik(model_j, samples[k]);
    }
    return t;
  };
  return estimate_offset_from_differences(differences(samples_i), differences(samples_j));
}

PairwiseCalibration calibrate_pairs(std::span<const LrbmModel> models,
                                    std::vector<std::string> labels,
                                    const std::vector<std::vector<SequenceSample>>& samples_by_class,
                                    std::vector<std::size_t>* degenerate_pairs) {
  const std::size_t n = models.size();
  detail::require(n >= 2 && labels.size() == n && samples_by_class.size() == n,
                  "calibration needs one label and one sample set per model");
  PairwiseCalibration cal(std::move(labels));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  std::vector<CijEstimate> estimates(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    estimates[p] = estimate_cij(models[i], models[j], samples_by_class[i], samples_by_class[j]);
  });
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    cal.set_offset(pairs[p].first, pairs[p].second, estimates[p].value);
    if (estimates[p].degenerate && degenerate_pairs) degenerate_pairs->push_back(p);
  }
  return cal;
}

// ---------------------------------------------------------------------------
// Label ranking

Vector class_logliks(std::span<const LrbmModel> models, const SequenceSample& V) {
  Vector g(static_cast<Index>(models.size()));
  for (std::size_t k = 0; k < models.size(); ++k) {
    g[static_cast<Index>(k)] = unnormalized_loglik(models[k], V);
  }
  return g;
}

double soft_pairwise_from_loglik(const Vector& g, const PairwiseCalibration& cal, std::size_t i,
                                 std::size_t j) {
  detail::require(i != j && i < cal.size() && j < cal.size() &&
                      static_cast<std::size_t>(g.size()) == cal.size(),
                  "invalid class pair");
  const auto gi = g[static_cast<Index>(i)];
  const auto gj = g[static_cast<Index>(j)];
  return sigmoid(cal.alpha() * (gi - gj - cal.offset(i, j)));
}

Matrix preference_from_loglik(const Vector& g, const PairwiseCalibration& cal, ScoringMode mode) {
  const auto n = static_cast<Index>(cal.size());
  Matrix R = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      double f = soft_pairwise_from_loglik(g, cal, static_cast<std::size_t>(i),
                                           static_cast<std::size_t>(j));
      if (mode == ScoringMode::Vote) f = f > 0.5 ? 1.0 : (f < 0.5 ? 0.0 : 0.5);
      R(i, j) = f;
      R(j, i) = 1.0 - f;
    }
  }
  return R;
}

Prediction predict_from_preference(const Matrix& R, const PairwiseCalibration& cal) {
  Prediction p;
  p.scores = R.rowwise().sum();
  for (Index i = 1; i < p.scores.size(); ++i) {
    if (p.scores[i] > p.scores[static_cast<Index>(p.index)]) p.index = static_cast<std::size_t>(i);
  }
  p.label = cal.labels().at(p.index);
  return p;
}

Prediction predict_from_loglik(const Vector& g, const PairwiseCalibration& cal, ScoringMode mode) {
  return predict_from_preference(preference_from_loglik(g, cal, mode), cal);
}

double soft_pairwise(const ClassifierBundle& bundle, const SequenceSample& V, std::size_t i,
                     std::size_t j) {
  detail::require(i != j && i < bundle.classes() && j < bundle.classes(), "invalid class pair");
  const Vector g = class_logliks(bundle.models, V);
  return soft_pairwise_from_loglik(g, bundle.calibration, i, j);
}

Matrix preference_matrix(const ClassifierBundle& bundle, const SequenceSample& V,
                         ScoringMode mode) {
  return preference_from_loglik(class_logliks(bundle.models, V), bundle.calibration, mode);
}

Prediction score_and_predict(const ClassifierBundle& bundle, const SequenceSample& V,
                             ScoringMode mode) {
  return predict_from_loglik(class_logliks(bundle.models, V), bundle.calibration, mode);
}

std::vector<double> alpha_grid() {
  constexpr int kPoints = 30;
  std::vector<double> grid(kPoints);
  const double lo = std::log10(PairwiseCalibration::kMinAlpha);
  const double hi = std::log10(PairwiseCalibration::kMaxAlpha);
  for (int k = 0; k < kPoints; ++k) {
    grid[static_cast<std::size_t>(k)] = std::pow(10.0, lo + (hi - lo) * k / (kPoints - 1));
  }
  // Pin the endpoints against pow rounding.
  grid.front() = PairwiseCalibration::kMinAlpha;
  grid.back() = PairwiseCalibration::kMaxAlpha;
  return grid;
}

double fit_alpha_from_loglik(const Matrix& g, std::span<const std::size_t> truth,
                             const PairwiseCalibration& calibration, ScoringMode mode) {
  detail::require(static_cast<std::size_t>(g.rows()) == truth.size() &&
                      static_cast<std::size_t>(g.cols()) == calibration.size(),
                  "log-likelihood matrix does not match the labels");
  PairwiseCalibration trial = calibration;
  double best_alpha = PairwiseCalibration::kMinAlpha;
  long best_correct = -1;
  for (double alpha : alpha_grid()) {
    trial.set_alpha(alpha);
    long correct = 0;
    for (Index r = 0; r < g.rows(); ++r) {
      const Vector row = g.row(r).transpose();
      if (predict_from_loglik(row, trial, mode).index == truth[static_cast<std::size_t>(r)]) {
        ++correct;
      }
    }
    if (correct > best_correct) {
      best_correct = correct;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

double fit_alpha(std::span<const LrbmModel> models, const PairwiseCalibration& calibration,
                 std::span<const SequenceSample> labelled, ScoringMode mode) {
  const auto truth = label_indices(calibration, labelled);
  std::vector<bool> seen(calibration.size(), false);
  for (auto t : truth) seen[t] = true;
  detail::require(std::count(seen.begin(), seen.end(), true) >= 2,
                  "alpha calibration samples must cover at least two classes");
  Matrix g(static_cast<Index>(labelled.size()), static_cast<Index>(models.size()));
  parallel_for(labelled.size(), [&](std::size_t r) {
    g.row(static_cast<Index>(r)) = class_logliks(models, labelled[r]).transpose();
  });
  return fit_alpha_from_loglik(g, truth, calibration, mode);
}

std::vector<TransitivityDefect> transitivity_defects(const PairwiseCalibration& calibration) {
  std::vector<TransitivityDefect> out;
  const std::size_t n = calibration.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double defect = std::abs(calibration.offset(i, j) -
                                       (calibration.offset(i, k) + calibration.offset(k, j)));
        out.push_back({i, j, k, defect});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

double roc_auc(std::span<const double> scores, std::span<const bool> positive) {
  detail::require(scores.size() == positive.size(), "scores and labels differ in length");
  const auto n_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double n_neg = static_cast<double>(positive.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return kNaN;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t l, std::size_t r) { return scores[l] > scores[r]; });
  double area = 0.0;
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    const double value = scores[order[k]];
    double tp_next = tp;
    double fp_next = fp;
    for (; k < order.size() && scores[order[k]] == value; ++k) {
      (positive[order[k]] ? tp_next : fp_next) += 1.0;
    }
    area += (fp_next - fp) / n_neg * 0.5 * (tp + tp_next) / n_pos;
    tp = tp_next;
    fp = fp_next;
  }
  return area;
}

std::vector<std::size_t> label_indices(const PairwiseCalibration& calibration,
                                       std::span<const SequenceSample> labelled) {
  std::vector<std::size_t> truth;
  truth.reserve(labelled.size());
  for (const auto& s : labelled) {
    if (!s.label) throw DataError("sample " + s.id + " has no label");
    auto index = calibration.index_of(*s.label);
    if (!index) throw DataError("sample " + s.id + " has unknown label '" + *s.label + "'");
    truth.push_back(*index);
  }
  return truth;
}

EvaluationReport summarize(const std::vector<std::string>& labels,
                           std::span<const std::size_t> truth, std::vector<Prediction> predictions,
                           const std::map<std::string, std::string>& group_of) {
  detail::require(truth.size() == predictions.size(), "truth and predictions differ in length");
  const auto n = static_cast<Index>(labels.size());
  EvaluationReport report;
  report.labels = labels;
  report.confusion = Eigen::MatrixXi::Zero(n, n);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    report.confusion(static_cast<Index>(truth[k]), static_cast<Index>(predictions[k].index)) += 1;
  }

  report.confusion_percent = Matrix::Zero(n, n);
  report.hit_rate = Vector::Constant(n, kNaN);
  double hit_sum = 0.0;
  int populated = 0;
  for (Index i = 0; i < n; ++i) {
    const int row_total = report.confusion.row(i).sum();
    if (row_total == 0) continue;
    report.confusion_percent.row(i) =
        100.0 * report.confusion.row(i).cast<double>() / static_cast<double>(row_total);
    report.hit_rate[i] = static_cast<double>(report.confusion(i, i)) / row_total;
    hit_sum += report.hit_rate[i];
    ++populated;
  }
  report.macro_accuracy = populated > 0 ? hit_sum / populated : kNaN;
  report.accuracy = truth.empty() ? kNaN
                                  : static_cast<double>(report.confusion.trace()) /
                                        static_cast<double>(truth.size());

  report.auc = Vector::Constant(n, kNaN);
  std::vector<double> scores(truth.size());
  auto positive = std::make_unique<bool[]>(truth.size());
  for (Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < truth.size(); ++k) {
      scores[k] = predictions[k].scores[i];
      positive[k] = truth[k] == static_cast<std::size_t>(i);
    }
    report.auc[i] = roc_auc(scores, std::span<const bool>(positive.get(), truth.size()));
  }

  std::vector<std::size_t> group_index(labels.size());
  for (std::size_t c = 0; c < labels.size(); ++c) {
    auto it = group_of.find(labels[c]);
    const std::string group = it == group_of.end() ? labels[c] : it->second;
    auto pos = std::find(report.groups.begin(), report.groups.end(), group);
    if (pos == report.groups.end()) {
      report.groups.push_back(group);
      pos = report.groups.end() - 1;
    }
    group_index[c] = static_cast<std::size_t>(pos - report.groups.begin());
  }
  report.group_f1 = Vector::Constant(static_cast<Index>(report.groups.size()), kNaN);
  for (std::size_t g = 0; g < report.groups.size(); ++g) {
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      const bool actual = group_index[truth[k]] == g;
      const bool predicted = group_index[predictions[k].index] == g;
      tp += actual && predicted;
      fp += !actual && predicted;
      fn += actual && !predicted;
    }
    if (tp + fp + fn > 0.0) report.group_f1[static_cast<Index>(g)] = 2.0 * tp / (2.0 * tp + fp + fn);
  }
  report.predictions = std::move(predictions);
  return report;
}

EvaluationReport evaluate(const ClassifierBundle& bundle, std::span<const SequenceSample> labelled,
                          ScoringMode mode, const std::map<std::string, std::string>& group_of) {
  bundle.validate();
  const auto truth = label_indices(bundle.calibration, labelled);
  std::vector<Prediction> predictions(labelled.size());
  parallel_for(labelled.size(), [&](std::size_t k) {
    predictions[k] = score_and_predict(bundle, labelled[k], mode);
  });
  return summarize(bundle.calibration.labels(), truth, std::move(predictions), group_of);
}

}  // namespace lrbm
