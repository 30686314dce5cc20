#include "commands.hpp"

#include "lrbm/data.hpp"
#include "lrbm/error.hpp"
#include "lrbm/io.hpp"
#include "lrbm/oracle.hpp"
#include "lrbm/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace lrbm::cli {

namespace {

using json = nlohmann::ordered_json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

// Dataset in model space: fixed length, normalised with the bundle's statistics.
std::vector<SequenceSample> model_space_samples(const ClassifierBundle& bundle,
                                                const std::filesystem::path& path) {
  auto samples = io::to_samples(io::load_dataset(path));
  const auto& front = bundle.models.front();
  for (auto& s : samples) {
    if (s.dim() != front.visible_dim() || s.length() != front.frames()) {
      throw DataError("sequence " + s.id + " is " + std::to_string(s.dim()) + "x" +
                      std::to_string(s.length()) + " but the bundle expects " +
                      std::to_string(front.visible_dim()) + "x" +
                      std::to_string(front.frames()));
    }
    if (bundle.norm_stats) s = data::normalize_apply(s, *bundle.norm_stats);
  }
  return samples;
}

std::map<std::string, std::string> load_groups(const std::optional<std::filesystem::path>& path) {
  std::map<std::string, std::string> groups;
  if (!path) return groups;
  json j;
  try {
    j = json::parse(io::read_file(*path));
  } catch (const json::exception& e) {
    throw DataError(path->string() + ": " + e.what());
  }
  if (!j.is_object()) throw DataError(path->string() + ": expected an object of label -> group");
  for (const auto& [label, group] : j.items()) {
    if (!group.is_string()) throw DataError(path->string() + ": group names must be strings");
    groups[label] = group.get<std::string>();
  }
  return groups;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

void cmd_preprocess(const PreprocessOptions& options) {
  detail::require(options.target_length == 0 || options.target_length >= 2,
                  "--target-length must be >= 2");
  detail::require(options.smooth_window >= 1 && options.smooth_window % 2 == 1,
                  "--smooth-window must be odd and >= 1");
  detail::require(!options.fit_stats || options.normalize_stats.has_value(),
                  "--fit-stats needs --normalize-stats PATH");

  io::Dataset dataset = io::load_dataset(options.input);
  std::vector<data::RawSequence> raws;
  raws.reserve(dataset.sequences.size());
  for (const auto& s : dataset.sequences) raws.push_back(data::impute_raw(s));

  if (options.skeleton) {
    const auto skeleton = io::skeleton_from_string(io::read_file(*options.skeleton));
    const auto lengths = skeleton.bone_lengths.empty()
                             ? data::mean_bone_lengths(raws, skeleton.topology)
                             : skeleton.bone_lengths;
    for (auto& r : raws) r = data::skeleton_renormalize(r, skeleton.topology, lengths).sequence;
  }

  std::vector<SequenceSample> samples;
  samples.reserve(raws.size());
  for (const auto& r : raws) {
    const auto selected = data::select_features(r, options.feature_subset);
    SequenceSample s = options.target_length > 0
                           ? data::interpolate(selected, options.target_length)
                           : SequenceSample{selected.frames, selected.label, selected.id};
    if (options.smooth_window > 1) s = data::smooth(s, options.smooth_window);
    samples.push_back(std::move(s));
  }

  if (options.normalize_stats) {
    data::NormStats stats;
    if (options.fit_stats) {
      stats = data::normalize_fit(samples);
      io::write_file(*options.normalize_stats, io::norm_stats_to_string(stats));
    } else {
      stats = io::norm_stats_from_string(io::read_file(*options.normalize_stats));
    }
    for (auto& s : samples) s = data::normalize_apply(s, stats);
  }

  const Index dim = options.feature_subset.empty()
                        ? dataset.dim
                        : static_cast<Index>(options.feature_subset.size());
  io::save_dataset(options.output, dim, samples);
}

void cmd_train(const TrainOptions& options, std::ostream* log) {
  options.config.validate();
  detail::require(options.val_fraction > 0.0 && options.val_fraction < 1.0,
                  "--val-fraction must be in (0, 1)");
  const auto samples = io::to_samples(io::load_dataset(options.dataset));
  ClassSplit split = split_by_class(samples, options.val_fraction, options.config.seed);

  std::optional<data::NormStats> stats;
  if (options.normalize) {
    std::vector<SequenceSample> train_all;
    for (const auto& c : split.train) train_all.insert(train_all.end(), c.begin(), c.end());
    stats = data::normalize_fit(train_all);
    for (auto* group : {&split.train, &split.validation}) {
      for (auto& c : *group) {
        for (auto& s : c) s = data::normalize_apply(s, *stats);
      }
    }
  }

  BundleTrainingLog training_log;
  ClassifierBundle bundle = train_bundle(split, options.config, options.scoring, &training_log);
  bundle.norm_stats = stats;
  bundle.provenance["epochs"] = std::to_string(options.config.epochs);
  bundle.provenance["val_fraction"] = format_double(options.val_fraction);
  io::save_bundle(options.output, bundle);

  if (log) {
    for (std::size_t c = 0; c < split.labels.size(); ++c) {
      *log << "class " << split.labels[c] << ": " << split.train[c].size() << " train, "
           << split.validation[c].size() << " validation, selected candidate "
           << training_log.selected_candidate[c] << "\n";
    }
    for (auto p : training_log.degenerate_pairs) {
      *log << "warning: pair " << p << " had identical log-likelihood differences\n";
    }
    *log << "alpha " << bundle.calibration.alpha() << "\n";
  }
}

void cmd_predict(const PredictOptions& options) {
  const ClassifierBundle bundle = io::load_bundle(options.bundle);
  const auto samples = model_space_samples(bundle, options.dataset);
  std::ostringstream out;
  out << "id,predicted";
  for (const auto& label : bundle.calibration.labels()) out << "," << csv_field("score:" + label);
  out << "\n";
  for (const auto& s : samples) {
    const Prediction p = score_and_predict(bundle, s, options.scoring);
    out << csv_field(s.id) << "," << csv_field(p.label);
    for (Index k = 0; k < p.scores.size(); ++k) out << "," << format_double(p.scores[k]);
    out << "\n";
  }
  io::write_file(options.output, out.str());
}

void cmd_evaluate(const EvaluateOptions& options) {
  const ClassifierBundle bundle = io::load_bundle(options.bundle);
  const auto samples = model_space_samples(bundle, options.dataset);
  const auto report = evaluate(bundle, samples, options.scoring, load_groups(options.groups));
  const auto& labels = report.labels;

  json j;
  j["samples"] = samples.size();
  j["accuracy"] = number_or_null(report.accuracy);
  j["macro_accuracy"] = number_or_null(report.macro_accuracy);
  j["class_labels"] = labels;
  json hit = json::object();
  json auc = json::object();
  for (std::size_t c = 0; c < labels.size(); ++c) {
    hit[labels[c]] = number_or_null(report.hit_rate[static_cast<Index>(c)]);
    auc[labels[c]] = number_or_null(report.auc[static_cast<Index>(c)]);
  }
  j["hit_rate"] = std::move(hit);
  j["auc"] = std::move(auc);
  json f1 = json::object();
  for (std::size_t g = 0; g < report.groups.size(); ++g) {
    f1[report.groups[g]] = number_or_null(report.group_f1[static_cast<Index>(g)]);
  }
  j["group_f1"] = std::move(f1);
  json counts = json::array();
  json percent = json::array();
  for (Index r = 0; r < report.confusion.rows(); ++r) {
    json crow = json::array();
    json prow = json::array();
    for (Index c = 0; c < report.confusion.cols(); ++c) {
      crow.push_back(report.confusion(r, c));
      prow.push_back(report.confusion_percent(r, c));
    }
    counts.push_back(std::move(crow));
    percent.push_back(std::move(prow));
  }
  j["confusion"] = std::move(counts);
  j["confusion_percent"] = std::move(percent);
  io::write_file(options.output, j.dump(2) + "\n");

  if (options.confusion_csv) {
    std::ostringstream csv;
    csv << "true\\predicted";
    for (const auto& l : labels) csv << "," << csv_field(l);
    csv << "\n";
    for (std::size_t r = 0; r < labels.size(); ++r) {
      csv << csv_field(labels[r]);
      for (std::size_t c = 0; c < labels.size(); ++c) {
        csv << "," << format_double(report.confusion_percent(static_cast<Index>(r), static_cast<Index>(c)));
      }
      csv << "\n";
    }
    io::write_file(*options.confusion_csv, csv.str());
  }
}

std::vector<RobustnessRow> cmd_robustness(const RobustnessOptions& options) {
  detail::require(!options.fractions.empty(), "--fractions must not be empty");
  detail::require(!options.seeds.empty(), "--seeds must not be empty");
  for (double f : options.fractions) {
    detail::require(f >= 0.0 && f <= 0.5, "corruption fractions must lie in [0, 0.5]");
  }
  const ClassifierBundle bundle = io::load_bundle(options.bundle);
  const auto clean = model_space_samples(bundle, options.dataset);

  std::vector<RobustnessRow> rows;
  std::ostringstream csv;
  csv << "fraction,mean_accuracy,std_accuracy,runs\n";
  for (double fraction : options.fractions) {
    std::vector<double> accuracies;
    for (std::uint64_t seed : options.seeds) {
      Rng rng(seed);
      std::vector<SequenceSample> corrupted;
      corrupted.reserve(clean.size());
      for (const auto& s : clean) {
        if (options.mode == Corruption::Noise) {
          corrupted.push_back(data::inject_noise(s, fraction, rng));
        } else {
          corrupted.push_back(data::impute_missing(data::inject_missing(s, fraction, rng)));
        }
      }
      accuracies.push_back(evaluate(bundle, corrupted, options.scoring).accuracy);
    }
    const double mean = mean_of(accuracies);
    double var = 0.0;
    for (double a : accuracies) var += (a - mean) * (a - mean);
    const double sd =
        accuracies.size() > 1 ? std::sqrt(var / static_cast<double>(accuracies.size() - 1)) : 0.0;
    rows.push_back({fraction, mean, sd, accuracies.size()});
    csv << format_double(fraction) << "," << format_double(mean) << "," << format_double(sd)
        << "," << accuracies.size() << "\n";
  }
  io::write_file(options.output, csv.str());
  return rows;
}

void cmd_synth(const SynthOptions& options) {
  oracle::SyntheticSpec spec;
  spec.classes = options.classes;
  spec.per_class = options.per_class;
  spec.visible_dim = options.visible_dim;
  spec.frames = options.frames;
  spec.hidden_dim = options.hidden_dim;
  spec.separation = options.separation;
  spec.weight_scale = options.weight_scale;
  spec.interaction_radius = options.interaction_radius;
  spec.seed = options.seed;
  detail::require(spec.separation >= 0.0 && spec.weight_scale >= 0.0 &&
                      spec.interaction_radius >= 0.0,
                  "separation, weight scale and interaction radius must be >= 0");
  const auto synthetic = oracle::make_synthetic_dataset(spec);
  io::save_dataset(options.output, spec.visible_dim, synthetic.samples);
  if (options.models_output) {
    io::write_file(*options.models_output, io::models_to_string(synthetic.labels, synthetic.models));
  }
}

void cmd_inspect(const InspectOptions& options, std::ostream& out) {
  const ClassifierBundle bundle = io::load_bundle(options.bundle);
  const auto& cal = bundle.calibration;
  json j;
  j["classes"] = bundle.classes();
  j["alpha"] = cal.alpha();
  const auto& front = bundle.models.front();
  j["dims"] = {{"d", front.visible_dim()}, {"n_t", front.frames()}, {"n_h", front.hidden_dim()}};
  json models = json::array();
  for (std::size_t c = 0; c < bundle.classes(); ++c) {
    const auto& m = bundle.models[c];
    json entry;
    entry["label"] = cal.labels()[c];
    entry["W_frobenius"] = m.W.norm();
    entry["b_mean"] = m.b.size() ? m.b.mean() : 0.0;
    entry["U_frobenius"] = m.U.norm();
    entry["U_lambda_max"] = max_eigenvalue(m.U);
    entry["a_frobenius"] = m.a.norm();
    if (m.provenance) {
      entry["seed"] = m.provenance->seed;
      entry["config_hash"] = m.provenance->config_hash;
    }
    models.push_back(std::move(entry));
  }
  j["models"] = std::move(models);
  json C = json::array();
  for (std::size_t r = 0; r < cal.size(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < cal.size(); ++c) row.push_back(cal.offset(r, c));
    C.push_back(std::move(row));
  }
  j["C"] = std::move(C);
  double worst = 0.0;
  for (const auto& d : transitivity_defects(cal)) worst = std::max(worst, d.defect);
  j["max_transitivity_defect"] = worst;
  j["normalized"] = bundle.norm_stats.has_value();
  out << j.dump(2) << "\n";
}

int report_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ContractError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lrbm::cli
