#include "lrbm/io.hpp"

#include "lrbm/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace lrbm::io {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kDatasetFormat = "lrbm-dataset";
constexpr const char* kBundleFormat = "lrbm-bundle";
constexpr const char* kModelsFormat = "lrbm-models";

json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(what + ": " + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) {
    throw DataError(what + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(what + ": field '" + key + "': " + e.what());
  }
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

Vector vector_from(const json& j, Index expected, const std::string& what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != expected) {
    throw DataError(what + ": expected an array of " + std::to_string(expected) + " numbers");
  }
  Vector v(expected);
  for (Index k = 0; k < expected; ++k) v[k] = j[static_cast<std::size_t>(k)].get<double>();
  return v;
}

json model_json(const LrbmModel& m) {
  const Index d = m.visible_dim();
  const Index n_t = m.frames();
  const Index n_h = m.hidden_dim();
  json out;
  out["dims"] = {{"d", d}, {"n_t", n_t}, {"n_h", n_h}};
  json a = json::array();
  for (Index s = 0; s < d; ++s) {
    for (Index i = 0; i < n_t; ++i) a.push_back(m.a(s, i));
  }
  out["a"] = std::move(a);
  out["b"] = vector_json(m.b);
  json W = json::array();
  for (Index i = 0; i < n_t; ++i) {
    json slice = json::array();
    for (Index j = 0; j < n_h; ++j) {
      json row = json::array();
      for (Index s = 0; s < d; ++s) row.push_back(m.weight(i, j, s));
      slice.push_back(std::move(row));
    }
    W.push_back(std::move(slice));
  }
  out["W"] = std::move(W);
  json U = json::array();
  for (Index r = 0; r < d; ++r) {
    for (Index s = r + 1; s < d; ++s) U.push_back(m.U(r, s));
  }
  out["U"] = std::move(U);
  if (m.provenance) {
    out["provenance"] = {{"seed", m.provenance->seed},
                         {"epochs", m.provenance->epochs},
                         {"config_hash", m.provenance->config_hash}};
  }
  return out;
}

LrbmModel model_from(const json& j) {
  const std::string what = "model";
  const json dims = field<json>(j, "dims", what);
  const auto d = field<Index>(dims, "d", what);
  const auto n_t = field<Index>(dims, "n_t", what);
  const auto n_h = field<Index>(dims, "n_h", what);
  if (d < 1 || n_t < 1 || n_h < 0) throw DataError("model: invalid dimensions");
  LrbmModel m(d, n_t, n_h);
  try {
    const Vector a = vector_from(j.at("a"), d * n_t, "model.a");
    for (Index s = 0; s < d; ++s) {
      for (Index i = 0; i < n_t; ++i) m.a(s, i) = a[s * n_t + i];
    }
    m.b = vector_from(j.at("b"), n_h, "model.b");
    const json& W = j.at("W");
    if (!W.is_array() || static_cast<Index>(W.size()) != n_t) {
      throw DataError("model.W: expected " + std::to_string(n_t) + " slices");
    }
    for (Index i = 0; i < n_t; ++i) {
      const json& slice = W[static_cast<std::size_t>(i)];
      if (!slice.is_array() || static_cast<Index>(slice.size()) != n_h) {
        throw DataError("model.W: slice has the wrong number of hidden units");
      }
      for (Index h = 0; h < n_h; ++h) {
        const Vector row = vector_from(slice[static_cast<std::size_t>(h)], d, "model.W row");
        m.slice_weights(i).col(h) = row;
      }
    }
    const Vector U = vector_from(j.at("U"), d * (d - 1) / 2, "model.U");
    Index k = 0;
    for (Index r = 0; r < d; ++r) {
      for (Index s = r + 1; s < d; ++s, ++k) m.U(r, s) = m.U(s, r) = U[k];
    }
    if (j.contains("provenance")) {
      const json& p = j.at("provenance");
      m.provenance = TrainProvenance{p.at("seed").get<std::uint64_t>(), p.at("epochs").get<int>(),
                                     p.at("config_hash").get<std::string>()};
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  }
  return m;
}

json norm_stats_json(const data::NormStats& stats) {
  return {{"mean", vector_json(stats.mean)}, {"std", vector_json(stats.stddev)}};
}

data::NormStats norm_stats_from(const json& j) {
  if (!j.is_object() || !j.contains("mean") || !j.contains("std")) {
    throw DataError("norm_stats: expected {\"mean\", \"std\"}");
  }
  const auto d = static_cast<Index>(j.at("mean").size());
  return {vector_from(j.at("mean"), d, "norm_stats.mean"),
          vector_from(j.at("std"), d, "norm_stats.std")};
}

json preprocess_json(const data::PreprocessConfig& c) {
  return {{"target_length", c.target_length},
          {"smoothing_window", c.smoothing_window},
          {"normalize", c.normalize},
          {"feature_subset", c.feature_subset}};
}

data::PreprocessConfig preprocess_from(const json& j) {
  const std::string what = "preprocess";
  data::PreprocessConfig c;
  c.target_length = field<int>(j, "target_length", what);
  c.smoothing_window = field<int>(j, "smoothing_window", what);
  c.normalize = field<bool>(j, "normalize", what);
  c.feature_subset = field<std::vector<int>>(j, "feature_subset", what);
  return c;
}

json frames_json(const Matrix& frames) {
  json out = json::array();
  for (Index t = 0; t < frames.cols(); ++t) {
    json frame = json::array();
    for (Index s = 0; s < frames.rows(); ++s) {
      const double v = frames(s, t);
      if (std::isnan(v)) {
        frame.push_back(nullptr);
      } else if (!std::isfinite(v)) {
        throw DataError("cannot serialise an infinite value");
      } else {
        frame.push_back(v);
      }
    }
    out.push_back(std::move(frame));
  }
  return out;
}

void write_record(std::ostream& out, const Matrix& frames, const std::optional<std::string>& label,
                  const std::string& id, Index dim) {
  if (frames.rows() != dim) throw DataError("sequence " + id + " does not have dimension d");
  json line;
  line["id"] = id;
  if (label) line["label"] = *label;
  line["frames"] = frames_json(frames);
  out << line.dump() << '\n';
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  Dataset dataset;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    const json j = parse(text, where);
    if (!have_header) {
      if (field<std::string>(j, "format", where) != kDatasetFormat) {
        throw DataError(where + ": not an lrbm-dataset header");
      }
      const int version = field<int>(j, "version", where);
      if (version != kDatasetVersion) {
        throw DataError(where + ": unsupported dataset version " + std::to_string(version));
      }
      dataset.dim = field<Index>(j, "d", where);
      if (dataset.dim < 1) throw DataError(where + ": d must be >= 1");
      have_header = true;
      continue;
    }
    data::RawSequence seq;
    seq.id = j.contains("id") ? field<std::string>(j, "id", where) : std::to_string(line_no);
    if (j.contains("label") && !j.at("label").is_null()) {
      seq.label = field<std::string>(j, "label", where);
    }
    const json frames = field<json>(j, "frames", where);
    if (!frames.is_array() || frames.empty()) {
      throw DataError(where + ": 'frames' must be a non-empty array");
    }
    seq.frames.resize(dataset.dim, static_cast<Index>(frames.size()));
    for (std::size_t t = 0; t < frames.size(); ++t) {
      const json& frame = frames[t];
      if (!frame.is_array() || static_cast<Index>(frame.size()) != dataset.dim) {
        throw DataError(where + ": frame " + std::to_string(t) + " does not have " +
                        std::to_string(dataset.dim) + " values");
      }
      for (Index s = 0; s < dataset.dim; ++s) {
        const json& v = frame[static_cast<std::size_t>(s)];
        if (v.is_null()) {
          seq.frames(s, static_cast<Index>(t)) = std::numeric_limits<double>::quiet_NaN();
        } else if (v.is_number()) {
          seq.frames(s, static_cast<Index>(t)) = v.get<double>();
        } else {
          throw DataError(where + ": frame " + std::to_string(t) + " has a non-numeric value");
        }
      }
    }
    dataset.sequences.push_back(std::move(seq));
  }
  if (!have_header) throw DataError("dataset is empty (no header line)");
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  try {
    return read_dataset(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_dataset(std::ostream& out, Index dim, std::span<const data::RawSequence> sequences) {
  json header;
  header["format"] = kDatasetFormat;
  header["version"] = kDatasetVersion;
  header["d"] = dim;
  out << header.dump() << '\n';
  for (const auto& s : sequences) write_record(out, s.frames, s.label, s.id, dim);
}

void write_dataset(std::ostream& out, Index dim, std::span<const SequenceSample> samples) {
  json header;
  header["format"] = kDatasetFormat;
  header["version"] = kDatasetVersion;
  header["d"] = dim;
  out << header.dump() << '\n';
  for (const auto& s : samples) write_record(out, s.frames, s.label, s.id, dim);
}

void save_dataset(const std::filesystem::path& path, Index dim,
                  std::span<const SequenceSample> samples) {
  std::ostringstream out;
  write_dataset(out, dim, samples);
  write_file(path, out.str());
}

std::vector<SequenceSample> to_samples(const Dataset& dataset) {
  std::vector<SequenceSample> out;
  out.reserve(dataset.sequences.size());
  for (const auto& s : dataset.sequences) {
    if (!out.empty() && s.length() != out.front().length()) {
      throw DataError("sequence " + s.id + " has " + std::to_string(s.length()) +
                      " frames, expected " + std::to_string(out.front().length()) +
                      " (run preprocess with --target-length)");
    }
    if (!s.frames.allFinite()) {
      throw DataError("sequence " + s.id + " has missing or non-finite values");
    }
    out.push_back({s.frames, s.label, s.id});
  }
  return out;
}

data::RawSequence to_raw(const SequenceSample& sample) {
  return {sample.frames, sample.label, sample.id};
}

std::string model_to_string(const LrbmModel& model) { return model_json(model).dump(1) + "\n"; }

LrbmModel model_from_string(const std::string& text) { return model_from(parse(text, "model")); }

std::string bundle_to_string(const ClassifierBundle& bundle) {
  bundle.validate();
  json out;
  out["format"] = kBundleFormat;
  out["version"] = ClassifierBundle::kFormatVersion;
  out["class_labels"] = bundle.calibration.labels();
  json models = json::array();
  for (const auto& m : bundle.models) models.push_back(model_json(m));
  out["models"] = std::move(models);
  out["C"] = bundle.calibration.upper();
  out["alpha"] = bundle.calibration.alpha();
  out["norm_stats"] = bundle.norm_stats ? norm_stats_json(*bundle.norm_stats) : json(nullptr);
  out["preprocess"] = bundle.preprocess ? preprocess_json(*bundle.preprocess) : json(nullptr);
  json provenance = json::object();
  for (const auto& [k, v] : bundle.provenance) provenance[k] = v;
  out["provenance"] = std::move(provenance);
  return out.dump(1) + "\n";
}

ClassifierBundle bundle_from_string(const std::string& text) {
  const std::string what = "bundle";
  const json j = parse(text, what);
  if (field<std::string>(j, "format", what) != kBundleFormat) {
    throw DataError("bundle: not an lrbm-bundle file");
  }
  const int version = field<int>(j, "version", what);
  if (version != ClassifierBundle::kFormatVersion) {
    throw DataError("bundle: unsupported version " + std::to_string(version));
  }
  ClassifierBundle bundle;
  try {
    for (const auto& m : j.at("models")) bundle.models.push_back(model_from(m));
    bundle.calibration = PairwiseCalibration(field<std::vector<std::string>>(j, "class_labels", what),
                                             field<double>(j, "alpha", what));
    bundle.calibration.set_upper(field<std::vector<double>>(j, "C", what));
    if (j.contains("norm_stats") && !j.at("norm_stats").is_null()) {
      bundle.norm_stats = norm_stats_from(j.at("norm_stats"));
    }
    if (j.contains("preprocess") && !j.at("preprocess").is_null()) {
      bundle.preprocess = preprocess_from(j.at("preprocess"));
    }
    if (j.contains("provenance")) {
      for (const auto& [k, v] : j.at("provenance").items()) {
        bundle.provenance[k] = v.get<std::string>();
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bundle: ") + e.what());
  } catch (const ContractError& e) {
    throw DataError(std::string("bundle: ") + e.what());
  }
  try {
    bundle.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("bundle: ") + e.what());
  }
  return bundle;
}

void save_bundle(const std::filesystem::path& path, const ClassifierBundle& bundle) {
  write_file(path, bundle_to_string(bundle));
}

ClassifierBundle load_bundle(const std::filesystem::path& path) {
  return bundle_from_string(read_file(path));
}

std::string models_to_string(const std::vector<std::string>& labels,
                             std::span<const LrbmModel> models) {
  detail::require(labels.size() == models.size(), "need one label per model");
  json out;
  out["format"] = kModelsFormat;
  out["version"] = 1;
  out["class_labels"] = labels;
  json list = json::array();
  for (const auto& m : models) list.push_back(model_json(m));
  out["models"] = std::move(list);
  return out.dump(1) + "\n";
}

std::pair<std::vector<std::string>, std::vector<LrbmModel>> models_from_string(
    const std::string& text) {
  const json j = parse(text, "models");
  if (field<std::string>(j, "format", "models") != kModelsFormat) {
    throw DataError("models: not an lrbm-models file");
  }
  std::vector<LrbmModel> models;
  for (const auto& m : field<json>(j, "models", "models")) models.push_back(model_from(m));
  auto labels = field<std::vector<std::string>>(j, "class_labels", "models");
  if (labels.size() != models.size()) throw DataError("models: label count mismatch");
  return {std::move(labels), std::move(models)};
}

std::string norm_stats_to_string(const data::NormStats& stats) {
  return norm_stats_json(stats).dump(1) + "\n";
}

data::NormStats norm_stats_from_string(const std::string& text) {
  return norm_stats_from(parse(text, "norm_stats"));
}

SkeletonFile skeleton_from_string(const std::string& text) {
  const json j = parse(text, "skeleton");
  SkeletonFile out;
  out.topology.parents = field<std::vector<int>>(j, "parents", "skeleton");
  if (j.contains("bone_lengths")) {
    out.bone_lengths = field<std::vector<double>>(j, "bone_lengths", "skeleton");
    if (out.bone_lengths.size() != out.topology.parents.size()) {
      throw DataError("skeleton: need one bone length per joint");
    }
  }
  out.topology.validate();
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << contents;
    if (!out) throw DataError("failed writing " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace lrbm::io
