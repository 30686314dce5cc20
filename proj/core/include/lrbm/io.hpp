#pragma once

// File formats: JSON Lines datasets, JSON model and bundle files. Numbers are written
// with shortest round-trip precision, so load(save(x)) reproduces x bit for bit.

#include "lrbm/classify.hpp"
#include "lrbm/data.hpp"
#include "lrbm/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lrbm::io {

inline constexpr int kDatasetVersion = 1;

struct Dataset {
  Index dim = 0;
  std::vector<data::RawSequence> sequences;
};

/// Parses a dataset; malformed lines raise DataError naming the line number.
/// `null` entries in frames become NaN (missing).
Dataset read_dataset(std::istream& in);
Dataset load_dataset(const std::filesystem::path& path);

void write_dataset(std::ostream& out, Index dim, std::span<const data::RawSequence> sequences);
void write_dataset(std::ostream& out, Index dim, std::span<const SequenceSample> samples);
void save_dataset(const std::filesystem::path& path, Index dim,
                  std::span<const SequenceSample> samples);

/// Fixed-length view of a dataset; throws DataError when lengths differ.
std::vector<SequenceSample> to_samples(const Dataset& dataset);
data::RawSequence to_raw(const SequenceSample& sample);

std::string model_to_string(const LrbmModel& model);
LrbmModel model_from_string(const std::string& text);

std::string bundle_to_string(const ClassifierBundle& bundle);
ClassifierBundle bundle_from_string(const std::string& text);
void save_bundle(const std::filesystem::path& path, const ClassifierBundle& bundle);
ClassifierBundle load_bundle(const std::filesystem::path& path);

/// A list of labelled models without calibration (e.g. synthetic ground truth).
std::string models_to_string(const std::vector<std::string>& labels,
                             std::span<const LrbmModel> models);
std::pair<std::vector<std::string>, std::vector<LrbmModel>> models_from_string(
    const std::string& text);

std::string norm_stats_to_string(const data::NormStats& stats);
data::NormStats norm_stats_from_string(const std::string& text);

struct SkeletonFile {
  data::SkeletonTopology topology;
  std::vector<double> bone_lengths;  ///< empty: use the dataset mean
};
/// {"parents": [...], "bone_lengths": [...] (optional)}
SkeletonFile skeleton_from_string(const std::string& text);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace lrbm::io
