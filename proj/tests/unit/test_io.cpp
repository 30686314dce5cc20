#include "lrbm/error.hpp"
#include "lrbm/io.hpp"
#include "support/test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

using namespace lrbm;

namespace {

ClassifierBundle sample_bundle(Rng& rng) {
  ClassifierBundle b;
  b.models = {lrbm::testing::random_model(3, 4, 5, rng), lrbm::testing::random_model(3, 4, 5, rng),
              lrbm::testing::random_model(3, 4, 5, rng)};
  b.models[0].provenance = TrainProvenance{12345678901234567890ULL, 250, "00ff00ff00ff00ff"};
  b.calibration = PairwiseCalibration({"walk", "run", "jump"}, 0.37275937203149417);
  b.calibration.set_upper({0.1, -1.0 / 3.0, 1e-300});
  b.norm_stats = data::NormStats{Vector::Random(3), Vector::Random(3).cwiseAbs()};
  data::PreprocessConfig pre;
  pre.target_length = 4;
  pre.feature_subset = {0, 2, 5};
  b.preprocess = pre;
  b.provenance = {{"seed", "7"}, {"scoring", "soft"}};
  return b;
}

void check_same(const LrbmModel& x, const LrbmModel& y) {
  CHECK(x.a == y.a);
  CHECK(x.b == y.b);
  CHECK(x.W == y.W);
  CHECK(x.U == y.U);
  CHECK(x.provenance == y.provenance);
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("dataset parsing") {
  std::istringstream in(
      "{\"format\":\"lrbm-dataset\",\"version\":1,\"d\":2}\n"
      "{\"id\":\"s1\",\"label\":\"wave\",\"frames\":[[1,2],[3,4],[5,6]]}\n"
      "\n"
      "{\"id\":\"s2\",\"frames\":[[0.5,null]]}\n");
  const auto ds = io::read_dataset(in);
  CHECK(ds.dim == 2);
  REQUIRE(ds.sequences.size() == 2);
  CHECK(ds.sequences[0].frames == Matrix{{1.0, 3.0, 5.0}, {2.0, 4.0, 6.0}});
  CHECK(ds.sequences[0].label == std::optional<std::string>("wave"));
  CHECK_FALSE(ds.sequences[1].label.has_value());
  CHECK(std::isnan(ds.sequences[1].frames(1, 0)));
}

TEST_CASE("dataset errors name the line") {
  auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      io::read_dataset(in);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string header = "{\"format\":\"lrbm-dataset\",\"version\":1,\"d\":2}\n";
  CHECK(error_of(header + "{\"frames\":[[1,2]]}\n{oops\n").find("line 3") != std::string::npos);
  CHECK(error_of(header + "{\"frames\":[[1,2,3]]}\n").find("line 2") != std::string::npos);
  CHECK(error_of(header + "{\"frames\":[[1,\"x\"]]}\n").find("line 2") != std::string::npos);
  CHECK(error_of(header + "{\"id\":\"a\"}\n").find("line 2") != std::string::npos);
  CHECK(error_of("{\"format\":\"lrbm-dataset\",\"version\":2,\"d\":2}\n").find("version") !=
        std::string::npos);
  CHECK(error_of("{\"format\":\"other\",\"version\":1,\"d\":2}\n").find("line 1") !=
        std::string::npos);
  CHECK(error_of("").find("empty") != std::string::npos);
  CHECK_THROWS_AS(io::load_dataset("/nonexistent/file.jsonl"), DataError);
}

TEST_CASE("dataset round trip") {
  Rng rng(1);
  std::vector<SequenceSample> samples;
  for (int k = 0; k < 4; ++k) {
    auto s = lrbm::testing::random_sample(3, 5, rng, 1e3);
    s.id = "seq" + std::to_string(k);
    if (k % 2 == 0) s.label = "class " + std::to_string(k);
    samples.push_back(std::move(s));
  }
  samples[1].frames(0, 0) = 0.1;
  samples[1].frames(1, 0) = -0.0;
  samples[1].frames(2, 0) = 5e-324;
  std::ostringstream out;
  io::write_dataset(out, 3, samples);
  std::istringstream in(out.str());
  const auto back = io::to_samples(io::read_dataset(in));
  REQUIRE(back.size() == samples.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].frames == samples[k].frames);
    CHECK(back[k].label == samples[k].label);
    CHECK(back[k].id == samples[k].id);
  }

  io::Dataset ragged;
  ragged.dim = 1;
  ragged.sequences = {{Matrix::Zero(1, 2), "a", "x"}, {Matrix::Zero(1, 3), "a", "y"}};
  CHECK_THROWS_AS(io::to_samples(ragged), DataError);

  std::ostringstream bad;
  CHECK_THROWS_AS(io::write_dataset(bad, 2, samples), DataError);
}

TEST_CASE("missing values survive as null") {
  std::vector<data::RawSequence> raws{{Matrix{{1.0, std::nan("")}}, "a", "m"}};
  std::ostringstream out;
  io::write_dataset(out, 1, raws);
  CHECK(out.str().find("null") != std::string::npos);
  std::istringstream in(out.str());
  const auto ds = io::read_dataset(in);
  CHECK(std::isnan(ds.sequences[0].frames(0, 1)));
  CHECK_THROWS_AS(io::to_samples(ds), DataError);
}

TEST_CASE("model round trip is bit exact") {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    LrbmModel m = lrbm::testing::random_tiny_model(rng);
    m.W *= 1.0 / 3.0;
    if (trial == 0) m.provenance = TrainProvenance{42, 17, "abcdef0123456789"};
    const std::string text = io::model_to_string(m);
    const LrbmModel back = io::model_from_string(text);
    check_same(m, back);
    CHECK(back.U == back.U.transpose());
    CHECK(back.U.diagonal().isZero(0.0));
    CHECK(io::model_to_string(back) == text);
  }
  CHECK_THROWS_AS(io::model_from_string("{\"dims\":{\"d\":0,\"n_t\":1,\"n_h\":1}}"), DataError);
  CHECK_THROWS_AS(io::model_from_string("not json"), DataError);
}

TEST_CASE("model layout") {
  LrbmModel m(2, 2, 1);
  m.a << 1, 2, 3, 4;  // row-major d x n_t
  m.W(0, 0) = 10;     // slice 0, component 0
  m.W(3, 0) = 40;     // slice 1, component 1
  m.U << 0, 0.5, 0.5, 0;
  const auto text = io::model_to_string(m);
  const auto squash = [](std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\n'; }), s.end());
    return s;
  };
  const auto flat = squash(text);
  CHECK(flat.find("\"a\":[1.0,2.0,3.0,4.0]") != std::string::npos);
  CHECK(flat.find("\"W\":[[[10.0,0.0]],[[0.0,40.0]]]") != std::string::npos);
  CHECK(flat.find("\"U\":[0.5]") != std::string::npos);
}

TEST_CASE("bundle round trip is bit exact") {
  Rng rng(3);
  const auto bundle = sample_bundle(rng);
  const std::string text = io::bundle_to_string(bundle);
  const auto back = io::bundle_from_string(text);
  REQUIRE(back.classes() == 3);
  for (std::size_t c = 0; c < 3; ++c) check_same(bundle.models[c], back.models[c]);
  CHECK(back.calibration.labels() == bundle.calibration.labels());
  CHECK(back.calibration.upper() == bundle.calibration.upper());
  CHECK(back.calibration.alpha() == bundle.calibration.alpha());
  REQUIRE(back.norm_stats);
  CHECK(back.norm_stats->mean == bundle.norm_stats->mean);
  CHECK(back.norm_stats->stddev == bundle.norm_stats->stddev);
  CHECK(back.preprocess == bundle.preprocess);
  CHECK(back.provenance == bundle.provenance);
  CHECK(io::bundle_to_string(back) == text);

  const auto path = std::filesystem::temp_directory_path() / "lrbm_io_bundle_test.json";
  io::save_bundle(path, bundle);
  CHECK(io::read_file(path) == text);
  CHECK(io::bundle_to_string(io::load_bundle(path)) == text);
  std::filesystem::remove(path);
}

TEST_CASE("bundle errors") {
  Rng rng(4);
  auto text = io::bundle_to_string(sample_bundle(rng));
  CHECK_THROWS_AS(io::bundle_from_string("{\"format\":\"x\"}"), DataError);
  auto versioned = text;
  versioned.replace(versioned.find("\"version\": 1"), 12, "\"version\": 9");
  CHECK_THROWS_AS(io::bundle_from_string(versioned), DataError);
  CHECK_THROWS_AS(io::load_bundle("/nonexistent/bundle.json"), DataError);
}

TEST_CASE("auxiliary files") {
  const data::NormStats stats{Vector::LinSpaced(3, -1.0, 1.0), Vector::Constant(3, 0.3)};
  const auto back = io::norm_stats_from_string(io::norm_stats_to_string(stats));
  CHECK(back.mean == stats.mean);
  CHECK(back.stddev == stats.stddev);

  const auto skel = io::skeleton_from_string("{\"parents\":[-1,0,1],\"bone_lengths\":[0,1,2]}");
  CHECK(skel.topology.parents == std::vector<int>{-1, 0, 1});
  CHECK(skel.bone_lengths == std::vector<double>{0, 1, 2});
  CHECK(io::skeleton_from_string("{\"parents\":[-1,0]}").bone_lengths.empty());
  CHECK_THROWS_AS(io::skeleton_from_string("{\"parents\":[-1,0],\"bone_lengths\":[1]}"), DataError);
  CHECK_THROWS_AS(io::skeleton_from_string("{\"parents\":[-1,-1]}"), DataError);

  Rng rng(5);
  const std::vector<LrbmModel> models{lrbm::testing::random_model(2, 2, 2, rng),
                                      lrbm::testing::random_model(2, 2, 2, rng)};
  const auto [labels, loaded] = io::models_from_string(io::models_to_string({"x", "y"}, models));
  CHECK(labels == std::vector<std::string>{"x", "y"});
  check_same(loaded[1], models[1]);
}

}  // TEST_SUITE
