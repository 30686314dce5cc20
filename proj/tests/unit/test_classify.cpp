#include "lrbm/classify.hpp"
#include "lrbm/error.hpp"
#include "lrbm/oracle.hpp"
#include "support/test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace lrbm;

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

PairwiseCalibration three_way(double f12, double f13, double f23) {
  // With g = 0 and alpha = 1, F_ij = sigmoid(-c_ij).
  PairwiseCalibration cal({"a", "b", "c"}, 1.0);
  cal.set_offset(0, 1, -logit(f12));
  cal.set_offset(0, 2, -logit(f13));
  cal.set_offset(1, 2, -logit(f23));
  return cal;
}

Prediction prediction(std::size_t index, std::vector<double> scores) {
  Prediction p;
  p.index = index;
  p.scores = Eigen::Map<Vector>(scores.data(), static_cast<Index>(scores.size()));
  return p;
}

double bool_auc(const std::vector<double>& scores, const std::vector<int>& positive) {
  auto flags = std::make_unique<bool[]>(positive.size());
  for (std::size_t k = 0; k < positive.size(); ++k) flags[k] = positive[k] != 0;
  return roc_auc(scores, std::span<const bool>(flags.get(), positive.size()));
}

}  // namespace

TEST_SUITE("classify") {

TEST_CASE("pairwise calibration storage") {
  PairwiseCalibration cal({"x", "y", "z", "w"});
  CHECK(cal.upper().size() == 6);
  cal.set_offset(2, 1, 0.75);
  CHECK(cal.offset(1, 2) == -0.75);
  CHECK(cal.offset(2, 1) == 0.75);
  CHECK(cal.offset(3, 3) == 0.0);
  cal.set_offset(0, 3, 1.0 / 3.0);
  CHECK(cal.offset(3, 0) == -cal.offset(0, 3));
  CHECK(cal.index_of("z") == std::optional<std::size_t>(2));
  CHECK_FALSE(cal.index_of("q").has_value());

  CHECK_THROWS_AS(cal.set_offset(1, 1, 0.0), ContractError);
  CHECK_THROWS_AS(cal.set_alpha(0.001), ContractError);
  CHECK_THROWS_AS(cal.set_alpha(101.0), ContractError);
  CHECK_NOTHROW(cal.set_alpha(100.0));
  CHECK_THROWS_AS(cal.set_upper({1.0}), ContractError);
}

TEST_CASE("offset estimation") {
  SUBCASE("identical models and mirrored samples") {
    Rng rng(3);
    const LrbmModel m = lrbm::testing::random_model(2, 2, 3, rng);
    std::vector<SequenceSample> si, sj;
    for (int k = 0; k < 20; ++k) {
      si.push_back(lrbm::testing::random_sample(m, rng));
      sj.push_back(lrbm::testing::random_sample(m, rng));
    }
    const auto est = estimate_cij(m, m, si, sj);
    CHECK(est.degenerate);
    CHECK(est.value == 0.0);

    const std::vector<LrbmModel> models{m, m};
    const auto cal = calibrate_pairs(models, {"p", "q"}, {si, sj});
    CHECK(cal.offset(0, 1) == -cal.offset(1, 0));
  }

  SUBCASE("separated differences give a threshold in the gap") {
    const std::vector<double> ti{3.0, 4.0, 5.5};
    const std::vector<double> tj{-1.0, 0.5, 1.0};
    const auto est = estimate_offset_from_differences(ti, tj);
    CHECK_FALSE(est.degenerate);
    CHECK(est.value > 1.0);
    CHECK(est.value < 3.0);
    CHECK(est.value == 2.0);
  }

  SUBCASE("ties go to the midpoint nearest the median") {
    // Midpoints 1.5, 2.5 and 3.5 score equally; 2.5 is the median of all t.
    const std::vector<double> ti{2.0, 3.0, 4.0};
    const std::vector<double> tj{1.0, 2.0, 3.0};
    const auto est = estimate_offset_from_differences(ti, tj);
    CHECK(est.value == 2.5);
  }

  SUBCASE("degenerate input") {
    const std::vector<double> same{1.25, 1.25};
    const auto est = estimate_offset_from_differences(same, same);
    CHECK(est.degenerate);
    CHECK(est.value == 1.25);
    CHECK_THROWS_AS(estimate_offset_from_differences(std::vector<double>{}, same), ContractError);
  }

  SUBCASE("close to the Bayes threshold on oracle data") {
    oracle::SyntheticSpec spec;
    spec.classes = 2;
    spec.per_class = 500;
    spec.separation = 0.5;
    spec.seed = 12;
    const auto data = oracle::make_synthetic_dataset(spec);
    const std::vector<SequenceSample> s0(data.samples.begin(), data.samples.begin() + 500);
    const std::vector<SequenceSample> s1(data.samples.begin() + 500, data.samples.end());
    const auto& m0 = data.models[0];
    const auto& m1 = data.models[1];
    const double c_est = estimate_cij(m0, m1, s0, s1).value;
    const double c_true = oracle::exact_log_partition(m0) - oracle::exact_log_partition(m1);

    auto balanced = [&](double c) {
      double hit0 = 0, hit1 = 0;
      for (const auto& V : s0) hit0 += unnormalized_loglik(m0, V) - unnormalized_loglik(m1, V) > c;
      for (const auto& V : s1) hit1 += unnormalized_loglik(m0, V) - unnormalized_loglik(m1, V) <= c;
      return 0.5 * (hit0 / 500.0 + hit1 / 500.0);
    };
    CHECK(std::abs(balanced(c_est) - balanced(c_true)) <= 0.02);
  }
}

TEST_CASE("soft pairwise classifier") {
  PairwiseCalibration cal({"a", "b"}, 1.0);
  cal.set_offset(0, 1, 0.5);
  Vector g(2);
  g << 3.0, 2.5;
  CHECK(soft_pairwise_from_loglik(g, cal, 0, 1) == 0.5);
  g << 3.0, 0.5;
  CHECK(soft_pairwise_from_loglik(g, cal, 0, 1) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
  g << 1e6, 0.0;
  cal.set_alpha(100.0);
  CHECK(soft_pairwise_from_loglik(g, cal, 0, 1) == 1.0);
  CHECK_THROWS_AS(soft_pairwise_from_loglik(g, cal, 1, 1), ContractError);
}

TEST_CASE("preference matrix and scores") {
  const Vector g = Vector::Zero(3);

  SUBCASE("all one half") {
    const PairwiseCalibration cal({"a", "b", "c"});
    const Matrix R = preference_from_loglik(g, cal);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) CHECK(R(i, j) == (i == j ? 0.0 : 0.5));
    const auto p = predict_from_preference(R, cal);
    CHECK(p.scores == Vector::Constant(3, 1.0));
    CHECK(p.index == 0);
    CHECK(p.label == "a");
  }

  SUBCASE("three classes by hand") {
    const auto cal = three_way(0.9, 0.8, 0.6);
    const Matrix R = preference_from_loglik(g, cal);
    Matrix want(3, 3);
    want << 0, .9, .8, .1, 0, .6, .2, .4, 0;
    CHECK((R - want).cwiseAbs().maxCoeff() < 1e-12);
    const auto p = predict_from_preference(R, cal);
    CHECK(p.scores[0] == doctest::Approx(1.7));
    CHECK(p.scores[1] == doctest::Approx(0.7));
    CHECK(p.scores[2] == doctest::Approx(0.6));
    CHECK(p.index == 0);

    const Matrix votes = preference_from_loglik(g, cal, ScoringMode::Vote);
    CHECK(votes(0, 1) == 1.0);
    CHECK(votes(2, 1) == 0.0);
    CHECK(predict_from_preference(votes, cal).scores[0] == 2.0);
  }

  SUBCASE("complementary off-diagonal entries") {
    Rng rng(4);
    PairwiseCalibration cal({"a", "b", "c", "d"}, 3.7);
    std::normal_distribution<double> normal(0.0, 2.0);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j) cal.set_offset(i, j, normal(rng));
    Vector gr(4);
    for (Index k = 0; k < 4; ++k) gr[k] = normal(rng);
    const Matrix R = preference_from_loglik(gr, cal);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j)
        if (i != j) CHECK(R(i, j) + R(j, i) == 1.0);
  }
}

TEST_CASE("oracle offsets recover the exact-likelihood argmax") {
  oracle::SyntheticSpec spec;
  spec.classes = 3;
  spec.per_class = 100;
  spec.separation = 0.6;
  spec.seed = 21;
  const auto data = oracle::make_synthetic_dataset(spec);
  ClassifierBundle bundle;
  bundle.models = data.models;
  bundle.calibration = PairwiseCalibration(data.labels, 100.0);
  std::vector<double> log_z;
  for (const auto& m : data.models) log_z.push_back(oracle::exact_log_partition(m));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) bundle.calibration.set_offset(i, j, log_z[i] - log_z[j]);

  int agree = 0;
  for (const auto& V : data.samples) {
    Vector exact(3);
    for (Index k = 0; k < 3; ++k) {
      exact[k] = oracle::exact_loglik(data.models[static_cast<std::size_t>(k)], V);
    }
    Index best = 0;
    exact.maxCoeff(&best);
    agree += score_and_predict(bundle, V).index == static_cast<std::size_t>(best);
  }
  CHECK(agree >= 0.95 * static_cast<double>(data.samples.size()));
}

TEST_CASE("alpha search") {
  const auto grid = alpha_grid();
  REQUIRE(grid.size() == 30);
  CHECK(grid.front() == 0.01);
  CHECK(grid.back() == 100.0);
  for (std::size_t k = 1; k < grid.size(); ++k) CHECK(grid[k] > grid[k - 1]);

  SUBCASE("accuracy constant in alpha picks the smallest") {
    PairwiseCalibration cal({"a", "b"});
    Matrix g(4, 2);
    g << 5, 0, 4, 0, 0, 5, 0, 4;
    const std::vector<std::size_t> truth{0, 0, 1, 1};
    CHECK(fit_alpha_from_loglik(g, truth, cal) == 0.01);
  }

  SUBCASE("agrees with an exhaustive grid evaluation") {
    // Three classes with a deliberately inconsistent C: the best alpha is interior.
    oracle::SyntheticSpec spec;
    spec.classes = 3;
    spec.per_class = 60;
    spec.separation = 0.3;
    spec.seed = 5;
    const auto data = oracle::make_synthetic_dataset(spec);
    PairwiseCalibration cal(data.labels);
    cal.set_offset(0, 1, 0.7);
    cal.set_offset(0, 2, -1.3);
    cal.set_offset(1, 2, 2.1);
    const double alpha = fit_alpha(data.models, cal, data.samples);
    CHECK(alpha >= 0.01);
    CHECK(alpha <= 100.0);

    const auto truth = label_indices(cal, data.samples);
    long best = -1;
    double best_alpha = 0.0;
    for (double a : grid) {
      PairwiseCalibration trial = cal;
      trial.set_alpha(a);
      long correct = 0;
      for (std::size_t k = 0; k < data.samples.size(); ++k) {
        correct += predict_from_loglik(class_logliks(data.models, data.samples[k]), trial).index ==
                   truth[k];
      }
      if (correct > best) best = correct, best_alpha = a;
    }
    CHECK(alpha == best_alpha);
  }

  SUBCASE("needs two classes") {
    const std::vector<LrbmModel> models{LrbmModel(1, 1, 1), LrbmModel(1, 1, 1)};
    const PairwiseCalibration cal({"a", "b"});
    const std::vector<SequenceSample> only_a{{Matrix::Zero(1, 1), "a", "s"}};
    CHECK_THROWS_AS(fit_alpha(models, cal, only_a), ContractError);
  }
}

TEST_CASE("transitivity defects are reported") {
  auto cal = three_way(0.9, 0.8, 0.6);
  const auto defects = transitivity_defects(cal);
  CHECK(defects.size() == 3);
  PairwiseCalibration consistent({"a", "b", "c"});
  consistent.set_offset(0, 1, 1.0);
  consistent.set_offset(1, 2, 2.0);
  consistent.set_offset(0, 2, 3.0);
  for (const auto& d : transitivity_defects(consistent)) CHECK(d.defect == 0.0);
}

TEST_CASE("ROC area") {
  CHECK(bool_auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
  CHECK(bool_auc({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}) == 0.0);
  CHECK(bool_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == 0.5);
  CHECK(bool_auc({0.9, 0.2, 0.3, 0.1}, {1, 1, 0, 0}) == 0.75);
  CHECK(std::isnan(bool_auc({0.1, 0.2}, {1, 1})));
}

TEST_CASE("summaries") {
  SUBCASE("hand tally of four samples") {
    const std::vector<std::string> labels{"A", "B"};
    const std::vector<std::size_t> truth{0, 0, 1, 1};
    std::vector<Prediction> preds{prediction(0, {0.9, 0.1}), prediction(1, {0.2, 0.8}),
                                  prediction(1, {0.3, 0.7}), prediction(1, {0.1, 0.9})};
    const auto r = summarize(labels, truth, preds, {{"A", "g1"}, {"B", "g2"}});
    Eigen::MatrixXi confusion(2, 2);
    confusion << 1, 1, 0, 2;
    CHECK(r.confusion == confusion);
    CHECK(r.confusion_percent(0, 0) == 50.0);
    CHECK(r.confusion_percent(0, 1) == 50.0);
    CHECK(r.confusion_percent(1, 1) == 100.0);
    CHECK(r.hit_rate[0] == 0.5);
    CHECK(r.hit_rate[1] == 1.0);
    CHECK(r.macro_accuracy == 0.75);
    CHECK(r.accuracy == 0.75);
    CHECK(r.auc[0] == 0.75);
    CHECK(r.auc[1] == 0.75);
    REQUIRE(r.groups == std::vector<std::string>{"g1", "g2"});
    CHECK(r.group_f1[0] == doctest::Approx(2.0 / 3.0));
    CHECK(r.group_f1[1] == doctest::Approx(0.8));
  }

  SUBCASE("grouped labels") {
    const std::vector<std::string> labels{"A", "B", "C"};
    const std::vector<std::size_t> truth{0, 1, 2};
    std::vector<Prediction> preds{prediction(1, {0, 1, 0}), prediction(0, {1, 0, 0}),
                                  prediction(2, {0, 0, 1})};
    const auto r = summarize(labels, truth, preds, {{"A", "left"}, {"B", "left"}});
    REQUIRE(r.groups == std::vector<std::string>{"left", "C"});
    CHECK(r.group_f1[0] == 1.0);
    CHECK(r.group_f1[1] == 1.0);
    CHECK(r.accuracy == doctest::Approx(1.0 / 3.0));
  }

  SUBCASE("perfect bundle") {
    oracle::SyntheticSpec spec;
    spec.classes = 2;
    spec.per_class = 30;
    spec.separation = 3.0;
    const auto data = oracle::make_synthetic_dataset(spec);
    ClassifierBundle bundle;
    bundle.models = data.models;
    bundle.calibration = PairwiseCalibration(data.labels, 1.0);
    bundle.calibration.set_offset(0, 1, oracle::exact_log_partition(data.models[0]) -
                                            oracle::exact_log_partition(data.models[1]));
    const auto r = evaluate(bundle, data.samples);
    CHECK(r.accuracy == 1.0);
    CHECK(r.confusion_percent == Matrix::Identity(2, 2) * 100.0);
    CHECK(r.auc[0] == 1.0);
    CHECK(r.auc[1] == 1.0);

    auto unknown = data.samples;
    unknown[0].label = "nobody";
    CHECK_THROWS_AS(evaluate(bundle, unknown), DataError);
    unknown[0].label.reset();
    CHECK_THROWS_AS(evaluate(bundle, unknown), DataError);
  }
}

TEST_CASE("bundle validation") {
  ClassifierBundle b;
  b.models = {LrbmModel(2, 3, 4)};
  b.calibration = PairwiseCalibration({"a"});
  CHECK_THROWS_AS(b.validate(), ContractError);
  b.models.push_back(LrbmModel(2, 4, 4));
  b.calibration = PairwiseCalibration({"a", "b"});
  CHECK_THROWS_AS(b.validate(), ContractError);
  b.models[1] = LrbmModel(2, 3, 7);
  CHECK_NOTHROW(b.validate());
  b.calibration = PairwiseCalibration({"a", "b", "c"});
  CHECK_THROWS_AS(b.validate(), ContractError);
}

}  // TEST_SUITE
