#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using lrbm::ScoringMode;
using namespace lrbm::cli;

const std::map<std::string, ScoringMode> kScoring{{"soft", ScoringMode::Soft},
                                                   {"vote", ScoringMode::Vote}};

void add_scoring(CLI::App* cmd, ScoringMode& mode) {
  cmd->add_option("--scoring", mode, "soft (pairwise probabilities) or vote")
      ->transform(CLI::CheckedTransformer(kScoring, CLI::ignore_case));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequence classification with locally interacting RBMs"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", "lrbm 0.1.0");

  PreprocessOptions pre;
  auto* preprocess = app.add_subcommand("preprocess", "Impute, resample, smooth and normalise a dataset");
  preprocess->add_option("input", pre.input, "input dataset (JSON Lines)")->required();
  preprocess->add_option("-o,--output", pre.output, "output dataset")->required();
  preprocess->add_option("--target-length", pre.target_length, "frames after resampling, 0 keeps lengths");
  preprocess->add_option("--smooth-window", pre.smooth_window, "odd moving-average window, 1 disables");
  preprocess->add_option("--feature-subset,--features", pre.feature_subset, "dimensions to keep, in order")->delimiter(',');
  preprocess->add_option("--skeleton", pre.skeleton, "skeleton file for bone-length renormalisation");
  preprocess->add_option("--normalize-stats", pre.normalize_stats, "normalisation statistics file");
  preprocess->add_flag("--fit-stats", pre.fit_stats, "fit statistics on this dataset and write them");

  TrainOptions tr;
  auto& cfg = tr.config;
  auto* train = app.add_subcommand("train", "Train one model per class and calibrate the classifier");
  train->add_option("dataset", tr.dataset, "training dataset")->required();
  train->add_option("-o,--output", tr.output, "bundle file")->required();
  train->add_option("--hidden", cfg.hidden_units, "hidden units per model");
  train->add_option("--epochs", cfg.epochs);
  train->add_option("--lr", cfg.learning_rate, "learning rate");
  train->add_option("--cd-steps", cfg.cd_steps);
  train->add_option("--mf-sweeps", cfg.mf_sweeps, "mean-field sweeps per reconstruction");
  train->add_option("--momentum", cfg.momentum);
  train->add_option("--weight-decay", cfg.weight_decay);
  train->add_option("--minibatch", cfg.minibatch);
  train->add_option("--candidates", cfg.candidates, "models trained per class");
  train->add_option("--stability-margin", cfg.stability_margin);
  train->add_option("--init-std", cfg.init_weight_std, "standard deviation of initial weights");
  train->add_option("--seed", cfg.seed);
  train->add_flag("--learn-visible-bias", cfg.learn_visible_bias);
  train->add_flag("--freeze-u,--freeze-interactions", cfg.freeze_u, "keep U at zero (plain Gaussian RBM)");
  train->add_flag("--stochastic-reconstruction", cfg.stochastic_reconstruction);
  train->add_option("--val-fraction", tr.val_fraction, "held-out fraction per class");
  train->add_flag("--normalize", tr.normalize, "fit z-score statistics on the training split");
  add_scoring(train, tr.scoring);

  PredictOptions pr;
  auto* predict = app.add_subcommand("predict", "Write per-class scores and predictions as CSV");
  predict->add_option("bundle", pr.bundle)->required();
  predict->add_option("dataset", pr.dataset)->required();
  predict->add_option("-o,--output", pr.output, "CSV file")->required();
  add_scoring(predict, pr.scoring);

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Accuracy, confusion matrix, AUC and group F1");
  evaluate->add_option("bundle", ev.bundle)->required();
  evaluate->add_option("dataset", ev.dataset)->required();
  evaluate->add_option("-o,--output", ev.output, "JSON report")->required();
  evaluate->add_option("--confusion-csv", ev.confusion_csv);
  evaluate->add_option("--groups", ev.groups, "JSON object mapping label to group");
  add_scoring(evaluate, ev.scoring);

  RobustnessOptions rb;
  auto* robustness = app.add_subcommand("robustness", "Accuracy under injected noise or missing values");
  robustness->add_option("bundle", rb.bundle)->required();
  robustness->add_option("dataset", rb.dataset)->required();
  robustness->add_option("-o,--output", rb.output, "CSV file")->required();
  robustness->add_option("--mode", rb.mode, "noise or missing")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, Corruption>{{"noise", Corruption::Noise},
                                            {"missing", Corruption::Missing}},
          CLI::ignore_case));
  robustness->add_option("--fractions", rb.fractions)->delimiter(',');
  robustness->add_option("--seeds", rb.seeds)->delimiter(',');
  add_scoring(robustness, rb.scoring);

  SynthOptions sy;
  auto* synth = app.add_subcommand("synth", "Sample a labelled dataset from random ground-truth models");
  synth->add_option("-o,--output", sy.output, "dataset file")->required();
  synth->add_option("--models", sy.models_output, "write the ground-truth models here");
  synth->add_option("--classes", sy.classes);
  synth->add_option("--per-class", sy.per_class);
  synth->add_option("--dim", sy.visible_dim);
  synth->add_option("--frames", sy.frames);
  synth->add_option("--hidden", sy.hidden_dim);
  synth->add_option("--separation", sy.separation);
  synth->add_option("--weight-scale", sy.weight_scale);
  synth->add_option("--interaction-radius", sy.interaction_radius);
  synth->add_option("--seed", sy.seed);

  InspectOptions in;
  auto* inspect = app.add_subcommand("inspect", "Summarise a bundle as JSON");
  inspect->add_option("bundle", in.bundle)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*preprocess) cmd_preprocess(pre);
    if (*train) cmd_train(tr, &std::cerr);
    if (*predict) cmd_predict(pr);
    if (*evaluate) cmd_evaluate(ev);
    if (*robustness) {
      for (const auto& row : cmd_robustness(rb)) {
        std::cout << row.fraction << "\t" << row.mean_accuracy << " +- " << row.std_accuracy
                  << "\n";
      }
    }
    if (*synth) cmd_synth(sy);
    if (*inspect) cmd_inspect(in, std::cout);
  } catch (...) {
    return report_exception(std::cerr);
  }
  return kSuccess;
}
