#include <gtest/gtest.h>

#include <json.hpp>

#include "csma/error.hpp"
#include "csma/experiment.hpp"

using namespace csma;

namespace {

LabeledDataset synth(std::uint64_t seed, std::size_t n = 100, std::size_t dim = 16) {
  SynthParams p;
  p.n_per_class = n;
  p.dim = dim;
  p.seed = seed;
  return synth_two_class(p);
}

ExperimentConfig quick_config() {
  ExperimentConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 0.01;
  cfg.classifier_epochs = 100;
  cfg.seed = 5;
  return cfg;
}

nlohmann::json without_timing(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  j.erase("timing");
  return j;
}

}  // namespace

TEST(Config, DefaultsFollowThePublishedSetup) {
  const ExperimentConfig cfg;
  EXPECT_EQ(cfg.resolved_layers(784), (std::vector<std::size_t>{784, 784}));
  EXPECT_EQ(cfg.epochs, 100u);
  EXPECT_EQ(cfg.learning_rate, 0.01);
  EXPECT_EQ(cfg.train_fraction, 0.70);
  EXPECT_EQ(cfg.lambda_for_layer(0), 0.1);
  EXPECT_EQ(cfg.lambda_for_layer(1), 0.1);
  EXPECT_FALSE(cfg.classifier_dims.has_value());
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, ParsesTextWithCommentsAndDashes) {
  ExperimentConfig cfg;
  apply_config_text(cfg, "# experiment\n"
                         "data = train.csv\n"
                         "layers=32,16   # two layers\n"
                         "lambda=0.5,0\n"
                         "learning-rate=0.02\n"
                         "\n"
                         "classifier_dims=8,4\n"
                         "shuffle=yes\n"
                         "seed=18446744073709551615\n"
                         "height=4\nwidth=8\n");
  EXPECT_EQ(cfg.csv_path, "train.csv");
  EXPECT_EQ(cfg.layer_dims, (std::vector<std::size_t>{32, 16}));
  EXPECT_EQ(cfg.lambda_for_layer(0), 0.5);
  EXPECT_EQ(cfg.lambda_for_layer(1), 0.0);
  EXPECT_EQ(cfg.lambda_for_layer(5), 0.0);
  EXPECT_EQ(cfg.learning_rate, 0.02);
  EXPECT_EQ(cfg.classifier_dims->hidden1, 8u);
  EXPECT_TRUE(cfg.shuffle);
  EXPECT_EQ(cfg.seed, ~std::uint64_t{0});
  EXPECT_EQ(cfg.image_shape, (ImageShape{4, 8}));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  for (const char* text : {"colour=red\n", "epochs=ten\n", "epochs=-1\n", "layers=3,,4\n",
                           "shuffle=maybe\n", "method=pca\n", "no equals sign\n",
                           "classifier_dims=1,2,3\n"}) {
    ExperimentConfig cfg;
    try {
      apply_config_text(cfg, text);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::parameter) << text;
    }
  }
  ExperimentConfig cfg;
  cfg.train_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Config, EntriesRoundTrip) {
  ExperimentConfig cfg = quick_config();
  cfg.layer_dims = {9, 4};
  cfg.lambdas = {0.3, 0.1};
  cfg.method = FeatureMethod::sdae;
  cfg.image_shape = ImageShape{4, 4};
  cfg.classifier_dims = ClassifierDims{3, 2};
  cfg.learning_rate = 0.1 + 0.2;  // not a short decimal
  ExperimentConfig back;
  for (const auto& [k, v] : config_entries(cfg)) apply_config_value(back, k, v);
  EXPECT_EQ(config_entries(back), config_entries(cfg));
  EXPECT_EQ(back.learning_rate, cfg.learning_rate);
}

TEST(Experiment, EndToEndOnSeparableTask) {
  const LabeledDataset ds = synth(1);
  const ExperimentConfig cfg = quick_config();
  const ExperimentResult r = run_experiment(ds, cfg);
  EXPECT_EQ(r.split.train.size(), 140u);
  EXPECT_EQ(r.split.test.size(), 60u);
  EXPECT_EQ(r.features_model.layer_dims(), (std::vector<std::size_t>{16, 16}));
  EXPECT_EQ(r.classifier.w1.rows(), 4u);
  EXPECT_EQ(r.classifier.w2.rows(), 2u);
  EXPECT_GE(r.test_report.mean_accuracy, 95.0);

  // Evaluating on the training data of the converged run.
  const Predictions train_pred = predict(r.features_model, r.classifier, r.split.train.samples);
  const EvalReport train_report = evaluate(train_pred.labels, train_pred.scores, r.split.train.labels);
  EXPECT_GE(train_report.mean_accuracy, 95.0);
}

TEST(Experiment, DeterministicManifest) {
  const LabeledDataset ds = synth(2, 60);
  const ExperimentConfig cfg = quick_config();
  const ExperimentResult a = run_experiment(ds, cfg);
  const ExperimentResult b = run_experiment(ds, cfg);
  EXPECT_EQ(a.test_scores, b.test_scores);
  const std::string ma = manifest_json(make_manifest(cfg, ds, a, 1.0));
  const std::string mb = manifest_json(make_manifest(cfg, ds, b, 2.0));
  EXPECT_NE(ma, mb);
  EXPECT_EQ(without_timing(ma), without_timing(mb));

  const auto j = nlohmann::json::parse(ma);
  EXPECT_EQ(j["split"]["train"], 84);
  EXPECT_EQ(j["training"]["layer_epoch_losses"].size(), 2u);
  EXPECT_EQ(j["training"]["layer_epoch_losses"][0].size(), 50u);
  EXPECT_EQ(j["metrics"]["mean_accuracy"].get<double>(), a.test_report.mean_accuracy);
  EXPECT_EQ(j["config"]["seed"], "5");
}

TEST(Experiment, SeedChangesTheRun) {
  const LabeledDataset ds = synth(3, 40);
  ExperimentConfig cfg = quick_config();
  cfg.epochs = 3;
  const auto a = run_experiment(ds, cfg);
  cfg.seed += 1;
  const auto b = run_experiment(ds, cfg);
  EXPECT_NE(a.split.train_indices, b.split.train_indices);
}

TEST(Experiment, DenoisingBaselineRuns) {
  const LabeledDataset ds = synth(4, 60);
  ExperimentConfig cfg = quick_config();
  cfg.method = FeatureMethod::sdae;
  cfg.layer_dims = {12};
  const ExperimentResult r = run_experiment(ds, cfg);
  EXPECT_EQ(r.features_model.layer_dims(), (std::vector<std::size_t>{12}));
  EXPECT_GE(r.test_report.mean_accuracy, 90.0);
}

TEST(Experiment, ErrorsCarryStage) {
  // One minor sample leaves nothing to train on.
  const LabeledDataset full = synth(5, 20);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < full.size(); ++i)
    if (full.labels[i] == kAdult || keep.empty()) keep.push_back(i);
  LabeledDataset ds;
  ds.samples = select_rows(full.samples, keep);
  for (std::size_t i : keep) ds.labels.push_back(full.labels[i]);
  try {
    run_experiment(ds, quick_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient);
    EXPECT_EQ(std::string(e.what()).rfind("split: ", 0), 0u) << e.what();
  }
}

TEST(Experiment, PredictRejectsWrongWidth) {
  const LabeledDataset ds = synth(6, 30);
  ExperimentConfig cfg = quick_config();
  cfg.epochs = 2;
  const auto r = run_experiment(ds, cfg);
  try {
    predict(r.features_model, r.classifier, Matrix(3, 10, 0.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
    EXPECT_NE(std::string(e.what()).find("16"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("10"), std::string::npos);
  }
}

TEST(Experiment, LoadDatasetNeedsASource) {
  try {
    load_dataset(ExperimentConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parameter);
  }
}
