#pragma once

// End-to-end experiment: balanced split, greedy CSMA (or SDAE baseline)
// feature learning, classifier training and held-out evaluation, plus the
// flat key=value configuration format and the JSON run manifest.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csma/autoencoder.hpp"
#include "csma/classifier.hpp"
#include "csma/dataset.hpp"
#include "csma/metrics.hpp"

namespace csma {

enum class FeatureMethod { csma, sdae };

struct ExperimentConfig {
  // Dataset source: IDX pair, or CSV.
  std::string images_path;
  std::string labels_path;
  int binarize_threshold = 5;
  std::string csv_path;
  std::string label_column = "label";
  std::optional<ImageShape> image_shape;

  FeatureMethod method = FeatureMethod::csma;
  std::vector<std::size_t> layer_dims;   // empty: [m, m]
  std::vector<double> lambdas{0.1};      // one value applies to every layer
  double corruption_prob = 0.25;         // SDAE only
  std::optional<ClassifierDims> classifier_dims;  // default [m/4, m/8]

  std::size_t epochs = 100;
  double learning_rate = 0.01;
  std::optional<std::size_t> classifier_epochs;    // default: epochs
  double classifier_learning_rate = 0.2;
  bool shuffle = false;
  double train_fraction = 0.70;
  std::uint64_t seed = 0;

  std::string model_out;
  std::string manifest_out;
  std::string test_split_out;

  /// Resolved feature layer sizes for an input of width m.
  std::vector<std::size_t> resolved_layers(std::size_t m) const;
  double lambda_for_layer(std::size_t i) const;
  void validate() const;
};

/// Applies `key=value` pairs (keys use '_' or '-', '#' starts a comment) on
/// top of `cfg`. Unknown keys raise ErrorKind::parameter.
void apply_config_text(ExperimentConfig& cfg, const std::string& text);
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);
void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Flat key=value rendering of every field; parses back to an equal config.
std::map<std::string, std::string> config_entries(const ExperimentConfig& cfg);

LabeledDataset load_dataset(const ExperimentConfig& cfg);

struct ExperimentResult {
  BalancedSplit split;
  CsmaModel features_model;
  ClassifierModel classifier;
  std::vector<double> test_scores;
  std::vector<Label> test_predictions;
  EvalReport test_report;
};

/// Seeds: split, each feature layer and the classifier draw independent
/// streams from cfg.seed.
ExperimentResult run_experiment(const LabeledDataset& ds, const ExperimentConfig& cfg);

/// Scores and hard decisions of a trained model on a dataset.
struct Predictions {
  std::vector<double> scores;
  std::vector<Label> labels;
};
Predictions predict(const CsmaModel& features_model, const ClassifierModel& classifier,
                    const Matrix& samples);

struct RunManifest {
  ExperimentConfig config;
  std::uint64_t dataset_fingerprint = 0;
  std::size_t dataset_size = 0;
  std::size_t dataset_dim = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<std::vector<double>> layer_losses;
  EvalReport metrics;
  double wall_clock_seconds = 0.0;
};

RunManifest make_manifest(const ExperimentConfig& cfg, const LabeledDataset& ds,
                          const ExperimentResult& result, double wall_clock_seconds);
/// Pretty-printed JSON. Doubles are printed with round-trip precision.
std::string manifest_json(const RunManifest& manifest);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace csma
