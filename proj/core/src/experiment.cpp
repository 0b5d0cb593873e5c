#include "csma/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "csma/error.hpp"
#include "csma/model_io.hpp"

namespace csma {

namespace {

constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kLayerStreamBase = 100;
constexpr std::uint64_t kClassifierStream = 200;
constexpr std::uint64_t kDenoisingStream = 300;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorKind::parameter, "config: invalid value '" + value + "' for " + key);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) bad_value(key, value);
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, trim(item)));
  if (out.empty()) bad_value(key, value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += full(items[i]);
    } else {
      out += std::to_string(items[i]);
    }
  }
  return out;
}

template <typename F>
auto in_stage(const char* stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(stage) + ": " + e.what());
  }
}

}  // namespace

std::vector<std::size_t> ExperimentConfig::resolved_layers(std::size_t m) const {
  if (!layer_dims.empty()) return layer_dims;
  return {m, m};
}

double ExperimentConfig::lambda_for_layer(std::size_t i) const {
  if (lambdas.empty()) return 0.1;
  return i < lambdas.size() ? lambdas[i] : lambdas.back();
}

void ExperimentConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::parameter, "config: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::parameter, "config: learning_rate must be > 0");
  if (classifier_epochs && *classifier_epochs < 1) {
    throw Error(ErrorKind::parameter, "config: classifier_epochs must be >= 1");
  }
  if (!(classifier_learning_rate > 0.0)) {
    throw Error(ErrorKind::parameter, "config: classifier_learning_rate must be > 0");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::parameter, "config: train_fraction must lie in (0, 1)");
  }
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw Error(ErrorKind::parameter, "config: lambda must be >= 0");
  }
  if (std::ranges::find(layer_dims, std::size_t{0}) != layer_dims.end()) {
    throw Error(ErrorKind::parameter, "config: layer sizes must be >= 1");
  }
  if (!(corruption_prob >= 0.0 && corruption_prob < 1.0)) {
    throw Error(ErrorKind::parameter, "config: corruption must lie in [0, 1)");
  }
}

void apply_config_value(ExperimentConfig& cfg, const std::string& raw_key,
                        const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::ranges::replace(key, '-', '_');
  const std::string value = trim(raw_value);

  auto shape = [&]() -> ImageShape& {
    if (!cfg.image_shape) cfg.image_shape = ImageShape{};
    return *cfg.image_shape;
  };

  if (key == "images") cfg.images_path = value;
  else if (key == "labels") cfg.labels_path = value;
  else if (key == "binarize_threshold") cfg.binarize_threshold = parse_number<int>(key, value);
  else if (key == "data") cfg.csv_path = value;
  else if (key == "label_column") cfg.label_column = value;
  else if (key == "height") {
    if (value.empty()) cfg.image_shape.reset();
    else shape().height = parse_number<std::size_t>(key, value);
  } else if (key == "width") {
    if (value.empty()) cfg.image_shape.reset();
    else shape().width = parse_number<std::size_t>(key, value);
  } else if (key == "method") {
    if (value == "csma") cfg.method = FeatureMethod::csma;
    else if (value == "sdae") cfg.method = FeatureMethod::sdae;
    else bad_value(key, value);
  } else if (key == "layers") {
    cfg.layer_dims = value.empty() ? std::vector<std::size_t>{} : parse_list<std::size_t>(key, value);
  } else if (key == "lambda") {
    cfg.lambdas = parse_list<double>(key, value);
  } else if (key == "corruption") {
    cfg.corruption_prob = parse_number<double>(key, value);
  } else if (key == "classifier_dims") {
    if (value.empty()) {
      cfg.classifier_dims.reset();
    } else {
      const auto dims = parse_list<std::size_t>(key, value);
      if (dims.size() != 2) bad_value(key, value);
      cfg.classifier_dims = ClassifierDims{dims[0], dims[1]};
    }
  } else if (key == "epochs") {
    cfg.epochs = parse_number<std::size_t>(key, value);
  } else if (key == "learning_rate" || key == "lr") {
    cfg.learning_rate = parse_number<double>(key, value);
  } else if (key == "classifier_epochs") {
    if (value.empty()) cfg.classifier_epochs.reset();
    else cfg.classifier_epochs = parse_number<std::size_t>(key, value);
  } else if (key == "classifier_learning_rate" || key == "classifier_lr") {
    cfg.classifier_learning_rate = parse_number<double>(key, value);
  } else if (key == "shuffle") {
    cfg.shuffle = parse_bool(key, value);
  } else if (key == "train_fraction") {
    cfg.train_fraction = parse_number<double>(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "model_out") cfg.model_out = value;
  else if (key == "manifest_out") cfg.manifest_out = value;
  else if (key == "test_split_out") cfg.test_split_out = value;
  else throw Error(ErrorKind::parameter, "config: unknown key '" + key + "'");
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::parameter,
                  "config line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str());
}

std::map<std::string, std::string> config_entries(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> e;
  e["images"] = cfg.images_path;
  e["labels"] = cfg.labels_path;
  e["binarize_threshold"] = std::to_string(cfg.binarize_threshold);
  e["data"] = cfg.csv_path;
  e["label_column"] = cfg.label_column;
  e["height"] = cfg.image_shape ? std::to_string(cfg.image_shape->height) : "";
  e["width"] = cfg.image_shape ? std::to_string(cfg.image_shape->width) : "";
  e["method"] = cfg.method == FeatureMethod::csma ? "csma" : "sdae";
  e["layers"] = join(cfg.layer_dims);
  e["lambda"] = join(cfg.lambdas);
  e["corruption"] = full(cfg.corruption_prob);
  e["classifier_dims"] =
      cfg.classifier_dims ? std::to_string(cfg.classifier_dims->hidden1) + "," +
                                std::to_string(cfg.classifier_dims->hidden2)
                          : "";
  e["epochs"] = std::to_string(cfg.epochs);
  e["learning_rate"] = full(cfg.learning_rate);
  e["classifier_epochs"] = cfg.classifier_epochs ? std::to_string(*cfg.classifier_epochs) : "";
  e["classifier_learning_rate"] = full(cfg.classifier_learning_rate);
  e["shuffle"] = cfg.shuffle ? "true" : "false";
  e["train_fraction"] = full(cfg.train_fraction);
  e["seed"] = std::to_string(cfg.seed);
  e["model_out"] = cfg.model_out;
  e["manifest_out"] = cfg.manifest_out;
  e["test_split_out"] = cfg.test_split_out;
  return e;
}

LabeledDataset load_dataset(const ExperimentConfig& cfg) {
  LabeledDataset ds;
  if (!cfg.images_path.empty() || !cfg.labels_path.empty()) {
    if (cfg.images_path.empty() || cfg.labels_path.empty()) {
      throw Error(ErrorKind::parameter, "IDX input needs both images and labels paths");
    }
    ds = load_idx(cfg.images_path, cfg.labels_path, BinarizeRule{cfg.binarize_threshold});
  } else if (!cfg.csv_path.empty()) {
    ds = load_csv(cfg.csv_path, cfg.label_column);
  } else {
    throw Error(ErrorKind::parameter, "no dataset given (images+labels or data)");
  }
  if (cfg.image_shape) ds.image_shape = cfg.image_shape;
  ds.validate();
  return ds;
}

Predictions predict(const CsmaModel& features_model, const ClassifierModel& classifier,
                    const Matrix& samples) {
  if (samples.cols() != features_model.input_dim()) {
    throw Error(ErrorKind::shape, "model expects " + std::to_string(features_model.input_dim()) +
                                      " features but data has " + std::to_string(samples.cols()));
  }
  const Matrix features = extract_features(features_model, samples);
  Predictions p;
  p.scores = predict_score(classifier, features);
  p.labels.resize(p.scores.size());
  std::ranges::transform(p.scores, p.labels.begin(),
                         [&](double s) { return decide(classifier, s); });
  return p;
}

ExperimentResult run_experiment(const LabeledDataset& ds, const ExperimentConfig& cfg) {
  cfg.validate();
  ds.validate();
  ExperimentResult result;
  result.split = in_stage("split", [&] {
    return split_balanced(ds, cfg.train_fraction, mix_seed(cfg.seed, kSplitStream));
  });
  const auto& train = result.split.train;
  const auto dims = cfg.resolved_layers(ds.dim());

  result.features_model = in_stage("feature learning", [&] {
    if (cfg.method == FeatureMethod::sdae) {
      TrainConfig tc;
      tc.epochs = cfg.epochs;
      tc.learning_rate = cfg.learning_rate;
      tc.lambda = 0.0;
      tc.shuffle = cfg.shuffle;
      tc.seed = mix_seed(cfg.seed, kDenoisingStream);
      return train_stacked_denoising(train.samples, dims, tc, cfg.corruption_prob);
    }
    std::vector<TrainConfig> configs(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
      configs[i].epochs = cfg.epochs;
      configs[i].learning_rate = cfg.learning_rate;
      configs[i].lambda = cfg.lambda_for_layer(i);
      configs[i].shuffle = cfg.shuffle;
      configs[i].seed = mix_seed(cfg.seed, kLayerStreamBase + i);
    }
    return train_stacked(train.rows_of(kMinor), train.rows_of(kAdult), dims, configs);
  });

  result.classifier = in_stage("classifier", [&] {
    TrainConfig tc;
    tc.epochs = cfg.classifier_epochs.value_or(cfg.epochs);
    tc.learning_rate = cfg.classifier_learning_rate;
    tc.shuffle = cfg.shuffle;
    tc.seed = mix_seed(cfg.seed, kClassifierStream);
    const Matrix features = extract_features(result.features_model, train.samples);
    return train_classifier(features, train.labels, tc, cfg.classifier_dims);
  });

  in_stage("evaluation", [&] {
    auto p = predict(result.features_model, result.classifier, result.split.test.samples);
    result.test_scores = std::move(p.scores);
    result.test_predictions = std::move(p.labels);
    result.test_report = evaluate(result.test_predictions, result.test_scores,
                                  result.split.test.labels);
    return 0;
  });
  return result;
}

RunManifest make_manifest(const ExperimentConfig& cfg, const LabeledDataset& ds,
                          const ExperimentResult& result, double wall_clock_seconds) {
  RunManifest m;
  m.config = cfg;
  m.dataset_fingerprint = fingerprint(ds);
  m.dataset_size = ds.size();
  m.dataset_dim = ds.dim();
  m.train_size = result.split.train.size();
  m.test_size = result.split.test.size();
  m.layer_losses = result.features_model.training_log;
  m.metrics = result.test_report;
  m.wall_clock_seconds = wall_clock_seconds;
  return m;
}

std::string manifest_json(const RunManifest& m) {
  using nlohmann::ordered_json;
  char hex[19];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(m.dataset_fingerprint));

  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : config_entries(m.config)) config[k] = v;
  const auto dims = m.config.resolved_layers(m.dataset_dim);
  const auto clf = m.config.classifier_dims.value_or(
      ClassifierDims::for_input(dims.empty() ? m.dataset_dim : dims.back()));

  ordered_json j;
  j["format"] = "csma-run-manifest";
  j["version"] = 1;
  j["config"] = config;
  j["resolved"] = {{"layer_dims", dims}, {"classifier_dims", {clf.hidden1, clf.hidden2}}};
  j["dataset"] = {{"fingerprint_fnv1a64", hex}, {"samples", m.dataset_size}, {"dim", m.dataset_dim}};
  j["split"] = {{"train", m.train_size}, {"test", m.test_size}};
  j["training"] = {{"layer_epoch_losses", m.layer_losses}};
  const auto& r = m.metrics;
  j["metrics"] = {
      {"confusion", {{r.confusion[0][0], r.confusion[0][1]}, {r.confusion[1][0], r.confusion[1][1]}}},
      {"acc_minor", r.acc_minor},
      {"acc_adult", r.acc_adult},
      {"mean_accuracy", r.mean_accuracy},
      {"mean_accuracy_display", format_percent(r.mean_accuracy)},
      {"minor_misclassification_rate", r.minor_misclassification_rate},
      {"auc", r.auc},
  };
  j["timing"] = {{"wall_clock_seconds", m.wall_clock_seconds}};
  return j.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  const std::string text = manifest_json(manifest);
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace csma
