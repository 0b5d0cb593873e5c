#include "csma_tools/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "csma/error.hpp"
#include "csma/experiment.hpp"
#include "csma/metrics.hpp"
#include "csma/model_io.hpp"
#include "csma/perturb.hpp"
#include "csma_tools/gradcheck.hpp"

namespace csma::tools {

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parameter: return kExitParameter;
    case ErrorKind::io: return kExitIo;
    case ErrorKind::format: return kExitFormat;
    case ErrorKind::shape: return kExitShape;
    case ErrorKind::divergence:
    case ErrorKind::numeric: return kExitDivergence;
    case ErrorKind::consistency: return kExitConsistency;
    case ErrorKind::validation: return kExitValidation;
    case ErrorKind::insufficient: return kExitInsufficient;
  }
  return kExitFailure;
}

std::string dashed(std::string key) {
  std::ranges::replace(key, '_', '-');
  return key;
}

// Options whose values are handed to apply_config_value by key.
struct KeyedOptions {
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add(CLI::App* app, const std::string& key, const std::string& help) {
    options.emplace_back(key, app->add_option("--" + dashed(key), values[key], help));
  }
  void apply(ExperimentConfig& cfg) const {
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) apply_config_value(cfg, key, values.at(key));
    }
  }
};

void add_dataset_options(CLI::App* app, KeyedOptions& keyed) {
  keyed.add(app, "images", "IDX3 image file");
  keyed.add(app, "labels", "IDX1 label file");
  keyed.add(app, "binarize_threshold", "IDX labels below this value are class 0");
  keyed.add(app, "data", "CSV dataset with a header row");
  keyed.add(app, "label_column", "label column of the CSV");
  keyed.add(app, "height", "image height in pixels");
  keyed.add(app, "width", "image width in pixels");
}

struct PerturbOptions {
  double blur_sigma = 3.0;
  double noise_std = 0.01;
  double noise_mean = 0.0;
  std::size_t holes = 10;
  std::size_t hole_size = 3;
  CLI::Option* blur = nullptr;
  CLI::Option* std_dev = nullptr;
  CLI::Option* mean = nullptr;
  CLI::Option* count = nullptr;
  CLI::Option* size = nullptr;

  void add(CLI::App* app) {
    blur = app->add_option("--blur-sigma", blur_sigma, "Gaussian blur of this sigma");
    std_dev = app->add_option("--noise-std", noise_std, "additive Gaussian noise std");
    mean = app->add_option("--noise-mean", noise_mean, "additive Gaussian noise mean");
    count = app->add_option("--holes", holes, "number of zeroed square holes");
    size = app->add_option("--hole-size", hole_size, "side of each hole");
  }

  std::optional<PerturbationSpec> spec(std::uint64_t seed) const {
    std::vector<PerturbationSpec> chosen;
    if (blur->count()) chosen.push_back({GaussianBlur{blur_sigma}, seed});
    if (std_dev->count() || mean->count()) chosen.push_back({GaussianNoise{noise_mean, noise_std}, seed});
    if (count->count() || size->count()) chosen.push_back({Holes{holes, hole_size}, seed});
    if (chosen.size() > 1) {
      throw Error(ErrorKind::parameter, "choose at most one of blur, noise and holes");
    }
    if (chosen.empty()) return std::nullopt;
    return chosen.front();
  }
};

void write_text(const std::string& path, const std::string& text) {
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

// Minimal comma-separated reader for files this tool writes.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const std::string& path) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw Error(ErrorKind::format, path + ": no '" + name + "' column");
  }
};

Table read_table(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  std::stringstream in(std::string(bytes.begin(), bytes.end()));
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      cells.push_back(cell);
    }
    return cells;
  };
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::format, path + ": empty file");
  t.header = split(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw Error(ErrorKind::format, path + ": line " + std::to_string(line_no) + " has " +
                                         std::to_string(cells.size()) + " fields, expected " +
                                         std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::vector<int> int_column(const Table& t, const std::string& name, const std::string& path) {
  const std::size_t col = t.column(name, path);
  std::vector<int> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    const std::string& cell = row[col];
    if (cell != "0" && cell != "1") {
      throw Error(ErrorKind::validation, path + ": '" + name + "' must be 0 or 1, got '" + cell + "'");
    }
    out.push_back(cell == "1");
  }
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int cmd_train(const std::string& config_path, const KeyedOptions& keyed, std::ostream& out) {
  ExperimentConfig cfg;
  if (!config_path.empty()) apply_config_file(cfg, config_path);
  keyed.apply(cfg);
  cfg.validate();
  if (cfg.model_out.empty()) throw Error(ErrorKind::parameter, "train: model_out is required");
  if (cfg.manifest_out.empty()) cfg.manifest_out = cfg.model_out + ".json";

  const auto start = std::chrono::steady_clock::now();
  const LabeledDataset ds = load_dataset(cfg);
  const ExperimentResult result = run_experiment(ds, cfg);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  save_model(cfg.model_out, result.features_model, &result.classifier);
  if (!cfg.test_split_out.empty()) write_csv(cfg.test_split_out, result.split.test);
  write_manifest(cfg.manifest_out, make_manifest(cfg, ds, result, seconds));

  out << "samples=" << ds.size() << " dim=" << ds.dim() << '\n'
      << "train=" << result.split.train.size() << " test=" << result.split.test.size() << '\n';
  const auto& log = result.features_model.training_log;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (!log[i].empty()) out << "layer" << i << "_final_loss=" << fmt("%.6g", log[i].back()) << '\n';
  }
  write_report(out, result.test_report);
  out << "model=" << cfg.model_out << "\nmanifest=" << cfg.manifest_out << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& model_path, const KeyedOptions& keyed, const PerturbOptions& pert,
             std::uint64_t perturb_seed, const std::string& report_out, const std::string& roc_out,
             const std::string& predictions_out, std::ostream& out) {
  if (model_path.empty()) throw Error(ErrorKind::parameter, "eval: --model is required");
  ExperimentConfig cfg;
  keyed.apply(cfg);
  const ModelBundle bundle = load_model(model_path);
  if (!bundle.classifier) throw Error(ErrorKind::format, model_path + ": no classifier section");
  LabeledDataset ds = load_dataset(cfg);
  if (const auto spec = pert.spec(perturb_seed)) {
    ds = perturb(ds, *spec);
    out << "perturbation=" << spec->describe() << '\n';
  }
  const Predictions p = predict(bundle.csma, *bundle.classifier, ds.samples);
  const EvalReport report = evaluate(p.labels, p.scores, ds.labels);

  std::ostringstream text;
  write_report(text, report);
  if (report_out.empty()) {
    out << text.str();
  } else {
    write_text(report_out, text.str());
    out << "mean_accuracy=" << format_percent(report.mean_accuracy) << '\n';
  }
  if (!roc_out.empty()) {
    std::ostringstream roc;
    write_roc_csv(roc, report.roc);
    write_text(roc_out, roc.str());
  }
  if (!predictions_out.empty()) {
    std::ostringstream csv;
    csv << "index,label,prediction,score,correct\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
      csv << i << ',' << int(ds.labels[i]) << ',' << int(p.labels[i]) << ','
          << fmt("%.17g", p.scores[i]) << ',' << int(ds.labels[i] == p.labels[i]) << '\n';
    }
    write_text(predictions_out, csv.str());
  }
  return kExitOk;
}

int cmd_compare(const std::string& a_path, const std::string& b_path,
                const std::string& labels_path, std::ostream& out) {
  if (a_path.empty() || b_path.empty()) {
    throw Error(ErrorKind::parameter, "compare: --a and --b are required");
  }
  const Table a = read_table(a_path);
  const Table b = read_table(b_path);
  const auto pred_a = int_column(a, "prediction", a_path);
  const auto pred_b = int_column(b, "prediction", b_path);
  std::vector<int> labels;
  if (!labels_path.empty()) {
    labels = int_column(read_table(labels_path), "label", labels_path);
  } else {
    labels = int_column(a, "label", a_path);
    if (int_column(b, "label", b_path) != labels) {
      throw Error(ErrorKind::consistency, "compare: label columns of A and B differ");
    }
  }
  if (pred_a.size() != pred_b.size() || pred_a.size() != labels.size()) {
    throw Error(ErrorKind::consistency,
                "compare: lengths differ (A " + std::to_string(pred_a.size()) + ", B " +
                    std::to_string(pred_b.size()) + ", labels " + std::to_string(labels.size()) + ")");
  }
  std::vector<bool> correct_a(labels.size()), correct_b(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    correct_a[i] = pred_a[i] == labels[i];
    correct_b[i] = pred_b[i] == labels[i];
  }
  write_mcnemar(out, mcnemar_test(correct_a, correct_b));
  return kExitOk;
}

int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& out) {
  const GradcheckReport report = run_gradcheck(opts);
  for (const auto& c : report.cases) {
    out << c.name << ": parameters=" << c.parameters
        << " max_rel_error=" << fmt("%.3e", c.max_rel_error) << '\n';
  }
  out << "max_rel_error=" << fmt("%.3e", report.max_rel_error)
      << " tolerance=" << fmt("%.0e", opts.tolerance) << '\n'
      << "result=" << (report.passed ? "PASS" : "FAIL") << '\n';
  return report.passed ? kExitOk : kExitGradcheck;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Class specific mean autoencoder experiments", "csma"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train features and classifier, write model + manifest");
  std::string config_path;
  train->add_option("--config", config_path, "key=value config file; flags override it");
  KeyedOptions train_keys;
  {
    const auto entries = config_entries(ExperimentConfig{});
    for (const auto& [key, value] : entries) train_keys.add(train, key, "config key " + key);
    train->add_option("--lr", train_keys.values["lr"], "alias of --learning-rate");
    train_keys.options.emplace_back("lr", train->get_option("--lr"));
  }

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a saved model on a dataset");
  std::string model_path, report_out, roc_out, predictions_out;
  std::uint64_t perturb_seed = 0;
  eval->add_option("--model", model_path, "model file written by train");
  KeyedOptions eval_keys;
  add_dataset_options(eval, eval_keys);
  PerturbOptions eval_pert;
  eval_pert.add(eval);
  eval->add_option("--perturb-seed", perturb_seed, "seed of noise and hole placement");
  eval->add_option("--report-out", report_out, "key=value metrics report (default stdout)");
  eval->add_option("--roc-out", roc_out, "ROC curve CSV");
  eval->add_option("--predictions-out", predictions_out, "per-sample predictions CSV");

  // compare
  auto* compare = app.add_subcommand("compare", "McNemar test between two prediction files");
  std::string a_path, b_path, labels_path;
  compare->add_option("--a", a_path, "predictions CSV of model A");
  compare->add_option("--b", b_path, "predictions CSV of model B");
  compare->add_option("--labels", labels_path, "CSV with a label column (default: from A)");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  GradcheckOptions gc;
  gradcheck->add_option("--seed", gc.seed);
  gradcheck->add_option("--input-dim", gc.input_dim, "at most 16");
  gradcheck->add_option("--hidden-dim", gc.hidden_dim, "at most 16");
  gradcheck->add_option("--tolerance", gc.tolerance);
  gradcheck->add_flag("--corrupt-gradient", gc.corrupt_gradient,
                      "offset one analytic gradient entry (negative control)");

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic two-class dataset as CSV");
  SynthParams sp;
  std::string synth_out;
  std::size_t synth_h = 0, synth_w = 0;
  synth->add_option("--seed", sp.seed)->required();
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--n-per-class", sp.n_per_class);
  synth->add_option("--dim", sp.dim);
  synth->add_option("--separation", sp.mean_separation);
  synth->add_option("--noise", sp.noise_std);
  auto* synth_height = synth->add_option("--height", synth_h);
  auto* synth_width = synth->add_option("--width", synth_w);

  // perturb
  auto* pert_cmd = app.add_subcommand("perturb", "write a perturbed copy of a dataset as CSV");
  KeyedOptions pert_keys;
  add_dataset_options(pert_cmd, pert_keys);
  PerturbOptions pert_opts;
  pert_opts.add(pert_cmd);
  std::uint64_t pert_seed = 0;
  std::string pert_out;
  pert_cmd->add_option("--seed", pert_seed)->required();
  pert_cmd->add_option("--out", pert_out)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitParameter;
  }

  try {
    if (train->parsed()) return cmd_train(config_path, train_keys, out);
    if (eval->parsed()) {
      return cmd_eval(model_path, eval_keys, eval_pert, perturb_seed, report_out, roc_out,
                      predictions_out, out);
    }
    if (compare->parsed()) return cmd_compare(a_path, b_path, labels_path, out);
    if (gradcheck->parsed()) return cmd_gradcheck(gc, out);
    if (synth->parsed()) {
      if (synth_height->count() || synth_width->count()) sp.image_shape = ImageShape{synth_h, synth_w};
      const LabeledDataset ds = synth_two_class(sp);
      write_csv(synth_out, ds);
      out << "samples=" << ds.size() << " dim=" << ds.dim();
      if (ds.image_shape) out << " height=" << ds.image_shape->height << " width=" << ds.image_shape->width;
      out << '\n';
      return kExitOk;
    }
    if (pert_cmd->parsed()) {
      ExperimentConfig cfg;
      pert_keys.apply(cfg);
      const auto spec = pert_opts.spec(pert_seed);
      if (!spec) throw Error(ErrorKind::parameter, "perturb: choose blur, noise or holes");
      const LabeledDataset ds = perturb(load_dataset(cfg), *spec);
      write_csv(pert_out, ds);
      out << "perturbation=" << spec->describe() << " samples=" << ds.size() << '\n';
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace csma::tools
