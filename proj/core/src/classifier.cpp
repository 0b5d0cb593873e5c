#include "csma/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "csma/error.hpp"
#include "csma/hash.hpp"

namespace csma {

namespace {

constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kOrderStream = 12;

struct Activations {
  std::vector<double> a1, a2;
  double logit = 0.0;
  double score = 0.0;
};

void check_features(const ClassifierModel& model, const Matrix& features, const char* op) {
  if (features.cols() != model.input_dim()) {
    throw Error(ErrorKind::shape, std::string(op) + ": features " + features.shape() +
                                      " do not match classifier input dimension " +
                                      std::to_string(model.input_dim()));
  }
}

void check_labels(const Matrix& features, std::span<const Label> labels, const char* op) {
  if (labels.size() != features.rows()) {
    throw Error(ErrorKind::consistency, std::string(op) + ": " + std::to_string(labels.size()) +
                                            " labels for " + std::to_string(features.rows()) +
                                            " rows");
  }
  for (Label l : labels) {
    if (l != kMinor && l != kAdult) {
      throw Error(ErrorKind::validation, std::string(op) + ": label " + std::to_string(l) +
                                             " is not 0 or 1");
    }
  }
}

double dense_unit(std::span<const double> weights, double bias, std::span<const double> in) {
  double z = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) z += weights[i] * in[i];
  return z + bias;
}

void forward(const ClassifierModel& m, std::span<const double> x, Activations& act) {
  act.a1.resize(m.w1.rows());
  act.a2.resize(m.w2.rows());
  for (std::size_t h = 0; h < m.w1.rows(); ++h)
    act.a1[h] = sigmoid(dense_unit(m.w1.row(h), m.b1(0, h), x));
  for (std::size_t h = 0; h < m.w2.rows(); ++h)
    act.a2[h] = sigmoid(dense_unit(m.w2.row(h), m.b2(0, h), act.a1));
  act.logit = dense_unit(m.w3.row(0), m.b3(0, 0), act.a2);
  act.score = sigmoid(act.logit);
}

// log(1 + e^t) without overflow or cancellation.
double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

// Cross-entropy from the logit: -log(sigmoid(z)) = softplus(-z).
double bce(double logit, Label y) {
  return y == kAdult ? softplus(-logit) : softplus(logit);
}

ClassifierGradients zero_gradients(const ClassifierModel& m) {
  return {Matrix(m.w1.rows(), m.w1.cols()), Matrix(1, m.b1.cols()),
          Matrix(m.w2.rows(), m.w2.cols()), Matrix(1, m.b2.cols()),
          Matrix(1, m.w3.cols()),           Matrix(1, 1)};
}

// Adds the gradient of one row's loss to g.
void accumulate_row(const ClassifierModel& m, std::span<const double> x, Label y,
                    const Activations& act, std::vector<double>& d1, std::vector<double>& d2,
                    ClassifierGradients& g) {
  const double d3 = act.score - static_cast<double>(y);
  for (std::size_t h = 0; h < act.a2.size(); ++h) g.w3(0, h) += d3 * act.a2[h];
  g.b3(0, 0) += d3;

  d2.assign(act.a2.size(), 0.0);
  for (std::size_t h = 0; h < act.a2.size(); ++h) {
    const double a = act.a2[h];
    d2[h] = d3 * m.w3(0, h) * (a * (1.0 - a));
  }
  for (std::size_t h = 0; h < d2.size(); ++h) {
    auto row = g.w2.row(h);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += d2[h] * act.a1[j];
    g.b2(0, h) += d2[h];
  }

  d1.assign(act.a1.size(), 0.0);
  for (std::size_t h = 0; h < d2.size(); ++h) {
    const auto w = m.w2.row(h);
    for (std::size_t j = 0; j < w.size(); ++j) d1[j] += d2[h] * w[j];
  }
  for (std::size_t j = 0; j < d1.size(); ++j) {
    const double a = act.a1[j];
    d1[j] *= a * (1.0 - a);
  }
  for (std::size_t j = 0; j < d1.size(); ++j) {
    auto row = g.w1.row(j);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] += d1[j] * x[k];
    g.b1(0, j) += d1[j];
  }
}

void descend(Matrix& param, const Matrix& grad, double learning_rate) {
  auto p = param.values();
  const auto d = grad.values();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= learning_rate * d[i];
}

void clear(ClassifierGradients& g) {
  for (Matrix* m : {&g.w1, &g.b1, &g.w2, &g.b2, &g.w3, &g.b3})
    std::fill(m->values().begin(), m->values().end(), 0.0);
}

// Visiting order determined by sample content only.
std::vector<std::size_t> canonical_order(const Matrix& features, std::span<const Label> labels) {
  std::vector<std::uint64_t> keys(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    Fnv1a64 h;
    h.add_doubles(features.row(i));
    h.add_byte(labels[i]);
    keys[i] = h.digest();
  }
  std::vector<std::size_t> order(features.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    const auto ra = features.row(a);
    const auto rb = features.row(b);
    if (!std::ranges::equal(ra, rb)) return std::ranges::lexicographical_compare(ra, rb);
    return labels[a] < labels[b];
  });
  return order;
}

}  // namespace

void ClassifierModel::validate() const {
  const bool ok = b1.rows() == 1 && b1.cols() == w1.rows() && w2.cols() == w1.rows() &&
                  b2.rows() == 1 && b2.cols() == w2.rows() && w3.rows() == 1 &&
                  w3.cols() == w2.rows() && b3.rows() == 1 && b3.cols() == 1;
  if (!ok) {
    throw Error(ErrorKind::shape, "ClassifierModel: layer shapes do not chain (" + w1.shape() +
                                      ", " + w2.shape() + ", " + w3.shape() + ")");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorKind::parameter, "ClassifierModel: threshold must lie in (0, 1)");
  }
}

ClassifierDims ClassifierDims::for_input(std::size_t m) {
  return {std::max<std::size_t>(1, m / 4), std::max<std::size_t>(1, m / 8)};
}

ClassifierModel init_classifier(std::size_t input_dim, ClassifierDims dims,
                                const TrainConfig& cfg, Rng& rng) {
  if (input_dim == 0 || dims.hidden1 == 0 || dims.hidden2 == 0) {
    throw Error(ErrorKind::parameter, "init_classifier: dimensions must be >= 1");
  }
  auto glorot = [&](std::size_t fan_out, std::size_t fan_in) {
    const double r = cfg.init_scale.value_or(
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)));
    return rand_matrix(rng, fan_out, fan_in, r);
  };
  ClassifierModel m;
  m.w1 = glorot(dims.hidden1, input_dim);
  m.b1 = Matrix(1, dims.hidden1);
  m.w2 = glorot(dims.hidden2, dims.hidden1);
  m.b2 = Matrix(1, dims.hidden2);
  m.w3 = glorot(1, dims.hidden2);
  m.b3 = Matrix(1, 1);
  return m;
}

double classifier_loss(const ClassifierModel& model, const Matrix& features,
                       std::span<const Label> labels) {
  model.validate();
  check_features(model, features, "classifier_loss");
  check_labels(features, labels, "classifier_loss");
  Activations act;
  double total = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    forward(model, features.row(i), act);
    total += bce(act.logit, labels[i]);
  }
  return total;
}

ClassifierGradients classifier_gradients(const ClassifierModel& model, const Matrix& features,
                                         std::span<const Label> labels) {
  model.validate();
  check_features(model, features, "classifier_gradients");
  check_labels(features, labels, "classifier_gradients");
  ClassifierGradients g = zero_gradients(model);
  Activations act;
  std::vector<double> d1, d2;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    forward(model, features.row(i), act);
    accumulate_row(model, features.row(i), labels[i], act, d1, d2, g);
  }
  return g;
}

ClassifierModel train_classifier(const Matrix& features, std::span<const Label> labels,
                                 const TrainConfig& cfg, std::optional<ClassifierDims> dims) {
  cfg.validate();
  check_labels(features, labels, "train_classifier");
  const auto adults = std::count(labels.begin(), labels.end(), kAdult);
  if (adults == 0 || static_cast<std::size_t>(adults) == labels.size()) {
    throw Error(ErrorKind::insufficient, "train_classifier: training labels contain one class only");
  }

  Rng init_rng(mix_seed(cfg.seed, kInitStream));
  Rng order_rng(mix_seed(cfg.seed, kOrderStream));
  ClassifierModel model = init_classifier(
      features.cols(), dims.value_or(ClassifierDims::for_input(features.cols())), cfg, init_rng);

  auto order = canonical_order(features, labels);
  ClassifierGradients g = zero_gradients(model);
  Activations act;
  std::vector<double> d1, d2;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) order_rng.shuffle(std::span(order));
    for (std::size_t idx : order) {
      const auto x = features.row(idx);
      forward(model, x, act);
      clear(g);
      accumulate_row(model, x, labels[idx], act, d1, d2, g);
      descend(model.w1, g.w1, cfg.learning_rate);
      descend(model.b1, g.b1, cfg.learning_rate);
      descend(model.w2, g.w2, cfg.learning_rate);
      descend(model.b2, g.b2, cfg.learning_rate);
      descend(model.w3, g.w3, cfg.learning_rate);
      descend(model.b3, g.b3, cfg.learning_rate);
    }
    for (const Matrix* m : {&model.w1, &model.w2, &model.w3, &model.b1, &model.b2, &model.b3}) {
      for (double v : m->values()) {
        if (!std::isfinite(v)) {
          throw Error(ErrorKind::divergence, "train_classifier: weights became non-finite at epoch " +
                                                 std::to_string(epoch + 1));
        }
      }
    }
  }
  return model;
}

std::vector<double> predict_score(const ClassifierModel& model, const Matrix& features) {
  model.validate();
  check_features(model, features, "predict_score");
  std::vector<double> scores(features.rows());
  Activations act;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    forward(model, features.row(i), act);
    scores[i] = act.score;
  }
  return scores;
}

Label decide(const ClassifierModel& model, double score) noexcept {
  return score >= model.threshold ? kAdult : kMinor;
}

std::vector<Label> predict_labels(const ClassifierModel& model, const Matrix& features) {
  const auto scores = predict_score(model, features);
  std::vector<Label> labels(scores.size());
  std::ranges::transform(scores, labels.begin(), [&](double s) { return decide(model, s); });
  return labels;
}

}  // namespace csma
