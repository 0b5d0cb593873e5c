#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "csma/classifier.hpp"
#include "csma/dataset.hpp"
#include "csma/error.hpp"

using namespace csma;

namespace {

double ref_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double ref_score(const ClassifierModel& m, std::span<const double> x) {
  std::vector<double> a1(m.w1.rows()), a2(m.w2.rows());
  for (std::size_t h = 0; h < a1.size(); ++h) {
    double z = m.b1(0, h);
    for (std::size_t k = 0; k < x.size(); ++k) z += m.w1(h, k) * x[k];
    a1[h] = ref_sigmoid(z);
  }
  for (std::size_t h = 0; h < a2.size(); ++h) {
    double z = m.b2(0, h);
    for (std::size_t k = 0; k < a1.size(); ++k) z += m.w2(h, k) * a1[k];
    a2[h] = ref_sigmoid(z);
  }
  double z = m.b3(0, 0);
  for (std::size_t k = 0; k < a2.size(); ++k) z += m.w3(0, k) * a2[k];
  return ref_sigmoid(z);
}

double ref_loss(const ClassifierModel& m, const Matrix& x, std::span<const Label> y) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double s = ref_score(m, x.row(i));
    total += y[i] == kAdult ? -std::log(s) : -std::log(1.0 - s);
  }
  return total;
}

ClassifierModel random_model(std::size_t in, ClassifierDims dims, std::uint64_t seed) {
  Rng rng(seed);
  TrainConfig cfg;
  cfg.init_scale = 0.8;
  ClassifierModel m = init_classifier(in, dims, cfg, rng);
  for (Matrix* b : {&m.b1, &m.b2, &m.b3})
    for (double& v : b->values()) v = rng.uniform(-0.5, 0.5);
  return m;
}

Matrix uniform(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform();
  return m;
}

}  // namespace

TEST(Classifier, DefaultDimsAreQuarterAndEighth) {
  const auto d = ClassifierDims::for_input(784);
  EXPECT_EQ(d.hidden1, 196u);
  EXPECT_EQ(d.hidden2, 98u);
  const auto tiny = ClassifierDims::for_input(5);
  EXPECT_EQ(tiny.hidden1, 1u);
  EXPECT_EQ(tiny.hidden2, 1u);
}

TEST(Classifier, ScoresAndLossMatchDefinition) {
  Rng rng(1);
  const ClassifierModel m = random_model(6, {4, 3}, 2);
  const Matrix x = uniform(rng, 8, 6);
  std::vector<Label> y(8);
  for (std::size_t i = 0; i < 8; ++i) y[i] = i % 3 == 0 ? kAdult : kMinor;
  const auto scores = predict_score(m, x);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(scores[i], ref_score(m, x.row(i)), 1e-14);
  EXPECT_NEAR(classifier_loss(m, x, y), ref_loss(m, x, y), 1e-12);
}

TEST(Classifier, GradientsMatchFiniteDifferences) {
  Rng rng(3);
  ClassifierModel m = random_model(6, {4, 3}, 4);
  const Matrix x = uniform(rng, 10, 6);
  std::vector<Label> y(10);
  for (std::size_t i = 0; i < 10; ++i) y[i] = i % 2 ? kAdult : kMinor;
  const ClassifierGradients g = classifier_gradients(m, x, y);
  const std::pair<Matrix*, const Matrix*> params[] = {{&m.w1, &g.w1}, {&m.b1, &g.b1}, {&m.w2, &g.w2},
                                                      {&m.b2, &g.b2}, {&m.w3, &g.w3}, {&m.b3, &g.b3}};
  const double h = 1e-6;
  for (auto [param, grad] : params) {
    for (std::size_t i = 0; i < param->size(); ++i) {
      const double saved = param->values()[i];
      param->values()[i] = saved + h;
      const double up = ref_loss(m, x, y);
      param->values()[i] = saved - h;
      const double down = ref_loss(m, x, y);
      param->values()[i] = saved;
      const double num = (up - down) / (2 * h);
      const double a = grad->values()[i];
      EXPECT_LT(std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-3}), 1e-5);
    }
  }
}

TEST(Classifier, LearnsSeparableTask) {
  SynthParams p;
  p.n_per_class = 100;
  p.dim = 16;
  p.seed = 5;
  const LabeledDataset ds = synth_two_class(p);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.learning_rate = 0.05;
  cfg.seed = 6;
  const ClassifierModel m = train_classifier(ds.samples, ds.labels, cfg);
  const auto pred = predict_labels(m, ds.samples);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == ds.labels[i];
  EXPECT_GE(correct, 195u);
}

TEST(Classifier, RowPermutationDoesNotChangeModel) {
  SynthParams p;
  p.n_per_class = 30;
  p.dim = 8;
  p.seed = 7;
  const LabeledDataset ds = synth_two_class(p);
  std::vector<std::size_t> perm(ds.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(8);
  rng.shuffle(std::span(perm));
  const Matrix shuffled = select_rows(ds.samples, perm);
  std::vector<Label> labels(ds.size());
  for (std::size_t i = 0; i < perm.size(); ++i) labels[i] = ds.labels[perm[i]];

  for (bool shuffle : {false, true}) {
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 9;
    cfg.shuffle = shuffle;
    EXPECT_EQ(train_classifier(ds.samples, ds.labels, cfg), train_classifier(shuffled, labels, cfg));
  }
}

TEST(Classifier, SingleClassIsInsufficient) {
  const Matrix x(4, 3, 0.5);
  const std::vector<Label> y(4, kAdult);
  try {
    train_classifier(x, y, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient);
  }
}

TEST(Classifier, ShapeAndLabelChecks) {
  const ClassifierModel m = random_model(4, {2, 2}, 1);
  const std::vector<Label> y{0, 1};
  EXPECT_THROW(predict_score(m, Matrix(2, 5)), Error);
  EXPECT_THROW(classifier_loss(m, Matrix(3, 4), y), Error);
  const std::vector<Label> bad{0, 2};
  EXPECT_THROW(classifier_loss(m, Matrix(2, 4), bad), Error);
}

TEST(Classifier, ThresholdDecision) {
  ClassifierModel m = random_model(2, {1, 1}, 1);
  EXPECT_EQ(decide(m, 0.5), kAdult);
  EXPECT_EQ(decide(m, 0.4999), kMinor);
  m.threshold = 0.8;
  EXPECT_EQ(decide(m, 0.7), kMinor);
}
