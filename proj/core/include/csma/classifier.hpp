#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "csma/autoencoder.hpp"
#include "csma/label.hpp"
#include "csma/matrix.hpp"

namespace csma {

/// Two sigmoid hidden layers and one sigmoid output unit. The score is the
/// probability of the adult class; a sample is labelled adult iff
/// score >= threshold.
struct ClassifierModel {
  Matrix w1;  // h1 x input
  Matrix b1;  // 1 x h1
  Matrix w2;  // h2 x h1
  Matrix b2;  // 1 x h2
  Matrix w3;  // 1 x h2
  Matrix b3;  // 1 x 1
  double threshold = 0.5;

  std::size_t input_dim() const noexcept { return w1.cols(); }
  void validate() const;

  friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;
};

/// Hidden sizes for an m-dimensional input: floor(m/4) and floor(m/8), each
/// at least 1.
struct ClassifierDims {
  std::size_t hidden1;
  std::size_t hidden2;

  static ClassifierDims for_input(std::size_t m);
};

ClassifierModel init_classifier(std::size_t input_dim, ClassifierDims dims,
                                const TrainConfig& cfg, Rng& rng);

struct ClassifierGradients {
  Matrix w1, b1, w2, b2, w3, b3;
};

/// Binary cross-entropy summed over rows.
double classifier_loss(const ClassifierModel& model, const Matrix& features,
                       std::span<const Label> labels);
ClassifierGradients classifier_gradients(const ClassifierModel& model, const Matrix& features,
                                         std::span<const Label> labels);

/// Per-sample SGD on binary cross-entropy. Samples are visited in an order
/// fixed by their content (a hash of features and label), optionally
/// reshuffled each epoch, so the result does not depend on the row order
/// of `features`.
///
/// Errors: ErrorKind::insufficient when only one class is present.
ClassifierModel train_classifier(const Matrix& features, std::span<const Label> labels,
                                 const TrainConfig& cfg,
                                 std::optional<ClassifierDims> dims = std::nullopt);

std::vector<double> predict_score(const ClassifierModel& model, const Matrix& features);
std::vector<Label> predict_labels(const ClassifierModel& model, const Matrix& features);
Label decide(const ClassifierModel& model, double score) noexcept;

}  // namespace csma
