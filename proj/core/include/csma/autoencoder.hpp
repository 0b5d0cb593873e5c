#pragma once

// Class specific mean autoencoder (CSMA).
//
// A single layer maps a sample x (one row) to the feature f = sigmoid(x W_e^T)
// and reconstructs it linearly as f W_d^T. There are no bias terms. Training
// minimises, per sample of class c,
//
//     ||x - W_d f||^2 + lambda * ||f - m_c||^2
//
// where m_c is the mean feature of class c under the current weights. The
// means are recomputed once per epoch and held fixed while every sample of
// the epoch takes one gradient step (all minors first, then all adults).
// Deeper models are built greedily: each layer is trained on the features of
// the layer below and only the encoders are kept for feature extraction.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "csma/label.hpp"
#include "csma/matrix.hpp"

namespace csma {

struct LayerWeights {
  Matrix w_enc;  // hidden_dim x input_dim
  Matrix w_dec;  // input_dim x hidden_dim

  std::size_t input_dim() const noexcept { return w_enc.cols(); }
  std::size_t hidden_dim() const noexcept { return w_enc.rows(); }

  static LayerWeights zeros(std::size_t input_dim, std::size_t hidden_dim);
  /// Throws ErrorKind::shape if the encoder and decoder do not mirror each other.
  void validate() const;

  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

struct ClassMeans {
  Matrix minor;  // 1 x hidden_dim
  Matrix adult;  // 1 x hidden_dim

  const Matrix& of(Label label) const { return label == kMinor ? minor : adult; }

  friend bool operator==(const ClassMeans&, const ClassMeans&) = default;
};

struct TrainConfig {
  std::size_t epochs = 100;
  double learning_rate = 0.01;
  double lambda = 0.1;
  std::uint64_t seed = 0;
  /// Half-width of the uniform initialisation range. Unset means
  /// sqrt(6 / (fan_in + fan_out)).
  std::optional<double> init_scale;
  /// Visit samples in a fresh random order every epoch. For CSMA the
  /// permutation stays inside each class block.
  bool shuffle = false;

  void validate() const;
};

struct LayerGradients {
  Matrix w_enc;
  Matrix w_dec;
};

/// Uniform initialisation of both matrices from `rng` (encoder first).
LayerWeights init_layer(std::size_t input_dim, std::size_t hidden_dim,
                        const TrainConfig& cfg, Rng& rng);

Matrix encode(const LayerWeights& w, const Matrix& x);
Matrix decode(const LayerWeights& w, const Matrix& features);
/// Mean encoded feature of `samples` (all rows of one class).
Matrix class_mean(const LayerWeights& w, const Matrix& samples);
ClassMeans compute_class_means(const LayerWeights& w, const Matrix& x_minor,
                               const Matrix& x_adult);

/// Squared reconstruction error summed over the batch.
double ae_loss(const LayerWeights& w, const Matrix& x);
LayerGradients ae_gradients(const LayerWeights& w, const Matrix& x);

/// ae_loss plus lambda * sum_rows ||f(x_row) - mean_c||^2.
double csma_loss(const LayerWeights& w, const Matrix& x_c, const Matrix& mean_c,
                 double lambda);
/// Exact gradient of csma_loss with mean_c held constant.
LayerGradients csma_gradients(const LayerWeights& w, const Matrix& x_c,
                              const Matrix& mean_c, double lambda);

/// One per-sample gradient-descent step on csma_loss. Bitwise equal to
/// subtracting learning_rate * csma_gradients for that single row.
void csma_sgd_step(LayerWeights& w, std::span<const double> x, const Matrix& mean_c,
                   double lambda, double learning_rate);

/// Hook for observing Algorithm-1 training from tests and tools.
class TrainObserver {
 public:
  virtual ~TrainObserver() = default;
  /// Called after the class means for `epoch` (0-based) are computed.
  virtual void on_epoch_begin(std::size_t /*epoch*/, const ClassMeans& /*means*/) {}
  /// Called before each per-sample step with the mean used as its target.
  virtual void on_step(std::size_t /*epoch*/, Label /*label*/, std::size_t /*row*/,
                       const Matrix& /*mean_used*/) {}
};

struct SingleLayerResult {
  LayerWeights weights;
  ClassMeans means;               // means under the final weights
  double initial_loss = 0.0;      // total csma loss before any update
  std::vector<double> loss_log;   // total csma loss after each epoch
};

/// Errors: ErrorKind::insufficient if either class is empty;
/// ErrorKind::divergence if an epoch loss is non-finite or exceeds ten times
/// the initial loss.
SingleLayerResult train_single_layer(const Matrix& x_minor, const Matrix& x_adult,
                                     std::size_t hidden_dim, const TrainConfig& cfg,
                                     TrainObserver* observer = nullptr);

struct CsmaModel {
  std::vector<LayerWeights> layers;
  std::vector<double> lambdas;
  std::vector<ClassMeans> class_means;           // empty when not trained here
  std::vector<std::vector<double>> training_log;  // per layer, per epoch

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::vector<std::size_t> layer_dims() const;
  void validate() const;
};

CsmaModel train_stacked(const Matrix& x_minor, const Matrix& x_adult,
                        std::span<const std::size_t> layer_dims,
                        std::span<const TrainConfig> layer_configs);
/// Same config for every layer; layer i uses seed cfg.seed + i.
CsmaModel train_stacked(const Matrix& x_minor, const Matrix& x_adult,
                        std::span<const std::size_t> layer_dims, const TrainConfig& cfg);

/// Forward pass through every encoder. An empty model returns `x` unchanged.
Matrix extract_features(const CsmaModel& model, const Matrix& x);

// Unsupervised baselines.

struct AutoencoderResult {
  LayerWeights weights;
  double initial_loss = 0.0;
  std::vector<double> loss_log;
};

/// Plain autoencoder: per-sample SGD on ||x - W_d sigmoid(W_e x)||^2 over the
/// rows of `x` in order (cfg.lambda is ignored).
AutoencoderResult train_autoencoder(const Matrix& x, std::size_t hidden_dim,
                                    const TrainConfig& cfg);

/// Denoising autoencoder: each presentation encodes a copy of the sample whose
/// pixels are zeroed independently with probability `corruption_prob` and
/// reconstructs the clean sample.
AutoencoderResult train_denoising_baseline(const Matrix& x, std::size_t hidden_dim,
                                           const TrainConfig& cfg, double corruption_prob);

CsmaModel train_stacked_denoising(const Matrix& x, std::span<const std::size_t> layer_dims,
                                  const TrainConfig& cfg, double corruption_prob);

/// Writes `in` to `out` with each entry zeroed with probability p.
void corrupt(std::span<const double> in, std::span<double> out, double p, Rng& rng);

}  // namespace csma
