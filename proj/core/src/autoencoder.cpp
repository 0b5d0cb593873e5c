#include "csma/autoencoder.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "csma/error.hpp"

namespace csma {

namespace {

// Independent generator streams derived from TrainConfig::seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kOrderStream = 2;
constexpr std::uint64_t kCorruptionStream = 3;

constexpr double kDivergenceFactor = 10.0;

struct Scratch {
  std::vector<double> features;  // f
  std::vector<double> residual;  // reconstruction - target
  std::vector<double> delta;     // d loss / d pre-activation

  explicit Scratch(const LayerWeights& w)
      : features(w.hidden_dim()), residual(w.input_dim()), delta(w.hidden_dim()) {}
};

void check_batch(const LayerWeights& w, const Matrix& x, const char* op) {
  if (x.cols() != w.input_dim()) {
    throw Error(ErrorKind::shape, std::string(op) + ": batch " + x.shape() +
                                      " does not match layer input dimension " +
                                      std::to_string(w.input_dim()));
  }
}

void check_mean(const LayerWeights& w, const Matrix& mean_c, double lambda, const char* op) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::parameter, std::string(op) + ": lambda must be finite and >= 0");
  }
  if (mean_c.rows() != 1 || mean_c.cols() != w.hidden_dim()) {
    throw Error(ErrorKind::shape, std::string(op) + ": class mean " + mean_c.shape() +
                                      " must be 1x" + std::to_string(w.hidden_dim()));
  }
}

// Forward pass of one row: fills features and residual.
void forward_row(const LayerWeights& w, std::span<const double> input,
                 std::span<const double> target, Scratch& s) {
  const std::size_t hidden = w.hidden_dim();
  for (std::size_t h = 0; h < hidden; ++h) s.features[h] = sigmoid(dot(input, w.w_enc.row(h)));
  for (std::size_t n = 0; n < w.input_dim(); ++n)
    s.residual[n] = dot(s.features, w.w_dec.row(n)) - target[n];
}

void finish_delta(std::span<const double> mean, double lambda, Scratch& s) {
  for (std::size_t h = 0; h < s.delta.size(); ++h) {
    const double f = s.features[h];
    double d = 2.0 * s.delta[h];
    if (!mean.empty()) d += 2.0 * lambda * (f - mean[h]);
    s.delta[h] = d * (f * (1.0 - f));
  }
}

void backward_row(const LayerWeights& w, std::span<const double> mean, double lambda,
                  Scratch& s) {
  std::fill(s.delta.begin(), s.delta.end(), 0.0);
  for (std::size_t n = 0; n < w.input_dim(); ++n) {
    const double e = s.residual[n];
    const auto dec = w.w_dec.row(n);
    for (std::size_t h = 0; h < dec.size(); ++h) s.delta[h] += e * dec[h];
  }
  finish_delta(mean, lambda, s);
}

double row_loss(std::span<const double> mean, double lambda, const Scratch& s) {
  double recon = 0.0;
  for (double e : s.residual) recon += e * e;
  if (mean.empty()) return recon;
  double penalty = 0.0;
  for (std::size_t h = 0; h < s.features.size(); ++h) {
    const double d = s.features[h] - mean[h];
    penalty += d * d;
  }
  return recon + lambda * penalty;
}

void accumulate(std::span<const double> input, const Scratch& s, LayerGradients& g) {
  for (std::size_t n = 0; n < g.w_dec.rows(); ++n) {
    auto row = g.w_dec.row(n);
    const double e2 = 2.0 * s.residual[n];
    for (std::size_t h = 0; h < row.size(); ++h) row[h] += e2 * s.features[h];
  }
  for (std::size_t h = 0; h < g.w_enc.rows(); ++h) {
    auto row = g.w_enc.row(h);
    const double d = s.delta[h];
    for (std::size_t n = 0; n < row.size(); ++n) row[n] += d * input[n];
  }
}

// backward_row and the update in one sweep over the decoder. Each decoder
// entry is read for the delta before it is overwritten, so the arithmetic is
// exactly that of backward_row followed by a separate update.
void sgd_step(LayerWeights& w, std::span<const double> input, std::span<const double> target,
              std::span<const double> mean, double lambda, double learning_rate, Scratch& s) {
  forward_row(w, input, target, s);
  std::fill(s.delta.begin(), s.delta.end(), 0.0);
  for (std::size_t n = 0; n < w.input_dim(); ++n) {
    const double e = s.residual[n];
    const double e2 = 2.0 * e;
    auto dec = w.w_dec.row(n);
    for (std::size_t h = 0; h < dec.size(); ++h) {
      s.delta[h] += e * dec[h];
      dec[h] -= learning_rate * (e2 * s.features[h]);
    }
  }
  finish_delta(mean, lambda, s);
  for (std::size_t h = 0; h < w.hidden_dim(); ++h) {
    auto row = w.w_enc.row(h);
    const double d = s.delta[h];
    for (std::size_t n = 0; n < row.size(); ++n) row[n] -= learning_rate * (d * input[n]);
  }
}

// Continues the running sum `total`, so losses over consecutive batches add
// up in row order.
double batch_loss(const LayerWeights& w, const Matrix& x, std::span<const double> mean,
                  double lambda, double total = 0.0) {
  Scratch s(w);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    forward_row(w, x.row(i), x.row(i), s);
    total += row_loss(mean, lambda, s);
  }
  return total;
}

LayerGradients batch_gradients(const LayerWeights& w, const Matrix& x,
                               std::span<const double> mean, double lambda) {
  Scratch s(w);
  LayerGradients g{Matrix(w.hidden_dim(), w.input_dim()), Matrix(w.input_dim(), w.hidden_dim())};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    forward_row(w, x.row(i), x.row(i), s);
    backward_row(w, mean, lambda, s);
    accumulate(x.row(i), s, g);
  }
  return g;
}

bool all_finite(const LayerWeights& w) {
  auto finite = [](const Matrix& m) {
    for (double v : m.values())
      if (!std::isfinite(v)) return false;
    return true;
  };
  return finite(w.w_enc) && finite(w.w_dec);
}

void guard_epoch(std::size_t epoch, double loss, double initial, const LayerWeights& w) {
  const bool blown = !std::isfinite(loss) || !all_finite(w) ||
                     (initial > 0.0 && loss > kDivergenceFactor * initial);
  if (blown) {
    char buf[96];
    std::snprintf(buf, sizeof buf, ": loss %.6g vs initial %.6g", loss, initial);
    throw Error(ErrorKind::divergence,
                "training diverged at epoch " + std::to_string(epoch + 1) + buf);
  }
}

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}

double total_csma_loss(const LayerWeights& w, const Matrix& x_minor, const Matrix& x_adult,
                       const ClassMeans& means, double lambda) {
  const double minor = batch_loss(w, x_minor, means.minor.values(), lambda);
  return batch_loss(w, x_adult, means.adult.values(), lambda, minor);
}

AutoencoderResult train_unsupervised(const Matrix& x, std::size_t hidden_dim,
                                     const TrainConfig& cfg,
                                     std::optional<double> corruption_prob) {
  cfg.validate();
  if (x.rows() == 0) throw Error(ErrorKind::insufficient, "autoencoder: no training samples");
  if (hidden_dim == 0) throw Error(ErrorKind::parameter, "autoencoder: hidden_dim must be >= 1");

  Rng init_rng(mix_seed(cfg.seed, kInitStream));
  Rng order_rng(mix_seed(cfg.seed, kOrderStream));
  Rng corrupt_rng(mix_seed(cfg.seed, kCorruptionStream));

  AutoencoderResult result{init_layer(x.cols(), hidden_dim, cfg, init_rng), 0.0, {}};
  LayerWeights& w = result.weights;
  result.initial_loss = ae_loss(w, x);

  Scratch s(w);
  std::vector<double> noisy(x.cols());
  auto order = identity_order(x.rows());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) order_rng.shuffle(std::span(order));
    for (std::size_t idx : order) {
      const auto clean = x.row(idx);
      if (corruption_prob) {
        corrupt(clean, noisy, *corruption_prob, corrupt_rng);
        sgd_step(w, noisy, clean, {}, 0.0, cfg.learning_rate, s);
      } else {
        sgd_step(w, clean, clean, {}, 0.0, cfg.learning_rate, s);
      }
    }
    const double loss = all_finite(w) ? ae_loss(w, x) : NAN;
    guard_epoch(epoch, loss, result.initial_loss, w);
    result.loss_log.push_back(loss);
  }
  return result;
}

}  // namespace

LayerWeights LayerWeights::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  return {Matrix(hidden_dim, input_dim), Matrix(input_dim, hidden_dim)};
}

void LayerWeights::validate() const {
  if (w_enc.rows() != w_dec.cols() || w_enc.cols() != w_dec.rows()) {
    throw Error(ErrorKind::shape, "LayerWeights: encoder " + w_enc.shape() +
                                      " does not mirror decoder " + w_dec.shape());
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::parameter, "TrainConfig: epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::parameter, "TrainConfig: learning_rate must be positive");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::parameter, "TrainConfig: lambda must be finite and >= 0");
  }
  if (init_scale && (!(*init_scale > 0.0) || !std::isfinite(*init_scale))) {
    throw Error(ErrorKind::parameter, "TrainConfig: init_scale must be positive");
  }
}

LayerWeights init_layer(std::size_t input_dim, std::size_t hidden_dim, const TrainConfig& cfg,
                        Rng& rng) {
  const double r = cfg.init_scale.value_or(
      std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim)));
  LayerWeights w;
  w.w_enc = rand_matrix(rng, hidden_dim, input_dim, r);
  w.w_dec = rand_matrix(rng, input_dim, hidden_dim, r);
  return w;
}

Matrix encode(const LayerWeights& w, const Matrix& x) {
  check_batch(w, x, "encode");
  return sigmoid(matmul_transposed(x, w.w_enc));
}

Matrix decode(const LayerWeights& w, const Matrix& features) {
  if (features.cols() != w.hidden_dim()) {
    throw Error(ErrorKind::shape, "decode: features " + features.shape() +
                                      " do not match hidden dimension " +
                                      std::to_string(w.hidden_dim()));
  }
  return matmul_transposed(features, w.w_dec);
}

Matrix class_mean(const LayerWeights& w, const Matrix& samples) {
  if (samples.rows() == 0) {
    throw Error(ErrorKind::insufficient, "class_mean: class has no samples");
  }
  return column_mean(encode(w, samples));
}

ClassMeans compute_class_means(const LayerWeights& w, const Matrix& x_minor,
                               const Matrix& x_adult) {
  return {class_mean(w, x_minor), class_mean(w, x_adult)};
}

double ae_loss(const LayerWeights& w, const Matrix& x) {
  w.validate();
  check_batch(w, x, "ae_loss");
  return batch_loss(w, x, {}, 0.0);
}

LayerGradients ae_gradients(const LayerWeights& w, const Matrix& x) {
  w.validate();
  check_batch(w, x, "ae_gradients");
  return batch_gradients(w, x, {}, 0.0);
}

double csma_loss(const LayerWeights& w, const Matrix& x_c, const Matrix& mean_c,
                 double lambda) {
  w.validate();
  check_batch(w, x_c, "csma_loss");
  check_mean(w, mean_c, lambda, "csma_loss");
  return batch_loss(w, x_c, mean_c.values(), lambda);
}

LayerGradients csma_gradients(const LayerWeights& w, const Matrix& x_c, const Matrix& mean_c,
                              double lambda) {
  w.validate();
  check_batch(w, x_c, "csma_gradients");
  check_mean(w, mean_c, lambda, "csma_gradients");
  return batch_gradients(w, x_c, mean_c.values(), lambda);
}

void csma_sgd_step(LayerWeights& w, std::span<const double> x, const Matrix& mean_c,
                   double lambda, double learning_rate) {
  w.validate();
  if (x.size() != w.input_dim()) {
    throw Error(ErrorKind::shape, "csma_sgd_step: sample length " + std::to_string(x.size()) +
                                      " != input dimension " + std::to_string(w.input_dim()));
  }
  check_mean(w, mean_c, lambda, "csma_sgd_step");
  Scratch s(w);
  sgd_step(w, x, x, mean_c.values(), lambda, learning_rate, s);
}

SingleLayerResult train_single_layer(const Matrix& x_minor, const Matrix& x_adult,
                                     std::size_t hidden_dim, const TrainConfig& cfg,
                                     TrainObserver* observer) {
  cfg.validate();
  if (x_minor.rows() == 0 || x_adult.rows() == 0) {
    throw Error(ErrorKind::insufficient, "train_single_layer: both classes need samples (minor=" +
                                             std::to_string(x_minor.rows()) + ", adult=" +
                                             std::to_string(x_adult.rows()) + ")");
  }
  if (x_minor.cols() != x_adult.cols()) {
    throw Error(ErrorKind::shape, "train_single_layer: class batches " + x_minor.shape() +
                                      " and " + x_adult.shape() + " differ in width");
  }
  if (hidden_dim == 0) {
    throw Error(ErrorKind::parameter, "train_single_layer: hidden_dim must be >= 1");
  }

  Rng init_rng(mix_seed(cfg.seed, kInitStream));
  Rng order_rng(mix_seed(cfg.seed, kOrderStream));

  SingleLayerResult result;
  result.weights = init_layer(x_minor.cols(), hidden_dim, cfg, init_rng);
  LayerWeights& w = result.weights;

  ClassMeans means = compute_class_means(w, x_minor, x_adult);
  result.initial_loss = total_csma_loss(w, x_minor, x_adult, means, cfg.lambda);

  Scratch s(w);
  auto minor_order = identity_order(x_minor.rows());
  auto adult_order = identity_order(x_adult.rows());

  auto sweep = [&](std::size_t epoch, Label label, const Matrix& x,
                   std::vector<std::size_t>& order) {
    const Matrix& mean = means.of(label);
    if (cfg.shuffle) order_rng.shuffle(std::span(order));
    for (std::size_t idx : order) {
      if (observer) observer->on_step(epoch, label, idx, mean);
      sgd_step(w, x.row(idx), x.row(idx), mean.values(), cfg.lambda, cfg.learning_rate, s);
    }
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (observer) observer->on_epoch_begin(epoch, means);
    sweep(epoch, kMinor, x_minor, minor_order);
    sweep(epoch, kAdult, x_adult, adult_order);

    if (!all_finite(w)) guard_epoch(epoch, NAN, result.initial_loss, w);
    means = compute_class_means(w, x_minor, x_adult);
    const double loss = total_csma_loss(w, x_minor, x_adult, means, cfg.lambda);
    guard_epoch(epoch, loss, result.initial_loss, w);
    result.loss_log.push_back(loss);
  }
  result.means = std::move(means);
  return result;
}

std::size_t CsmaModel::input_dim() const {
  return layers.empty() ? 0 : layers.front().input_dim();
}

std::size_t CsmaModel::output_dim() const {
  return layers.empty() ? 0 : layers.back().hidden_dim();
}

std::vector<std::size_t> CsmaModel::layer_dims() const {
  std::vector<std::size_t> dims;
  for (const auto& l : layers) dims.push_back(l.hidden_dim());
  return dims;
}

void CsmaModel::validate() const {
  if (lambdas.size() != layers.size()) {
    throw Error(ErrorKind::consistency, "CsmaModel: " + std::to_string(lambdas.size()) +
                                            " lambdas for " + std::to_string(layers.size()) +
                                            " layers");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].validate();
    if (i > 0 && layers[i].input_dim() != layers[i - 1].hidden_dim()) {
      throw Error(ErrorKind::shape, "CsmaModel: layer " + std::to_string(i) + " input " +
                                        std::to_string(layers[i].input_dim()) +
                                        " != previous hidden " +
                                        std::to_string(layers[i - 1].hidden_dim()));
    }
  }
}

CsmaModel train_stacked(const Matrix& x_minor, const Matrix& x_adult,
                        std::span<const std::size_t> layer_dims,
                        std::span<const TrainConfig> layer_configs) {
  if (layer_dims.empty()) throw Error(ErrorKind::parameter, "train_stacked: no layers requested");
  if (layer_configs.size() != layer_dims.size()) {
    throw Error(ErrorKind::consistency, "train_stacked: " + std::to_string(layer_configs.size()) +
                                            " configs for " + std::to_string(layer_dims.size()) +
                                            " layers");
  }
  CsmaModel model;
  Matrix minor = x_minor;
  Matrix adult = x_adult;
  for (std::size_t i = 0; i < layer_dims.size(); ++i) {
    auto trained = train_single_layer(minor, adult, layer_dims[i], layer_configs[i]);
    if (i + 1 < layer_dims.size()) {
      minor = encode(trained.weights, minor);
      adult = encode(trained.weights, adult);
    }
    model.layers.push_back(std::move(trained.weights));
    model.lambdas.push_back(layer_configs[i].lambda);
    model.class_means.push_back(std::move(trained.means));
    model.training_log.push_back(std::move(trained.loss_log));
  }
  return model;
}

CsmaModel train_stacked(const Matrix& x_minor, const Matrix& x_adult,
                        std::span<const std::size_t> layer_dims, const TrainConfig& cfg) {
  std::vector<TrainConfig> configs(layer_dims.size(), cfg);
  for (std::size_t i = 0; i < configs.size(); ++i) configs[i].seed = cfg.seed + i;
  return train_stacked(x_minor, x_adult, layer_dims, configs);
}

Matrix extract_features(const CsmaModel& model, const Matrix& x) {
  Matrix f = x;
  for (const auto& layer : model.layers) f = encode(layer, f);
  return f;
}

AutoencoderResult train_autoencoder(const Matrix& x, std::size_t hidden_dim,
                                    const TrainConfig& cfg) {
  return train_unsupervised(x, hidden_dim, cfg, std::nullopt);
}

AutoencoderResult train_denoising_baseline(const Matrix& x, std::size_t hidden_dim,
                                           const TrainConfig& cfg, double corruption_prob) {
  if (!(corruption_prob >= 0.0 && corruption_prob < 1.0)) {
    throw Error(ErrorKind::parameter, "train_denoising_baseline: corruption_prob must be in [0, 1)");
  }
  return train_unsupervised(x, hidden_dim, cfg, corruption_prob);
}

CsmaModel train_stacked_denoising(const Matrix& x, std::span<const std::size_t> layer_dims,
                                  const TrainConfig& cfg, double corruption_prob) {
  if (layer_dims.empty()) {
    throw Error(ErrorKind::parameter, "train_stacked_denoising: no layers requested");
  }
  CsmaModel model;
  Matrix input = x;
  for (std::size_t i = 0; i < layer_dims.size(); ++i) {
    TrainConfig layer_cfg = cfg;
    layer_cfg.seed = cfg.seed + i;
    auto trained = train_denoising_baseline(input, layer_dims[i], layer_cfg, corruption_prob);
    if (i + 1 < layer_dims.size()) input = encode(trained.weights, input);
    model.layers.push_back(std::move(trained.weights));
    model.lambdas.push_back(0.0);
    model.training_log.push_back(std::move(trained.loss_log));
  }
  return model;
}

void corrupt(std::span<const double> in, std::span<double> out, double p, Rng& rng) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = rng.bernoulli(p) ? 0.0 : in[i];
}

}  // namespace csma
