#include "csma_tools/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "csma/autoencoder.hpp"
#include "csma/classifier.hpp"
#include "csma/error.hpp"
#include "csma/rng.hpp"

namespace csma::tools {

namespace {

struct Param {
  Matrix* value;
  const Matrix* analytic;
};

double check(std::span<const Param> params, const std::function<double()>& loss,
             double step, bool corrupt) {
  double worst = 0.0;
  bool first = true;
  for (const auto& p : params) {
    auto vals = p.value->values();
    const auto grad = p.analytic->values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + step;
      const double up = loss();
      vals[i] = saved - step;
      const double down = loss();
      vals[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      double analytic = grad[i];
      if (corrupt && first) analytic += 1e-2;
      first = false;
      worst = std::max(worst, relative_error(analytic, numeric));
    }
  }
  return worst;
}

Matrix uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

}  // namespace

double relative_error(double analytic, double numeric) noexcept {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradcheckFloor});
  return std::abs(analytic - numeric) / scale;
}

GradcheckReport run_gradcheck(const GradcheckOptions& o) {
  if (o.input_dim < 1 || o.input_dim > 16 || o.hidden_dim < 1 || o.hidden_dim > 16) {
    throw Error(ErrorKind::parameter, "gradcheck: dimensions must lie in [1, 16]");
  }
  if (o.rows_per_class < 1) throw Error(ErrorKind::parameter, "gradcheck: need at least one row");
  if (!(o.step > 0.0)) throw Error(ErrorKind::parameter, "gradcheck: step must be > 0");

  Rng rng(o.seed);
  TrainConfig init_cfg;
  init_cfg.init_scale = 0.5;
  LayerWeights w = init_layer(o.input_dim, o.hidden_dim, init_cfg, rng);
  const Matrix x = uniform(rng, o.rows_per_class, o.input_dim, 0.0, 1.0);
  const Matrix mean = uniform(rng, 1, o.hidden_dim, 0.1, 0.9);

  GradcheckReport report;
  auto record = [&](std::string name, std::size_t n, double err) {
    report.cases.push_back({std::move(name), n, err});
    report.max_rel_error = std::max(report.max_rel_error, err);
  };
  const std::size_t layer_params = w.w_enc.size() + w.w_dec.size();

  {
    const LayerGradients g = ae_gradients(w, x);
    const Param params[] = {{&w.w_enc, &g.w_enc}, {&w.w_dec, &g.w_dec}};
    record("autoencoder", layer_params,
           check(params, [&] { return ae_loss(w, x); }, o.step, o.corrupt_gradient));
  }
  for (double lambda : {0.0, 0.1, 1.0}) {
    const LayerGradients g = csma_gradients(w, x, mean, lambda);
    const Param params[] = {{&w.w_enc, &g.w_enc}, {&w.w_dec, &g.w_dec}};
    char name[32];
    std::snprintf(name, sizeof name, "csma lambda=%g", lambda);
    record(name, layer_params,
           check(params, [&] { return csma_loss(w, x, mean, lambda); }, o.step,
                 o.corrupt_gradient));
  }
  {
    const std::size_t n = 2 * o.rows_per_class;
    const Matrix features = uniform(rng, n, o.hidden_dim, 0.0, 1.0);
    std::vector<Label> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i % 2 == 0 ? kMinor : kAdult;
    const ClassifierDims dims{std::max<std::size_t>(o.hidden_dim / 2, 2),
                              std::max<std::size_t>(o.hidden_dim / 3, 2)};
    ClassifierModel clf = init_classifier(o.hidden_dim, dims, init_cfg, rng);
    for (Matrix* b : {&clf.b1, &clf.b2, &clf.b3}) *b = uniform(rng, 1, b->cols(), -0.5, 0.5);
    const ClassifierGradients g = classifier_gradients(clf, features, labels);
    const Param params[] = {{&clf.w1, &g.w1}, {&clf.b1, &g.b1}, {&clf.w2, &g.w2},
                            {&clf.b2, &g.b2}, {&clf.w3, &g.w3}, {&clf.b3, &g.b3}};
    std::size_t count = 0;
    for (const auto& p : params) count += p.value->size();
    record("classifier", count,
           check(params, [&] { return classifier_loss(clf, features, labels); }, o.step,
                 o.corrupt_gradient));
  }
  report.passed = report.max_rel_error <= o.tolerance;
  return report;
}

}  // namespace csma::tools
