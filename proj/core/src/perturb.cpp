#include "csma/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "csma/error.hpp"

namespace csma {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ImageShape require_shape(const LabeledDataset& ds, const char* what) {
  if (!ds.image_shape) {
    throw Error(ErrorKind::shape, std::string(what) + " needs an image shape for the dataset");
  }
  if (ds.image_shape->pixels() != ds.dim()) {
    throw Error(ErrorKind::shape, std::string(what) + ": image shape does not match sample width");
  }
  return *ds.image_shape;
}

// One separable pass. Writing out[p] = in[p] + sum_k w_k (in[p+k] - in[p])
// equals sum_k w_k in[p+k] for a normalised kernel and leaves constant
// regions bit-for-bit unchanged.
void convolve_line(std::span<const double> in, std::span<double> out,
                   const std::vector<double>& kernel) {
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const std::size_t n = in.size();
  for (std::size_t p = 0; p < n; ++p) {
    const double centre = in[p];
    double acc = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
      const double v = in[reflect_index(static_cast<std::ptrdiff_t>(p) + k, n)];
      acc += kernel[static_cast<std::size_t>(k + radius)] * (v - centre);
    }
    out[p] = centre + acc;
  }
}

}  // namespace

std::string PerturbationSpec::describe() const {
  char buf[96];
  std::visit(overloaded{
                 [&](const GaussianBlur& b) { std::snprintf(buf, sizeof buf, "blur(sigma=%g)", b.sigma); },
                 [&](const GaussianNoise& g) {
                   std::snprintf(buf, sizeof buf, "noise(mean=%g,std=%g)", g.mean, g.std_dev);
                 },
                 [&](const Holes& h) {
                   std::snprintf(buf, sizeof buf, "holes(%zux%zux%zu)", h.count, h.size, h.size);
                 },
             },
             kind);
  return buf;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::parameter, "gaussian blur: sigma must be positive");
  }
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double x = static_cast<double>(i);
    const double v = std::exp(-(x * x) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : k) v /= total;
  return k;
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - 1 - m);
}

void blur_image(std::span<double> image, ImageShape shape, const std::vector<double>& kernel) {
  std::vector<double> tmp(image.size());
  std::vector<double> line_in, line_out;
  // Horizontal pass into tmp.
  for (std::size_t r = 0; r < shape.height; ++r) {
    convolve_line(image.subspan(r * shape.width, shape.width),
                  std::span(tmp).subspan(r * shape.width, shape.width), kernel);
  }
  // Vertical pass back into image.
  line_in.resize(shape.height);
  line_out.resize(shape.height);
  for (std::size_t c = 0; c < shape.width; ++c) {
    for (std::size_t r = 0; r < shape.height; ++r) line_in[r] = tmp[r * shape.width + c];
    convolve_line(line_in, line_out, kernel);
    for (std::size_t r = 0; r < shape.height; ++r) image[r * shape.width + c] = line_out[r];
  }
  for (double& v : image) v = std::clamp(v, 0.0, 1.0);
}

LabeledDataset perturb(const LabeledDataset& ds, const PerturbationSpec& spec) {
  LabeledDataset out = ds;
  Rng rng(spec.seed);
  std::visit(overloaded{
                 [&](const GaussianBlur& b) {
                   const auto shape = require_shape(ds, "gaussian blur");
                   const auto kernel = gaussian_kernel(b.sigma);
                   for (std::size_t i = 0; i < out.size(); ++i)
                     blur_image(out.samples.row(i), shape, kernel);
                 },
                 [&](const GaussianNoise& g) {
                   if (!(g.std_dev >= 0.0) || !std::isfinite(g.std_dev) || !std::isfinite(g.mean)) {
                     throw Error(ErrorKind::parameter, "gaussian noise: std_dev must be finite and >= 0");
                   }
                   for (double& v : out.samples.values())
                     v = std::clamp(v + rng.normal(g.mean, g.std_dev), 0.0, 1.0);
                 },
                 [&](const Holes& h) {
                   const auto shape = require_shape(ds, "holes");
                   if (h.size == 0) throw Error(ErrorKind::parameter, "holes: size must be >= 1");
                   for (std::size_t i = 0; i < out.size(); ++i) {
                     auto image = out.samples.row(i);
                     for (std::size_t k = 0; k < h.count; ++k) {
                       const auto top = static_cast<std::size_t>(rng.below(shape.height));
                       const auto left = static_cast<std::size_t>(rng.below(shape.width));
                       const std::size_t bottom = std::min(top + h.size, shape.height);
                       const std::size_t right = std::min(left + h.size, shape.width);
                       for (std::size_t r = top; r < bottom; ++r)
                         for (std::size_t c = left; c < right; ++c) image[r * shape.width + c] = 0.0;
                     }
                   }
                 },
             },
             spec.kind);
  return out;
}

}  // namespace csma
