#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "csma/dataset.hpp"

namespace csma {

struct GaussianBlur {
  double sigma = 3.0;
};

struct GaussianNoise {
  double mean = 0.0;
  double std_dev = 0.01;
};

struct Holes {
  std::size_t count = 10;
  std::size_t size = 3;
};

/// One perturbation, applied to every image of a dataset. Only the parameters
/// of the chosen kind exist.
struct PerturbationSpec {
  std::variant<GaussianBlur, GaussianNoise, Holes> kind;
  std::uint64_t seed = 0;

  /// "blur(sigma=3)", "noise(mean=0,std=0.01)", "holes(10x3x3)".
  std::string describe() const;
};

/// Normalised 1-D Gaussian taps for offsets -r..r, r = ceil(3 sigma). The
/// separable 2-D kernel is the outer product of this with itself.
std::vector<double> gaussian_kernel(double sigma);

/// Index into [0, n) reflected at both borders with the edge pixel repeated
/// (... c b a | a b c ... x y z | z y x ...), for any offset.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept;

void blur_image(std::span<double> image, ImageShape shape, const std::vector<double>& kernel);

/// Returns a perturbed copy; labels are untouched. Blur and holes require an
/// image shape (ErrorKind::shape otherwise). Results are clamped to [0, 1].
LabeledDataset perturb(const LabeledDataset& ds, const PerturbationSpec& spec);

}  // namespace csma
