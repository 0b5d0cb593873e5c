#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "csma/label.hpp"
#include "csma/matrix.hpp"

namespace csma {

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t pixels() const noexcept { return height * width; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// Rows of `samples` are flattened images with pixels in [0, 1];
/// labels[i] belongs to row i.
struct LabeledDataset {
  Matrix samples;
  std::vector<Label> labels;
  std::optional<ImageShape> image_shape;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return samples.cols(); }
  std::size_t count(Label label) const;
  /// All rows with the given label, in dataset order.
  Matrix rows_of(Label label) const;
  /// Throws ErrorKind::validation / consistency when an invariant is broken.
  void validate() const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

/// Maps a raw IDX label (e.g. a digit) to a binary class: values below
/// `threshold` become 0 (minor), the rest 1 (adult).
struct BinarizeRule {
  int threshold = 5;
  Label apply(int raw) const noexcept { return raw < threshold ? kMinor : kAdult; }
};

/// Reads an IDX3 image file (magic 0x00000803) and IDX1 label file
/// (0x00000801). Pixels are divided by 255.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path, BinarizeRule rule = {});
/// Writes `pixels` (N x h*w, bytes) and raw labels as an IDX pair.
void write_idx(const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path, ImageShape shape,
               const std::vector<std::uint8_t>& pixels, const std::vector<std::uint8_t>& labels);

/// CSV with a header row. `label_column` names the label column; every other
/// column is a feature in [0, 1].
LabeledDataset load_csv(const std::filesystem::path& path, const std::string& label_column = "label");
/// Header f0..f{m-1},label; values printed with 17 significant digits so a
/// reload reproduces every double exactly.
void write_csv(const std::filesystem::path& path, const LabeledDataset& ds);

struct BalancedSplit {
  LabeledDataset train;
  LabeledDataset test;
  std::vector<std::size_t> train_indices;  // ascending, into the source dataset
  std::vector<std::size_t> test_indices;   // ascending
};

/// k = floor(train_fraction * size of the smaller class) samples of EACH
/// class go to train; everything else goes to test.
BalancedSplit split_balanced(const LabeledDataset& ds, double train_fraction, std::uint64_t seed);
/// Train/test sizes the rule produces for the given class counts.
std::pair<std::size_t, std::size_t> balanced_split_sizes(std::size_t minors, std::size_t adults,
                                                         double train_fraction);

struct SynthParams {
  std::size_t n_per_class = 500;
  std::size_t dim = 64;
  double mean_separation = 0.3;
  double noise_std = 0.15;
  std::uint64_t seed = 0;
  /// Defaults to a square image when dim is a perfect square, otherwise 1 x dim.
  std::optional<ImageShape> image_shape;
};

/// Class prototypes: both are 0.5 +/- mean_separation / 2, with opposite
/// signs. Class 1 is brighter on the first half of the pixel indices (the top
/// half of a row-major image) and darker on the second half; class 0 is the
/// mirror image. |mu1 - mu0| = mean_separation at every pixel.
std::pair<std::vector<double>, std::vector<double>> synth_prototypes(std::size_t dim,
                                                                     double mean_separation);

/// Class c rows are clamp(mu_c + N(0, noise_std^2)). Rows alternate
/// 0, 1, 0, 1, ...
LabeledDataset synth_two_class(const SynthParams& params);

/// Order-sensitive FNV-1a digest of samples, labels and image shape.
std::uint64_t fingerprint(const LabeledDataset& ds);

}  // namespace csma
