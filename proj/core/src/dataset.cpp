#include "csma/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "csma/error.hpp"
#include "csma/hash.hpp"
#include "csma/model_io.hpp"

namespace csma {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::optional<ImageShape> default_shape(std::size_t dim) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dim))));
  if (side * side == dim) return ImageShape{side, side};
  return ImageShape{1, dim};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::optional<double> parse_double(std::string_view field) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::size_t LabeledDataset::count(Label label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

Matrix LabeledDataset::rows_of(Label label) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) idx.push_back(i);
  return select_rows(samples, idx);
}

void LabeledDataset::validate() const {
  if (labels.size() != samples.rows()) {
    throw Error(ErrorKind::consistency, "dataset: " + std::to_string(labels.size()) +
                                            " labels for " + std::to_string(samples.rows()) +
                                            " samples");
  }
  if (image_shape && image_shape->pixels() != samples.cols()) {
    throw Error(ErrorKind::shape, "dataset: image shape " + std::to_string(image_shape->height) +
                                      "x" + std::to_string(image_shape->width) +
                                      " does not match " + std::to_string(samples.cols()) +
                                      " features");
  }
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    if (labels[i] != kMinor && labels[i] != kAdult) {
      throw Error(ErrorKind::validation, "dataset: row " + std::to_string(i) + " has label " +
                                             std::to_string(labels[i]));
    }
    for (double v : samples.row(i)) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorKind::validation,
                    "dataset: row " + std::to_string(i) + " has a value outside [0, 1]");
      }
    }
  }
}

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path, BinarizeRule rule) {
  const auto images = read_file_bytes(images_path);
  const auto labels = read_file_bytes(labels_path);

  if (images.size() < 16 || read_be32(images, 0) != kIdxImagesMagic) {
    throw Error(ErrorKind::format, images_path.string() + ": not an IDX3 image file");
  }
  if (labels.size() < 8 || read_be32(labels, 0) != kIdxLabelsMagic) {
    throw Error(ErrorKind::format, labels_path.string() + ": not an IDX1 label file");
  }
  const std::size_t n = read_be32(images, 4);
  const ImageShape shape{read_be32(images, 8), read_be32(images, 12)};
  const std::size_t n_labels = read_be32(labels, 4);
  if (images.size() != 16 + n * shape.pixels()) {
    throw Error(ErrorKind::format, images_path.string() + ": expected " +
                                       std::to_string(16 + n * shape.pixels()) + " bytes, found " +
                                       std::to_string(images.size()));
  }
  if (labels.size() != 8 + n_labels) {
    throw Error(ErrorKind::format, labels_path.string() + ": expected " +
                                       std::to_string(8 + n_labels) + " bytes, found " +
                                       std::to_string(labels.size()));
  }
  if (n != n_labels) {
    throw Error(ErrorKind::consistency, "IDX files disagree: " + std::to_string(n) +
                                            " images vs " + std::to_string(n_labels) + " labels");
  }

  LabeledDataset ds{Matrix(n, shape.pixels()), std::vector<Label>(n), shape};
  auto pixels = ds.samples.values();
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = images[16 + i] / 255.0;
  for (std::size_t i = 0; i < n; ++i) ds.labels[i] = rule.apply(labels[8 + i]);
  return ds;
}

void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               ImageShape shape, const std::vector<std::uint8_t>& pixels,
               const std::vector<std::uint8_t>& labels) {
  if (shape.pixels() == 0 || pixels.size() != labels.size() * shape.pixels()) {
    throw Error(ErrorKind::consistency, "write_idx: pixel count does not match labels x shape");
  }
  std::vector<std::uint8_t> img;
  put_be32(img, kIdxImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(labels.size()));
  put_be32(img, static_cast<std::uint32_t>(shape.height));
  put_be32(img, static_cast<std::uint32_t>(shape.width));
  img.insert(img.end(), pixels.begin(), pixels.end());
  std::vector<std::uint8_t> lab;
  put_be32(lab, kIdxLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(labels.size()));
  lab.insert(lab.end(), labels.begin(), labels.end());
  write_file_atomic(images_path, img);
  write_file_atomic(labels_path, lab);
}

LabeledDataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::format, path.string() + ": empty file");
  const auto header = split_fields(line);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw Error(ErrorKind::format, path.string() + ": no column named '" + label_column + "'");
  }
  const auto label_idx = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t width = header.size();

  std::vector<double> values;
  std::vector<Label> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != width) {
      throw Error(ErrorKind::format, where + ": expected " + std::to_string(width) +
                                         " fields, found " + std::to_string(fields.size()));
    }
    const std::size_t row = labels.size();
    for (std::size_t j = 0; j < width; ++j) {
      const auto v = parse_double(fields[j]);
      if (!v) throw Error(ErrorKind::format, where + ": field " + std::to_string(j + 1) + " is not a number");
      if (j == label_idx) {
        if (*v != 0.0 && *v != 1.0) {
          throw Error(ErrorKind::validation, where + ": row " + std::to_string(row) +
                                                 " label must be 0 or 1");
        }
        labels.push_back(*v == 0.0 ? kMinor : kAdult);
      } else {
        if (!(*v >= 0.0 && *v <= 1.0)) {
          throw Error(ErrorKind::validation, where + ": row " + std::to_string(row) +
                                                 " feature '" + std::string(header[j]) +
                                                 "' outside [0, 1]");
        }
        values.push_back(*v);
      }
    }
  }
  if (in.bad()) throw Error(ErrorKind::io, "error reading " + path.string());
  const std::size_t n = labels.size();
  return {Matrix(n, width - 1, std::move(values)), std::move(labels), std::nullopt};
}

void write_csv(const std::filesystem::path& path, const LabeledDataset& ds) {
  ds.validate();
  std::ostringstream out;
  for (std::size_t j = 0; j < ds.dim(); ++j) out << 'f' << j << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.samples.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << static_cast<int>(ds.labels[i]) << '\n';
  }
  const std::string text = out.str();
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::pair<std::size_t, std::size_t> balanced_split_sizes(std::size_t minors, std::size_t adults,
                                                         double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::parameter, "split_balanced: train_fraction must lie in (0, 1)");
  }
  if (minors == 0 || adults == 0) {
    throw Error(ErrorKind::insufficient, "split_balanced: both classes must be present");
  }
  const auto smaller = static_cast<double>(std::min(minors, adults));
  const auto k = static_cast<std::size_t>(std::floor(train_fraction * smaller));
  if (k == 0) {
    throw Error(ErrorKind::insufficient, "split_balanced: train_fraction selects no samples");
  }
  return {2 * k, minors + adults - 2 * k};
}

BalancedSplit split_balanced(const LabeledDataset& ds, double train_fraction, std::uint64_t seed) {
  ds.validate();
  const auto [train_size, test_size] =
      balanced_split_sizes(ds.count(kMinor), ds.count(kAdult), train_fraction);
  const std::size_t k = train_size / 2;

  Rng rng(seed);
  std::vector<bool> in_train(ds.size(), false);
  for (Label label : {kMinor, kAdult}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds.labels[i] == label) idx.push_back(i);
    // Partial Fisher-Yates: the first k slots become a uniform sample.
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
      std::swap(idx[i], idx[j]);
      in_train[idx[i]] = true;
    }
  }

  BalancedSplit split;
  for (std::size_t i = 0; i < ds.size(); ++i)
    (in_train[i] ? split.train_indices : split.test_indices).push_back(i);

  auto subset = [&](const std::vector<std::size_t>& indices) {
    LabeledDataset out{select_rows(ds.samples, indices), {}, ds.image_shape};
    for (std::size_t i : indices) out.labels.push_back(ds.labels[i]);
    return out;
  };
  split.train = subset(split.train_indices);
  split.test = subset(split.test_indices);
  (void)test_size;
  return split;
}

std::pair<std::vector<double>, std::vector<double>> synth_prototypes(std::size_t dim,
                                                                     double mean_separation) {
  std::vector<double> mu0(dim), mu1(dim);
  const double half = mean_separation / 2.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double sign = j < dim / 2 ? 1.0 : -1.0;
    mu1[j] = 0.5 + sign * half;
    mu0[j] = 0.5 - sign * half;
  }
  return {mu0, mu1};
}

LabeledDataset synth_two_class(const SynthParams& p) {
  if (p.n_per_class == 0 || p.dim == 0) {
    throw Error(ErrorKind::parameter, "synth_two_class: n_per_class and dim must be positive");
  }
  if (!(p.mean_separation > 0.0 && p.mean_separation <= 1.0)) {
    throw Error(ErrorKind::parameter, "synth_two_class: mean_separation must lie in (0, 1]");
  }
  if (!(p.noise_std >= 0.0) || !std::isfinite(p.noise_std)) {
    throw Error(ErrorKind::parameter, "synth_two_class: noise_std must be finite and >= 0");
  }
  const auto shape = p.image_shape ? p.image_shape : default_shape(p.dim);
  if (shape->pixels() != p.dim) {
    throw Error(ErrorKind::shape, "synth_two_class: image shape does not cover dim");
  }

  const auto [mu0, mu1] = synth_prototypes(p.dim, p.mean_separation);
  Rng rng(p.seed);
  LabeledDataset ds{Matrix(2 * p.n_per_class, p.dim), std::vector<Label>(2 * p.n_per_class), shape};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Label label = (i % 2 == 0) ? kMinor : kAdult;
    const auto& mu = label == kMinor ? mu0 : mu1;
    ds.labels[i] = label;
    auto row = ds.samples.row(i);
    for (std::size_t j = 0; j < p.dim; ++j) {
      row[j] = std::clamp(mu[j] + p.noise_std * rng.normal(), 0.0, 1.0);
    }
  }
  return ds;
}

std::uint64_t fingerprint(const LabeledDataset& ds) {
  Fnv1a64 h;
  h.add_u64(ds.samples.rows());
  h.add_u64(ds.samples.cols());
  h.add_doubles(ds.samples.values());
  for (Label l : ds.labels) h.add_byte(l);
  if (ds.image_shape) {
    h.add_u64(ds.image_shape->height);
    h.add_u64(ds.image_shape->width);
  }
  return h.digest();
}

}  // namespace csma
