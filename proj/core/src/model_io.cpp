#include "csma/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "csma/error.hpp"

namespace csma {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'M', 'A'};
constexpr char kClassifierTag[4] = {'C', 'L', 'S', 'F'};

class Writer {
 public:
  void raw(const char (&tag)[4]) { out_.insert(out_.end(), tag, tag + 4); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::size_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorKind::parameter, "model too large for the container format");
    }
    le(v, 4);
  }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void matrix(const Matrix& m) {
    for (double v : m.values()) f64(v);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  bool tag_is(const char (&tag)[4]) {
    need(4, "section tag");
    return std::memcmp(bytes_.data() + pos_, tag, 4) == 0;
  }
  void skip(std::size_t n) {
    need(n, "header");
    pos_ += n;
  }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2, "u16")); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4, "u32")); }
  double f64() { return std::bit_cast<double>(le(8, "f64")); }
  Matrix matrix(std::size_t rows, std::size_t cols, const char* what) {
    if (cols != 0 && rows > remaining() / 8 / cols) {
      throw Error(ErrorKind::format, std::string("model file truncated in ") + what);
    }
    Matrix m(rows, cols);
    for (double& v : m.values()) v = f64();
    return m;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw Error(ErrorKind::format, std::string("model file truncated reading ") + what);
    }
  }
  std::uint64_t le(int bytes, const char* what) {
    need(static_cast<std::size_t>(bytes), what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const CsmaModel& model,
                                          const ClassifierModel* classifier) {
  model.validate();
  Writer w;
  w.raw(kMagic);
  w.u16(kModelFormatVersion);
  w.u32(model.layers.size());
  for (const auto& layer : model.layers) {
    w.u32(layer.input_dim());
    w.u32(layer.hidden_dim());
  }
  for (double lambda : model.lambdas) w.f64(lambda);
  for (const auto& layer : model.layers) {
    w.matrix(layer.w_enc);
    w.matrix(layer.w_dec);
  }
  if (classifier) {
    classifier->validate();
    w.raw(kClassifierTag);
    w.u32(classifier->w1.cols());
    w.u32(classifier->w1.rows());
    w.u32(classifier->w2.rows());
    for (const Matrix* m : {&classifier->w1, &classifier->b1, &classifier->w2, &classifier->b2,
                            &classifier->w3, &classifier->b3}) {
      w.matrix(*m);
    }
    w.f64(classifier->threshold);
  }
  return w.take();
}

ModelBundle deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || !r.tag_is(kMagic)) {
    throw Error(ErrorKind::format, "not a CSMA model file (bad magic)");
  }
  r.skip(4);
  const auto version = r.u16();
  if (version != kModelFormatVersion) {
    throw Error(ErrorKind::format, "unsupported model format version " + std::to_string(version));
  }
  const std::size_t count = r.u32();
  if (count > r.remaining() / 8) throw Error(ErrorKind::format, "model file truncated in layer table");

  std::vector<std::pair<std::size_t, std::size_t>> dims(count);
  for (auto& [in, hidden] : dims) {
    in = r.u32();
    hidden = r.u32();
  }
  ModelBundle bundle;
  for (std::size_t i = 0; i < count; ++i) bundle.csma.lambdas.push_back(r.f64());
  for (const auto& [in, hidden] : dims) {
    LayerWeights layer;
    layer.w_enc = r.matrix(hidden, in, "encoder weights");
    layer.w_dec = r.matrix(in, hidden, "decoder weights");
    bundle.csma.layers.push_back(std::move(layer));
  }
  try {
    bundle.csma.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::format, std::string("inconsistent model file: ") + e.what());
  }

  while (!r.at_end()) {
    if (!r.tag_is(kClassifierTag)) throw Error(ErrorKind::format, "unknown section in model file");
    if (bundle.classifier) throw Error(ErrorKind::format, "duplicate classifier section");
    r.skip(4);
    const std::size_t in = r.u32();
    const std::size_t h1 = r.u32();
    const std::size_t h2 = r.u32();
    ClassifierModel c;
    c.w1 = r.matrix(h1, in, "classifier");
    c.b1 = r.matrix(1, h1, "classifier");
    c.w2 = r.matrix(h2, h1, "classifier");
    c.b2 = r.matrix(1, h2, "classifier");
    c.w3 = r.matrix(1, h2, "classifier");
    c.b3 = r.matrix(1, 1, "classifier");
    c.threshold = r.f64();
    try {
      c.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::format, std::string("inconsistent classifier section: ") + e.what());
    }
    bundle.classifier = std::move(c);
  }
  return bundle;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::io, "error reading " + path.string());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorKind::io, "error writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::io, "cannot move model into place at " + path.string());
  }
}

void save_model(const std::filesystem::path& path, const CsmaModel& model,
                const ClassifierModel* classifier) {
  write_file_atomic(path, serialize_model(model, classifier));
}

ModelBundle load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file_bytes(path));
}

}  // namespace csma
