#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "csma/error.hpp"
#include "csma/model_io.hpp"

using namespace csma;
namespace fs = std::filesystem;

namespace {

CsmaModel random_model(std::uint64_t seed) {
  Rng rng(seed);
  CsmaModel m;
  TrainConfig cfg;
  m.layers.push_back(init_layer(12, 7, cfg, rng));
  m.layers.push_back(init_layer(7, 5, cfg, rng));
  m.lambdas = {0.1, 0.25};
  // Awkward doubles survive the trip bit for bit.
  m.layers[0].w_enc(0, 0) = -0.0;
  m.layers[0].w_enc(0, 1) = std::numeric_limits<double>::denorm_min();
  m.layers[0].w_dec(3, 2) = 1.0 / 3.0;
  return m;
}

ClassifierModel random_classifier(std::uint64_t seed) {
  Rng rng(seed);
  ClassifierModel c = init_classifier(5, {3, 2}, TrainConfig{}, rng);
  c.b1(0, 1) = 0.125;
  c.threshold = 0.4;
  return c;
}

void expect_same(const CsmaModel& a, const CsmaModel& b) {
  ASSERT_EQ(a.layers.size(), b.layers.size());
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    EXPECT_EQ(a.layers[i], b.layers[i]);
    // operator== treats -0.0 and 0.0 alike; compare bits too.
    EXPECT_EQ(std::memcmp(a.layers[i].w_enc.values().data(), b.layers[i].w_enc.values().data(),
                          a.layers[i].w_enc.size() * sizeof(double)), 0);
  }
  EXPECT_EQ(a.lambdas, b.lambdas);
}

ErrorKind kind_of_parse(std::span<const std::uint8_t> bytes) {
  try {
    deserialize_model(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::parameter;  // parsed fine
}

}  // namespace

TEST(ModelIo, RoundTripIsBitwise) {
  const CsmaModel m = random_model(1);
  const ClassifierModel c = random_classifier(2);
  const auto bytes = serialize_model(m, &c);
  const ModelBundle back = deserialize_model(bytes);
  expect_same(m, back.csma);
  ASSERT_TRUE(back.classifier.has_value());
  EXPECT_EQ(*back.classifier, c);
  EXPECT_EQ(serialize_model(back.csma, &*back.classifier), bytes);
}

TEST(ModelIo, ClassifierSectionIsOptional) {
  const CsmaModel m = random_model(3);
  const ModelBundle back = deserialize_model(serialize_model(m));
  expect_same(m, back.csma);
  EXPECT_FALSE(back.classifier.has_value());
}

TEST(ModelIo, HeaderLayout) {
  const auto bytes = serialize_model(random_model(4));
  ASSERT_GE(bytes.size(), 10u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CSMA");
  EXPECT_EQ(bytes[4] | (bytes[5] << 8), kModelFormatVersion);
  EXPECT_EQ(bytes[6], 2u);  // layer count, little-endian
  EXPECT_EQ(bytes[10], 12u);  // first layer input dim
  // 4 + 2 + 4 + 2*8 dims + 2*8 lambdas + doubles of both layers.
  EXPECT_EQ(bytes.size(), 42u + 8u * (2 * 12 * 7 + 2 * 7 * 5));
}

TEST(ModelIo, FileRoundTripAndNoTemporaryLeft) {
  const fs::path dir = fs::temp_directory_path() / "csma_test_model_io";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const CsmaModel m = random_model(5);
  const ClassifierModel c = random_classifier(6);
  save_model(dir / "m.bin", m, &c);
  const ModelBundle back = load_model(dir / "m.bin");
  expect_same(m, back.csma);
  EXPECT_EQ(*back.classifier, c);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) files += e.is_regular_file();
  EXPECT_EQ(files, 1u);
}

TEST(ModelIo, EveryTruncationIsAFormatError) {
  const ClassifierModel c = random_classifier(7);
  const auto bytes = serialize_model(random_model(8), &c);
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    const auto kind = kind_of_parse(std::span(bytes).first(n));
    // Cutting exactly before the optional section leaves a valid file.
    if (kind == ErrorKind::parameter) {
      EXPECT_EQ(n, serialize_model(random_model(8)).size());
      continue;
    }
    EXPECT_EQ(kind, ErrorKind::format) << n;
  }
}

TEST(ModelIo, CorruptHeadersAndSections) {
  const ClassifierModel c = random_classifier(9);
  const auto good = serialize_model(random_model(10), &c);
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of_parse(bad_magic), ErrorKind::format);
  auto bad_version = good;
  bad_version[4] = 99;
  EXPECT_EQ(kind_of_parse(bad_version), ErrorKind::format);
  auto unknown = serialize_model(random_model(10));
  for (char ch : std::string("ZZZZ")) unknown.push_back(static_cast<std::uint8_t>(ch));
  EXPECT_EQ(kind_of_parse(unknown), ErrorKind::format);
  auto duplicate = good;
  const auto plain = serialize_model(random_model(10));
  duplicate.insert(duplicate.end(), good.begin() + plain.size(), good.end());
  EXPECT_EQ(kind_of_parse(duplicate), ErrorKind::format);
}

TEST(ModelIo, MissingFileIsIoError) {
  try {
    load_model("/nonexistent/dir/model.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}
