#pragma once

// Binary model container, little-endian throughout:
//
//   "CSMA"                         4-byte magic
//   u16 version                    currently 1
//   u32 layer_count
//   layer_count x (u32 input_dim, u32 hidden_dim)
//   layer_count x f64 lambda
//   layer_count x (w_enc, w_dec)   f64 entries, row-major
//   optional sections until end of file, each starting with a 4-byte tag:
//     "CLSF" u32 input_dim, u32 hidden1, u32 hidden2,
//            w1, b1, w2, b2, w3, b3 (f64 row-major), f64 threshold

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "csma/autoencoder.hpp"
#include "csma/classifier.hpp"

namespace csma {

inline constexpr std::uint16_t kModelFormatVersion = 1;

struct ModelBundle {
  CsmaModel csma;
  std::optional<ClassifierModel> classifier;
};

std::vector<std::uint8_t> serialize_model(const CsmaModel& model,
                                          const ClassifierModel* classifier = nullptr);
/// Errors: ErrorKind::format on bad magic, unknown version, unknown section
/// or truncated payload.
ModelBundle deserialize_model(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file renamed into place.
void save_model(const std::filesystem::path& path, const CsmaModel& model,
                const ClassifierModel* classifier = nullptr);
ModelBundle load_model(const std::filesystem::path& path);

/// Whole-file helpers shared by the loaders and writers.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace csma
