#pragma once

#include <cstdint>

namespace csma {

/// Binary class label: 0 = minor, 1 = adult.
using Label = std::uint8_t;

inline constexpr Label kMinor = 0;
inline constexpr Label kAdult = 1;

}  // namespace csma
