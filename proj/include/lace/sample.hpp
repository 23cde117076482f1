#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lace {

using Token = std::uint8_t;

// A labeled character sequence.
struct Sample {
  std::vector<Token> tokens;
  std::size_t label = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// A labeled precomputed input vector; used when the embedding layer is bypassed.
struct FeatureSample {
  std::vector<double> x;
  std::size_t label = 0;
};

}  // namespace lace
