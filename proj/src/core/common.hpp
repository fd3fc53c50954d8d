// Copyright 2026 The RL-RBN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RLRBN_CORE_COMMON_HPP_
#define RLRBN_CORE_COMMON_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace rlrbn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// All randomness in the library flows through this engine type.
using Rng = std::mt19937_64;

// Derives a reproducible engine from a base seed and a list of stream tags,
// so independent consumers of one seed never share a stream.
inline Rng MakeRng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {}) {
  std::seed_seq::result_type words[16];
  std::size_t n = 0;
  words[n++] = static_cast<std::uint32_t>(seed);
  words[n++] = static_cast<std::uint32_t>(seed >> 32);
  for (std::uint64_t t : tags) {
    if (n + 2 > 16) break;
    words[n++] = static_cast<std::uint32_t>(t);
    words[n++] = static_cast<std::uint32_t>(t >> 32);
  }
  std::seed_seq seq(words, words + n);
  return Rng(seq);
}

constexpr double kPi = 3.14159265358979323846;

inline double RadToDeg(double r) { return r * 180.0 / kPi; }

}  // namespace rlrbn

#endif  // RLRBN_CORE_COMMON_HPP_
