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

// Oracle and property checks run by `selftest` and the acceptance suite.
// Each compares the library against an independent recomputation.

#ifndef RLRBN_HARNESS_CHECKS_HPP_
#define RLRBN_HARNESS_CHECKS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "core/mdp.hpp"
#include "core/qlearning.hpp"

namespace rlrbn::harness {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// STD and SER of the published baseline accuracy rows.
CheckResult CheckFairnessRows();
// Adaptive losses reduce to their fixed-margin counterparts, and Arcface
// agrees with a direct evaluation of its formula.
CheckResult CheckLossReductions(std::uint64_t seed, int n_batches = 100);
// Analytic gradients against central finite differences.
CheckResult CheckGradients(std::uint64_t seed);
// Geometry and skew against brute-force loops.
CheckResult CheckMetricOracle(std::uint64_t seed);
// DQN greedy policy against tabular value iteration on finite MDPs.
CheckResult CheckQLearningOracle(std::uint64_t seed, int n_mdps = 5);
// Rewards along logged trajectories telescope.
CheckResult CheckRewardTelescoping(std::uint64_t seed);
// Visited-set discipline, margin transitions and per-seed reproducibility
// of the offline sampler.
CheckResult CheckSamplerDiscipline(std::uint64_t seed);

std::vector<CheckResult> RunSelfTest(std::uint64_t seed);

// Finite MDP over `space` with every (state, action) observed
// `visits` times. Rewards are a random affine function of the encoded state
// per action; the noise added to the visits of one pair sums to zero, so its
// empirical mean stays on that function. Next bias bins are random.
std::vector<qlearn::Transition> RandomFiniteMdp(const mdp::StateSpace& space, int visits,
                                                double reward_noise, std::uint64_t seed);

}  // namespace rlrbn::harness

#endif  // RLRBN_HARNESS_CHECKS_HPP_
