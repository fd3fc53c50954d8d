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

// Synthetic grouped identity data: a controllable stand-in for demographically
// annotated face collections. Every identity belongs to exactly one group;
// groups differ in how many identities they have and in how hard their
// identities are to tell apart.

#ifndef RLRBN_CORE_GROUPED_DATA_HPP_
#define RLRBN_CORE_GROUPED_DATA_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rlrbn::data {

struct Sample {
  std::vector<double> features;
  int identity_id = 0;
  int group_id = 0;

  bool operator==(const Sample&) const = default;
};

struct DatasetSpec {
  int n_groups = 4;
  std::vector<int> identities_per_group;
  int samples_per_identity = 10;
  int d_in = 16;
  // Cluster tightness of samples around their identity center; lower is harder.
  std::vector<double> group_concentration;
  // How far identity centers stray from their group's anchor direction;
  // lower packs identities closer together and is harder.
  std::vector<double> group_center_spread;
  std::uint64_t seed = 0;

  void Validate() const;
};

class GroupedDataset {
 public:
  GroupedDataset() = default;
  // Validates the invariants: contiguous identity ids, one group per
  // identity, at least two samples per identity, finite features.
  GroupedDataset(std::vector<Sample> samples, int n_groups);

  const std::vector<Sample>& samples() const { return samples_; }
  int n_identities() const { return static_cast<int>(group_of_identity_.size()); }
  int n_groups() const { return n_groups_; }
  int d_in() const { return d_in_; }
  int group_of_identity(int identity) const { return group_of_identity_.at(identity); }
  const std::vector<int>& group_of_identity() const { return group_of_identity_; }

  // Sample indices of each identity, in dataset order.
  const std::vector<std::vector<int>>& samples_by_identity() const { return by_identity_; }
  // Identity ids of each group, ascending.
  const std::vector<std::vector<int>>& identities_by_group() const { return by_group_; }
  std::vector<int> identities_per_group() const;

  bool empty() const { return samples_.empty(); }
  bool operator==(const GroupedDataset& o) const {
    return n_groups_ == o.n_groups_ && samples_ == o.samples_;
  }

 private:
  std::vector<Sample> samples_;
  int n_groups_ = 0;
  int d_in_ = 0;
  std::vector<int> group_of_identity_;
  std::vector<std::vector<int>> by_identity_;
  std::vector<std::vector<int>> by_group_;
};

struct VerificationPair {
  Sample sample_a;
  Sample sample_b;
  bool same_identity = false;
  int group_id = 0;
  // Positions of the two samples in the dataset the pair was drawn from.
  int index_a = 0;
  int index_b = 0;
};

GroupedDataset GenerateSynthetic(const DatasetSpec& spec);

// Moves `identities_per_group` randomly chosen identities of every group into
// the second dataset. Both outputs are renumbered to contiguous ids,
// preserving the relative order of the surviving identities.
std::pair<GroupedDataset, GroupedDataset> SplitTrainVal(const GroupedDataset& ds,
                                                        int identities_per_group,
                                                        std::uint64_t seed);

// Per group: pairs_per_group / 2 same-identity pairs and as many
// different-identity pairs, all within the group, without repeats.
std::vector<VerificationPair> MakeVerificationPairs(const GroupedDataset& ds,
                                                    int pairs_per_group,
                                                    std::uint64_t seed);

// Line-oriented text format:
//   rlrbn-dataset v1 n_groups=<G> d_in=<D> n_samples=<N>
//   <identity_id> <group_id> <f_0> ... <f_{D-1}>
// Features are written with 17 significant digits so they round-trip exactly.
void WriteDataset(const GroupedDataset& ds, std::ostream& out);
GroupedDataset ReadDataset(std::istream& in);
void SaveDataset(const GroupedDataset& ds, const std::string& path);
GroupedDataset LoadDataset(const std::string& path);

// Pair files reference samples by index in the dataset they came from:
//   group_id,same_identity,index_a,index_b
void SavePairs(const std::vector<VerificationPair>& pairs, const std::string& path);
std::vector<VerificationPair> LoadPairs(const GroupedDataset& ds, const std::string& path);

}  // namespace rlrbn::data

#endif  // RLRBN_CORE_GROUPED_DATA_HPP_
