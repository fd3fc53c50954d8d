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

#include "core/grouped_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <utility>

#include "core/common.hpp"
#include "core/error.hpp"

namespace rlrbn::data {

namespace {

std::vector<double> RandomUnit(int dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& x : v) {
      x = normal(rng);
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

void NormalizeInPlace(std::vector<double>& v) {
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 == 0.0) throw NumericDomainError("cannot normalize a zero vector");
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
}

using PairKey = std::pair<int, int>;

PairKey Ordered(int a, int b) { return a < b ? PairKey{a, b} : PairKey{b, a}; }

VerificationPair MakePair(const GroupedDataset& ds, PairKey key, bool same, int group) {
  VerificationPair p;
  p.index_a = key.first;
  p.index_b = key.second;
  p.sample_a = ds.samples()[key.first];
  p.sample_b = ds.samples()[key.second];
  p.same_identity = same;
  p.group_id = group;
  return p;
}

}  // namespace

void DatasetSpec::Validate() const {
  if (n_groups < 1) throw ConfigError("n_groups must be positive");
  if (static_cast<int>(identities_per_group.size()) != n_groups ||
      static_cast<int>(group_concentration.size()) != n_groups ||
      static_cast<int>(group_center_spread.size()) != n_groups) {
    throw ConfigError(
        "identities_per_group, group_concentration and group_center_spread "
        "must all have n_groups entries");
  }
  if (samples_per_identity < 2) throw ConfigError("samples_per_identity must be >= 2");
  if (d_in < 1) throw ConfigError("d_in must be positive");
  for (int g = 0; g < n_groups; ++g) {
    if (identities_per_group[g] < 1) {
      throw ConfigError("every group needs at least one identity");
    }
    if (!(group_concentration[g] > 0.0) || !(group_center_spread[g] > 0.0)) {
      throw ConfigError("group concentration and center spread must be positive");
    }
  }
}

GroupedDataset::GroupedDataset(std::vector<Sample> samples, int n_groups)
    : samples_(std::move(samples)), n_groups_(n_groups) {
  if (n_groups_ < 1) throw ConfigError("dataset needs at least one group");
  int max_id = -1;
  for (const Sample& s : samples_) {
    if (s.identity_id < 0) throw ConfigError("negative identity id");
    if (s.group_id < 0 || s.group_id >= n_groups_) {
      throw ConfigError("group id out of range");
    }
    max_id = std::max(max_id, s.identity_id);
  }
  d_in_ = samples_.empty() ? 0 : static_cast<int>(samples_.front().features.size());
  group_of_identity_.assign(max_id + 1, -1);
  by_identity_.assign(max_id + 1, {});
  by_group_.assign(n_groups_, {});
  for (int i = 0; i < static_cast<int>(samples_.size()); ++i) {
    const Sample& s = samples_[i];
    if (static_cast<int>(s.features.size()) != d_in_) {
      throw ConfigError("inconsistent feature dimension");
    }
    for (double x : s.features) {
      if (!std::isfinite(x)) throw NumericDomainError("non-finite feature value");
    }
    int& g = group_of_identity_[s.identity_id];
    if (g == -1) {
      g = s.group_id;
    } else if (g != s.group_id) {
      throw ConfigError("identity " + std::to_string(s.identity_id) +
                        " appears in more than one group");
    }
    by_identity_[s.identity_id].push_back(i);
  }
  for (int id = 0; id <= max_id; ++id) {
    if (group_of_identity_[id] == -1) {
      throw ConfigError("identity ids are not contiguous (missing " + std::to_string(id) + ")");
    }
    if (by_identity_[id].size() < 2) {
      throw ConfigError("identity " + std::to_string(id) + " has fewer than 2 samples");
    }
    by_group_[group_of_identity_[id]].push_back(id);
  }
}

std::vector<int> GroupedDataset::identities_per_group() const {
  std::vector<int> counts(n_groups_);
  for (int g = 0; g < n_groups_; ++g) counts[g] = static_cast<int>(by_group_[g].size());
  return counts;
}

GroupedDataset GenerateSynthetic(const DatasetSpec& spec) {
  spec.Validate();
  Rng rng = MakeRng(spec.seed, {0x6461746100ULL});
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Sample> samples;
  int next_identity = 0;
  for (int g = 0; g < spec.n_groups; ++g) {
    const std::vector<double> anchor = RandomUnit(spec.d_in, rng);
    const double spread = spec.group_center_spread[g];
    const double noise = 1.0 / std::sqrt(spec.group_concentration[g]);
    for (int k = 0; k < spec.identities_per_group[g]; ++k) {
      std::vector<double> center = RandomUnit(spec.d_in, rng);
      for (int c = 0; c < spec.d_in; ++c) center[c] = anchor[c] + spread * center[c];
      NormalizeInPlace(center);
      for (int j = 0; j < spec.samples_per_identity; ++j) {
        Sample s;
        s.identity_id = next_identity;
        s.group_id = g;
        s.features.resize(spec.d_in);
        for (int c = 0; c < spec.d_in; ++c) s.features[c] = center[c] + noise * normal(rng);
        NormalizeInPlace(s.features);
        samples.push_back(std::move(s));
      }
      ++next_identity;
    }
  }
  return GroupedDataset(std::move(samples), spec.n_groups);
}

std::pair<GroupedDataset, GroupedDataset> SplitTrainVal(const GroupedDataset& ds,
                                                        int identities_per_group,
                                                        std::uint64_t seed) {
  if (identities_per_group < 0) throw ConfigError("negative validation size");
  std::vector<char> held_out(ds.n_identities(), 0);
  Rng rng = MakeRng(seed, {0x73706c6974ULL});
  for (int g = 0; g < ds.n_groups(); ++g) {
    std::vector<int> ids = ds.identities_by_group()[g];
    if (identities_per_group > 0 && static_cast<int>(ids.size()) <= identities_per_group) {
      throw ConfigError("group " + std::to_string(g) + " has " + std::to_string(ids.size()) +
                        " identities; cannot hold out " + std::to_string(identities_per_group));
    }
    std::shuffle(ids.begin(), ids.end(), rng);
    for (int k = 0; k < identities_per_group; ++k) held_out[ids[k]] = 1;
  }

  std::vector<int> new_id(ds.n_identities(), -1);
  int n_kept = 0;
  int n_held = 0;
  for (int id = 0; id < ds.n_identities(); ++id) {
    new_id[id] = held_out[id] ? n_held++ : n_kept++;
  }
  std::vector<Sample> kept;
  std::vector<Sample> held;
  for (const Sample& s : ds.samples()) {
    Sample copy = s;
    copy.identity_id = new_id[s.identity_id];
    (held_out[s.identity_id] ? held : kept).push_back(std::move(copy));
  }
  return {GroupedDataset(std::move(kept), ds.n_groups()),
          GroupedDataset(std::move(held), ds.n_groups())};
}

std::vector<VerificationPair> MakeVerificationPairs(const GroupedDataset& ds,
                                                    int pairs_per_group,
                                                    std::uint64_t seed) {
  if (pairs_per_group <= 0 || pairs_per_group % 2 != 0) {
    throw ConfigError("pairs_per_group must be a positive even number");
  }
  const int half = pairs_per_group / 2;
  const auto& by_id = ds.samples_by_identity();
  Rng rng = MakeRng(seed, {0x7061697273ULL});
  std::vector<VerificationPair> out;
  out.reserve(static_cast<std::size_t>(pairs_per_group) * ds.n_groups());

  for (int g = 0; g < ds.n_groups(); ++g) {
    const std::vector<int>& ids = ds.identities_by_group()[g];
    if (ids.size() < 2) {
      throw ConfigError("group " + std::to_string(g) +
                        " needs at least 2 identities for verification pairs");
    }
    long long n_pos = 0;
    long long n_samples = 0;
    long long sum_sq = 0;
    for (int id : ids) {
      const long long n = static_cast<long long>(by_id[id].size());
      n_pos += n * (n - 1) / 2;
      n_samples += n;
      sum_sq += n * n;
    }
    const long long n_neg = (n_samples * n_samples - sum_sq) / 2;
    if (half > n_pos || half > n_neg) {
      throw ConfigError("group " + std::to_string(g) + " cannot supply " +
                        std::to_string(half) + " unique positive and negative pairs");
    }

    // Dense requests enumerate and shuffle; sparse ones use rejection.
    auto take = [&](bool same, long long available) {
      std::set<PairKey> seen;
      if (2LL * half > available) {
        std::vector<PairKey> all;
        for (std::size_t a = 0; a < ids.size(); ++a) {
          const auto& sa = by_id[ids[a]];
          if (same) {
            for (std::size_t i = 0; i < sa.size(); ++i)
              for (std::size_t j = i + 1; j < sa.size(); ++j) all.push_back(Ordered(sa[i], sa[j]));
          } else {
            for (std::size_t b = a + 1; b < ids.size(); ++b)
              for (int i : sa)
                for (int j : by_id[ids[b]]) all.push_back(Ordered(i, j));
          }
        }
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(half);
        for (const PairKey& k : all) out.push_back(MakePair(ds, k, same, g));
        return;
      }
      std::uniform_int_distribution<std::size_t> pick_id(0, ids.size() - 1);
      while (static_cast<int>(seen.size()) < half) {
        PairKey key;
        if (same) {
          const auto& sa = by_id[ids[pick_id(rng)]];
          std::uniform_int_distribution<std::size_t> pick(0, sa.size() - 1);
          const std::size_t i = pick(rng);
          const std::size_t j = pick(rng);
          if (i == j) continue;
          key = Ordered(sa[i], sa[j]);
        } else {
          const std::size_t a = pick_id(rng);
          const std::size_t b = pick_id(rng);
          if (a == b) continue;
          const auto& sa = by_id[ids[a]];
          const auto& sb = by_id[ids[b]];
          std::uniform_int_distribution<std::size_t> pa(0, sa.size() - 1);
          std::uniform_int_distribution<std::size_t> pb(0, sb.size() - 1);
          key = Ordered(sa[pa(rng)], sb[pb(rng)]);
        }
        if (seen.insert(key).second) out.push_back(MakePair(ds, key, same, g));
      }
    };
    take(true, n_pos);
    take(false, n_neg);
  }
  return out;
}

void WriteDataset(const GroupedDataset& ds, std::ostream& out) {
  out << "rlrbn-dataset v1 n_groups=" << ds.n_groups() << " d_in=" << ds.d_in()
      << " n_samples=" << ds.samples().size() << '\n';
  out << std::setprecision(17);
  for (const Sample& s : ds.samples()) {
    out << s.identity_id << ' ' << s.group_id;
    for (double x : s.features) out << ' ' << x;
    out << '\n';
  }
}

GroupedDataset ReadDataset(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw IoError("empty dataset stream");
  int n_groups = 0;
  int d_in = 0;
  long long n_samples = 0;
  if (std::sscanf(header.c_str(), "rlrbn-dataset v1 n_groups=%d d_in=%d n_samples=%lld",
                  &n_groups, &d_in, &n_samples) != 3) {
    throw IoError("malformed dataset header: " + header);
  }
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(n_samples));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Sample s;
    ls >> s.identity_id >> s.group_id;
    s.features.resize(d_in);
    for (double& x : s.features) ls >> x;
    if (!ls) throw IoError("malformed dataset record: " + line);
    samples.push_back(std::move(s));
  }
  if (static_cast<long long>(samples.size()) != n_samples) {
    throw IoError("dataset sample count does not match its header");
  }
  return GroupedDataset(std::move(samples), n_groups);
}

void SaveDataset(const GroupedDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  WriteDataset(ds, out);
  if (!out) throw IoError("write failed: " + path);
}

GroupedDataset LoadDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open dataset " + path);
  return ReadDataset(in);
}

void SavePairs(const std::vector<VerificationPair>& pairs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "group_id,same_identity,index_a,index_b\n";
  for (const VerificationPair& p : pairs) {
    out << p.group_id << ',' << (p.same_identity ? 1 : 0) << ',' << p.index_a << ','
        << p.index_b << '\n';
  }
}

std::vector<VerificationPair> LoadPairs(const GroupedDataset& ds, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open pairs file " + path);
  std::string line;
  std::getline(in, line);
  std::vector<VerificationPair> pairs;
  const int n = static_cast<int>(ds.samples().size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int g = 0, same = 0, a = 0, b = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%d", &g, &same, &a, &b) != 4 || a < 0 || b < 0 ||
        a >= n || b >= n) {
      throw IoError("malformed pair record: " + line);
    }
    pairs.push_back(MakePair(ds, {a, b}, same != 0, g));
  }
  return pairs;
}

}  // namespace rlrbn::data
