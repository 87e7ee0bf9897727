#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "byzfl/cluster.h"

using namespace byzfl;

namespace {

DistanceMatrix line(const std::vector<double>& xs) {
  DistanceMatrix d(xs.size(), Metric::kEuclidean);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) d.set(i, j, std::abs(xs[i] - xs[j]));
  }
  return d;
}

// Independent reference: the hierarchy is read off graph connectivity rather
// than an explicit spanning tree. A set's top level is the smallest mutual
// reachability threshold that connects it; its children are the components
// formed by strictly lighter edges.
std::vector<int> threshold_oracle(const DistanceMatrix& dist, std::size_t mcs) {
  const std::size_t n = dist.size();
  if (n < mcs) return std::vector<int>(n, 0);
  std::vector<double> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back(dist(i, j));
    }
    std::sort(row.begin(), row.end());
    core[i] = row[mcs - 2];
  }
  auto mreach = [&](std::size_t a, std::size_t b) {
    return std::max({core[a], core[b], dist(a, b)});
  };
  auto components = [&](const std::vector<std::size_t>& set, auto keep) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<bool> seen(set.size(), false);
    for (std::size_t s = 0; s < set.size(); ++s) {
      if (seen[s]) continue;
      std::vector<std::size_t> comp;
      std::vector<std::size_t> stack{s};
      seen[s] = true;
      while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        comp.push_back(set[u]);
        for (std::size_t v = 0; v < set.size(); ++v) {
          if (!seen[v] && keep(mreach(set[u], set[v]))) {
            seen[v] = true;
            stack.push_back(v);
          }
        }
      }
      std::sort(comp.begin(), comp.end());
      out.push_back(comp);
    }
    return out;
  };
  std::vector<std::vector<std::size_t>> leaves;
  // `set` is what is left of the cluster born as `born`; the full set is
  // never born, so while it is `root` only its survivors count.
  std::function<void(const std::vector<std::size_t>&, const std::vector<std::size_t>&, bool)>
      visit = [&](const auto& set, const auto& born, bool root) {
    if (set.size() == 1) {
      leaves.push_back(born);
      return;
    }
    std::set<double> levels;
    for (auto a : set) {
      for (auto b : set) {
        if (a < b) levels.insert(mreach(a, b));
      }
    }
    double top = 0.0;
    for (double t : levels) {
      if (components(set, [&](double w) { return w <= t; }).size() == 1) {
        top = t;
        break;
      }
    }
    std::vector<std::vector<std::size_t>> big;
    for (auto& c : components(set, [&](double w) { return w < top; })) {
      if (c.size() >= mcs) big.push_back(c);
    }
    if (big.empty()) {
      leaves.push_back(born);
    } else if (big.size() == 1) {
      visit(big.front(), root ? big.front() : born, root);
    } else {
      for (auto& c : big) visit(c, c, false);
    }
  };
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  visit(all, all, true);
  std::sort(leaves.begin(), leaves.end());
  std::vector<int> labels(n, kNoise);
  for (std::size_t c = 0; c < leaves.size(); ++c) {
    for (auto p : leaves[c]) labels[p] = static_cast<int>(c);
  }
  return labels;
}

}  // namespace

TEST(DensityCluster, SeparatedGroups) {
  DistanceMatrix d(10, Metric::kEuclidean);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = i + 1; j < 10; ++j) d.set(i, j, (i < 5) == (j < 5) ? 0.0 : 10.0);
  }
  const auto labels = density_cluster(d, 3);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(labels[i], i < 5 ? 0 : 1);
}

TEST(DensityCluster, UniformDistancesGiveOneCluster) {
  const std::size_t n = 9;
  DistanceMatrix d(n, Metric::kEuclidean);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d.set(i, j, 1.0);
  }
  for (int l : density_cluster(d, n / 2 + 1)) EXPECT_EQ(l, 0);
}

TEST(DensityCluster, PointsOnALine) {
  // Core distances (k = 2): 0.2 for the first group, 0.2 for the second, 20 for
  // the outlier; the spanning tree's heaviest edge (20) isolates point 7,
  // then the 9.7 edge separates the two groups, each a leaf.
  const auto d = line({0, 0.1, 0.2, 0.3, 10, 10.1, 10.2, 30});
  const std::vector<int> expected{0, 0, 0, 0, 1, 1, 1, kNoise};
  EXPECT_EQ(density_cluster(d, 3), expected);
  EXPECT_EQ(threshold_oracle(d, 3), expected);
}

TEST(DensityCluster, TooFewPointsIsOneCluster) {
  const auto d = line({0, 5});
  EXPECT_EQ(density_cluster(d, 3), (std::vector<int>{0, 0}));
  EXPECT_THROW(density_cluster(d, 1), std::invalid_argument);
}

TEST(DensityCluster, MatchesThresholdOracleOnRandomSets) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.below(12);
    std::vector<WeightVector> pts;
    for (std::size_t i = 0; i < n; ++i) {
      const double cx = rng.below(3) * 5.0;
      pts.push_back({cx + rng.normal(), rng.normal()});
    }
    const auto d = pairwise_distances(pts, Metric::kEuclidean);
    const std::size_t mcs = 2 + rng.below(n / 2);
    EXPECT_EQ(density_cluster(d, mcs), threshold_oracle(d, mcs)) << trial;
  }
}

TEST(DensityCluster, RelabelingInvariant) {
  Rng rng(22);
  std::vector<WeightVector> pts;
  for (int i = 0; i < 12; ++i) pts.push_back({(i % 2) * 8.0 + rng.normal(), rng.normal()});
  const auto labels = density_cluster(pairwise_distances(pts, Metric::kEuclidean), 4);
  const auto perm = rng.permutation(pts.size());
  std::vector<WeightVector> shuffled;
  for (auto p : perm) shuffled.push_back(pts[p]);
  const auto relabeled = density_cluster(pairwise_distances(shuffled, Metric::kEuclidean), 4);
  // Same co-membership for every pair.
  for (std::size_t a = 0; a < perm.size(); ++a) {
    for (std::size_t b = 0; b < perm.size(); ++b) {
      const bool same = labels[perm[a]] == labels[perm[b]] && labels[perm[a]] != kNoise;
      const bool same2 = relabeled[a] == relabeled[b] && relabeled[a] != kNoise;
      EXPECT_EQ(same, same2);
    }
  }
}

TEST(LargestCluster, TiesGoToSmallestIndex) {
  EXPECT_EQ(largest_cluster({1, 1, 0, 0, kNoise}), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(largest_cluster({0, 1, 1, 1, 0}), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_TRUE(largest_cluster({kNoise, kNoise}).empty());
}
