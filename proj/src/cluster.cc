#include "byzfl/cluster.h"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace byzfl {

namespace {

struct Edge {
  std::size_t a;
  std::size_t b;
  double weight;
};

std::vector<double> core_distances(const DistanceMatrix& dist, std::size_t k) {
  const std::size_t n = dist.size();
  std::vector<double> core(n);
  std::vector<double> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back(dist(i, j));
    }
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    core[i] = row[k - 1];
  }
  return core;
}

// Prim's algorithm on the dense mutual reachability graph; ties resolve to
// the lowest vertex index.
std::vector<Edge> minimum_spanning_tree(const DistanceMatrix& dist,
                                        const std::vector<double>& core) {
  const std::size_t n = dist.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, inf);
  std::vector<std::size_t> parent(n, 0);
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  in_tree[0] = true;
  auto relax = [&](std::size_t from) {
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = std::max({core[from], core[j], dist(from, j)});
      if (w < best[j]) {
        best[j] = w;
        parent[j] = from;
      }
    }
  };
  relax(0);
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t pick = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_tree[j] && (pick == n || best[j] < best[pick])) pick = j;
    }
    in_tree[pick] = true;
    edges.push_back({parent[pick], pick, best[pick]});
    relax(pick);
  }
  return edges;
}

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

struct Component {
  std::vector<std::size_t> points;
  std::vector<Edge> edges;
};

// Cuts every maximum-weight edge and returns the resulting pieces.
std::vector<Component> split(const Component& c) {
  double top = -1.0;
  for (const auto& e : c.edges) top = std::max(top, e.weight);
  std::map<std::size_t, std::size_t> local;
  for (std::size_t i = 0; i < c.points.size(); ++i) local[c.points[i]] = i;
  UnionFind uf(c.points.size());
  for (const auto& e : c.edges) {
    if (e.weight < top) uf.unite(local[e.a], local[e.b]);
  }
  std::map<std::size_t, Component> pieces;
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    pieces[uf.find(i)].points.push_back(c.points[i]);
  }
  for (const auto& e : c.edges) {
    if (e.weight < top) pieces[uf.find(local[e.a])].edges.push_back(e);
  }
  std::vector<Component> out;
  for (auto& [root, piece] : pieces) out.push_back(std::move(piece));
  return out;
}

}  // namespace

std::vector<int> density_cluster(const DistanceMatrix& dist,
                                 std::size_t min_cluster_size) {
  const std::size_t n = dist.size();
  if (min_cluster_size < 2) {
    throw std::invalid_argument("min_cluster_size must be at least 2");
  }
  if (n < min_cluster_size) return std::vector<int>(n, 0);

  const auto core = core_distances(dist, min_cluster_size - 1);
  Component root;
  root.points.resize(n);
  std::iota(root.points.begin(), root.points.end(), 0);
  root.edges = minimum_spanning_tree(dist, core);

  // A cluster is born with its current points. Pieces smaller than the
  // minimum size fall out of it without ending it; only a split into two or
  // more large pieces does. A cluster that never splits is a leaf and keeps
  // every point it was born with. The whole data set is never born: if it
  // does not split, only the points left at its last level form the cluster.
  struct Pending {
    Component core;
    std::vector<std::size_t> born;
    bool root = false;
  };
  std::vector<std::vector<std::size_t>> leaves;
  std::vector<Pending> pending;
  pending.push_back({root, root.points, true});
  while (!pending.empty()) {
    Pending current = std::move(pending.back());
    pending.pop_back();
    if (current.core.edges.empty()) {
      leaves.push_back(std::move(current.born));
      continue;
    }
    std::vector<Component> big;
    for (auto& piece : split(current.core)) {
      if (piece.points.size() >= min_cluster_size) big.push_back(std::move(piece));
    }
    if (big.empty()) {
      leaves.push_back(std::move(current.born));
    } else if (big.size() == 1) {
      if (current.root) current.born = big.front().points;
      current.core = std::move(big.front());
      pending.push_back(std::move(current));
    } else {
      for (auto& piece : big) {
        std::vector<std::size_t> born = piece.points;
        pending.push_back({std::move(piece), std::move(born), false});
      }
    }
  }

  for (auto& leaf : leaves) std::sort(leaf.begin(), leaf.end());
  std::sort(leaves.begin(), leaves.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  std::vector<int> labels(n, kNoise);
  for (std::size_t c = 0; c < leaves.size(); ++c) {
    for (std::size_t p : leaves[c]) labels[p] = static_cast<int>(c);
  }
  return labels;
}

std::vector<std::size_t> largest_cluster(const std::vector<int>& labels) {
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kNoise) members[labels[i]].push_back(i);
  }
  std::vector<std::size_t> best;
  for (auto& [label, idx] : members) {
    if (idx.size() > best.size() ||
        (idx.size() == best.size() && !best.empty() && idx.front() < best.front())) {
      best = idx;
    }
  }
  return best;
}

}  // namespace byzfl
