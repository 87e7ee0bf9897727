// Density clustering over a precomputed distance matrix.
//
// A reduced HDBSCAN: core distances use the (min_cluster_size - 1)-th nearest
// neighbour, the minimum spanning tree is built over mutual reachability
// distances, and the single-linkage hierarchy is walked top down. At every
// level all edges of the current maximum weight are cut together. Pieces
// smaller than min_cluster_size fall out of the cluster without ending it; a
// cluster that splits into two or more qualifying pieces is replaced by them.
// A cluster that never splits that way is a leaf and is labeled with every
// point it held when it formed, as in leaf selection. The full point set is
// treated like HDBSCAN's single-cluster case: when it never splits, only the
// points still present at its last level are members. Points that fell out
// of the full set, or of a cluster which later split, are noise.

#pragma once

#include <cstddef>
#include <vector>

#include "byzfl/numerics.h"

namespace byzfl {

inline constexpr int kNoise = -1;

/// Cluster label per point (0, 1, ... ordered by smallest member index), or
/// kNoise. When n < min_cluster_size every point is placed in cluster 0.
std::vector<int> density_cluster(const DistanceMatrix& dist,
                                 std::size_t min_cluster_size);

/// Members of the largest cluster in ascending order; ties go to the cluster
/// holding the smallest index. Empty when every point is noise.
std::vector<std::size_t> largest_cluster(const std::vector<int>& labels);

}  // namespace byzfl
