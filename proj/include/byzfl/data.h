// Dataset synthesis and ingestion, non-IID partitioning, label poisoning.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "byzfl/model.h"
#include "byzfl/rng.h"

namespace byzfl {

/// Gaussian blobs around centers separation * e_c (a scaled simplex; random
/// unit directions when dim < classes). Exactly per_class examples per class,
/// ordered by class.
Dataset synth_blobs(Rng& rng, std::size_t classes, std::size_t dim,
                    std::size_t per_class, double spread,
                    double separation = 4.0);

struct Partition {
  std::vector<std::vector<std::size_t>> client_indices;
  std::vector<std::size_t> reference_indices;
};

/// Reference set first (uniform without replacement), then per-class
/// Dirichlet(alpha) proportions over m clients. Label proportions are
/// redrawn until every client holds at least one example; after 100 failed
/// draws throws std::runtime_error("infeasible partition").
Partition partition_dirichlet(Rng& rng, const Dataset& ds, std::size_t m,
                              double alpha, std::size_t ref_size);

/// Copy of ds with every `source` label replaced by `target`.
Dataset flip_labels(const Dataset& ds, int source, int target);

struct AttackerData {
  Dataset train;
  Dataset val;
};

/// Union of the given shards (ascending shard order), shuffled and split
/// train_fraction / (1 - train_fraction). Both parts are non-empty whenever
/// the union has at least two examples.
AttackerData split_attacker_data(Rng& rng, const Dataset& ds,
                                 const std::vector<std::vector<std::size_t>>& shards,
                                 double train_fraction = 0.8);

/// IDX image file (magic 0x00000803, u8 pixels scaled to [0, 1]) plus IDX
/// label file (magic 0x00000801). Errors name the byte offset or the expected
/// and available byte counts.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Headered CSV. The label column is the one named "label", else the last.
/// Features are z-scored per column. Errors name the line number.
Dataset load_csv(const std::string& path);

}  // namespace byzfl
