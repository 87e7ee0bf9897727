#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "byzfl/data.h"
#include "byzfl/model.h"

using namespace byzfl;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(BYZFL_FIXTURES);

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

double entropy(const std::vector<double>& counts) {
  double total = 0.0, h = 0.0;
  for (double c : counts) total += c;
  for (double c : counts) {
    if (c > 0) h -= c / total * std::log(c / total);
  }
  return h;
}

double mean_client_entropy(const Dataset& ds, const Partition& p) {
  double sum = 0.0;
  for (const auto& shard : p.client_indices) {
    std::vector<double> hist(ds.num_classes, 0.0);
    for (auto i : shard) hist[ds.labels[i]] += 1;
    sum += entropy(hist);
  }
  return sum / static_cast<double>(p.client_indices.size());
}

}  // namespace

TEST(SynthBlobs, Deterministic) {
  Rng a(5), b(5);
  const auto x = synth_blobs(a, 2, 2, 50, 1.0);
  const auto y = synth_blobs(b, 2, 2, 50, 1.0);
  EXPECT_EQ(x.inputs, y.inputs);
  EXPECT_EQ(x.labels, y.labels);
}

TEST(SynthBlobs, ExactlyUniformClassPriors) {
  Rng rng(6);
  const auto ds = synth_blobs(rng, 10, 32, 60, 1.0);
  std::vector<int> counts(10, 0);
  for (int y : ds.labels) ++counts[y];
  for (int c : counts) EXPECT_EQ(c, 60);
  EXPECT_EQ(ds.inputs.size(), 600u * 32);
}

TEST(SynthBlobs, CentersOnScaledSimplex) {
  Rng rng(7);
  const auto ds = synth_blobs(rng, 3, 5, 2000, 0.5, 4.0);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> mean(5, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.labels[i] != c) continue;
      for (std::size_t j = 0; j < 5; ++j) mean[j] += ds.row(i)[j] / 2000;
    }
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(mean[j], j == std::size_t(c) ? 4.0 : 0.0, 0.05);
  }
}

TEST(SynthBlobs, TightBlobsAreSeparable) {
  Rng rng(8);
  const auto ds = synth_blobs(rng, 4, 8, 25, 1e-6);
  const ModelSpec spec{ModelKind::kSoftmax, 8, 4, 0};
  WeightVector w(spec.dim(), 0.0);
  for (int i = 0; i < 300; ++i) axpy(-0.5, grad(spec, w, Batch(ds)), w);
  EXPECT_EQ(accuracy(spec, w, Batch(ds)), 1.0);
}

TEST(SynthBlobs, FewerDimensionsThanClasses) {
  Rng rng(9);
  const auto ds = synth_blobs(rng, 5, 2, 10, 1.0);
  EXPECT_EQ(ds.input_dim, 2u);
  EXPECT_EQ(ds.size(), 50u);
  EXPECT_THROW(synth_blobs(rng, 1, 2, 10, 1.0), std::invalid_argument);
  EXPECT_THROW(synth_blobs(rng, 2, 2, 10, 0.0), std::invalid_argument);
}

TEST(Partition, ReferenceSetSizeAndDisjointness) {
  Rng rng(10);
  const auto ds = synth_blobs(rng, 10, 4, 100, 1.0);
  const auto p = partition_dirichlet(rng, ds, 30, 0.5, 100);
  EXPECT_EQ(p.reference_indices.size(), 100u);
  std::set<std::size_t> seen(p.reference_indices.begin(), p.reference_indices.end());
  EXPECT_EQ(seen.size(), 100u);
  std::size_t total = 100;
  ASSERT_EQ(p.client_indices.size(), 30u);
  for (const auto& shard : p.client_indices) {
    EXPECT_FALSE(shard.empty());
    for (auto i : shard) {
      EXPECT_LT(i, ds.size());
      EXPECT_TRUE(seen.insert(i).second) << "index " << i << " assigned twice";
    }
    total += shard.size();
  }
  EXPECT_LE(total, ds.size());
}

TEST(Partition, LargeConcentrationIsIid) {
  std::vector<double> worst;
  double mean_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    const auto ds = synth_blobs(rng, 10, 2, 100, 1.0);
    const auto p = partition_dirichlet(rng, ds, 10, 1e6, 0);
    double gap = 0.0;
    for (const auto& shard : p.client_indices) {
      std::vector<double> hist(10, 0.0);
      for (auto i : shard) hist[ds.labels[i]] += 1.0 / shard.size();
      for (double h : hist) gap = std::max(gap, std::abs(h - 0.1));
    }
    mean_gap += gap / 100;
  }
  EXPECT_LT(mean_gap, 0.05);
}

TEST(Partition, SmallConcentrationLowersEntropy) {
  Rng rng(11);
  const auto ds = synth_blobs(rng, 10, 2, 100, 1.0);
  double skewed = 0.0, iid = 0.0;
  for (int t = 0; t < 10; ++t) {
    skewed += mean_client_entropy(ds, partition_dirichlet(rng, ds, 10, 0.1, 0));
    iid += mean_client_entropy(ds, partition_dirichlet(rng, ds, 10, 1e6, 0));
  }
  EXPECT_LT(skewed, iid);
}

TEST(Partition, Reproducible) {
  Rng data_rng(12);
  const auto ds = synth_blobs(data_rng, 5, 2, 40, 1.0);
  Rng a(3), b(3);
  const auto p = partition_dirichlet(a, ds, 7, 0.3, 20);
  const auto q = partition_dirichlet(b, ds, 7, 0.3, 20);
  EXPECT_EQ(p.client_indices, q.client_indices);
  EXPECT_EQ(p.reference_indices, q.reference_indices);
}

TEST(Partition, Errors) {
  Rng rng(13);
  const auto ds = synth_blobs(rng, 2, 2, 3, 1.0);
  EXPECT_EQ(error_of([&] { partition_dirichlet(rng, ds, 50, 0.5, 0); }), "infeasible partition");
  EXPECT_THROW(partition_dirichlet(rng, ds, 2, 0.5, 6), std::invalid_argument);
  EXPECT_THROW(partition_dirichlet(rng, ds, 2, 0.0, 1), std::invalid_argument);
}

TEST(FlipLabels, Conservation) {
  Dataset ds{"d", 1, 4, {0, 1, 2, 3, 4, 5}, {0, 1, 0, 2, 1, 3}};
  const auto out = flip_labels(ds, 0, 1);
  EXPECT_EQ(out.labels, (std::vector<int>{1, 1, 1, 2, 1, 3}));
  EXPECT_EQ(out.inputs, ds.inputs);
  // Second application has nothing left to flip.
  EXPECT_EQ(flip_labels(out, 0, 1).labels, out.labels);
}

TEST(FlipLabels, NoSourceAndAllSource) {
  Dataset none{"d", 1, 3, {0, 1}, {1, 2}};
  EXPECT_EQ(flip_labels(none, 0, 1).labels, none.labels);
  Dataset all{"d", 1, 3, {0, 1}, {0, 0}};
  EXPECT_EQ(flip_labels(all, 0, 2).labels, (std::vector<int>{2, 2}));
  EXPECT_THROW(flip_labels(all, 0, 3), std::invalid_argument);
  EXPECT_THROW(flip_labels(all, 1, 1), std::invalid_argument);
}

TEST(AttackerSplit, EightyTwentyOverUnion) {
  Rng rng(14);
  const auto ds = synth_blobs(rng, 2, 2, 50, 1.0);
  const std::vector<std::vector<std::size_t>> shards{{0, 1, 2, 3, 4}, {50, 51, 52, 53, 54}};
  const auto split = split_attacker_data(rng, ds, shards);
  EXPECT_EQ(split.train.size(), 8u);
  EXPECT_EQ(split.val.size(), 2u);
  const auto single = split_attacker_data(rng, ds, {{7}});
  EXPECT_EQ(single.train.size(), 1u);
  EXPECT_EQ(single.val.size(), 1u);
}

TEST(Idx, FixtureShapesAndPixels) {
  const auto ds = load_idx((kFixtures / "tiny-images.idx3").string(),
                           (kFixtures / "tiny-labels.idx1").string());
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.input_dim, 6u);
  EXPECT_EQ(ds.num_classes, 8u);
  EXPECT_EQ(ds.labels, (std::vector<int>{3, 0, 7, 1}));
  EXPECT_EQ(ds.row(0)[1], 1.0);
  EXPECT_EQ(ds.row(0)[2], 128 / 255.0);
  EXPECT_EQ(ds.row(1)[3], 0.0);
  EXPECT_EQ(ds.row(2)[5], 6 / 255.0);
  EXPECT_EQ(ds.row(3)[4], 0xfd / 255.0);
}

TEST(Idx, TruncatedFileNamesByteCounts) {
  const fs::path dir = fs::temp_directory_path() / "byzfl-idx-test";
  fs::create_directories(dir);
  std::ifstream src(kFixtures / "tiny-images.idx3", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(src)), {});
  std::ofstream(dir / "cut.idx3", std::ios::binary) << bytes.substr(0, 30);
  const auto msg = error_of([&] {
    load_idx((dir / "cut.idx3").string(), (kFixtures / "tiny-labels.idx1").string());
  });
  EXPECT_NE(msg.find("expected 24 bytes"), std::string::npos) << msg;
  EXPECT_NE(msg.find("14 available"), std::string::npos) << msg;

  std::string bad = bytes;
  bad[3] = 0x01;
  std::ofstream(dir / "magic.idx3", std::ios::binary) << bad;
  const auto magic = error_of([&] {
    load_idx((dir / "magic.idx3").string(), (kFixtures / "tiny-labels.idx1").string());
  });
  EXPECT_NE(magic.find("bad magic number"), std::string::npos) << magic;
  EXPECT_NE(magic.find("byte offset 0"), std::string::npos) << magic;
  fs::remove_all(dir);
}

TEST(Csv, HeaderAndZScores) {
  const auto ds = load_csv((kFixtures / "tiny.csv").string());
  EXPECT_EQ(ds.input_dim, 3u);
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 2, 1}));
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 4; ++i) mean += ds.row(i)[c] / 4;
    for (std::size_t i = 0; i < 4; ++i) var += (ds.row(i)[c] - mean) * (ds.row(i)[c] - mean) / 4;
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(var, 1.0, 1e-9);
  }
}

TEST(Csv, RaggedRowNamesLine) {
  const auto msg = error_of([] { load_csv((kFixtures / "ragged.csv").string()); });
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}
