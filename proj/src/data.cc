#include "byzfl/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "byzfl/numerics.h"

namespace byzfl {

Dataset synth_blobs(Rng& rng, std::size_t classes, std::size_t dim,
                    std::size_t per_class, double spread, double separation) {
  if (classes < 2) throw std::invalid_argument("synth_blobs: classes < 2");
  if (per_class < 1) throw std::invalid_argument("synth_blobs: per_class < 1");
  if (dim < 1) throw std::invalid_argument("synth_blobs: dim < 1");
  if (!(spread > 0.0)) throw std::invalid_argument("synth_blobs: spread <= 0");

  std::vector<std::vector<double>> centers(classes, std::vector<double>(dim, 0.0));
  if (dim >= classes) {
    for (std::size_t c = 0; c < classes; ++c) centers[c][c] = separation;
  } else {
    Rng center_rng = rng.derive("centers");
    for (auto& center : centers) {
      for (double& x : center) x = center_rng.normal();
      const double len = norm(center);
      for (double& x : center) x *= separation / len;
    }
  }

  Dataset ds;
  ds.name = "blobs";
  ds.input_dim = dim;
  ds.num_classes = classes;
  ds.inputs.reserve(classes * per_class * dim);
  ds.labels.reserve(classes * per_class);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        ds.inputs.push_back(centers[c][j] + spread * rng.normal());
      }
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

Partition partition_dirichlet(Rng& rng, const Dataset& ds, std::size_t m,
                              double alpha, std::size_t ref_size) {
  if (m < 1) throw std::invalid_argument("partition: no clients");
  if (!(alpha > 0.0)) throw std::invalid_argument("invalid concentration");
  if (ref_size >= ds.size()) {
    throw std::invalid_argument("partition: reference set exceeds dataset");
  }

  Partition out;
  out.reference_indices = rng.sample_without_replacement(ds.size(), ref_size);
  std::vector<bool> reserved(ds.size(), false);
  for (std::size_t i : out.reference_indices) reserved[i] = true;

  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!reserved[i]) by_class[ds.labels[i]].push_back(i);
  }

  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<std::vector<std::size_t>> shards(m);
    for (const auto& members : by_class) {
      if (members.empty()) continue;
      const auto order = rng.permutation(members.size());
      const auto p = sample_dirichlet(rng, alpha, m);
      const double n = static_cast<double>(members.size());
      double cumulative = 0.0;
      std::size_t start = 0;
      for (std::size_t client = 0; client < m; ++client) {
        cumulative += p[client];
        std::size_t stop = client + 1 == m
                               ? members.size()
                               : static_cast<std::size_t>(std::floor(cumulative * n));
        stop = std::clamp(stop, start, members.size());
        for (std::size_t k = start; k < stop; ++k) {
          shards[client].push_back(members[order[k]]);
        }
        start = stop;
      }
    }
    const bool feasible = std::none_of(shards.begin(), shards.end(),
                                       [](const auto& s) { return s.empty(); });
    if (feasible) {
      for (auto& shard : shards) std::sort(shard.begin(), shard.end());
      out.client_indices = std::move(shards);
      return out;
    }
  }
  throw std::runtime_error("infeasible partition");
}

Dataset flip_labels(const Dataset& ds, int source, int target) {
  const int classes = static_cast<int>(ds.num_classes);
  if (source < 0 || source >= classes || target < 0 || target >= classes) {
    throw std::invalid_argument("flip_labels: invalid class");
  }
  if (source == target) {
    throw std::invalid_argument("flip_labels: source equals target");
  }
  Dataset out = ds;
  for (int& y : out.labels) {
    if (y == source) y = target;
  }
  return out;
}

AttackerData split_attacker_data(Rng& rng, const Dataset& ds,
                                 const std::vector<std::vector<std::size_t>>& shards,
                                 double train_fraction) {
  std::vector<std::size_t> pool;
  for (const auto& shard : shards) pool.insert(pool.end(), shard.begin(), shard.end());
  if (pool.empty()) throw std::invalid_argument("attackers hold no data");
  const auto order = rng.permutation(pool.size());
  std::vector<std::size_t> shuffled(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) shuffled[i] = pool[order[i]];

  std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(pool.size())));
  if (pool.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, pool.size() - 1);
  else n_train = pool.size();

  std::span<const std::size_t> all(shuffled);
  AttackerData out;
  out.train = ds.subset(all.first(n_train));
  // A single example serves both roles.
  out.val = n_train < pool.size() ? ds.subset(all.subspan(n_train)) : out.train;
  return out;
}

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes,
                        std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw std::runtime_error(path + ": truncated IDX header at byte offset " +
                             std::to_string(offset) + ": expected 4 bytes, " +
                             std::to_string(bytes.size() - std::min(offset, bytes.size())) +
                             " available");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string hex(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex;
  os.width(8);
  os.fill('0');
  os << v;
  return os.str();
}

void expect_payload(const std::vector<unsigned char>& bytes, std::size_t offset,
                    std::size_t needed, const std::string& path) {
  const std::size_t available = bytes.size() - offset;
  if (available < needed) {
    throw std::runtime_error(path + ": truncated IDX file: expected " +
                             std::to_string(needed) + " bytes of data after byte offset " +
                             std::to_string(offset) + ", " + std::to_string(available) +
                             " available");
  }
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);

  const std::uint32_t image_magic = read_be32(images, 0, images_path);
  if (image_magic != 0x00000803u) {
    throw std::runtime_error(images_path + ": bad magic number " + hex(image_magic) +
                             " at byte offset 0 (expected 0x00000803)");
  }
  const std::size_t n = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t pixels = rows * cols;
  expect_payload(images, 16, n * pixels, images_path);

  const std::uint32_t label_magic = read_be32(labels, 0, labels_path);
  if (label_magic != 0x00000801u) {
    throw std::runtime_error(labels_path + ": bad magic number " + hex(label_magic) +
                             " at byte offset 0 (expected 0x00000801)");
  }
  const std::size_t n_labels = read_be32(labels, 4, labels_path);
  if (n_labels != n) {
    throw std::runtime_error(labels_path + ": label count " + std::to_string(n_labels) +
                             " does not match image count " + std::to_string(n));
  }
  expect_payload(labels, 8, n, labels_path);
  if (n == 0) throw std::runtime_error(images_path + ": no examples");

  Dataset ds;
  ds.name = "idx";
  ds.input_dim = pixels;
  ds.inputs.resize(n * pixels);
  for (std::size_t i = 0; i < n * pixels; ++i) ds.inputs[i] = images[16 + i] / 255.0;
  ds.labels.resize(n);
  int top = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = labels[8 + i];
    top = std::max(top, ds.labels[i]);
  }
  ds.num_classes = static_cast<std::size_t>(top) + 1;
  return ds;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_fields(line);
    break;
  }
  if (header.size() < 2) {
    throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                             ": header needs at least one feature and a label");
  }
  std::size_t label_col = header.size() - 1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") label_col = c;
  }

  Dataset ds;
  ds.name = "csv";
  ds.input_dim = header.size() - 1;
  int top = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields, found " +
                               std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double value = 0.0;
      std::size_t used = 0;
      try {
        value = std::stod(fields[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != fields[c].size() || !std::isfinite(value)) {
        throw std::runtime_error(path + ": line " + std::to_string(line_no) + ", column '" +
                                 header[c] + "': not a finite number: '" + fields[c] + "'");
      }
      if (c == label_col) {
        if (value < 0 || value != std::floor(value)) {
          throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                   ": label must be a nonnegative integer");
        }
        ds.labels.push_back(static_cast<int>(value));
        top = std::max(top, ds.labels.back());
      } else {
        ds.inputs.push_back(value);
      }
    }
  }
  if (ds.labels.empty()) throw std::runtime_error(path + ": no data rows");
  ds.num_classes = static_cast<std::size_t>(top) + 1;

  const std::size_t n = ds.size();
  for (std::size_t c = 0; c < ds.input_dim; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ds.inputs[i * ds.input_dim + c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = ds.inputs[i * ds.input_dim + c] - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      double& x = ds.inputs[i * ds.input_dim + c];
      x = sd > 0.0 ? (x - mean) / sd : x - mean;
    }
  }
  return ds;
}

}  // namespace byzfl
