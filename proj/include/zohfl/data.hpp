#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "zohfl/numkit.hpp"

namespace zohfl {

// ---------------------------------------------------------------------------
// Shards

struct DatasetShard {
  std::vector<double> features;  // row-major, num_samples x feature_dim
  std::vector<int> labels;       // values in [0, num_classes)
  std::size_t num_samples = 0;
  std::size_t feature_dim = 0;
  int num_classes = 0;
  std::vector<std::size_t> class_counts;  // size num_classes

  bool empty() const { return num_samples == 0; }

  std::span<const double> row(std::size_t j) const {
    return {features.data() + j * feature_dim, feature_dim};
  }
};

inline DatasetShard make_shard(std::vector<double> features, std::vector<int> labels,
                               std::size_t feature_dim, int num_classes) {
  if (feature_dim == 0) throw DimensionError("make_shard: feature_dim must be >= 1");
  if (num_classes < 1) throw ParameterError("make_shard: num_classes must be >= 1");
  if (features.size() != labels.size() * feature_dim) {
    throw DimensionError("make_shard: features size " + std::to_string(features.size()) +
                         " != samples*feature_dim = " +
                         std::to_string(labels.size() * feature_dim));
  }
  if (!all_finite(features)) throw NumericsError("make_shard: nonfinite feature");
  DatasetShard s;
  s.num_samples = labels.size();
  s.feature_dim = feature_dim;
  s.num_classes = num_classes;
  s.class_counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (int label : labels) {
    if (label < 0 || label >= num_classes) {
      throw ParameterError("make_shard: label " + std::to_string(label) +
                           " outside [0," + std::to_string(num_classes) + ")");
    }
    ++s.class_counts[static_cast<std::size_t>(label)];
  }
  s.features = std::move(features);
  s.labels = std::move(labels);
  return s;
}

// ---------------------------------------------------------------------------
// IDX ingestion (big-endian, magic 0x00000803 images / 0x00000801 labels)

namespace detail {

inline std::uint32_t read_be32(std::ifstream& in, const std::string& path,
                               std::size_t offset) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (in.gcount() != 4) {
    throw FormatError(path + ": truncated at byte " + std::to_string(offset) +
                      " (expected 4 more bytes)");
  }
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace detail

inline DatasetShard load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw FormatError(images_path + ": cannot open");
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw FormatError(labels_path + ": cannot open");

  const std::uint32_t img_magic = detail::read_be32(img, images_path, 0);
  if (img_magic != 0x00000803u) {
    std::ostringstream os;
    os << images_path << ": bad magic 0x" << std::hex << img_magic
       << " at byte 0 (expected 0x00000803)";
    throw FormatError(os.str());
  }
  const std::uint32_t n_images = detail::read_be32(img, images_path, 4);
  const std::uint32_t rows = detail::read_be32(img, images_path, 8);
  const std::uint32_t cols = detail::read_be32(img, images_path, 12);

  const std::uint32_t lab_magic = detail::read_be32(lab, labels_path, 0);
  if (lab_magic != 0x00000801u) {
    std::ostringstream os;
    os << labels_path << ": bad magic 0x" << std::hex << lab_magic
       << " at byte 0 (expected 0x00000801)";
    throw FormatError(os.str());
  }
  const std::uint32_t n_labels = detail::read_be32(lab, labels_path, 4);

  if (n_images != n_labels) {
    throw FormatError(images_path + ": image count " + std::to_string(n_images) +
                      " does not match label count " + std::to_string(n_labels));
  }

  const std::size_t pixels = std::size_t(n_images) * rows * cols;
  std::vector<unsigned char> raw(pixels);
  img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(pixels));
  if (static_cast<std::size_t>(img.gcount()) != pixels) {
    throw FormatError(images_path + ": truncated at byte " +
                      std::to_string(16 + img.gcount()) + " (expected " +
                      std::to_string(16 + pixels) + " total)");
  }
  std::vector<unsigned char> raw_labels(n_labels);
  lab.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(n_labels));
  if (static_cast<std::size_t>(lab.gcount()) != n_labels) {
    throw FormatError(labels_path + ": truncated at byte " +
                      std::to_string(8 + lab.gcount()) + " (expected " +
                      std::to_string(8 + std::size_t(n_labels)) + " total)");
  }

  std::vector<double> features(pixels);
  for (std::size_t i = 0; i < pixels; ++i) features[i] = raw[i] / 255.0;
  std::vector<int> labels(raw_labels.begin(), raw_labels.end());
  const int num_classes =
      labels.empty() ? 1 : *std::max_element(labels.begin(), labels.end()) + 1;
  return make_shard(std::move(features), std::move(labels),
                    std::size_t(rows) * cols, num_classes);
}

// ---------------------------------------------------------------------------
// Flat-vector CSV path: one sample per line, "label,x0,x1,..."

inline DatasetShard load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");
  std::vector<double> features;
  std::vector<int> labels;
  std::size_t feature_dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (vals.size() < 2) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": need label plus features");
    }
    if (feature_dim == 0) {
      feature_dim = vals.size() - 1;
    } else if (vals.size() - 1 != feature_dim) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": row has " +
                        std::to_string(vals.size() - 1) + " features, expected " +
                        std::to_string(feature_dim));
    }
    labels.push_back(static_cast<int>(vals[0]));
    features.insert(features.end(), vals.begin() + 1, vals.end());
  }
  if (labels.empty()) throw DataError(path + ": no samples");
  const int num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  return make_shard(std::move(features), std::move(labels), feature_dim, num_classes);
}

inline void write_csv(std::ostream& out, const DatasetShard& shard) {
  out.precision(17);
  for (std::size_t j = 0; j < shard.num_samples; ++j) {
    out << shard.labels[j];
    const auto r = shard.row(j);
    for (double x : r) out << ',' << x;
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic Gaussian blobs
//
// Class centers sit pairwise max(2, 4*spread) apart (scaled coordinate axes
// when C <= n; otherwise best-of-k random unit directions, which cannot
// guarantee the gap and is only a fallback). The floor of 2 keeps the layout
// fixed as spread -> 0, so small spreads give separable classes while large
// spreads keep at least a 4-sigma gap between centers.

inline DatasetShard synth_blobs(RngStream& rng, int num_classes, std::size_t feature_dim,
                                std::size_t per_class, double spread) {
  if (num_classes < 2) throw ParameterError("synth_blobs: need num_classes >= 2");
  if (feature_dim < 2) throw DimensionError("synth_blobs: need feature_dim >= 2");
  if (per_class == 0) throw ParameterError("synth_blobs: per_class must be >= 1");
  if (!(spread > 0.0)) throw ParameterError("synth_blobs: spread must be > 0");

  const std::size_t C = static_cast<std::size_t>(num_classes);
  const double separation = std::max(2.0, 4.0 * spread);
  std::vector<Vec> centers(C, Vec(feature_dim, 0.0));
  if (C <= feature_dim) {
    const double scale = separation / std::sqrt(2.0);
    for (std::size_t c = 0; c < C; ++c) centers[c][c] = scale;
  } else {
    const double scale = separation;
    double best_min = -1.0;
    for (int attempt = 0; attempt < 50; ++attempt) {
      std::vector<Vec> cand(C);
      for (auto& v : cand) v = scaled(scale, sample_unit_sphere(rng, feature_dim));
      double mind = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < C; ++a)
        for (std::size_t b = a + 1; b < C; ++b) mind = std::min(mind, dist(cand[a], cand[b]));
      if (mind > best_min) {
        best_min = mind;
        centers = std::move(cand);
      }
    }
  }

  std::vector<double> features;
  features.reserve(C * per_class * feature_dim);
  std::vector<int> labels;
  labels.reserve(C * per_class);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < per_class; ++k) {
      for (std::size_t j = 0; j < feature_dim; ++j) {
        features.push_back(centers[c][j] + spread * rng.normal());
      }
      labels.push_back(static_cast<int>(c));
    }
  }
  return make_shard(std::move(features), std::move(labels), feature_dim, num_classes);
}

// ---------------------------------------------------------------------------
// Dirichlet non-iid partition

struct PartitionPlan {
  std::uint64_t seed = 0;
  double alpha = 0.0;
  int num_clients = 0;
  double server_fraction = 0.0;
  double test_fraction = 0.0;
  // per-sample owner: kOwnerServer, kOwnerTest, or a client index in [0, m)
  std::vector<int> assignment;
  int resample_retries = 0;

  static constexpr int kOwnerServer = -1;
  static constexpr int kOwnerTest = -2;
};

struct Partition {
  DatasetShard server;
  std::vector<DatasetShard> clients;
  DatasetShard test;
  PartitionPlan plan;
};

namespace detail {

inline DatasetShard gather(const DatasetShard& src, const std::vector<std::size_t>& idx) {
  std::vector<double> features;
  features.reserve(idx.size() * src.feature_dim);
  std::vector<int> labels;
  labels.reserve(idx.size());
  for (std::size_t j : idx) {
    const auto r = src.row(j);
    features.insert(features.end(), r.begin(), r.end());
    labels.push_back(src.labels[j]);
  }
  return make_shard(std::move(features), std::move(labels), src.feature_dim, src.num_classes);
}

}  // namespace detail

// Split order: (1) uniform test split, (2) uniform server carve-out from the
// remaining training pool, (3) per class, Dir(alpha) proportions route the
// class's training samples to clients. Pathological draws that starve a
// client are redrawn a bounded number of times.
inline Partition partition(const DatasetShard& shard, double alpha, int num_clients,
                           double server_fraction, double test_fraction, RngStream& rng,
                           std::uint64_t seed_tag = 0) {
  if (num_clients < 1) throw ParameterError("partition: num_clients must be >= 1");
  if (!(alpha > 0.0)) throw ParameterError("partition: alpha must be > 0");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ParameterError("partition: test_fraction must be in (0,1)");
  }
  if (!(server_fraction >= 0.0 && server_fraction < 1.0)) {
    throw ParameterError("partition: server_fraction must be in [0,1)");
  }
  if (shard.empty()) throw DataError("partition: empty dataset");

  const std::size_t n = shard.num_samples;
  const std::size_t m = static_cast<std::size_t>(num_clients);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }

  const std::size_t n_test = static_cast<std::size_t>(std::lround(test_fraction * double(n)));
  const std::size_t n_train = n - n_test;
  const std::size_t n_server =
      static_cast<std::size_t>(std::lround(server_fraction * double(n_train)));

  PartitionPlan plan;
  plan.seed = seed_tag;
  plan.alpha = alpha;
  plan.num_clients = num_clients;
  plan.server_fraction = server_fraction;
  plan.test_fraction = test_fraction;
  plan.assignment.assign(n, 0);

  std::vector<std::size_t> test_idx(order.begin(), order.begin() + n_test);
  std::vector<std::size_t> server_idx(order.begin() + n_test, order.begin() + n_test + n_server);
  std::vector<std::size_t> pool(order.begin() + n_test + n_server, order.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(server_idx.begin(), server_idx.end());
  std::sort(pool.begin(), pool.end());

  // client pool must cover every class, otherwise the Dirichlet routing of
  // that class is vacuous and downstream weights are ill-defined
  {
    std::vector<std::size_t> counts(static_cast<std::size_t>(shard.num_classes), 0);
    for (std::size_t j : pool) ++counts[static_cast<std::size_t>(shard.labels[j])];
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == 0) {
        throw DataError("partition: class " + std::to_string(c) +
                        " has no client-pool samples after test/server split");
      }
    }
  }

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(shard.num_classes));
  for (std::size_t j : pool) by_class[static_cast<std::size_t>(shard.labels[j])].push_back(j);

  constexpr int kMaxRetries = 100;
  std::vector<std::vector<std::size_t>> client_idx;
  int retries = 0;
  for (;; ++retries) {
    if (retries > kMaxRetries) {
      throw DataError("partition: could not give every client a sample after " +
                      std::to_string(kMaxRetries) + " retries (alpha=" +
                      std::to_string(alpha) + ", m=" + std::to_string(m) + ")");
    }
    client_idx.assign(m, {});
    for (auto& cls : by_class) {
      const Vec p = dirichlet(rng, alpha, m);
      Vec cdf(m);
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        acc += p[i];
        cdf[i] = acc;
      }
      cdf[m - 1] = 1.0;
      for (std::size_t j : cls) {
        const double u = rng.uniform();
        const std::size_t who =
            std::size_t(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        client_idx[std::min(who, m - 1)].push_back(j);
      }
    }
    const bool ok = std::none_of(client_idx.begin(), client_idx.end(),
                                 [](const auto& v) { return v.empty(); });
    if (ok) break;
  }
  plan.resample_retries = retries;

  for (std::size_t j : test_idx) plan.assignment[j] = PartitionPlan::kOwnerTest;
  for (std::size_t j : server_idx) plan.assignment[j] = PartitionPlan::kOwnerServer;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j : client_idx[i]) plan.assignment[j] = static_cast<int>(i);
  }

  Partition out;
  out.server = detail::gather(shard, server_idx);
  out.test = detail::gather(shard, test_idx);
  out.clients.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::sort(client_idx[i].begin(), client_idx[i].end());
    out.clients.push_back(detail::gather(shard, client_idx[i]));
  }
  out.plan = std::move(plan);
  return out;
}

// client x class counts
inline std::vector<std::vector<std::size_t>> partition_histogram(const Partition& p) {
  std::vector<std::vector<std::size_t>> table;
  table.reserve(p.clients.size());
  for (const auto& c : p.clients) table.push_back(c.class_counts);
  return table;
}

inline void write_histogram_csv(std::ostream& out,
                                const std::vector<std::vector<std::size_t>>& table) {
  if (table.empty()) return;
  out << "client";
  for (std::size_t c = 0; c < table.front().size(); ++c) out << ",class" << c;
  out << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << i;
    for (std::size_t cnt : table[i]) out << ',' << cnt;
    out << '\n';
  }
}

}  // namespace zohfl
