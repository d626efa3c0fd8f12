#pragma once

// Multi-view datasets on disk and in memory.
//
// Matrices are CSV, one row per line, values printed with 17 significant
// digits, with an optional leading "# rows cols" line. A dataset is described
// by a key=value manifest whose paths are relative to the manifest's
// directory:
//
//   version=1
//   name=simulated
//   n=200
//   v=2
//   dim.0=2
//   view.0=view_0.csv
//   dim.1=2
//   view.1=view_1.csv
//   labels=labels.csv

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "anchorcc/anchor_graph.hpp"
#include "anchorcc/numerics.hpp"

namespace anchorcc {

struct MultiViewDataset {
  std::vector<ViewMatrix> views;
  std::optional<Labels> labels;
  std::string name;

  Eigen::Index samples() const { return views.empty() ? 0 : views.front().samples(); }
  int view_count() const { return static_cast<int>(views.size()); }

  int classes() const {
    if (!labels || labels->empty()) return 0;
    return *std::max_element(labels->begin(), labels->end()) + 1;
  }

  void validate() const {
    require(!views.empty(), "dataset: no views");
    for (const auto& view : views) {
      const std::string who = "dataset view " + std::to_string(view.view_index);
      require(view.samples() == samples(), who + ": row count differs from view 0");
      require(view.dims() >= 1, who + ": no columns");
      require_finite(view.data, who);
    }
    if (labels) {
      require(static_cast<Eigen::Index>(labels->size()) == samples(),
              "dataset labels: length differs from sample count");
      std::vector<int> counts(classes(), 0);
      for (int label : *labels) {
        require(label >= 0, "dataset labels: negative label");
        ++counts[label];
      }
      for (std::size_t c = 0; c < counts.size(); ++c) {
        require(counts[c] > 0, "dataset labels: class " + std::to_string(c) + " is empty");
      }
    }
  }
};

namespace detail {

inline std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace detail

inline void save_matrix(const Matrix& m, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << "# " << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

inline Matrix load_matrix(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  std::vector<std::vector<double>> rows;
  std::optional<std::pair<long, long>> header;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = detail::trim(line);
    if (text.empty()) continue;
    if (text[0] == '#') {
      if (line_no == 1) {
        std::istringstream hs(text.substr(1));
        long r = 0, c = 0;
        if (!(hs >> r >> c) || r < 0 || c < 0) fail("malformed header");
        header = std::make_pair(r, c);
      }
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const std::string token = detail::trim(cell);
      char* end = nullptr;
      const double value = std::strtod(token.c_str(), &end);
      if (token.empty() || end != token.c_str() + token.size()) fail("malformed value '" + token + "'");
      if (!std::isfinite(value)) fail("non-finite value '" + token + "'");
      row.push_back(value);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail("expected " + std::to_string(rows.front().size()) + " columns, found " +
           std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  const long cols = rows.empty() ? (header ? header->second : 0) : static_cast<long>(rows.front().size());
  if (header && (header->first != static_cast<long>(rows.size()) || header->second != cols)) {
    throw Error(path.string() + ": header declares " + std::to_string(header->first) + "x" +
                std::to_string(header->second) + " but file holds " +
                std::to_string(rows.size()) + "x" + std::to_string(cols));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (long j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), j) = rows[i][j];
  }
  return m;
}

inline void save_labels(const Labels& labels, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << "# " << labels.size() << " 1\n";
  for (int label : labels) out << label << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

inline Labels load_labels(const std::filesystem::path& path) {
  const Matrix m = load_matrix(path);
  require(m.cols() == 1 || m.rows() == 0, path.string() + ": labels must be a single column");
  Labels out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double value = m(i, 0);
    if (value != std::floor(value) || value < 0) {
      throw Error(path.string() + ": row " + std::to_string(i + 1) +
                  " is not a nonnegative integer label");
    }
    out[i] = static_cast<int>(value);
  }
  return out;
}

/// Reads a manifest and every file it references, validating shapes.
inline MultiViewDataset load_dataset(const std::filesystem::path& manifest_path) {
  auto in = detail::open_for_read(manifest_path);
  std::map<std::string, std::string> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = detail::trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw Error(manifest_path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    entries[detail::trim(text.substr(0, eq))] = detail::trim(text.substr(eq + 1));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = entries.find(key);
    if (it == entries.end()) throw Error(manifest_path.string() + ": missing key '" + key + "'");
    return it->second;
  };
  auto get_count = [&](const std::string& key) {
    const std::string& text = get(key);
    std::size_t used = 0;
    long value = -1;
    try {
      value = std::stol(text, &used);
    } catch (const std::exception&) {
    }
    if (used != text.size() || value < 0) {
      throw Error(manifest_path.string() + ": '" + key + "' is not a count");
    }
    return value;
  };

  require(get("version") == "1", manifest_path.string() + ": unsupported version");
  const long n = get_count("n");
  const long v = get_count("v");
  require(v >= 1, manifest_path.string() + ": v must be at least 1");
  const auto base = manifest_path.parent_path();

  MultiViewDataset ds;
  ds.name = entries.count("name") ? entries["name"] : manifest_path.stem().string();
  for (long i = 0; i < v; ++i) {
    const std::string idx = std::to_string(i);
    const long dim = get_count("dim." + idx);
    ViewMatrix view{load_matrix(base / get("view." + idx)), static_cast<int>(i)};
    if (view.samples() != n) {
      throw Error("view " + idx + ": manifest declares n=" + std::to_string(n) + " but file has " +
                  std::to_string(view.samples()) + " rows");
    }
    if (view.dims() != dim) {
      throw Error("view " + idx + ": dim mismatch, manifest declares " + std::to_string(dim) +
                  " but file has " + std::to_string(view.dims()) + " columns");
    }
    ds.views.push_back(std::move(view));
  }
  if (auto it = entries.find("labels"); it != entries.end()) {
    ds.labels = load_labels(base / it->second);
  }
  ds.validate();
  return ds;
}

/// Writes manifest.txt, view_<i>.csv and labels.csv into dir. Returns the
/// manifest path.
inline std::filesystem::path save_dataset(const MultiViewDataset& ds,
                                          const std::filesystem::path& dir) {
  ds.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
  const auto manifest = dir / "manifest.txt";
  auto out = detail::open_for_write(manifest);
  out << "version=1\n"
      << "name=" << ds.name << "\n"
      << "n=" << ds.samples() << "\n"
      << "v=" << ds.view_count() << "\n";
  for (const auto& view : ds.views) {
    const std::string file = "view_" + std::to_string(view.view_index) + ".csv";
    save_matrix(view.data, dir / file);
    out << "dim." << view.view_index << "=" << view.dims() << "\n"
        << "view." << view.view_index << "=" << file << "\n";
  }
  if (ds.labels) {
    save_labels(*ds.labels, dir / "labels.csv");
    out << "labels=labels.csv\n";
  }
  if (!out) throw Error("failed writing " + manifest.string());
  return manifest;
}

/// Gaussian clusters seen through several views. In every view the k cluster
/// means sit evenly spaced on a circle of radius sep, in a random 2-plane,
/// with a random rotation and a random assignment of clusters to positions;
/// cluster memberships are shared across views. Noise is isotropic with unit
/// variance. Samples are stored cluster by cluster.
inline MultiViewDataset generate_gaussian_views(std::uint64_t seed, int n_per_cluster, int k,
                                                double sep, const std::vector<int>& dims) {
  require(sep > 0.0, "generate: separation must be positive");
  require(n_per_cluster > 0 && k > 0, "generate: cluster sizes must be positive");
  require(!dims.empty(), "generate: need at least one view");
  Rng rng(seed);
  const Eigen::Index n = static_cast<Eigen::Index>(n_per_cluster) * k;
  MultiViewDataset ds;
  ds.name = "simulated";
  ds.labels = Labels(n);
  for (Eigen::Index i = 0; i < n; ++i) (*ds.labels)[i] = static_cast<int>(i / n_per_cluster);

  for (std::size_t view = 0; view < dims.size(); ++view) {
    const int d = dims[view];
    require(d >= 2, "generate: every view needs at least two dimensions");
    Matrix plane(2, d);
    for (Eigen::Index r = 0; r < 2; ++r) {
      for (int c = 0; c < d; ++c) plane(r, c) = rng.normal();
    }
    plane = detail::orthonormalize_rows(std::move(plane));
    const double offset = 2.0 * M_PI * rng.uniform();
    const auto position = rng.permutation(static_cast<std::size_t>(k));
    Matrix means(k, d);
    for (int c = 0; c < k; ++c) {
      const double angle = offset + 2.0 * M_PI * position[c] / k;
      means.row(c) = sep * (std::cos(angle) * plane.row(0) + std::sin(angle) * plane.row(1));
    }
    ViewMatrix x{Matrix(n, d), static_cast<int>(view)};
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c) x.data(i, c) = means((*ds.labels)[i], c) + rng.normal();
    }
    ds.views.push_back(std::move(x));
  }
  return ds;
}

/// Two 2-D views of k Gaussian clusters.
inline MultiViewDataset generate_simulated(std::uint64_t seed, int n_per_cluster = 50, int k = 4,
                                           double sep = 10.0) {
  return generate_gaussian_views(seed, n_per_cluster, k, sep, {2, 2});
}

}  // namespace anchorcc
