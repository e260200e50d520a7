#include "extractkit/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "extractkit/binary_io.hpp"
#include "extractkit/errors.hpp"
#include "extractkit/rng.hpp"

namespace extractkit {

void DatasetMatrix::validate() const {
  if (n == 0 || d == 0) throw FormatError("dataset: n and d must be positive");
  if (features.size() != n * d) throw FormatError("dataset: feature count is not n*d");
  if (y_true.size() != n) throw FormatError("dataset: label count is not n");
  if (!timestamps.empty() && timestamps.size() != n) throw FormatError("dataset: timestamp count is not n");
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!std::isfinite(features[i])) {
      throw FormatError("dataset: non-finite feature at row " + std::to_string(i / d) + ", column " +
                        std::to_string(i % d));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (y_true[i] > 1) throw FormatError("dataset: non-binary label at row " + std::to_string(i));
  }
}

DatasetMatrix DatasetMatrix::subset(std::span<const std::size_t> rows) const {
  DatasetMatrix out;
  out.n = rows.size();
  out.d = d;
  out.features.reserve(rows.size() * d);
  out.y_true.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= n) throw ShapeError("dataset subset: row index out of range");
    const auto src = row(r);
    out.features.insert(out.features.end(), src.begin(), src.end());
    out.y_true.push_back(y_true[r]);
    if (has_timestamps()) out.timestamps.push_back(timestamps[r]);
  }
  return out;
}

Matrix DatasetMatrix::to_matrix() const {
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = features[i * d + j];
  }
  return m;
}

Matrix DatasetMatrix::to_matrix(std::span<const std::size_t> rows) const {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = row(rows[i]);
    for (std::size_t j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = src[j];
  }
  return m;
}

Vector DatasetMatrix::labels_as_vector() const {
  Vector v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = y_true[i];
  return v;
}

void SyntheticGenConfig::validate() const {
  if (n == 0) throw ConfigError("gen_synthetic: n must be positive");
  if (d < 2) throw ConfigError("gen_synthetic: d must be at least 2");
  if (!(balance > 0.0 && balance < 1.0)) throw ConfigError("gen_synthetic: balance must be in (0,1)");
  if (clusters_per_class == 0) throw ConfigError("gen_synthetic: clusters_per_class must be positive");
  if (!(spread >= 0.0)) throw ConfigError("gen_synthetic: spread must be non-negative");
  if (timestamps && timestamp_days <= 0) throw ConfigError("gen_synthetic: timestamp_days must be positive");
  for (std::size_t f : monotone_features) {
    if (f >= d) throw ConfigError("gen_synthetic: monotone feature index out of range");
  }
}

std::uint8_t CentroidLabeler::label(std::span<const float> x) const {
  if (x.size() != dims()) throw ShapeError("centroid labeler: dimension mismatch");
  double best = std::numeric_limits<double>::infinity();
  std::uint8_t label = 0;
  for (Eigen::Index c = 0; c < centroids_.rows(); ++c) {
    double dist = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = static_cast<double>(x[j]) - centroids_(c, static_cast<Eigen::Index>(j));
      dist += diff * diff;
    }
    if (dist < best) {
      best = dist;
      label = classes_[static_cast<std::size_t>(c)];
    }
  }
  return label;
}

SyntheticDataset gen_synthetic(const SyntheticGenConfig& config) {
  config.validate();
  RngStream rng(config.seed);
  const std::size_t k = config.clusters_per_class;
  const auto d = static_cast<Eigen::Index>(config.d);

  std::vector<char> monotone(config.d, 0);
  for (std::size_t f : config.monotone_features) monotone[f] = 1;

  Matrix centroids(static_cast<Eigen::Index>(2 * k), d);
  std::vector<std::uint8_t> classes(2 * k);
  for (std::size_t c = 0; c < 2 * k; ++c) {
    classes[c] = c < k ? 0 : 1;
    for (Eigen::Index j = 0; j < d; ++j) {
      double v = config.center_scale * rng.normal();
      if (monotone[static_cast<std::size_t>(j)]) v = std::abs(v);
      centroids(static_cast<Eigen::Index>(c), j) = v;
    }
  }
  SyntheticDataset out{{}, CentroidLabeler(centroids, classes)};

  const auto positives = static_cast<std::size_t>(std::llround(config.balance * static_cast<double>(config.n)));
  std::vector<std::uint8_t> wanted(config.n);
  for (std::size_t i = 0; i < config.n; ++i) wanted[i] = i < positives ? 1 : 0;
  rng.shuffle(std::span<std::uint8_t>(wanted));

  DatasetMatrix& data = out.data;
  data.n = config.n;
  data.d = config.d;
  data.features.resize(config.n * config.d);
  data.y_true = wanted;

  std::vector<float> point(config.d);
  const std::size_t max_attempts = 10000;
  for (std::size_t i = 0; i < config.n; ++i) {
    std::size_t attempts = 0;
    for (;;) {
      if (++attempts > max_attempts) {
        throw ConfigError("gen_synthetic: clusters overlap too much to draw class-consistent points");
      }
      const std::size_t cluster = wanted[i] * k + static_cast<std::size_t>(rng.below(k));
      for (std::size_t j = 0; j < config.d; ++j) {
        double v = centroids(static_cast<Eigen::Index>(cluster), static_cast<Eigen::Index>(j)) +
                   config.spread * rng.normal();
        if (monotone[j]) v = std::abs(v);
        point[j] = static_cast<float>(v);
      }
      if (out.ground_truth.label(point) == wanted[i]) break;
    }
    std::copy(point.begin(), point.end(), data.features.begin() + static_cast<std::ptrdiff_t>(i * config.d));
  }
  if (config.timestamps) {
    data.timestamps.resize(config.n);
    for (auto& ts : data.timestamps) {
      ts = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(config.timestamp_days)));
    }
  }
  return out;
}

namespace {

DatasetSplit make_split(const DatasetMatrix& data, std::vector<std::size_t> thief_rows,
                        std::vector<std::size_t> test_rows) {
  if (thief_rows.empty()) throw ConfigError("split_dataset: thief set would be empty");
  if (test_rows.empty()) throw ConfigError("split_dataset: test set would be empty");
  DatasetSplit s;
  s.thief = data.subset(thief_rows);
  s.test = data.subset(test_rows);
  s.thief_rows = std::move(thief_rows);
  s.test_rows = std::move(test_rows);
  return s;
}

}  // namespace

DatasetSplit split_dataset(const DatasetMatrix& data, const SplitFraction& mode) {
  if (!(mode.thief_fraction > 0.0 && mode.thief_fraction < 1.0)) {
    throw ConfigError("split_dataset: fraction must be in (0,1)");
  }
  std::vector<std::size_t> order(data.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream rng(mode.seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto cut = static_cast<std::size_t>(std::llround(mode.thief_fraction * static_cast<double>(data.n)));
  std::vector<std::size_t> thief(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  std::sort(thief.begin(), thief.end());
  std::sort(test.begin(), test.end());
  return make_split(data, std::move(thief), std::move(test));
}

DatasetSplit split_dataset(const DatasetMatrix& data, const SplitTimestamp& mode) {
  if (!data.has_timestamps()) throw ConfigError("split_dataset: timestamp mode needs a timestamp column");
  std::vector<std::size_t> thief;
  std::vector<std::size_t> test;
  for (std::size_t i = 0; i < data.n; ++i) (data.timestamps[i] <= mode.cutoff ? thief : test).push_back(i);
  return make_split(data, std::move(thief), std::move(test));
}

std::vector<std::uint8_t> serialize_dataset(const DatasetMatrix& data) {
  data.validate();
  io::ByteWriter w;
  w.magic(kDatasetMagic);
  w.u64(data.n);
  w.u64(data.d);
  w.u8(data.has_timestamps() ? 1 : 0);
  for (float f : data.features) w.f32(f);
  for (std::uint8_t y : data.y_true) w.u8(y);
  for (std::int64_t ts : data.timestamps) w.i64(ts);
  return w.take();
}

DatasetMatrix deserialize_dataset(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, "dataset file");
  r.expect_magic(kDatasetMagic);
  DatasetMatrix data;
  data.n = r.u64();
  data.d = r.u64();
  const std::uint8_t flags = r.u8();
  if (flags > 1) throw FormatError("dataset file: unknown flags byte");
  if (data.n == 0 || data.d == 0 || data.n > (std::uint64_t{1} << 40) / std::max<std::size_t>(data.d, 1)) {
    throw FormatError("dataset file: implausible dimensions");
  }
  r.need(data.n * data.d * 4 + data.n + (flags ? data.n * 8 : 0));
  data.features.resize(data.n * data.d);
  for (auto& f : data.features) f = r.f32();
  data.y_true.resize(data.n);
  for (auto& y : data.y_true) y = r.u8();
  if (flags) {
    data.timestamps.resize(data.n);
    for (auto& ts : data.timestamps) ts = r.i64();
  }
  if (r.remaining() != 0) throw FormatError("dataset file: trailing bytes");
  data.validate();
  return data;
}

void save_dataset_binary(const DatasetMatrix& data, const std::filesystem::path& path) {
  io::write_file(path, serialize_dataset(data));
}

DatasetMatrix load_dataset_binary(const std::filesystem::path& path) {
  return deserialize_dataset(io::read_file(path));
}

void save_dataset_csv(const DatasetMatrix& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t j = 0; j < data.d; ++j) out << 'f' << j << ',';
  out << "label";
  if (data.has_timestamps()) out << ",ts";
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.n; ++i) {
    for (float v : data.row(i)) {
      std::snprintf(buf, sizeof buf, "%.9g,", static_cast<double>(v));
      out << buf;
    }
    out << static_cast<int>(data.y_true[i]);
    if (data.has_timestamps()) out << ',' << data.timestamps[i];
    out << '\n';
  }
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line_no) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r' || text.back() == '\t')) text.remove_suffix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("dataset csv: bad number \"" + std::string(text) + "\" on line " + std::to_string(line_no));
  }
  return value;
}

}  // namespace

DatasetMatrix load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("dataset csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  std::size_t label_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "label") label_col = i;
  }
  if (label_col == header.size()) throw FormatError("dataset csv: header has no \"label\" column");
  const bool has_ts = label_col + 1 < header.size();
  if (has_ts && (header[label_col + 1] != "ts" || label_col + 2 != header.size())) {
    throw FormatError("dataset csv: expected header f0,...,f{d-1},label[,ts]");
  }
  for (std::size_t j = 0; j < label_col; ++j) {
    if (header[j] != "f" + std::to_string(j)) throw FormatError("dataset csv: expected feature column f" + std::to_string(j));
  }

  DatasetMatrix data;
  data.d = label_col;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw FormatError("dataset csv: wrong field count on line " + std::to_string(line_no));
    }
    for (std::size_t j = 0; j < data.d; ++j) data.features.push_back(parse_number<float>(fields[j], line_no));
    const int label = parse_number<int>(fields[label_col], line_no);
    if (label != 0 && label != 1) throw FormatError("dataset csv: non-binary label on line " + std::to_string(line_no));
    data.y_true.push_back(static_cast<std::uint8_t>(label));
    if (has_ts) data.timestamps.push_back(parse_number<std::int64_t>(fields[label_col + 1], line_no));
    ++data.n;
  }
  data.validate();
  return data;
}

void save_dataset(const DatasetMatrix& data, const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    save_dataset_csv(data, path);
  } else {
    save_dataset_binary(data, path);
  }
}

DatasetMatrix load_dataset(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? load_dataset_csv(path) : load_dataset_binary(path);
}

namespace io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace io

}  // namespace extractkit
