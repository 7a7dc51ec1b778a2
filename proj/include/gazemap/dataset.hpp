#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gazemap/error.hpp"
#include "gazemap/geometry.hpp"

namespace gazemap {

/// 6-DoF head state. position in meters, orientation = (alpha, beta, gamma)
/// = (yaw, pitch, roll) in radians.
struct HeadPose {
  Vec3 position = Vec3::Zero();
  Vec3 orientation = Vec3::Zero();

  Mat3 rotation() const { return rotation_from_angles(orientation(0), orientation(1), orientation(2)); }
  bool operator==(const HeadPose&) const = default;
};

/// Horizontal (theta) and vertical (phi) gaze angles in radians.
struct GazeAngles {
  double horizontal = 0.0;
  double vertical = 0.0;
  bool operator==(const GazeAngles&) const = default;
};

/// Per-angle Gaussian prediction; the two angles are independent.
struct AngleGaussian {
  double mean = 0.0;
  double variance = 1.0;
  double stddev() const { return std::sqrt(variance); }
};

struct GazeDistribution {
  AngleGaussian horizontal;
  AngleGaussian vertical;
};

enum class Phase { parked, driving, controlled };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::parked: return "parked";
    case Phase::driving: return "driving";
    case Phase::controlled: return "controlled";
  }
  return "unknown";
}

inline std::optional<Phase> parse_phase(std::string_view s) {
  if (s == "parked") return Phase::parked;
  if (s == "driving") return Phase::driving;
  if (s == "controlled") return Phase::controlled;
  return std::nullopt;
}

inline constexpr int kMarkerCount = 21;

struct DriveRecord {
  std::string driver_id;
  Phase phase = Phase::driving;
  long frame_index = 0;
  HeadPose head;
  GazeAngles target_gaze;
  std::optional<int> marker_id;

  bool operator==(const DriveRecord&) const = default;
};

inline void validate(const DriveRecord& r) {
  require(!r.driver_id.empty() && r.driver_id.find_first_of(",\n\r") == std::string::npos,
          ErrorKind::validation, "driver_id must be non-empty and free of commas/newlines");
  require(r.head.position.allFinite() && r.head.orientation.allFinite(), ErrorKind::validation,
          "head pose must be finite");
  const auto& g = r.target_gaze;
  require(std::isfinite(g.horizontal) && std::isfinite(g.vertical), ErrorKind::validation,
          "gaze angles must be finite");
  require(std::abs(g.horizontal) <= kPi && std::abs(g.vertical) <= kPi / 2.0, ErrorKind::validation,
          "gaze angles out of range (|theta| <= pi, |phi| <= pi/2)");
  if (r.marker_id) {
    require(*r.marker_id >= 1 && *r.marker_id <= kMarkerCount, ErrorKind::validation,
            "marker_id " + std::to_string(*r.marker_id) + " outside 1..21");
  }
}

// ---------------------------------------------------------------------------
// Features

enum class FeatureMode { full6d, orientation3d, orientation_plus_xy };

inline std::string_view to_string(FeatureMode m) {
  switch (m) {
    case FeatureMode::full6d: return "full6d";
    case FeatureMode::orientation3d: return "orientation3d";
    case FeatureMode::orientation_plus_xy: return "orientation_plus_xy";
  }
  return "unknown";
}

inline std::optional<FeatureMode> parse_feature_mode(std::string_view s) {
  if (s == "full6d") return FeatureMode::full6d;
  if (s == "orientation3d") return FeatureMode::orientation3d;
  if (s == "orientation_plus_xy") return FeatureMode::orientation_plus_xy;
  return std::nullopt;
}

inline int feature_dim(FeatureMode m) {
  switch (m) {
    case FeatureMode::full6d: return 6;
    case FeatureMode::orientation3d: return 3;
    case FeatureMode::orientation_plus_xy: return 5;
  }
  return 0;
}

/// Feature vector [alpha, beta, gamma, x, y, z] truncated to the mode's
/// dimension, so every mode is a prefix of full6d.
inline Eigen::VectorXd features(const HeadPose& head, FeatureMode mode) {
  Eigen::Matrix<double, 6, 1> full;
  full << head.orientation, head.position;
  return full.head(feature_dim(mode));
}

inline Eigen::MatrixXd feature_matrix(const std::vector<DriveRecord>& records, FeatureMode mode) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(records.size()), feature_dim(mode));
  for (std::size_t i = 0; i < records.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = features(records[i].head, mode).transpose();
  }
  return x;
}

enum class GazeComponent { horizontal, vertical };

inline double component(const GazeAngles& g, GazeComponent c) {
  return c == GazeComponent::horizontal ? g.horizontal : g.vertical;
}

inline Eigen::VectorXd target_vector(const std::vector<DriveRecord>& records, GazeComponent c) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = component(records[i].target_gaze, c);
  }
  return y;
}

// ---------------------------------------------------------------------------
// Per-driver normalization

struct NormalizedDriver {
  std::vector<DriveRecord> records;
  /// The driver's mean head pose (Slerp-mean rotation, mean position).
  /// Normalized position = p - translation; normalized orientation =
  /// rotation^T * R. Gaze angles are unchanged: they are differences of
  /// positions and therefore translation invariant.
  RigidTransform reference;
};

inline NormalizedDriver normalize_driver(const std::vector<DriveRecord>& records) {
  require(records.size() >= 10, ErrorKind::argument, "normalize_driver needs at least 10 records");
  const std::string& id = records.front().driver_id;
  std::vector<Quaternion> quats;
  quats.reserve(records.size());
  Vec3 mean_position = Vec3::Zero();
  for (const auto& r : records) {
    require(r.driver_id == id, ErrorKind::argument,
            "normalize_driver: mixed driver ids '" + id + "' and '" + r.driver_id + "'");
    quats.emplace_back(r.head.rotation());
    mean_position += r.head.position;
  }
  mean_position /= static_cast<double>(records.size());
  const Mat3 mean_rotation = slerp_mean(quats).toRotationMatrix();

  NormalizedDriver out{records, {mean_rotation, mean_position}};
  for (auto& r : out.records) {
    r.head.position -= mean_position;
    r.head.orientation = angles_from_rotation(mean_rotation.transpose() * r.head.rotation());
  }
  return out;
}

/// Distinct driver ids in order of first appearance.
inline std::vector<std::string> driver_ids(const std::vector<DriveRecord>& records) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.driver_id).second) ids.push_back(r.driver_id);
  }
  return ids;
}

inline std::vector<DriveRecord> normalize_all(const std::vector<DriveRecord>& records) {
  std::map<std::string, std::vector<DriveRecord>> by_driver;
  for (const auto& r : records) by_driver[r.driver_id].push_back(r);
  std::vector<DriveRecord> out;
  out.reserve(records.size());
  for (const auto& id : driver_ids(records)) {
    auto norm = normalize_driver(by_driver[id]);
    out.insert(out.end(), norm.records.begin(), norm.records.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Leave-one-driver-out folds

struct FoldSplit {
  std::string test_driver;
  std::string validation_driver;
  std::vector<std::string> train_drivers;
};

/// One fold per driver; the validation driver is the cyclic successor of the
/// test driver.
inline std::vector<FoldSplit> make_folds(const std::vector<std::string>& drivers) {
  require(drivers.size() >= 3, ErrorKind::argument, "make_folds needs at least 3 drivers");
  require(std::set<std::string>(drivers.begin(), drivers.end()).size() == drivers.size(),
          ErrorKind::argument, "make_folds: duplicate driver ids");
  std::vector<FoldSplit> folds;
  const std::size_t n = drivers.size();
  for (std::size_t i = 0; i < n; ++i) {
    FoldSplit f{drivers[i], drivers[(i + 1) % n], {}};
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && j != (i + 1) % n) f.train_drivers.push_back(drivers[j]);
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

inline std::vector<DriveRecord> select_drivers(const std::vector<DriveRecord>& records,
                                               const std::vector<std::string>& drivers) {
  const std::set<std::string> keep(drivers.begin(), drivers.end());
  std::vector<DriveRecord> out;
  for (const auto& r : records) {
    if (keep.contains(r.driver_id)) out.push_back(r);
  }
  return out;
}

inline std::vector<DriveRecord> select_phase(const std::vector<DriveRecord>& records, Phase phase) {
  std::vector<DriveRecord> out;
  for (const auto& r : records) {
    if (r.phase == phase) out.push_back(r);
  }
  return out;
}

/// Uniform stratified subsample over (driver, marker) groups down to `cap`
/// rows. Each group keeps a share proportional to its size (largest-remainder
/// rounding) taken at evenly spaced positions; original order is preserved.
inline std::vector<DriveRecord> stratified_subsample(const std::vector<DriveRecord>& records,
                                                     std::size_t cap) {
  if (cap == 0 || records.size() <= cap) return records;
  // Keyed (marker, driver) so rounding ties spread across drivers.
  std::map<std::pair<int, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    groups[{records[i].marker_id.value_or(0), records[i].driver_id}].push_back(i);
  }
  const double ratio = static_cast<double>(cap) / static_cast<double>(records.size());
  std::vector<std::pair<double, std::vector<std::size_t>*>> remainders;
  std::map<std::vector<std::size_t>*, std::size_t> quota;
  std::size_t assigned = 0;
  for (auto& [key, idx] : groups) {
    const double exact = ratio * static_cast<double>(idx.size());
    const auto q = static_cast<std::size_t>(std::floor(exact));
    quota[&idx] = q;
    assigned += q;
    remainders.emplace_back(exact - static_cast<double>(q), &idx);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < cap && k < remainders.size(); ++k, ++assigned) {
    ++quota[remainders[k].second];
  }

  std::vector<std::size_t> keep;
  for (auto& [key, idx] : groups) {
    const std::size_t q = quota[&idx];
    for (std::size_t j = 0; j < q; ++j) {
      keep.push_back(idx[(j * idx.size()) / q]);
    }
  }
  std::sort(keep.begin(), keep.end());
  std::vector<DriveRecord> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(records[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Text format: comma-separated, header row, angles in radians.

inline constexpr std::string_view kDatasetColumns[] = {
    "driver_id", "phase", "frame", "x", "y", "z", "alpha", "beta", "gamma", "theta", "phi", "marker_id"};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

template <class T>
T parse_number(std::string_view cell, std::string_view column, std::size_t line) {
  T value{};
  const auto* end = cell.data() + cell.size();
  auto res = std::from_chars(cell.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw Error(ErrorKind::parse,
                "line " + std::to_string(line) + ": column '" + std::string(column) +
                    "' is not numeric: '" + std::string(cell) + "'",
                line);
  }
  return value;
}

}  // namespace detail

inline void write_records(std::ostream& os, const std::vector<DriveRecord>& records) {
  for (std::size_t i = 0; i < std::size(kDatasetColumns); ++i) {
    os << (i ? "," : "") << kDatasetColumns[i];
  }
  os << '\n';
  using detail::format_double;
  for (const auto& r : records) {
    validate(r);
    os << r.driver_id << ',' << to_string(r.phase) << ',' << r.frame_index;
    for (int k = 0; k < 3; ++k) os << ',' << format_double(r.head.position(k));
    for (int k = 0; k < 3; ++k) os << ',' << format_double(r.head.orientation(k));
    os << ',' << format_double(r.target_gaze.horizontal) << ','
       << format_double(r.target_gaze.vertical) << ',';
    if (r.marker_id) os << *r.marker_id;
    os << '\n';
  }
}

inline std::vector<DriveRecord> read_records(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::schema, "dataset is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_row(line);
  std::map<std::string_view, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  std::vector<std::size_t> idx;
  for (auto name : kDatasetColumns) {
    auto it = column.find(name);
    require(it != column.end(), ErrorKind::schema,
            "dataset is missing required column '" + std::string(name) + "'");
    idx.push_back(it->second);
  }

  std::vector<DriveRecord> records;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_row(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::parse,
                  "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(cells.size()),
                  line_no);
    }
    auto cell = [&](std::size_t k) { return cells[idx[k]]; };
    DriveRecord r;
    r.driver_id = std::string(cell(0));
    auto phase = parse_phase(cell(1));
    if (!phase) {
      throw Error(ErrorKind::parse,
                  "line " + std::to_string(line_no) + ": unknown phase '" + std::string(cell(1)) + "'",
                  line_no);
    }
    r.phase = *phase;
    r.frame_index = detail::parse_number<long>(cell(2), kDatasetColumns[2], line_no);
    for (int k = 0; k < 3; ++k) {
      r.head.position(k) = detail::parse_number<double>(cell(3 + k), kDatasetColumns[3 + k], line_no);
      r.head.orientation(k) = detail::parse_number<double>(cell(6 + k), kDatasetColumns[6 + k], line_no);
    }
    r.target_gaze.horizontal = detail::parse_number<double>(cell(9), kDatasetColumns[9], line_no);
    r.target_gaze.vertical = detail::parse_number<double>(cell(10), kDatasetColumns[10], line_no);
    if (!cell(11).empty()) r.marker_id = detail::parse_number<int>(cell(11), kDatasetColumns[11], line_no);
    try {
      validate(r);
    } catch (const Error& e) {
      throw Error(ErrorKind::validation, "line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    records.push_back(std::move(r));
  }
  return records;
}

inline void save_records(const std::string& path, const std::vector<DriveRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::io, "cannot open '" + path + "' for writing");
  write_records(os, records);
  require(static_cast<bool>(os), ErrorKind::io, "failed writing '" + path + "'");
}

inline std::vector<DriveRecord> load_records(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::io, "cannot open '" + path + "' for reading");
  return read_records(is);
}

}  // namespace gazemap
