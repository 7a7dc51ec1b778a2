#pragma once

// Projection of angular gaze densities onto planes and a road camera image.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gazemap/dataset.hpp"
#include "gazemap/error.hpp"
#include "gazemap/evaluate.hpp"
#include "gazemap/geometry.hpp"

namespace gazemap {

/// Row-major grid of densities. `radius2` holds the squared Mahalanobis
/// radius of each cell's gaze angles when the map comes from a single plane,
/// and is empty for depth-averaged maps.
struct HeatMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<double> radius2;
  std::vector<double> depths;
  std::string mapping;

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double total() const { return std::accumulate(values.begin(), values.end(), 0.0); }

  std::pair<int, int> argmax() const {
    const auto it = std::max_element(values.begin(), values.end());
    const auto k = static_cast<int>(it - values.begin());
    return {k % width, k / width};
  }
};

/// Rectangular sampling window on a plane. Column index grows along `axis_u`,
/// row index grows against `axis_v` (image convention, first row on top).
struct PlaneGrid {
  Plane plane;
  Vec3 center = Vec3::Zero();
  Vec3 axis_u = -Vec3::UnitX();
  Vec3 axis_v = Vec3::UnitY();
  double extent_u = 1.0;
  double extent_v = 1.0;
  int width = 64;
  int height = 64;

  Vec3 point(double col, double row) const {
    return center + ((col + 0.5) / width - 0.5) * extent_u * axis_u + (0.5 - (row + 0.5) / height) * extent_v * axis_v;
  }

  /// Fractional (col, row) of a point on the plane; cell centers are integers.
  Eigen::Vector2d cell_of(const Vec3& p) const {
    const Vec3 d = p - center;
    return {(d.dot(axis_u) / extent_u + 0.5) * width - 0.5, (0.5 - d.dot(axis_v) / extent_v) * height - 0.5};
  }
};

/// Grid centered on `center` (projected onto the plane). In-plane axes follow
/// the driver's right and up as closely as the plane allows.
inline PlaneGrid make_plane_grid(const Plane& plane, const Vec3& center, double extent_u, double extent_v,
                                 int width, int height) {
  require(width > 0 && height > 0, ErrorKind::argument, "grid size must be positive");
  require(extent_u > 0.0 && extent_v > 0.0, ErrorKind::argument, "grid extent must be positive");
  PlaneGrid g;
  g.plane = plane;
  g.center = center - plane.signed_distance(center) * plane.normal;
  Vec3 u = plane.normal.cross(Vec3::UnitY());
  if (u.norm() < 1e-9) u = plane.normal.cross(Vec3::UnitZ());
  g.axis_u = u.normalized();
  g.axis_v = g.axis_u.cross(plane.normal).normalized();
  g.extent_u = extent_u;
  g.extent_v = extent_v;
  g.width = width;
  g.height = height;
  return g;
}

struct DensityOptions {
  bool jacobian = false;  // convert to density per unit plane area
};

namespace detail {

inline double gaussian_pdf(double dx, double var) {
  return std::exp(-0.5 * dx * dx / var) / std::sqrt(2.0 * kPi * var);
}

/// Angular density at the direction from `eye` to `point`, optionally times
/// the solid-angle-per-area factor of the plane with normal `normal`.
inline std::pair<double, double> density_at(const GazeDistribution& dist, const Vec3& eye, const Vec3& point,
                                            const Vec3& normal, const DensityOptions& opt) {
  const Vec3 ray = point - eye;
  const Eigen::Vector2d a = direction_angles(ray);
  const double dh = std::remainder(a(0) - dist.horizontal.mean, 2.0 * kPi);
  const double dv = a(1) - dist.vertical.mean;
  const double m2 = dh * dh / dist.horizontal.variance + dv * dv / dist.vertical.variance;
  double f = gaussian_pdf(dh, dist.horizontal.variance) * gaussian_pdf(dv, dist.vertical.variance);
  if (opt.jacobian) {
    const double r = ray.norm();
    const double cos_inc = std::abs(normal.dot(ray)) / r;
    f *= cos_inc / (r * r * std::max(std::cos(a(0)), 1e-12));
  }
  return {f, m2};
}

inline void require_forward_hit(const GazeDistribution& dist, const HeadPose& head, const Plane& plane) {
  const GazeRay mean_ray = gaze_ray(head.position, dist.horizontal.mean, dist.vertical.mean);
  const double denom = plane.normal.dot(mean_ray.direction);
  require(std::abs(denom) > 1e-9, ErrorKind::projection, "mean gaze ray is parallel to the plane");
  const double t = (plane.offset - plane.normal.dot(mean_ray.origin)) / denom;
  require(t > 0.0, ErrorKind::projection, "plane lies behind the mean gaze ray");
}

}  // namespace detail

/// Gaze density sampled at the cell centers of a plane grid.
inline HeatMap windshield_density(const GazeDistribution& dist, const HeadPose& head, const PlaneGrid& grid,
                                  const DensityOptions& opt = {}) {
  require(dist.horizontal.variance > 0.0 && dist.vertical.variance > 0.0, ErrorKind::argument,
          "windshield_density: variances must be positive");
  detail::require_forward_hit(dist, head, grid.plane);
  HeatMap map;
  map.width = grid.width;
  map.height = grid.height;
  map.values.resize(static_cast<std::size_t>(grid.width) * grid.height);
  map.radius2.resize(map.values.size());
  map.mapping = "plane";
  for (int row = 0; row < grid.height; ++row) {
    for (int col = 0; col < grid.width; ++col) {
      const auto [f, m2] = detail::density_at(dist, head.position, grid.point(col, row), grid.plane.normal, opt);
      const auto k = static_cast<std::size_t>(row) * grid.width + col;
      map.values[k] = f;
      map.radius2[k] = m2;
    }
  }
  return map;
}

// ---------------------------------------------------------------------------
// Road camera

/// Pinhole camera. `reference_to_camera` maps reference-frame points into
/// the camera frame (+z forward, +x image right, +y image down).
struct CameraMapping {
  RigidTransform reference_to_camera;
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  Vec3 center() const { return reference_to_camera.inverse().translation; }

  std::optional<Eigen::Vector2d> project(const Vec3& reference_point) const {
    const Vec3 c = reference_to_camera.apply(reference_point);
    if (c.z() <= 0.0) return std::nullopt;
    return Eigen::Vector2d(fx * c.x() / c.z() + cx, fy * c.y() / c.z() + cy);
  }

  /// Reference-frame direction of the ray through pixel coordinates (u, v).
  Vec3 pixel_direction(double u, double v) const {
    const Vec3 cam((u - cx) / fx, (v - cy) / fy, 1.0);
    return (reference_to_camera.rotation.transpose() * cam).normalized();
  }
};

inline void validate(const CameraMapping& m) {
  require(m.fx > 0.0 && m.fy > 0.0, ErrorKind::argument, "camera focal lengths must be positive");
  require(m.width > 0 && m.height > 0, ErrorKind::argument, "camera image size must be positive");
}

/// Forward-looking camera mounted near the mirror: 0.35 m to the driver's
/// right, 0.15 m up, 0.6 m ahead of the reference head position.
inline CameraMapping default_road_camera(int width = 640, int height = 480) {
  CameraMapping m;
  m.width = width;
  m.height = height;
  m.fx = m.fy = 0.8 * width;
  m.cx = 0.5 * width;
  m.cy = 0.5 * height;
  const Mat3 r = rot_z(kPi).toRotationMatrix();  // x left -> image right, y up -> image down
  const Vec3 position(-0.35, 0.15, 0.6);
  m.reference_to_camera = {r, -(r * position)};
  return m;
}

/// 10, 20, ..., 200 meters.
inline std::vector<double> default_road_depths() {
  std::vector<double> d;
  for (int k = 1; k <= 20; ++k) d.push_back(10.0 * k);
  return d;
}

/// Unweighted average over fronto-parallel planes z = depth of the density
/// seen through each camera pixel.
inline HeatMap road_density(const GazeDistribution& dist, const HeadPose& head, const CameraMapping& mapping,
                            const std::vector<double>& depths = default_road_depths(), const DensityOptions& opt = {}) {
  require(!depths.empty(), ErrorKind::argument, "road_density: empty depth list");
  require(dist.horizontal.variance > 0.0 && dist.vertical.variance > 0.0, ErrorKind::argument,
          "road_density: variances must be positive");
  validate(mapping);
  const Vec3 eye = mapping.center();
  for (double depth : depths) {
    require(std::isfinite(depth) && depth > 0.0, ErrorKind::argument, "road_density: depths must be positive");
    detail::require_forward_hit(dist, head, Plane{Vec3::UnitZ(), depth});
  }
  HeatMap map;
  map.width = mapping.width;
  map.height = mapping.height;
  map.values.assign(static_cast<std::size_t>(map.width) * map.height, 0.0);
  map.depths = depths;
  map.mapping = "camera";
  for (int row = 0; row < map.height; ++row) {
    for (int col = 0; col < map.width; ++col) {
      const Vec3 dir = mapping.pixel_direction(col + 0.5, row + 0.5);
      double acc = 0.0;
      for (double depth : depths) {
        if (dir.z() <= 1e-12) continue;
        const double t = (depth - eye.z()) / dir.z();
        if (t <= 0.0) continue;
        acc += detail::density_at(dist, head.position, eye + t * dir, Vec3::UnitZ(), opt).first;
      }
      map.values[static_cast<std::size_t>(row) * map.width + col] = acc / static_cast<double>(depths.size());
    }
  }
  return map;
}

// ---------------------------------------------------------------------------
// Regions and contours

using Mask = std::vector<std::uint8_t>;

/// Cells inside the angular confidence region at level c. Needs a plane map.
inline Mask confidence_mask(const HeatMap& map, double confidence) {
  require(!map.radius2.empty(), ErrorKind::argument, "confidence_mask: map has no angular radius data");
  const double r = mahalanobis_radius(confidence);
  Mask m(map.radius2.size());
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = map.radius2[k] <= r * r ? 1 : 0;
  return m;
}

/// Highest-density cells holding at least fraction `mass` of the map's total.
inline Mask mass_region_mask(const HeatMap& map, double mass) {
  require(mass > 0.0 && mass < 1.0, ErrorKind::argument, "mass fraction must lie in (0, 1)");
  std::vector<std::size_t> order(map.values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return map.values[a] > map.values[b]; });
  const double total = map.total();
  Mask m(map.values.size(), 0);
  if (total <= 0.0) return m;
  double acc = 0.0;
  for (auto k : order) {
    if (acc >= mass * total) break;
    m[k] = 1;
    acc += map.values[k];
  }
  return m;
}

/// Level-c region: angular contour for plane maps, mass region otherwise.
inline Mask region_mask(const HeatMap& map, double confidence) {
  return map.radius2.empty() ? mass_region_mask(map, confidence) : confidence_mask(map, confidence);
}

using Polygon = std::vector<Eigen::Vector2d>;

/// Closed outlines of a mask along cell edges, in pixel coordinates (cell
/// (x, y) spans [x, x+1] x [y, y+1]). Holes come out as separate loops; use
/// even-odd filling.
inline std::vector<Polygon> trace_polygons(const Mask& mask, int width, int height) {
  require(mask.size() == static_cast<std::size_t>(width) * height, ErrorKind::argument,
          "trace_polygons: mask size does not match the grid");
  auto inside = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < width && y < height && mask[static_cast<std::size_t>(y) * width + x] != 0;
  };
  using Corner = std::pair<int, int>;
  std::multimap<Corner, Corner> edges;  // directed, region on the left in image coordinates
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!inside(x, y)) continue;
      if (!inside(x, y - 1)) edges.emplace(Corner{x + 1, y}, Corner{x, y});
      if (!inside(x - 1, y)) edges.emplace(Corner{x, y}, Corner{x, y + 1});
      if (!inside(x, y + 1)) edges.emplace(Corner{x, y + 1}, Corner{x + 1, y + 1});
      if (!inside(x + 1, y)) edges.emplace(Corner{x + 1, y + 1}, Corner{x + 1, y});
    }
  }
  std::vector<Polygon> out;
  while (!edges.empty()) {
    auto it = edges.begin();
    const Corner start = it->first;
    std::vector<Corner> loop{start};
    Corner next = it->second;
    edges.erase(it);
    while (next != start) {
      loop.push_back(next);
      auto found = edges.find(next);
      require(found != edges.end(), ErrorKind::degenerate_geometry, "trace_polygons: open boundary");
      next = found->second;
      edges.erase(found);
    }
    Polygon poly;
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = loop[(i + n - 1) % n];
      const auto& b = loop[i];
      const auto& c = loop[(i + 1) % n];
      const bool collinear = (b.first - a.first) * (c.second - b.second) == (b.second - a.second) * (c.first - b.first);
      if (!collinear) poly.emplace_back(b.first, b.second);
    }
    out.push_back(std::move(poly));
  }
  return out;
}

/// Even-odd rule over all loops.
inline bool point_in_polygons(const std::vector<Polygon>& polys, const Eigen::Vector2d& p) {
  bool in = false;
  for (const auto& poly : polys) {
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
      const auto& a = poly[i];
      const auto& b = poly[j];
      if ((a.y() > p.y()) != (b.y() > p.y()) && p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
        in = !in;
      }
    }
  }
  return in;
}

inline bool point_in_polygon(const Polygon& poly, const Eigen::Vector2d& p) { return point_in_polygons({poly}, p); }

/// Fraction of the map's discrete mass at cell centers inside the outlines.
inline double mass_inside(const HeatMap& map, const std::vector<Polygon>& polys) {
  const double total = map.total();
  require(total > 0.0, ErrorKind::argument, "mass_inside: map has no mass");
  double acc = 0.0;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      if (point_in_polygons(polys, {x + 0.5, y + 0.5})) acc += map.at(x, y);
    }
  }
  return acc / total;
}

// ---------------------------------------------------------------------------
// Image output

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Values scaled so the maximum maps to 255. A constant map is mid-gray.
inline GrayImage to_gray(const HeatMap& map) {
  GrayImage img{map.width, map.height, std::vector<std::uint8_t>(map.values.size(), 128)};
  for (double v : map.values) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::argument, "heat map values must be finite and non-negative");
  }
  if (map.values.empty()) return img;
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  if (*lo == *hi) return img;
  for (std::size_t k = 0; k < map.values.size(); ++k) {
    img.pixels[k] = static_cast<std::uint8_t>(std::lround(255.0 * map.values[k] / *hi));
  }
  return img;
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::io, "cannot open " + path.string() + " for writing");
  os << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  require(static_cast<bool>(os), ErrorKind::io, "failed writing " + path.string());
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::io, "cannot open " + path.string());
  std::string magic;
  GrayImage img;
  int maxval = 0;
  is >> magic >> img.width >> img.height >> maxval;
  require(is && magic == "P5" && maxval == 255 && img.width > 0 && img.height > 0, ErrorKind::parse,
          "not an 8-bit binary PGM: " + path.string());
  is.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  require(is.gcount() == static_cast<std::streamsize>(img.pixels.size()), ErrorKind::parse,
          "truncated PGM: " + path.string());
  return img;
}

/// Sidecar next to an image: map.pgm -> map.contours.txt
inline std::filesystem::path contour_path(const std::filesystem::path& image) {
  auto p = image;
  p.replace_extension(".contours.txt");
  return p;
}

inline void write_polygons(std::ostream& os, double level, const std::vector<Polygon>& polys) {
  for (std::size_t k = 0; k < polys.size(); ++k) {
    os << "# level " << detail::format_double(level) << " loop " << k << '\n';
    for (const auto& v : polys[k]) os << detail::format_double(v.x()) << ' ' << detail::format_double(v.y()) << '\n';
    os << '\n';
  }
}

/// Writes the PGM and, when `levels` is non-empty, the contour sidecar.
inline void render(const HeatMap& map, const std::filesystem::path& path, const std::vector<double>& levels = {}) {
  write_pgm(path, to_gray(map));
  if (levels.empty()) return;
  std::ofstream os(contour_path(path));
  require(static_cast<bool>(os), ErrorKind::io, "cannot open " + contour_path(path).string() + " for writing");
  for (double c : levels) write_polygons(os, c, trace_polygons(region_mask(map, c), map.width, map.height));
  require(static_cast<bool>(os), ErrorKind::io, "failed writing " + contour_path(path).string());
}

/// Loops of one level from a sidecar written by render().
inline std::vector<Polygon> read_polygons(const std::filesystem::path& path, double level) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::io, "cannot open " + path.string());
  std::vector<Polygon> out;
  std::string line;
  bool active = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream hs(line);
      std::string hash, word;
      double lv = 0.0;
      hs >> hash >> word >> lv;
      active = std::abs(lv - level) < 1e-12;
      if (active) out.emplace_back();
      continue;
    }
    if (!active) continue;
    std::istringstream vs(line);
    double x = 0.0, y = 0.0;
    require(static_cast<bool>(vs >> x >> y), ErrorKind::parse, "bad polygon vertex in " + path.string());
    out.back().emplace_back(x, y);
  }
  return out;
}

}  // namespace gazemap
