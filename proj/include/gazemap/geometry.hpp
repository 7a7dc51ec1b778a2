#pragma once

// Rotations, rigid registration, gaze rays, planes and spherical areas.
//
// Frame convention used throughout the library (right-handed): +z points
// forward out of the driver's face, +x to the driver's left and +y up. A gaze direction with
// horizontal angle h and vertical angle v is
//
//   d(h, v) = [sin h, cos h sin v, cos h cos v]
//
// and head orientation angles (alpha, beta, gamma) = (yaw, pitch, roll) map to
// R = Rx(-beta) Ry(alpha) Rz(gamma), so that R * e_z == d(alpha, beta).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gazemap/error.hpp"

namespace gazemap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quaternion = Eigen::Quaterniond;

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// ---------------------------------------------------------------------------
// Quaternions

/// Sign-canonical form: w >= 0 (ties broken on the first non-zero component).
inline Quaternion canonical(Quaternion q) {
  q.normalize();
  const Eigen::Vector4d c = q.coeffs();  // x, y, z, w
  double lead = c.w();
  if (lead == 0.0) lead = c.x() != 0.0 ? c.x() : (c.y() != 0.0 ? c.y() : c.z());
  if (lead < 0.0) q.coeffs() *= -1.0;
  return q;
}

/// Angle of the relative rotation between a and b, in radians. Sign-blind.
inline double geodesic_angle(const Quaternion& a, const Quaternion& b) {
  const double dot = std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0);
  return 2.0 * std::acos(dot);
}

inline bool same_rotation(const Quaternion& a, const Quaternion& b, double tol = 1e-9) {
  return geodesic_angle(a, b) <= tol;
}

inline Quaternion axis_angle(const Vec3& axis, double angle) {
  return Quaternion(Eigen::AngleAxisd(angle, axis.normalized()));
}

inline Quaternion rot_x(double angle) { return axis_angle(Vec3::UnitX(), angle); }
inline Quaternion rot_y(double angle) { return axis_angle(Vec3::UnitY(), angle); }
inline Quaternion rot_z(double angle) { return axis_angle(Vec3::UnitZ(), angle); }

namespace detail {
inline void check_quaternions(std::span<const Quaternion> quats) {
  require(!quats.empty(), ErrorKind::argument, "rotation mean of an empty list");
  for (const auto& q : quats) {
    require(std::isfinite(q.norm()) && std::abs(q.norm() - 1.0) < 1e-6, ErrorKind::argument,
            "rotation mean expects unit quaternions");
  }
}
}  // namespace detail

/// Streaming rotational average: running mean updated by
/// mean_k = slerp(mean_{k-1}, q_k, 1/k), with each sample sign-flipped onto
/// the hemisphere of the running mean. Result has w >= 0.
inline Quaternion slerp_mean(std::span<const Quaternion> quats) {
  detail::check_quaternions(quats);
  Quaternion mean = canonical(quats.front());
  for (std::size_t k = 1; k < quats.size(); ++k) {
    Quaternion q = quats[k].normalized();
    if (q.dot(mean) < 0.0) q.coeffs() *= -1.0;
    mean = mean.slerp(1.0 / static_cast<double>(k + 1), q).normalized();
  }
  return canonical(mean);
}

/// Chordal L2 rotational mean: principal eigenvector of sum q q^T.
inline Quaternion eigen_rotation_mean(std::span<const Quaternion> quats) {
  detail::check_quaternions(quats);
  Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
  for (const auto& q : quats) {
    const Eigen::Vector4d v = q.normalized().coeffs();
    acc += v * v.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(acc);
  const Eigen::Vector4d top = solver.eigenvectors().col(3);
  Quaternion mean;
  mean.coeffs() = top;
  return canonical(mean);
}

// ---------------------------------------------------------------------------
// Head orientation angles

inline Mat3 rotation_from_angles(double alpha, double beta, double gamma) {
  return (rot_x(-beta) * rot_y(alpha) * rot_z(gamma)).toRotationMatrix();
}

/// Inverse of rotation_from_angles; alpha in [-pi/2, pi/2].
inline Vec3 angles_from_rotation(const Mat3& r) {
  const Vec3 forward = r.col(2);
  const double alpha = std::asin(std::clamp(forward.x(), -1.0, 1.0));
  const double beta = std::atan2(forward.y(), forward.z());
  const Mat3 roll = (rot_y(alpha).inverse() * rot_x(-beta).inverse()).toRotationMatrix() * r;
  const double gamma = std::atan2(roll(1, 0), roll(0, 0));
  return {alpha, beta, gamma};
}

// ---------------------------------------------------------------------------
// Rigid transforms

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  /// (this o other)(p) = this(other(p))
  RigidTransform compose(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  RigidTransform inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }
};

/// Least-squares proper rigid transform T minimizing sum |T(s_i) - t_i|^2.
inline RigidTransform kabsch(std::span<const Vec3> source, std::span<const Vec3> target) {
  require(source.size() == target.size(), ErrorKind::argument,
          "kabsch: source and target differ in length");
  require(source.size() >= 3, ErrorKind::degenerate_geometry, "kabsch: fewer than 3 points");
  const auto n = static_cast<double>(source.size());
  Vec3 src_mean = Vec3::Zero();
  Vec3 dst_mean = Vec3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    src_mean += source[i];
    dst_mean += target[i];
  }
  src_mean /= n;
  dst_mean /= n;

  Mat3 cross = Mat3::Zero();
  Mat3 spread = Mat3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 s = source[i] - src_mean;
    cross += s * (target[i] - dst_mean).transpose();
    spread += s * s.transpose();
  }
  Eigen::JacobiSVD<Mat3> spread_svd(spread);
  const Vec3 sv = spread_svd.singularValues();
  require(sv(1) > 1e-12 * std::max(1.0, sv(0)), ErrorKind::degenerate_geometry,
          "kabsch: collinear or coincident points");

  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double d = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  Mat3 correction = Mat3::Identity();
  correction(2, 2) = d;
  RigidTransform out;
  out.rotation = svd.matrixV() * correction * svd.matrixU().transpose();
  out.translation = dst_mean - out.rotation * src_mean;
  return out;
}

// ---------------------------------------------------------------------------
// Gaze rays and planes

struct GazeRay {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

inline Vec3 gaze_direction(double horizontal, double vertical) {
  require(std::isfinite(horizontal) && std::isfinite(vertical), ErrorKind::argument,
          "gaze angles must be finite");
  const Vec3 d(std::sin(horizontal), std::cos(horizontal) * std::sin(vertical),
               std::cos(horizontal) * std::cos(vertical));
  return d.normalized();
}

/// (horizontal, vertical) angles of a direction; inverse of gaze_direction.
inline Eigen::Vector2d direction_angles(const Vec3& direction) {
  const Vec3 d = direction.normalized();
  return {std::asin(std::clamp(d.x(), -1.0, 1.0)), std::atan2(d.y(), d.z())};
}

inline GazeRay gaze_ray(const Vec3& head_position, double horizontal, double vertical) {
  require(head_position.allFinite(), ErrorKind::argument, "head position must be finite");
  return {head_position, gaze_direction(horizontal, vertical)};
}

/// {p : normal . p = offset}, |normal| = 1.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

struct PlaneFit {
  Plane plane;
  double mean_residual = 0.0;  // mean |orthogonal distance| of the inputs
};

/// Total-least-squares plane. The normal is oriented so that offset >= 0
/// (or, for planes through the origin, so its largest component is positive).
inline PlaneFit fit_plane(std::span<const Vec3> points) {
  require(points.size() >= 3, ErrorKind::degenerate_geometry, "fit_plane: fewer than 3 points");
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : points) scatter += (p - centroid) * (p - centroid).transpose();

  Eigen::SelfAdjointEigenSolver<Mat3> solver(scatter);
  const Vec3 ev = solver.eigenvalues();  // ascending
  require(ev(1) > 1e-12 * std::max(1.0, ev(2)), ErrorKind::degenerate_geometry,
          "fit_plane: collinear points");
  Vec3 normal = solver.eigenvectors().col(0).normalized();
  double offset = normal.dot(centroid);
  if (std::abs(offset) < 1e-12) {
    Eigen::Index lead = 0;
    normal.cwiseAbs().maxCoeff(&lead);
    if (normal(lead) < 0.0) normal = -normal;
    offset = normal.dot(centroid);
  } else if (offset < 0.0) {
    normal = -normal;
    offset = -offset;
  }

  PlaneFit fit{{normal, offset}, 0.0};
  for (const auto& p : points) fit.mean_residual += std::abs(fit.plane.signed_distance(p));
  fit.mean_residual /= static_cast<double>(points.size());
  return fit;
}

struct RayHit {
  Vec3 point = Vec3::Zero();
  double distance = 0.0;  // ray parameter; negative means behind the origin
  bool in_front() const { return distance >= 0.0; }
};

inline RayHit intersect_ray_plane(const GazeRay& ray, const Plane& plane) {
  const double denom = plane.normal.dot(ray.direction);
  require(std::abs(denom) > 1e-9, ErrorKind::no_intersection, "ray is parallel to the plane");
  const double t = (plane.offset - plane.normal.dot(ray.origin)) / denom;
  return {ray.origin + t * ray.direction, t};
}

// ---------------------------------------------------------------------------
// Spherical area of an angular ellipse

/// Axis-aligned ellipse in (horizontal, vertical) angle space, radians.
struct AngularEllipse {
  double center_h = 0.0;
  double center_v = 0.0;
  double semi_h = 0.0;
  double semi_v = 0.0;

  bool contains(double h, double v) const {
    double dh = std::remainder(h - center_h, 2.0 * kPi);
    const double dv = v - center_v;
    return (dh * dh) / (semi_h * semi_h) + (dv * dv) / (semi_v * semi_v) <= 1.0;
  }
};

/// Fraction of the unit sphere covered by the ellipse when (h, v) are read as
/// longitude/latitude: integral of cos(v) dh dv over the ellipse, / 4 pi.
/// The horizontal extent is clipped to one full turn and the vertical extent
/// to [-pi/2, pi/2].
inline double spherical_area_fraction(const AngularEllipse& e) {
  require(e.semi_h > 0.0 && e.semi_v > 0.0 && std::isfinite(e.semi_h) && std::isfinite(e.semi_v),
          ErrorKind::argument, "spherical_area_fraction: semi-axes must be positive");
  const double half_pi = kPi / 2.0;
  // v = center_v + semi_v sin t; the inner h-integral is done in closed form.
  auto integrand = [&](double t) {
    const double v = e.center_v + e.semi_v * std::sin(t);
    if (v < -half_pi || v > half_pi) return 0.0;
    const double half_width = std::min(e.semi_h * std::cos(t), kPi);
    return 2.0 * half_width * std::cos(v) * e.semi_v * std::cos(t);
  };

  std::vector<double> knots{-half_pi, half_pi};
  if (e.semi_h > kPi) {
    const double t = std::acos(kPi / e.semi_h);
    knots.insert(knots.end(), {-t, t});
  }
  for (double edge : {-half_pi, half_pi}) {
    const double s = (edge - e.center_v) / e.semi_v;
    if (s > -1.0 && s < 1.0) knots.push_back(std::asin(s));
  }
  std::sort(knots.begin(), knots.end());

  using Quadrature = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (knots[i + 1] - knots[i] <= 0.0) continue;
    total += Quadrature::integrate(integrand, knots[i], knots[i + 1], 15, 1e-10);
  }
  return std::clamp(total / (4.0 * kPi), 0.0, 1.0);
}

}  // namespace gazemap
