#pragma once

// Helpers shared by the test binaries. Oracles here are deliberately written
// without calling into the library code they check.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "gazemap/error.hpp"

namespace testing_support {

/// Runs `fn` and checks it throws gazemap::Error of the given kind.
template <class Fn>
::testing::AssertionResult throws_kind(gazemap::ErrorKind kind, Fn&& fn) {
  try {
    fn();
  } catch (const gazemap::Error& e) {
    if (e.kind() == kind) return ::testing::AssertionSuccess();
    return ::testing::AssertionFailure() << "threw kind " << gazemap::to_string(e.kind()) << ": " << e.what();
  } catch (const std::exception& e) {
    return ::testing::AssertionFailure() << "threw a non-library exception: " << e.what();
  }
  return ::testing::AssertionFailure() << "did not throw";
}

/// Random proper rotation from a normalized Gaussian 4-vector.
inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

/// Relative error guarded for tiny magnitudes.
inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Solid-angle fraction of an axis-aligned (h, v) ellipse by a midpoint rule
/// over latitude rows with the longitude chord taken in closed form.
inline double sphere_fraction_rows(double cv, double a, double b, int rows = 200000) {
  const double pi = 3.14159265358979323846;
  const double lo = std::max(cv - b, -pi / 2.0);
  const double hi = std::min(cv + b, pi / 2.0);
  if (hi <= lo) return 0.0;
  const double dv = (hi - lo) / rows;
  double total = 0.0;
  for (int i = 0; i < rows; ++i) {
    const double v = lo + (i + 0.5) * dv;
    const double s = (v - cv) / b;
    if (std::abs(s) >= 1.0) continue;
    const double chord = std::min(2.0 * a * std::sqrt(1.0 - s * s), 2.0 * pi);
    total += chord * std::cos(v) * dv;
  }
  return total / (4.0 * pi);
}

}  // namespace testing_support
