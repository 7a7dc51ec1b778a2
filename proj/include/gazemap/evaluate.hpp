#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "gazemap/dataset.hpp"
#include "gazemap/error.hpp"
#include "gazemap/geometry.hpp"

namespace gazemap {

/// Radius r with P(chi2_2 <= r^2) = c.
inline double mahalanobis_radius(double confidence) {
  require(confidence > 0.0 && confidence < 1.0, ErrorKind::argument, "confidence must lie in (0, 1)");
  return std::sqrt(-2.0 * std::log1p(-confidence));
}

/// Squared Mahalanobis distance of `truth` under the independent Gaussian.
inline double mahalanobis2(const GazeDistribution& d, const GazeAngles& truth) {
  const double dh = std::remainder(truth.horizontal - d.horizontal.mean, 2.0 * kPi);
  const double dv = truth.vertical - d.vertical.mean;
  return dh * dh / d.horizontal.variance + dv * dv / d.vertical.variance;
}

struct ConfidenceRegion {
  AngularEllipse ellipse;
  double confidence = 0.0;
  double area_fraction = 0.0;

  bool contains(const GazeAngles& g) const { return ellipse.contains(g.horizontal, g.vertical); }
};

/// Axis-aligned level set holding probability mass `confidence`.
inline ConfidenceRegion region_at(const GazeDistribution& dist, double confidence) {
  require(dist.horizontal.variance > 0.0 && dist.vertical.variance > 0.0, ErrorKind::argument,
          "region_at: variances must be positive");
  const double r = mahalanobis_radius(confidence);
  ConfidenceRegion region;
  region.ellipse = {dist.horizontal.mean, dist.vertical.mean, r * dist.horizontal.stddev(),
                    r * dist.vertical.stddev()};
  region.confidence = confidence;
  region.area_fraction = spherical_area_fraction(region.ellipse);
  return region;
}

/// 0.01, 0.02, ..., 0.99
inline std::vector<double> default_confidence_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 99; ++i) grid.push_back(i / 100.0);
  return grid;
}

struct CurvePoint {
  double area = 0.0;      // mean sphere fraction of the per-point regions
  double accuracy = 0.0;  // fraction of targets inside their own region
  double confidence = 0.0;
};

/// Per-point regions at every confidence level; sorted by area.
inline std::vector<CurvePoint> accuracy_curve(const std::vector<GazeDistribution>& predictions,
                                              const std::vector<GazeAngles>& truth,
                                              const std::vector<double>& grid = default_confidence_grid()) {
  require(!predictions.empty() && predictions.size() == truth.size(), ErrorKind::argument,
          "accuracy_curve: need matching, non-empty predictions and targets");
  std::vector<double> m2(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) m2[i] = mahalanobis2(predictions[i], truth[i]);

  std::vector<CurvePoint> curve;
  const auto n = static_cast<double>(predictions.size());
  for (double c : grid) {
    const double r2 = std::pow(mahalanobis_radius(c), 2);
    double area = 0.0;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      area += region_at(predictions[i], c).area_fraction;
      if (m2[i] <= r2) ++inside;
    }
    curve.push_back({area / n, static_cast<double>(inside) / n, c});
  }
  std::stable_sort(curve.begin(), curve.end(), [](const auto& a, const auto& b) { return a.area < b.area; });
  return curve;
}

template <class Model>
std::vector<CurvePoint> accuracy_curve(const Model& model, const std::vector<DriveRecord>& test,
                                       const std::vector<double>& grid = default_confidence_grid()) {
  std::vector<GazeDistribution> preds;
  std::vector<GazeAngles> truth;
  for (const auto& r : test) {
    preds.push_back(model.predict(r.head));
    truth.push_back(r.target_gaze);
  }
  return accuracy_curve(preds, truth, grid);
}

namespace detail {
inline double lerp_at(double x0, double y0, double x1, double y1, double x) {
  if (x1 == x0) return y0;
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}
}  // namespace detail

/// Sphere fraction at which the curve first reaches each target accuracy, by
/// linear interpolation; nullopt when the curve never reaches it (or starts
/// above it).
inline std::vector<std::optional<double>> area_at_accuracy(const std::vector<CurvePoint>& curve,
                                                           const std::vector<double>& targets) {
  std::vector<std::optional<double>> out;
  for (double target : targets) {
    std::optional<double> value;
    for (std::size_t i = 0; i < curve.size(); ++i) {
      if (curve[i].accuracy >= target) {
        if (i > 0) {
          value = detail::lerp_at(curve[i - 1].accuracy, curve[i - 1].area, curve[i].accuracy, curve[i].area, target);
        } else if (curve[i].accuracy == target) {
          value = curve[i].area;
        }
        break;
      }
    }
    out.push_back(value);
  }
  return out;
}

/// Accuracy at each target sphere fraction; nullopt outside the curve's range.
inline std::vector<std::optional<double>> accuracy_at_area(const std::vector<CurvePoint>& curve,
                                                           const std::vector<double>& targets) {
  std::vector<std::optional<double>> out;
  for (double target : targets) {
    std::optional<double> value;
    if (!curve.empty() && target >= curve.front().area && target <= curve.back().area) {
      for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve[i].area >= target) {
          value = i == 0 ? curve[0].accuracy
                         : detail::lerp_at(curve[i - 1].area, curve[i - 1].accuracy, curve[i].area,
                                           curve[i].accuracy, target);
          break;
        }
      }
    }
    out.push_back(value);
  }
  return out;
}

inline const std::vector<double>& table_accuracy_targets() {
  static const std::vector<double> t{0.50, 0.75, 0.95};
  return t;
}

inline const std::vector<double>& table_area_targets() {
  static const std::vector<double> t{0.01, 0.02, 0.04};
  return t;
}

struct CalibrationResult {
  std::vector<std::pair<double, double>> pairs;  // (theoretical, empirical)
  double deviation = 0.0;                        // mean |theoretical - empirical|
};

/// Theoretical CDF of each target = chi2_2 CDF of its squared Mahalanobis
/// radius; the empirical CDF is evaluated on the uniform grid k/N, k=1..N.
inline CalibrationResult cdf_calibration(const std::vector<GazeDistribution>& predictions,
                                         const std::vector<GazeAngles>& truth, int grid_size = 100) {
  require(!predictions.empty() && predictions.size() == truth.size(), ErrorKind::argument,
          "cdf_calibration: need matching, non-empty predictions and targets");
  require(grid_size > 0, ErrorKind::argument, "cdf_calibration: grid size must be positive");
  std::vector<double> u(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    u[i] = -std::expm1(-0.5 * mahalanobis2(predictions[i], truth[i]));
  }
  std::sort(u.begin(), u.end());
  CalibrationResult res;
  const auto n = static_cast<double>(u.size());
  for (int k = 1; k <= grid_size; ++k) {
    const double p = static_cast<double>(k) / grid_size;
    const auto count = std::upper_bound(u.begin(), u.end(), p) - u.begin();
    const double emp = static_cast<double>(count) / n;
    res.pairs.emplace_back(p, emp);
    res.deviation += std::abs(p - emp);
  }
  res.deviation /= grid_size;
  return res;
}

template <class Model>
CalibrationResult cdf_calibration(const Model& model, const std::vector<DriveRecord>& test, int grid_size = 100) {
  std::vector<GazeDistribution> preds;
  std::vector<GazeAngles> truth;
  for (const auto& r : test) {
    preds.push_back(model.predict(r.head));
    truth.push_back(r.target_gaze);
  }
  return cdf_calibration(preds, truth, grid_size);
}

}  // namespace gazemap
