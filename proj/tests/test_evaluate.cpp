#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "gazemap/experiment.hpp"
#include "gazemap/synth.hpp"
#include "support.hpp"

using namespace gazemap;
using testing_support::throws_kind;

namespace {

GazeDistribution gaussian(double mh, double sh, double mv, double sv) { return {{mh, sh * sh}, {mv, sv * sv}}; }

std::vector<GazeDistribution> random_predictions(std::mt19937_64& rng, int n, double smin = 0.02, double smax = 0.15) {
  std::uniform_real_distribution<double> m(-0.8, 0.8), s(smin, smax);
  std::vector<GazeDistribution> out;
  for (int i = 0; i < n; ++i) out.push_back(gaussian(m(rng), s(rng), 0.5 * m(rng), s(rng)));
  return out;
}

std::vector<GazeAngles> sample_from(std::mt19937_64& rng, const std::vector<GazeDistribution>& preds) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<GazeAngles> out;
  for (const auto& p : preds) {
    out.push_back({p.horizontal.mean + p.horizontal.stddev() * z(rng), p.vertical.mean + p.vertical.stddev() * z(rng)});
  }
  return out;
}

// Eq.-15 deviation computed by brute-force counting.
double oracle_deviation(const std::vector<GazeDistribution>& preds, const std::vector<GazeAngles>& truth, int bins) {
  std::vector<double> u;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double dh = truth[i].horizontal - preds[i].horizontal.mean;
    const double dv = truth[i].vertical - preds[i].vertical.mean;
    const double r2 = dh * dh / preds[i].horizontal.variance + dv * dv / preds[i].vertical.variance;
    u.push_back(1.0 - std::exp(-0.5 * r2));
  }
  double dev = 0.0;
  for (int k = 1; k <= bins; ++k) {
    const double p = static_cast<double>(k) / bins;
    double count = 0;
    for (double v : u) count += v <= p;
    dev += std::abs(p - count / static_cast<double>(u.size()));
  }
  return dev / bins;
}

std::vector<GazeDistribution> scaled(std::vector<GazeDistribution> p, double variance_factor) {
  for (auto& d : p) {
    d.horizontal.variance *= variance_factor;
    d.vertical.variance *= variance_factor;
  }
  return p;
}

SynthSpec small_spec(int drivers) {
  SynthSpec s;
  s.drivers = drivers;
  s.frames_per_marker = 3;
  return s;
}

}  // namespace

TEST(Region, NinetyFivePercentCircleRadius) {
  const auto r = region_at(gaussian(0.1, 0.05, -0.2, 0.05), 0.95);
  EXPECT_NEAR(r.ellipse.semi_h, 0.05 * std::sqrt(-2.0 * std::log(0.05)), 1e-14);
  EXPECT_NEAR(r.ellipse.semi_h / 0.05, 2.4477, 1e-4);
  EXPECT_EQ(r.ellipse.semi_h, r.ellipse.semi_v);
  EXPECT_EQ(r.ellipse.center_h, 0.1);
  EXPECT_EQ(r.ellipse.center_v, -0.2);
}

TEST(Region, VanishingConfidenceVanishingArea) {
  const auto d = gaussian(0.0, 0.3, 0.0, 0.2);
  EXPECT_LT(region_at(d, 1e-9).area_fraction, 1e-10);
  EXPECT_LT(region_at(d, 1e-6).area_fraction, region_at(d, 1e-3).area_fraction);
}

TEST(Region, MonteCarloMassMatchesConfidence) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 1.0);
  const auto d = gaussian(0.3, 0.08, -0.1, 0.04);
  for (double c : {0.1, 0.5, 0.75, 0.95, 0.99}) {
    const auto r = region_at(d, c);
    int inside = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double h = 0.3 + 0.08 * z(rng);
      const double v = -0.1 + 0.04 * z(rng);
      const double q = std::pow((h - 0.3) / r.ellipse.semi_h, 2) + std::pow((v + 0.1) / r.ellipse.semi_v, 2);
      inside += q <= 1.0;
      EXPECT_EQ(q <= 1.0, r.contains({h, v})) << "c=" << c;
    }
    EXPECT_NEAR(static_cast<double>(inside) / n, c, 0.01) << "c=" << c;
  }
}

TEST(Region, ConfidenceOutsideUnitIntervalRejected) {
  const auto d = gaussian(0.0, 0.1, 0.0, 0.1);
  for (double c : {0.0, 1.0, -0.2, 1.5}) EXPECT_TRUE(throws_kind(ErrorKind::argument, [&] { region_at(d, c); })) << c;
  EXPECT_TRUE(throws_kind(ErrorKind::argument, [&] { region_at(gaussian(0, 0, 0, 0.1), 0.5); }));
}

TEST(Region, NestingForRandomPredictions) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 0.99), a(-1.0, 1.0);
  const auto preds = random_predictions(rng, 1000, 0.01, 0.6);
  for (const auto& d : preds) {
    double c1 = u(rng), c2 = u(rng);
    if (c1 > c2) std::swap(c1, c2);
    if (c1 == c2) continue;
    const auto r1 = region_at(d, c1);
    const auto r2 = region_at(d, c2);
    EXPECT_LT(r1.ellipse.semi_h, r2.ellipse.semi_h);
    EXPECT_LT(r1.ellipse.semi_v, r2.ellipse.semi_v);
    EXPECT_LE(r1.area_fraction, r2.area_fraction);
    for (int k = 0; k < 10; ++k) {
      const GazeAngles g{d.horizontal.mean + a(rng) * r1.ellipse.semi_h, d.vertical.mean + a(rng) * r1.ellipse.semi_v};
      if (r1.contains(g)) EXPECT_TRUE(r2.contains(g));
    }
  }
}

TEST(Curve, CalibratedModelTracksDiagonal) {
  std::mt19937_64 rng(3);
  const auto preds = random_predictions(rng, 5000);
  const auto truth = sample_from(rng, preds);
  const auto curve = accuracy_curve(preds, truth);
  ASSERT_EQ(curve.size(), 99u);
  for (const auto& p : curve) EXPECT_NEAR(p.accuracy, p.confidence, 0.02) << p.confidence;
}

TEST(Curve, AreaIsMeanOfPerPointRegions) {
  std::mt19937_64 rng(4);
  const auto preds = random_predictions(rng, 50);
  const auto truth = sample_from(rng, preds);
  const auto curve = accuracy_curve(preds, truth, {0.3, 0.8});
  for (const auto& p : curve) {
    double area = 0.0, inside = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const auto r = region_at(preds[i], p.confidence);
      area += r.area_fraction / 50.0;
      inside += r.contains(truth[i]) / 50.0;
    }
    EXPECT_NEAR(p.area, area, 1e-15);
    EXPECT_NEAR(p.accuracy, inside, 1e-15);
  }
}

TEST(Curve, DoubledStdQuadruplesAreaAtEachConfidence) {
  std::mt19937_64 rng(5);
  const auto preds = random_predictions(rng, 4000, 0.01, 0.03);
  const auto truth = sample_from(rng, preds);
  const auto base = accuracy_curve(preds, truth);
  const auto wide = accuracy_curve(scaled(preds, 4.0), truth);
  for (std::size_t i = 0; i < base.size(); ++i) {
    ASSERT_EQ(base[i].confidence, wide[i].confidence);
    EXPECT_NEAR(wide[i].area / base[i].area, 4.0, 0.01) << base[i].confidence;
  }
  // The regions form one nested family either way, so the (area, accuracy)
  // trade-off itself is unchanged by a global rescale.
  const auto a = area_at_accuracy(base, {0.5, 0.75});
  const auto b = area_at_accuracy(wide, {0.5, 0.75});
  for (int i = 0; i < 2; ++i) {
    ASSERT_TRUE(a[i].has_value() && b[i].has_value());
    EXPECT_NEAR(*b[i] / *a[i], 1.0, 0.02) << i;
  }
}

TEST(Curve, SinglePointAccuracyIsZeroOrOne) {
  const std::vector<GazeDistribution> p{gaussian(0.0, 0.1, 0.0, 0.1)};
  const std::vector<GazeAngles> t{{0.12, -0.05}};
  for (const auto& c : accuracy_curve(p, t)) EXPECT_TRUE(c.accuracy == 0.0 || c.accuracy == 1.0);
}

TEST(Curve, MonotoneForRandomModels) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    const auto preds = random_predictions(rng, 200);
    auto truth = sample_from(rng, scaled(preds, 0.5 + t * 0.2));
    const auto curve = accuracy_curve(preds, truth);
    for (std::size_t i = 1; i < curve.size(); ++i) {
      EXPECT_GE(curve[i].area, curve[i - 1].area);
      EXPECT_GE(curve[i].accuracy, curve[i - 1].accuracy);
    }
  }
}

TEST(Curve, MismatchedInputsRejected) {
  EXPECT_TRUE(throws_kind(ErrorKind::argument, [] { accuracy_curve(std::vector<GazeDistribution>{}, std::vector<GazeAngles>{}); }));
  EXPECT_TRUE(throws_kind(ErrorKind::argument, [] {
    accuracy_curve(std::vector<GazeDistribution>{gaussian(0, 1, 0, 1)}, std::vector<GazeAngles>{});
  }));
}

TEST(Tables, LinearInterpolationExamples) {
  const std::vector<CurvePoint> curve{{0.01, 0.5, 0.3}, {0.03, 0.9, 0.6}};
  const auto a = area_at_accuracy(curve, {0.7});
  ASSERT_TRUE(a[0]);
  EXPECT_NEAR(*a[0], 0.02, 1e-15);
  const auto b = accuracy_at_area(curve, {0.02});
  ASSERT_TRUE(b[0]);
  EXPECT_NEAR(*b[0], 0.7, 1e-15);
}

TEST(Tables, OutOfRangeIsMarkedNotFatal) {
  const std::vector<CurvePoint> curve{{0.01, 0.5, 0.3}, {0.03, 0.9, 0.6}};
  EXPECT_FALSE(area_at_accuracy(curve, {0.95})[0].has_value());
  EXPECT_FALSE(area_at_accuracy(curve, {0.4})[0].has_value());
  EXPECT_FALSE(accuracy_at_area(curve, {0.04})[0].has_value());
  EXPECT_FALSE(accuracy_at_area(curve, {0.005})[0].has_value());
}

TEST(Tables, InterpolatedAreasMonotoneInTarget) {
  std::mt19937_64 rng(7);
  const auto preds = random_predictions(rng, 500);
  const auto curve = accuracy_curve(preds, sample_from(rng, preds));
  std::vector<double> targets;
  for (double t = 0.05; t < 0.97; t += 0.01) targets.push_back(t);
  const auto areas = area_at_accuracy(curve, targets);
  for (std::size_t i = 1; i < areas.size(); ++i) {
    ASSERT_TRUE(areas[i] && areas[i - 1]);
    EXPECT_GE(*areas[i], *areas[i - 1]);
  }
}

TEST(Calibration, SelfSampledModelIsCalibrated) {
  std::mt19937_64 rng(8);
  const auto preds = random_predictions(rng, 5000);
  const auto truth = sample_from(rng, preds);
  const auto res = cdf_calibration(preds, truth);
  EXPECT_LE(res.deviation, 0.02);
  EXPECT_NEAR(res.deviation, oracle_deviation(preds, truth, 100), 1e-12);
  ASSERT_EQ(res.pairs.size(), 100u);
  for (std::size_t i = 1; i < res.pairs.size(); ++i) {
    EXPECT_GE(res.pairs[i].first, res.pairs[i - 1].first);
    EXPECT_GE(res.pairs[i].second, res.pairs[i - 1].second);
  }
}

TEST(Calibration, HalvedVarianceDetected) {
  std::mt19937_64 rng(9);
  const auto preds = random_predictions(rng, 5000);
  const auto truth = sample_from(rng, preds);
  const auto res = cdf_calibration(scaled(preds, 0.5), truth);
  EXPECT_GE(res.deviation, 0.05);
  EXPECT_NEAR(res.deviation, oracle_deviation(scaled(preds, 0.5), truth, 100), 1e-12);
}

TEST(Experiment, ThreeDriverLinRegPartitionsRecords) {
  const auto records = synthesize(small_spec(3), 11);
  ExperimentConfig cfg;
  cfg.model.kind = ModelKind::lr;
  const auto res = run_experiment(records, cfg);
  ASSERT_EQ(res.folds.size(), 3u);
  EXPECT_EQ(res.predictions.size(), records.size());
  std::map<std::pair<std::string, long>, int> seen;
  std::set<std::string> test_drivers;
  for (const auto& p : res.predictions) {
    ++seen[{p.record.driver_id + "/" + std::string(to_string(p.record.phase)), p.record.frame_index}];
  }
  for (const auto& f : res.folds) test_drivers.insert(f.test_driver);
  EXPECT_EQ(test_drivers.size(), 3u);
  EXPECT_EQ(seen.size(), records.size());
  for (const auto& [key, count] : seen) EXPECT_EQ(count, 1);
}

TEST(Experiment, SameSeedSameReport) {
  const auto records = synthesize(small_spec(3), 12);
  ExperimentConfig cfg;
  cfg.model.kind = ModelKind::mdn;
  cfg.model.network.max_epochs = 20;
  cfg.seed = 99;
  const auto a = run_experiment(records, cfg);
  cfg.jobs = 3;
  const auto b = run_experiment(records, cfg);
  ASSERT_EQ(a.predictions.size(), b.predictions.size());
  for (std::size_t i = 0; i < a.predictions.size(); ++i) {
    EXPECT_EQ(a.predictions[i].prediction.horizontal.mean, b.predictions[i].prediction.horizontal.mean);
    EXPECT_EQ(a.predictions[i].prediction.vertical.variance, b.predictions[i].prediction.vertical.variance);
  }
  EXPECT_EQ(a.calibration.deviation, b.calibration.deviation);
}

TEST(Experiment, PooledAccuracyIsRecordWeightedFoldMean) {
  const auto records = synthesize(small_spec(4), 13);
  ExperimentConfig cfg;
  cfg.model.kind = ModelKind::lr;
  const auto res = run_experiment(records, cfg);
  for (const auto& pooled : res.curve) {
    double weighted = 0.0, total = 0.0;
    for (const auto& f : res.folds) {
      for (const auto& p : f.curve) {
        if (p.confidence == pooled.confidence) weighted += p.accuracy * static_cast<double>(f.test_count);
      }
      total += static_cast<double>(f.test_count);
    }
    EXPECT_NEAR(pooled.accuracy, weighted / total, 1e-12);
  }
}

TEST(Experiment, GeneratorTruthCoverage) {
  SynthSpec spec;
  spec.drivers = 6;
  spec.frames_per_marker = 20;
  const auto records = synthesize(spec, 14);
  ASSERT_GE(records.size(), 2000u);
  const GeneratorTruth truth(spec, 14);
  int inside = 0;
  for (const auto& r : records) inside += region_at(truth.predict(r), 0.95).contains(r.target_gaze);
  const double coverage = static_cast<double>(inside) / static_cast<double>(records.size());
  EXPECT_GE(coverage, 0.93);
  EXPECT_LE(coverage, 0.97);
}
