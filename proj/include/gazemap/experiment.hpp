#pragma once

// Leave-one-driver-out evaluation.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gazemap/dataset.hpp"
#include "gazemap/error.hpp"
#include "gazemap/evaluate.hpp"
#include "gazemap/models.hpp"

namespace gazemap {

struct ExperimentConfig {
  ModelSpec model;
  std::optional<Phase> phase;  // keep only this phase when set
  std::uint64_t seed = 0;
  int jobs = 1;                // folds trained concurrently
  std::vector<double> grid = default_confidence_grid();
  int calibration_bins = 100;
};

/// One held-out prediction.
struct PredictionRow {
  int fold = 0;
  DriveRecord record;  // normalized
  GazeDistribution prediction;
};

struct FoldReport {
  int fold = 0;
  std::string test_driver;
  std::string validation_driver;
  std::size_t test_count = 0;
  std::vector<CurvePoint> curve;
  double calibration_deviation = 0.0;
};

struct ExperimentResult {
  std::vector<FoldReport> folds;
  std::vector<PredictionRow> predictions;  // fold order, record order within a fold
  std::vector<CurvePoint> curve;           // pooled
  std::vector<std::optional<double>> area_at_accuracy;
  std::vector<std::optional<double>> accuracy_at_area;
  CalibrationResult calibration;
};

/// Per-fold seed; folds draw from independent, order-free streams.
inline std::uint64_t fold_seed(std::uint64_t seed, int fold) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(fold + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Pooled curve, tables and calibration for a set of held-out predictions.
inline void summarize(ExperimentResult& res, const std::vector<double>& grid, int calibration_bins) {
  std::vector<GazeDistribution> preds;
  std::vector<GazeAngles> truth;
  for (const auto& p : res.predictions) {
    preds.push_back(p.prediction);
    truth.push_back(p.record.target_gaze);
  }
  res.curve = accuracy_curve(preds, truth, grid);
  res.area_at_accuracy = gazemap::area_at_accuracy(res.curve, table_accuracy_targets());
  res.accuracy_at_area = gazemap::accuracy_at_area(res.curve, table_area_targets());
  res.calibration = cdf_calibration(preds, truth, calibration_bins);
}

inline ExperimentResult run_experiment(const std::vector<DriveRecord>& records, const ExperimentConfig& config) {
  validate(config.model);
  require(config.jobs >= 1, ErrorKind::argument, "jobs must be at least 1");
  std::vector<DriveRecord> selected = config.phase ? select_phase(records, *config.phase) : records;
  require(!selected.empty(), ErrorKind::argument, "no records left after the phase filter");
  const std::vector<DriveRecord> normalized = normalize_all(selected);
  const std::vector<FoldSplit> folds = make_folds(driver_ids(normalized));

  struct FoldOutput {
    FoldReport report;
    std::vector<PredictionRow> rows;
    std::exception_ptr error;
  };
  std::vector<FoldOutput> outputs(folds.size());

  auto run_fold = [&](std::size_t f) {
    const auto& split = folds[f];
    auto& out = outputs[f];
    try {
      const auto train = select_drivers(normalized, split.train_drivers);
      const auto val = select_drivers(normalized, {split.validation_driver});
      const auto test = select_drivers(normalized, {split.test_driver});
      const GazeModel model = fit_model(config.model, train, val, fold_seed(config.seed, static_cast<int>(f)));
      const auto preds = model.predict(test);
      std::vector<GazeAngles> truth;
      for (std::size_t i = 0; i < test.size(); ++i) {
        out.rows.push_back({static_cast<int>(f), test[i], preds[i]});
        truth.push_back(test[i].target_gaze);
      }
      out.report.fold = static_cast<int>(f);
      out.report.test_driver = split.test_driver;
      out.report.validation_driver = split.validation_driver;
      out.report.test_count = test.size();
      out.report.curve = accuracy_curve(preds, truth, config.grid);
      out.report.calibration_deviation = cdf_calibration(preds, truth, config.calibration_bins).deviation;
    } catch (const Error& e) {
      out.error = std::make_exception_ptr(
          Error(e.kind(), "fold " + std::to_string(f) + " (test driver " + split.test_driver + "): " + e.what()));
    } catch (...) {
      out.error = std::current_exception();
    }
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), folds.size());
  if (workers <= 1) {
    for (std::size_t f = 0; f < folds.size(); ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t f = next++; f < folds.size(); f = next++) run_fold(f);
      });
    }
    for (auto& t : pool) t.join();
  }

  ExperimentResult res;
  for (auto& out : outputs) {
    if (out.error) std::rethrow_exception(out.error);
    res.folds.push_back(std::move(out.report));
    for (auto& row : out.rows) res.predictions.push_back(std::move(row));
  }
  summarize(res, config.grid, config.calibration_bins);
  return res;
}

/// Held-out predictions of an already fitted model (no refitting).
inline ExperimentResult evaluate_model(const GazeModel& model, const std::vector<DriveRecord>& records,
                                       const std::optional<Phase>& phase,
                                       const std::vector<double>& grid = default_confidence_grid(),
                                       int calibration_bins = 100) {
  std::vector<DriveRecord> selected = phase ? select_phase(records, *phase) : records;
  require(!selected.empty(), ErrorKind::argument, "no records left after the phase filter");
  const auto normalized = normalize_all(selected);
  const auto preds = model.predict(normalized);
  ExperimentResult res;
  for (std::size_t i = 0; i < normalized.size(); ++i) res.predictions.push_back({0, normalized[i], preds[i]});
  summarize(res, grid, calibration_bins);
  return res;
}

}  // namespace gazemap
