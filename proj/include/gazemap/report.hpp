#pragma once

// Report files: predictions, curves, summary tables, calibration pairs and a
// JSON summary. Every text report starts with a "# key=value ..." line that
// records the run configuration; readers skip lines starting with '#'.

#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gazemap/dataset.hpp"
#include "gazemap/error.hpp"
#include "gazemap/evaluate.hpp"
#include "gazemap/experiment.hpp"

namespace gazemap {

/// Identifies a report row: model, feature mode, phase and seed.
struct ReportLabel {
  std::string model;
  std::string features;
  std::string phase = "all";
  std::uint64_t seed = 0;

  std::string header() const {
    return "# model=" + model + " features=" + features + " phase=" + phase + " seed=" + std::to_string(seed);
  }
};

namespace detail {

inline std::string cell(const std::optional<double>& v, double scale = 1.0) {
  return v ? format_double(*v * scale) : std::string("n/a");
}

}  // namespace detail

inline void write_predictions(std::ostream& os, const ReportLabel& label, const std::vector<PredictionRow>& rows) {
  using detail::format_double;
  os << label.header() << '\n';
  os << "fold,driver_id,phase,frame,marker_id,theta,phi,mean_theta,var_theta,mean_phi,var_phi\n";
  for (const auto& r : rows) {
    os << r.fold << ',' << r.record.driver_id << ',' << to_string(r.record.phase) << ',' << r.record.frame_index
       << ',' << (r.record.marker_id ? std::to_string(*r.record.marker_id) : std::string()) << ','
       << format_double(r.record.target_gaze.horizontal) << ',' << format_double(r.record.target_gaze.vertical)
       << ',' << format_double(r.prediction.horizontal.mean) << ','
       << format_double(r.prediction.horizontal.variance) << ',' << format_double(r.prediction.vertical.mean)
       << ',' << format_double(r.prediction.vertical.variance) << '\n';
  }
}

/// Reads the rows written by write_predictions. Head poses are not stored
/// and come back as zero.
inline std::vector<PredictionRow> read_predictions(std::istream& is, ReportLabel* label = nullptr) {
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (label && line_no == 1) {
        std::istringstream hs(line.substr(1));
        std::string kv;
        while (hs >> kv) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) continue;
          const auto key = kv.substr(0, eq);
          const auto value = kv.substr(eq + 1);
          if (key == "model") label->model = value;
          if (key == "features") label->features = value;
          if (key == "phase") label->phase = value;
          if (key == "seed") label->seed = std::stoull(value);
        }
      }
      continue;
    }
    if (!header_seen) {
      require(line.rfind("fold,driver_id", 0) == 0, ErrorKind::schema, "predictions file has no header row");
      header_seen = true;
      continue;
    }
    const auto cells = detail::split_row(line);
    if (cells.size() != 11) {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": expected 11 columns", line_no);
    }
    PredictionRow r;
    r.fold = detail::parse_number<int>(cells[0], "fold", line_no);
    r.record.driver_id = std::string(cells[1]);
    const auto phase = parse_phase(cells[2]);
    if (!phase) throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": unknown phase", line_no);
    r.record.phase = *phase;
    r.record.frame_index = detail::parse_number<long>(cells[3], "frame", line_no);
    if (!cells[4].empty()) r.record.marker_id = detail::parse_number<int>(cells[4], "marker_id", line_no);
    r.record.target_gaze = {detail::parse_number<double>(cells[5], "theta", line_no),
                            detail::parse_number<double>(cells[6], "phi", line_no)};
    r.prediction = {{detail::parse_number<double>(cells[7], "mean_theta", line_no),
                     detail::parse_number<double>(cells[8], "var_theta", line_no)},
                    {detail::parse_number<double>(cells[9], "mean_phi", line_no),
                     detail::parse_number<double>(cells[10], "var_phi", line_no)}};
    if (!(r.prediction.horizontal.variance > 0.0 && r.prediction.vertical.variance > 0.0)) {
      throw Error(ErrorKind::validation, "line " + std::to_string(line_no) + ": variances must be positive", line_no);
    }
    rows.push_back(std::move(r));
  }
  require(header_seen, ErrorKind::schema, "predictions file has no header row");
  return rows;
}

inline void write_curve(std::ostream& os, const ReportLabel& label, const std::vector<CurvePoint>& curve) {
  using detail::format_double;
  os << label.header() << '\n' << "confidence,area,accuracy\n";
  for (const auto& p : curve) {
    os << format_double(p.confidence) << ',' << format_double(p.area) << ',' << format_double(p.accuracy) << '\n';
  }
}

inline void write_calibration(std::ostream& os, const ReportLabel& label, const CalibrationResult& cal) {
  using detail::format_double;
  os << label.header() << " deviation=" << format_double(cal.deviation) << '\n' << "theoretical,empirical\n";
  for (const auto& [t, e] : cal.pairs) os << format_double(t) << ',' << format_double(e) << '\n';
}

/// Area (percent of sphere) needed for 50/75/95 % accuracy, one row per run.
inline void write_area_table(std::ostream& os, const std::vector<std::pair<ReportLabel, ExperimentResult>>& runs) {
  os << "model,features,phase,seed,area_pct_at_acc50,area_pct_at_acc75,area_pct_at_acc95\n";
  for (const auto& [label, res] : runs) {
    os << label.model << ',' << label.features << ',' << label.phase << ',' << label.seed;
    for (const auto& v : res.area_at_accuracy) os << ',' << detail::cell(v, 100.0);
    os << '\n';
  }
}

/// Accuracy (percent) at 1/2/4 % of the sphere, one row per run.
inline void write_accuracy_table(std::ostream& os,
                                 const std::vector<std::pair<ReportLabel, ExperimentResult>>& runs) {
  os << "model,features,phase,seed,acc_pct_at_area1,acc_pct_at_area2,acc_pct_at_area4\n";
  for (const auto& [label, res] : runs) {
    os << label.model << ',' << label.features << ',' << label.phase << ',' << label.seed;
    for (const auto& v : res.accuracy_at_area) os << ',' << detail::cell(v, 100.0);
    os << '\n';
  }
}

inline nlohmann::json summary_json(const ReportLabel& label, const ExperimentResult& res) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : res.folds) {
    const auto a = area_at_accuracy(f.curve, table_accuracy_targets());
    const auto b = accuracy_at_area(f.curve, table_area_targets());
    folds.push_back({{"fold", f.fold},
                     {"test_driver", f.test_driver},
                     {"validation_driver", f.validation_driver},
                     {"test_count", f.test_count},
                     {"area_at_accuracy", {opt(a[0]), opt(a[1]), opt(a[2])}},
                     {"accuracy_at_area", {opt(b[0]), opt(b[1]), opt(b[2])}},
                     {"calibration_deviation", f.calibration_deviation}});
  }
  const auto& a = res.area_at_accuracy;
  const auto& b = res.accuracy_at_area;
  return {{"model", label.model},
          {"features", label.features},
          {"phase", label.phase},
          {"seed", label.seed},
          {"records", res.predictions.size()},
          {"pooled",
           {{"accuracy_targets", table_accuracy_targets()},
            {"area_at_accuracy", {opt(a[0]), opt(a[1]), opt(a[2])}},
            {"area_targets", table_area_targets()},
            {"accuracy_at_area", {opt(b[0]), opt(b[1]), opt(b[2])}},
            {"calibration_deviation", res.calibration.deviation}}},
          {"folds", folds}};
}

}  // namespace gazemap
