// Minimal end-to-end use of the library: synthesize drives, fit a GPR model
// with a linear mean on all but one driver, and score the held-out driver.

#include <iostream>

#include "gazemap/gazemap.hpp"

int main() {
  using namespace gazemap;
  SynthSpec spec;
  spec.drivers = 4;
  spec.frames_per_marker = 10;
  const auto records = normalize_all(synthesize(spec, 42));

  const auto folds = make_folds(driver_ids(records));
  const auto& split = folds.front();
  ModelSpec model;
  model.kind = ModelKind::gpr_linear;
  model.ard = true;
  model.restarts = 2;
  const GazeModel fitted = fit_model(model, select_drivers(records, split.train_drivers),
                                     select_drivers(records, {split.validation_driver}), 1);

  const auto test = select_drivers(records, {split.test_driver});
  const auto curve = accuracy_curve(fitted, test);
  const auto area = area_at_accuracy(curve, {0.95});
  const auto cal = cdf_calibration(fitted, test);
  std::cout << "held-out driver " << split.test_driver << ": " << test.size() << " records\n";
  if (area[0]) std::cout << "area for 95% accuracy: " << 100.0 * *area[0] << "% of the sphere\n";
  std::cout << "calibration deviation: " << cal.deviation << '\n';

  const GazeDistribution d = fitted.predict(test.front().head);
  std::cout << "first record: theta " << d.horizontal.mean << " +- " << d.horizontal.stddev() << ", phi "
            << d.vertical.mean << " +- " << d.vertical.stddev() << '\n';
}
