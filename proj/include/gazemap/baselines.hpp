#pragma once

// Baseline predictors: homoscedastic linear and MLP regression, and a
// single-component mixture density network.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gazemap/dataset.hpp"
#include "gazemap/error.hpp"
#include "gazemap/nnet.hpp"

namespace gazemap {

// ---------------------------------------------------------------------------
// Linear regression

struct LinearRegressor {
  Eigen::VectorXd coefficients;  // [a0, a1..ad]
  double variance = 1.0;         // train mean squared residual

  double mean(const Eigen::VectorXd& x) const {
    return coefficients(0) + coefficients.tail(coefficients.size() - 1).dot(x);
  }
};

/// Ordinary least squares via column-pivoted QR.
inline LinearRegressor fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  require(x.rows() == y.size(), ErrorKind::argument, "fit_ols: row count mismatch");
  require(x.rows() >= x.cols() + 1, ErrorKind::singular_design, "fit_ols: fewer rows than coefficients");
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design << Eigen::VectorXd::Ones(x.rows()), x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  require(qr.rank() == design.cols(), ErrorKind::singular_design, "fit_ols: design matrix is rank deficient");
  LinearRegressor out;
  out.coefficients = qr.solve(y);
  out.variance = std::max((design * out.coefficients - y).squaredNorm() / static_cast<double>(x.rows()),
                          std::numeric_limits<double>::min());
  return out;
}

struct LinRegGazeModel {
  FeatureMode features = FeatureMode::full6d;
  LinearRegressor horizontal;
  LinearRegressor vertical;

  GazeDistribution predict(const HeadPose& head) const {
    const Eigen::VectorXd x = gazemap::features(head, features);
    return {{horizontal.mean(x), horizontal.variance}, {vertical.mean(x), vertical.variance}};
  }
};

inline LinRegGazeModel fit_linreg(const std::vector<DriveRecord>& train, FeatureMode features) {
  const Eigen::MatrixXd x = feature_matrix(train, features);
  return {features, fit_ols(x, target_vector(train, GazeComponent::horizontal)),
          fit_ols(x, target_vector(train, GazeComponent::vertical))};
}

inline GazeDistribution predict_linreg(const LinRegGazeModel& m, const HeadPose& head) { return m.predict(head); }

// ---------------------------------------------------------------------------
// MLP regression (MSE, homoscedastic)

struct NnRegressor {
  InputScaler scaler;
  MlpModel network;       // d -> 12 -> 12 -> 1
  double variance = 1.0;  // train MSE of the selected snapshot

  double mean(const Eigen::VectorXd& x) const {
    return network.forward(scaler.apply(x.transpose()).transpose())(0);
  }
};

struct NnRegGazeModel {
  FeatureMode features = FeatureMode::full6d;
  NnRegressor horizontal;
  NnRegressor vertical;

  GazeDistribution predict(const HeadPose& head) const {
    const Eigen::VectorXd x = gazemap::features(head, features);
    return {{horizontal.mean(x), horizontal.variance}, {vertical.mean(x), vertical.variance}};
  }
};

namespace detail {

inline NnRegressor fit_nn_component(const std::vector<DriveRecord>& train, const std::vector<DriveRecord>& val,
                                    GazeComponent which, FeatureMode features, TrainConfig config) {
  NnRegressor out;
  const Eigen::MatrixXd x = feature_matrix(train, features);
  out.scaler = InputScaler::fit(x);
  TrainData tr{out.scaler.apply(x), target_vector(train, which)};
  TrainData va{out.scaler.apply(feature_matrix(val, features)), target_vector(val, which)};
  auto result = train_network(tr, va, config, Loss::mse, 1);
  out.network = std::move(result.model);
  const Eigen::VectorXd pred = out.network.forward_batch(tr.inputs.transpose()).row(0).transpose();
  out.variance = std::max((pred - tr.targets.col(0)).squaredNorm() / static_cast<double>(pred.size()),
                          std::numeric_limits<double>::min());
  return out;
}

}  // namespace detail

inline NnRegGazeModel fit_nn(const std::vector<DriveRecord>& train, const std::vector<DriveRecord>& val,
                             FeatureMode features, const TrainConfig& config) {
  require(!train.empty() && !val.empty(), ErrorKind::argument, "fit_nn: empty train or validation set");
  TrainConfig vertical = config;
  vertical.seed = config.seed + 1;
  return {features, detail::fit_nn_component(train, val, GazeComponent::horizontal, features, config),
          detail::fit_nn_component(train, val, GazeComponent::vertical, features, vertical)};
}

inline GazeDistribution predict_nn(const NnRegGazeModel& m, const HeadPose& head) { return m.predict(head); }

// ---------------------------------------------------------------------------
// Mixture density network

/// -log sum_k pi_k N(y | mu_k, sigma_k), evaluated with log-sum-exp.
inline double gaussian_mixture_nll(double y, std::span<const double> weights, std::span<const double> means,
                                   std::span<const double> sigmas) {
  require(!weights.empty() && weights.size() == means.size() && weights.size() == sigmas.size(),
          ErrorKind::argument, "mixture component arrays differ in length");
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double z = (y - means[k]) / sigmas[k];
    terms[k] = std::log(weights[k]) - kHalfLog2Pi - std::log(sigmas[k]) - 0.5 * z * z;
    top = std::max(top, terms[k]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - top);
  return -(top + std::log(acc));
}

/// One component: outputs (mu, s) with sigma = exp(s).
struct MdnRegressor {
  InputScaler scaler;
  MlpModel network;  // d -> 12 -> 12 -> 2

  AngleGaussian predict(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd out = network.forward(scaler.apply(x.transpose()).transpose());
    return from_outputs(out(0), out(1));
  }

  static AngleGaussian from_outputs(double mu, double log_sigma) {
    const double sigma = std::exp(log_sigma);
    return {mu, std::max(sigma * sigma, std::numeric_limits<double>::min())};
  }
};

struct MdnGazeModel {
  FeatureMode features = FeatureMode::full6d;
  MdnRegressor horizontal;
  MdnRegressor vertical;

  GazeDistribution predict(const HeadPose& head) const {
    const Eigen::VectorXd x = gazemap::features(head, features);
    return {horizontal.predict(x), vertical.predict(x)};
  }
};

namespace detail {

inline MdnRegressor fit_mdn_component(const std::vector<DriveRecord>& train, const std::vector<DriveRecord>& val,
                                      GazeComponent which, FeatureMode features, const TrainConfig& config) {
  MdnRegressor out;
  const Eigen::MatrixXd x = feature_matrix(train, features);
  out.scaler = InputScaler::fit(x);
  TrainData tr{out.scaler.apply(x), target_vector(train, which)};
  TrainData va{out.scaler.apply(feature_matrix(val, features)), target_vector(val, which)};
  out.network = train_network(tr, va, config, Loss::gaussian_nll, 2).model;
  return out;
}

}  // namespace detail

inline MdnGazeModel fit_mdn(const std::vector<DriveRecord>& train, const std::vector<DriveRecord>& val,
                            FeatureMode features, const TrainConfig& config) {
  require(!train.empty() && !val.empty(), ErrorKind::argument, "fit_mdn: empty train or validation set");
  TrainConfig vertical = config;
  vertical.seed = config.seed + 1;
  return {features, detail::fit_mdn_component(train, val, GazeComponent::horizontal, features, config),
          detail::fit_mdn_component(train, val, GazeComponent::vertical, features, vertical)};
}

inline GazeDistribution predict_mdn(const MdnGazeModel& m, const HeadPose& head) { return m.predict(head); }

// ---------------------------------------------------------------------------
// Serialization

inline void to_json(nlohmann::json& j, const LinearRegressor& m) {
  j = {{"coefficients", std::vector<double>(m.coefficients.begin(), m.coefficients.end())},
       {"variance", m.variance}};
}

inline void from_json(const nlohmann::json& j, LinearRegressor& m) {
  const auto c = j.at("coefficients").get<std::vector<double>>();
  m.coefficients = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
  m.variance = j.at("variance").get<double>();
}

inline void to_json(nlohmann::json& j, const NnRegressor& m) {
  j = {{"scaler", m.scaler}, {"network", m.network}, {"variance", m.variance}};
}

inline void from_json(const nlohmann::json& j, NnRegressor& m) {
  m.scaler = j.at("scaler").get<InputScaler>();
  m.network = j.at("network").get<MlpModel>();
  m.variance = j.at("variance").get<double>();
}

inline void to_json(nlohmann::json& j, const MdnRegressor& m) { j = {{"scaler", m.scaler}, {"network", m.network}}; }

inline void from_json(const nlohmann::json& j, MdnRegressor& m) {
  m.scaler = j.at("scaler").get<InputScaler>();
  m.network = j.at("network").get<MlpModel>();
}

}  // namespace gazemap
