#pragma once

// Gaussian process regression with squared-exponential kernels.
//
// Observations are modeled as y = m(x) + f(x) + e, f ~ GP(0, k), e ~ N(0, s2),
// with k(x, x') = sf^2 exp(-1/2 sum_i (x_i - x'_i)^2 / l_i^2). The isotropic
// kernel is the special case of one shared length scale. The posterior at x*:
//
//   mean = m(x*) + k*^T [K + s2 I]^-1 (y - m(X))
//   var  = sf^2 + s2 - k*^T [K + s2 I]^-1 k*
//
// Hyperparameters (log sf, log l, log(s2 - floor)) maximize the log marginal
// likelihood. Constant and linear means are profiled out by generalized least
// squares at every iterate; the neural mean is an MLP fit first, with the GP
// then modeling its residuals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gazemap/dataset.hpp"
#include "gazemap/error.hpp"
#include "gazemap/nnet.hpp"
#include "gazemap/optim.hpp"

namespace gazemap {

inline constexpr double kNoiseFloor = 1e-9;
inline constexpr double kMaxJitter = 1e-3;

struct KernelParams {
  double amplitude = 1.0;           // sf
  Eigen::VectorXd length_scales;    // size 1 (isotropic) or d (ARD)
  double noise_variance = kNoiseFloor;  // s2, added on the Gram diagonal only

  bool ard() const { return length_scales.size() > 1; }

  /// Length scales broadcast to `dim` entries.
  Eigen::VectorXd scales(Eigen::Index dim) const {
    if (length_scales.size() == 1) return Eigen::VectorXd::Constant(dim, length_scales(0));
    return length_scales;
  }
};

inline void validate(const KernelParams& p, Eigen::Index dim) {
  require(p.amplitude > 0.0 && std::isfinite(p.amplitude), ErrorKind::argument, "kernel amplitude must be > 0");
  require(p.length_scales.size() == 1 || p.length_scales.size() == dim, ErrorKind::argument,
          "kernel has " + std::to_string(p.length_scales.size()) + " length scales for dimension " +
              std::to_string(dim));
  require((p.length_scales.array() > 0.0).all() && p.length_scales.allFinite(), ErrorKind::argument,
          "kernel length scales must be > 0");
  require(p.noise_variance >= 0.0 && std::isfinite(p.noise_variance), ErrorKind::argument,
          "kernel noise variance must be >= 0");
}

inline double kernel_eval(const KernelParams& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  require(a.size() == b.size(), ErrorKind::argument, "kernel inputs differ in dimension");
  validate(p, a.size());
  const Eigen::VectorXd l = p.scales(a.size());
  const double q = ((a - b).array() / l.array()).square().sum();
  return p.amplitude * p.amplitude * std::exp(-0.5 * q);
}

/// Noise-free cross-covariance between the rows of a and b.
inline Eigen::MatrixXd cross_covariance(const KernelParams& p, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  require(a.cols() == b.cols(), ErrorKind::argument, "kernel inputs differ in dimension");
  validate(p, a.cols());
  const Eigen::RowVectorXd inv_l = p.scales(a.cols()).cwiseInverse().transpose();
  const Eigen::MatrixXd sa = a.array().rowwise() * inv_l.array();
  const Eigen::MatrixXd sb = b.array().rowwise() * inv_l.array();
  Eigen::MatrixXd q = (-2.0 * sa * sb.transpose()).colwise() + sa.rowwise().squaredNorm();
  q.rowwise() += sb.rowwise().squaredNorm().transpose();
  return (p.amplitude * p.amplitude) * (-0.5 * q.cwiseMax(0.0)).array().exp().matrix();
}

/// Noise-free Gram matrix, symmetric by construction.
inline Eigen::MatrixXd gram_matrix(const KernelParams& p, const Eigen::MatrixXd& x) {
  validate(p, x.cols());
  const Eigen::VectorXd inv_l = p.scales(x.cols()).cwiseInverse();
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  const double sf2 = p.amplitude * p.amplitude;
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = sf2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double q = ((x.row(i) - x.row(j)).transpose().array() * inv_l.array()).square().sum();
      k(i, j) = k(j, i) = sf2 * std::exp(-0.5 * q);
    }
  }
  return k;
}

// ---------------------------------------------------------------------------
// Mean functions

enum class MeanKind { zero, constant, linear, neural };

inline std::string_view to_string(MeanKind k) {
  switch (k) {
    case MeanKind::zero: return "zero";
    case MeanKind::constant: return "constant";
    case MeanKind::linear: return "linear";
    case MeanKind::neural: return "neural";
  }
  return "unknown";
}

inline std::optional<MeanKind> parse_mean_kind(std::string_view s) {
  if (s == "zero") return MeanKind::zero;
  if (s == "constant") return MeanKind::constant;
  if (s == "linear") return MeanKind::linear;
  if (s == "neural") return MeanKind::neural;
  return std::nullopt;
}

struct MeanFunction {
  MeanKind kind = MeanKind::zero;
  double bias = 0.0;          // w0 (constant, linear)
  Eigen::VectorXd weights;    // w (linear)
  MlpModel network;           // neural
  InputScaler scaler;         // neural input standardization

  /// Rows of x are inputs.
  Eigen::VectorXd evaluate(const Eigen::MatrixXd& x) const {
    switch (kind) {
      case MeanKind::zero: return Eigen::VectorXd::Zero(x.rows());
      case MeanKind::constant: return Eigen::VectorXd::Constant(x.rows(), bias);
      case MeanKind::linear: return (x * weights).array() + bias;
      case MeanKind::neural: return network.forward_batch(scaler.apply(x).transpose()).row(0).transpose();
    }
    return Eigen::VectorXd::Zero(x.rows());
  }
};

/// Regressor matrix for the profiled means: [1] or [1, x].
inline Eigen::MatrixXd mean_basis(MeanKind kind, const Eigen::MatrixXd& x) {
  if (kind == MeanKind::constant) return Eigen::MatrixXd::Ones(x.rows(), 1);
  Eigen::MatrixXd h(x.rows(), x.cols() + 1);
  h << Eigen::VectorXd::Ones(x.rows()), x;
  return h;
}

// ---------------------------------------------------------------------------
// Posterior

class GprModel {
 public:
  GprModel() = default;

  /// Conditions the GP on (x, y). If the Cholesky factorization fails the
  /// diagonal noise is raised x10 (starting from at least the floor) up to
  /// 1e-3; the noise actually used is stored in kernel().
  static GprModel condition(KernelParams kernel, MeanFunction mean, FeatureMode features,
                            Eigen::MatrixXd x, Eigen::VectorXd y) {
    require(x.rows() >= 1 && x.rows() == y.size(), ErrorKind::argument, "condition: bad training shapes");
    validate(kernel, x.cols());
    GprModel m;
    m.features_ = features;
    m.mean_ = std::move(mean);
    m.x_ = std::move(x);
    m.y_ = std::move(y);
    const Eigen::MatrixXd k = gram_matrix(kernel, m.x_);
    double noise = kernel.noise_variance;
    while (true) {
      Eigen::MatrixXd kn = k;
      kn.diagonal().array() += noise;
      m.chol_.compute(kn);
      if (m.chol_.info() == Eigen::Success) break;
      require(noise < kMaxJitter, ErrorKind::ill_conditioned,
              "Gram matrix not positive definite with jitter " + std::to_string(noise));
      noise = std::min(kMaxJitter, std::max(noise, kNoiseFloor) * 10.0);
    }
    kernel.noise_variance = noise;
    m.kernel_ = std::move(kernel);
    m.alpha_ = m.chol_.solve(m.y_ - m.mean_.evaluate(m.x_));
    return m;
  }

  const KernelParams& kernel() const { return kernel_; }
  const MeanFunction& mean() const { return mean_; }
  FeatureMode feature_mode() const { return features_; }
  const Eigen::MatrixXd& train_inputs() const { return x_; }
  const Eigen::VectorXd& train_targets() const { return y_; }
  const Eigen::VectorXd& solve_vector() const { return alpha_; }
  Eigen::MatrixXd cholesky_factor() const { return chol_.matrixL(); }
  Eigen::Index dim() const { return x_.cols(); }

  /// Posterior mean and variance at each row of `x`.
  std::vector<AngleGaussian> predict(const Eigen::MatrixXd& x) const {
    require(x.cols() == dim(), ErrorKind::argument,
            "predict: input dimension " + std::to_string(x.cols()) + ", model expects " + std::to_string(dim()));
    const Eigen::MatrixXd ks = cross_covariance(kernel_, x_, x);  // L x m
    const Eigen::VectorXd mu = mean_.evaluate(x) + ks.transpose() * alpha_;
    const Eigen::MatrixXd v = chol_.matrixL().solve(ks);
    const double prior = kernel_.amplitude * kernel_.amplitude + kernel_.noise_variance;
    std::vector<AngleGaussian> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double var = prior - v.col(i).squaredNorm();
      out[static_cast<std::size_t>(i)] = {mu(i), std::max(var, std::numeric_limits<double>::min())};
    }
    return out;
  }

  AngleGaussian predict(const Eigen::VectorXd& x) const { return predict(Eigen::MatrixXd(x.transpose())).front(); }

 private:
  KernelParams kernel_;
  MeanFunction mean_;
  FeatureMode features_ = FeatureMode::full6d;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
};

// ---------------------------------------------------------------------------
// Marginal likelihood

/// Packing of hyperparameters in log space: [log sf, log l..., log(s2 - floor)].
struct HyperVector {
  static Eigen::VectorXd pack(const KernelParams& p) {
    Eigen::VectorXd v(p.length_scales.size() + 2);
    v(0) = std::log(p.amplitude);
    v.segment(1, p.length_scales.size()) = p.length_scales.array().log().matrix();
    v(v.size() - 1) = std::log(std::max(p.noise_variance - kNoiseFloor, 1e-300));
    return v;
  }
  static KernelParams unpack(const Eigen::VectorXd& v) {
    KernelParams p;
    p.amplitude = std::exp(v(0));
    p.length_scales = v.segment(1, v.size() - 2).array().exp().matrix();
    p.noise_variance = kNoiseFloor + std::exp(v(v.size() - 1));
    return p;
  }
};

struct LikelihoodResult {
  double log_likelihood = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd gradient;  // w.r.t. HyperVector entries
  Eigen::VectorXd mean_coefficients;  // profiled [w0, w...] for constant/linear
};

/// Log marginal likelihood with the constant/linear mean profiled out by GLS.
/// Returns -inf when the Gram matrix cannot be factored.
inline LikelihoodResult log_marginal_likelihood(const KernelParams& p, MeanKind mean, const Eigen::MatrixXd& x,
                                                const Eigen::VectorXd& y, bool with_gradient = true) {
  LikelihoodResult res;
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd kf = gram_matrix(p, x);
  Eigen::MatrixXd k = kf;
  k.diagonal().array() += p.noise_variance;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return res;

  Eigen::VectorXd r = y;
  if (mean == MeanKind::constant || mean == MeanKind::linear) {
    const Eigen::MatrixXd h = mean_basis(mean, x);
    const Eigen::MatrixXd kih = llt.solve(h);
    Eigen::LDLT<Eigen::MatrixXd> normal(h.transpose() * kih);
    if (normal.info() != Eigen::Success) return res;
    res.mean_coefficients = normal.solve(kih.transpose() * y);
    if (!res.mean_coefficients.allFinite()) return res;
    r = y - h * res.mean_coefficients;
  }
  const Eigen::VectorXd alpha = llt.solve(r);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  res.log_likelihood = -0.5 * r.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * kPi);
  if (!std::isfinite(res.log_likelihood)) {
    res.log_likelihood = -std::numeric_limits<double>::infinity();
    return res;
  }
  if (!with_gradient) return res;

  // dL/dtheta = 1/2 tr((alpha alpha^T - K^-1) dK/dtheta); the profiled mean
  // drops out because it is stationary.
  Eigen::MatrixXd w = -llt.solve(Eigen::MatrixXd::Identity(n, n));
  w.noalias() += alpha * alpha.transpose();
  const Eigen::MatrixXd wk = w.cwiseProduct(kf);
  const Eigen::Index nl = p.length_scales.size();
  res.gradient.resize(nl + 2);
  res.gradient(0) = wk.sum();  // 1/2 tr(W 2 Kf)
  const Eigen::VectorXd l = p.scales(x.cols());
  if (nl == 1) {
    double acc = 0.0;
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
      const Eigen::VectorXd c = x.col(d) / l(d);
      for (Eigen::Index j = 0; j < n; ++j) {
        acc += (wk.col(j).array() * (c.array() - c(j)).square()).sum();
      }
    }
    res.gradient(1) = 0.5 * acc;
  } else {
    for (Eigen::Index d = 0; d < nl; ++d) {
      const Eigen::VectorXd c = x.col(d) / l(d);
      double acc = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        acc += (wk.col(j).array() * (c.array() - c(j)).square()).sum();
      }
      res.gradient(1 + d) = 0.5 * acc;
    }
  }
  res.gradient(nl + 1) = 0.5 * (p.noise_variance - kNoiseFloor) * w.trace();
  return res;
}

// ---------------------------------------------------------------------------
// Fitting

struct GprOptions {
  MeanKind mean = MeanKind::zero;
  bool ard = false;
  int restarts = 5;                 // total optimizer starts, the first is heuristic
  std::size_t hyper_rows = 800;     // active set for the likelihood and the posterior (0 = all)
  int max_iterations = 100;
  double tolerance = 1e-6;          // |delta log-likelihood| convergence threshold
  TrainConfig network;              // neural mean training
};

struct GprFitReport {
  std::vector<double> start_log_likelihoods;
  std::vector<double> final_log_likelihoods;
  double best_log_likelihood = -std::numeric_limits<double>::infinity();
  std::size_t hyper_rows = 0;
};

struct GprFit {
  GprModel model;
  GprFitReport report;
};

namespace detail {

inline Eigen::Index evenly_spaced(Eigen::Index n, Eigen::Index k, Eigen::Index j) { return (j * n) / k; }

inline KernelParams heuristic_kernel(const Eigen::MatrixXd& x, const Eigen::VectorXd& r, bool ard) {
  KernelParams p;
  const double var_y = std::max((r.array() - r.mean()).square().mean(), 1e-8);
  p.amplitude = std::sqrt(var_y);
  p.noise_variance = kNoiseFloor + 0.1 * var_y;
  Eigen::VectorXd col_std = ((x.rowwise() - x.colwise().mean()).array().square().colwise().mean().sqrt()).transpose();
  for (Eigen::Index d = 0; d < col_std.size(); ++d) {
    if (!(col_std(d) > 1e-6)) col_std(d) = 1.0;
  }
  if (ard) {
    p.length_scales = col_std;
  } else {
    p.length_scales = Eigen::VectorXd::Constant(1, col_std.norm());
  }
  return p;
}

}  // namespace detail

/// Maximizes the log marginal likelihood over kernel hyperparameters (with
/// the mean profiled) and conditions the final model on the active set.
/// `val_x`/`val_y` are only used to select the neural mean's snapshot.
inline GprFit fit_gpr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GprOptions& opt,
                      std::uint64_t seed, FeatureMode features = FeatureMode::full6d,
                      const Eigen::MatrixXd* val_x = nullptr, const Eigen::VectorXd* val_y = nullptr) {
  require(x.rows() >= 2 && x.rows() == y.size(), ErrorKind::argument, "fit_gpr needs at least 2 training rows");
  require(x.allFinite() && y.allFinite(), ErrorKind::argument, "fit_gpr: non-finite training data");
  require(opt.restarts >= 1, ErrorKind::argument, "fit_gpr: at least one start required");

  MeanFunction mean;
  mean.kind = opt.mean;
  Eigen::VectorXd targets = y;
  MeanKind profiled = opt.mean;
  if (opt.mean == MeanKind::neural) {
    mean.scaler = InputScaler::fit(x);
    const Eigen::MatrixXd sx = mean.scaler.apply(x);
    TrainData tr{sx, y};
    TrainData va = tr;
    if (val_x && val_y && val_x->rows() > 0) va = {mean.scaler.apply(*val_x), *val_y};
    TrainConfig cfg = opt.network;
    cfg.seed = seed;
    auto result = train(make_mlp(static_cast<int>(x.cols()), 1, seed), tr, va, cfg, Loss::mse);
    mean.network = std::move(result.model);
    targets = y - mean.evaluate(x);
    profiled = MeanKind::zero;
  }

  // Subset of data: the likelihood and the posterior share one evenly
  // spaced active set, so the fitted length scales match the density of the
  // points the model is conditioned on.
  Eigen::MatrixXd hx = x;
  Eigen::VectorXd hy = targets;
  Eigen::VectorXd hy_raw = y;
  if (opt.hyper_rows > 0 && static_cast<std::size_t>(x.rows()) > opt.hyper_rows) {
    const auto k = static_cast<Eigen::Index>(opt.hyper_rows);
    hx.resize(k, x.cols());
    hy.resize(k);
    hy_raw.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::Index i = detail::evenly_spaced(x.rows(), k, j);
      hx.row(j) = x.row(i);
      hy(j) = targets(i);
      hy_raw(j) = y(i);
    }
  }

  Eigen::VectorXd residual_for_init = hy;
  if (profiled == MeanKind::constant || profiled == MeanKind::linear) {
    const Eigen::MatrixXd h = mean_basis(profiled, hx);
    residual_for_init = hy - h * h.colPivHouseholderQr().solve(hy);
  }
  const KernelParams init = detail::heuristic_kernel(hx, residual_for_init, opt.ard);
  const Eigen::VectorXd init_vec = HyperVector::pack(init);

  LbfgsOptions lopt;
  lopt.max_iterations = opt.max_iterations;
  lopt.value_tolerance = opt.tolerance;
  lopt.lower = Eigen::VectorXd::Constant(init_vec.size(), -9.0);
  lopt.upper = Eigen::VectorXd::Constant(init_vec.size(), 6.0);
  lopt.lower(init_vec.size() - 1) = -30.0;
  lopt.upper(init_vec.size() - 1) = 2.0;
  lopt.lower(0) = -12.0;
  // Length scales stay within [0.1, 100] x the input spread.
  for (Eigen::Index i = 1; i + 1 < init_vec.size(); ++i) {
    lopt.lower(i) = init_vec(i) + std::log(0.1);
    lopt.upper(i) = init_vec(i) + std::log(100.0);
  }

  auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
    const auto res = log_marginal_likelihood(HyperVector::unpack(v), profiled, hx, hy, true);
    if (!std::isfinite(res.log_likelihood) || !res.gradient.allFinite()) {
      g = Eigen::VectorXd::Zero(v.size());
      return std::numeric_limits<double>::infinity();
    }
    g = -res.gradient;
    return -res.log_likelihood;
  };

  GprFit fit;
  fit.report.hyper_rows = static_cast<std::size_t>(hx.rows());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  Eigen::VectorXd best_vec = init_vec;
  for (int start = 0; start < opt.restarts; ++start) {
    Eigen::VectorXd v0 = init_vec;
    if (start > 0) {
      for (Eigen::Index i = 0; i < v0.size(); ++i) v0(i) += jitter(rng);
      v0 = v0.cwiseMax(lopt.lower).cwiseMin(lopt.upper);
    }
    Eigen::VectorXd g0;
    const double f0 = objective(v0, g0);
    fit.report.start_log_likelihoods.push_back(-f0);
    const auto res = minimize_lbfgs(objective, v0, lopt);
    fit.report.final_log_likelihoods.push_back(-res.value);
    if (-res.value > fit.report.best_log_likelihood) {
      fit.report.best_log_likelihood = -res.value;
      best_vec = res.x;
    }
  }
  require(std::isfinite(fit.report.best_log_likelihood), ErrorKind::optimization,
          "log marginal likelihood is not finite at any start");

  KernelParams best = HyperVector::unpack(best_vec);
  if (profiled == MeanKind::constant || profiled == MeanKind::linear) {
    const auto lik = log_marginal_likelihood(best, profiled, hx, hy, false);
    require(lik.mean_coefficients.size() > 0, ErrorKind::ill_conditioned, "GLS mean estimate failed");
    mean.bias = lik.mean_coefficients(0);
    if (profiled == MeanKind::linear) mean.weights = lik.mean_coefficients.tail(x.cols());
  }
  fit.model = GprModel::condition(best, std::move(mean), features, hx, hy_raw);
  return fit;
}

/// Fits one GPR model for a gaze component on normalized records.
inline GprFit fit_gpr(const std::vector<DriveRecord>& train_records, const std::vector<DriveRecord>& val_records,
                      GazeComponent which, const GprOptions& opt, FeatureMode features, std::uint64_t seed) {
  const Eigen::MatrixXd x = feature_matrix(train_records, features);
  const Eigen::VectorXd y = target_vector(train_records, which);
  const Eigen::MatrixXd vx = feature_matrix(val_records, features);
  const Eigen::VectorXd vy = target_vector(val_records, which);
  return fit_gpr(x, y, opt, seed, features, &vx, &vy);
}

/// Independent horizontal and vertical models.
struct GprGazeModel {
  GprModel horizontal;
  GprModel vertical;

  GazeDistribution predict(const HeadPose& head) const {
    require(horizontal.feature_mode() == vertical.feature_mode(), ErrorKind::argument,
            "gaze models use different feature modes");
    const Eigen::VectorXd x = features(head, horizontal.feature_mode());
    return {horizontal.predict(x), vertical.predict(x)};
  }

  std::vector<GazeDistribution> predict(const std::vector<DriveRecord>& records) const {
    require(horizontal.feature_mode() == vertical.feature_mode(), ErrorKind::argument,
            "gaze models use different feature modes");
    const Eigen::MatrixXd x = feature_matrix(records, horizontal.feature_mode());
    const auto h = horizontal.predict(x);
    const auto v = vertical.predict(x);
    std::vector<GazeDistribution> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) out[i] = {h[i], v[i]};
    return out;
  }
};

inline GazeDistribution predict_gaze(const GprGazeModel& models, const HeadPose& head) {
  return models.predict(head);
}

// ---------------------------------------------------------------------------
// Serialization

inline void to_json(nlohmann::json& j, const GprModel& m) {
  const auto& k = m.kernel();
  const auto& mean = m.mean();
  j = {{"features", std::string(to_string(m.feature_mode()))},
       {"kernel",
        {{"amplitude", k.amplitude},
         {"length_scales", std::vector<double>(k.length_scales.begin(), k.length_scales.end())},
         {"noise_variance", k.noise_variance}}},
       {"mean", {{"kind", std::string(to_string(mean.kind))}, {"bias", mean.bias}}},
       {"rows", m.train_inputs().rows()},
       {"cols", m.train_inputs().cols()},
       {"inputs", std::vector<double>(m.train_inputs().data(), m.train_inputs().data() + m.train_inputs().size())},
       {"targets", std::vector<double>(m.train_targets().begin(), m.train_targets().end())}};
  if (mean.kind == MeanKind::linear) j["mean"]["weights"] = std::vector<double>(mean.weights.begin(), mean.weights.end());
  if (mean.kind == MeanKind::neural) {
    j["mean"]["network"] = mean.network;
    j["mean"]["scaler"] = mean.scaler;
  }
}

inline void from_json(const nlohmann::json& j, GprModel& m) {
  auto features = parse_feature_mode(j.at("features").get<std::string>());
  require(features.has_value(), ErrorKind::schema, "unknown feature mode in gpr model");
  KernelParams k;
  k.amplitude = j.at("kernel").at("amplitude").get<double>();
  const auto ls = j.at("kernel").at("length_scales").get<std::vector<double>>();
  k.length_scales = Eigen::Map<const Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
  k.noise_variance = j.at("kernel").at("noise_variance").get<double>();
  MeanFunction mean;
  auto kind = parse_mean_kind(j.at("mean").at("kind").get<std::string>());
  require(kind.has_value(), ErrorKind::schema, "unknown mean kind in gpr model");
  mean.kind = *kind;
  mean.bias = j.at("mean").at("bias").get<double>();
  if (mean.kind == MeanKind::linear) {
    const auto w = j.at("mean").at("weights").get<std::vector<double>>();
    mean.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  }
  if (mean.kind == MeanKind::neural) {
    mean.network = j.at("mean").at("network").get<MlpModel>();
    mean.scaler = j.at("mean").at("scaler").get<InputScaler>();
  }
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto xs = j.at("inputs").get<std::vector<double>>();
  const auto ys = j.at("targets").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(xs.size()) == rows * cols && static_cast<Eigen::Index>(ys.size()) == rows &&
              cols == feature_dim(*features),
          ErrorKind::schema, "gpr model training data shape mismatch");
  m = GprModel::condition(k, std::move(mean), *features, Eigen::Map<const Eigen::MatrixXd>(xs.data(), rows, cols),
                          Eigen::Map<const Eigen::VectorXd>(ys.data(), rows));
}

}  // namespace gazemap
