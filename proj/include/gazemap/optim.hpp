#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace gazemap {

struct LbfgsOptions {
  int max_iterations = 100;
  int memory = 8;
  double value_tolerance = 1e-6;     // stop when |f_k - f_{k+1}| < tol
  double gradient_tolerance = 1e-9;  // stop when |g|_inf < tol
  Eigen::VectorXd lower;             // optional box, projected after each step
  Eigen::VectorXd upper;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

/// Objective returns f(x) and writes its gradient; +inf (or NaN) marks an
/// infeasible point and makes the line search back off.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Limited-memory BFGS with a backtracking Armijo line search. The returned
/// value never exceeds f(x0).
inline LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opt = {}) {
  auto project = [&](Eigen::VectorXd v) {
    if (opt.lower.size() == v.size()) v = v.cwiseMax(opt.lower);
    if (opt.upper.size() == v.size()) v = v.cwiseMin(opt.upper);
    return v;
  };
  LbfgsResult best{project(std::move(x0)), 0.0, 0};
  Eigen::VectorXd g;
  best.value = f(best.x, g);
  if (!std::isfinite(best.value)) return best;

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  for (int it = 0; it < opt.max_iterations; ++it) {
    best.iterations = it + 1;
    if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) break;

    // Two-loop recursion for d = -H g.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    double gamma = 1.0 / std::max(1.0, g.norm());
    if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    Eigen::VectorXd d = -gamma * q;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(d);
      d -= (alpha[k] + beta) * s_hist[k];
    }
    if (!(d.dot(g) < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -g / std::max(1.0, g.norm());
    }

    double step = 1.0;
    Eigen::VectorXd x_new, g_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      x_new = project(best.x + step * d);
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= best.value + 1e-4 * g.dot(x_new - best.x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - best.x;
    const Eigen::VectorXd y = g_new - g;
    const double improvement = best.value - f_new;
    best.x = x_new;
    best.value = f_new;
    g = g_new;
    if (s.dot(y) > 1e-12) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / s.dot(y));
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (improvement < opt.value_tolerance) break;
  }
  return best;
}

}  // namespace gazemap
