#include "esn/optimize.hpp"

#include "esn/error.hpp"

#include <algorithm>
#include <cmath>

namespace esn {

Vec numeric_gradient(const Objective& f, const Vec& x, double rel_step) {
  Vec g(x.size());
  Vec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Mat numeric_hessian(const Objective& f, const Vec& x, double rel_step) {
  const auto n = x.size();
  Vec h(n);
  for (Eigen::Index i = 0; i < n; ++i) h(i) = rel_step * std::max(1.0, std::abs(x(i)));
  const double f0 = f(x);
  Mat H(n, n);
  Vec xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    xp(i) = x(i) + h(i);
    const double fp = f(xp);
    xp(i) = x(i) - h(i);
    const double fm = f(xp);
    xp(i) = x(i);
    H(i, i) = (fp - 2.0 * f0 + fm) / (h(i) * h(i));
    for (Eigen::Index j = 0; j < i; ++j) {
      double acc = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          xp(i) = x(i) + si * h(i);
          xp(j) = x(j) + sj * h(j);
          acc += si * sj * f(xp);
        }
      }
      xp(i) = x(i);
      xp(j) = x(j);
      H(i, j) = H(j, i) = acc / (4.0 * h(i) * h(j));
    }
  }
  return H;
}

OptimizeResult bfgs_maximize(const Objective& f, const Vec& x0, const OptimizeOptions& opts) {
  const auto n = x0.size();
  const Objective neg = [&f](const Vec& x) { return -f(x); };
  OptimizeResult out;
  out.x = x0;
  double fx = neg(x0);
  if (!std::isfinite(fx)) throw NumericalError("bfgs_maximize: objective not finite at the start point");
  Vec g = numeric_gradient(neg, out.x);
  Mat Hinv = Mat::Identity(n, n);
  for (int it = 0; it < opts.max_iterations; ++it) {
    out.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() <= opts.gradient_tol * (1.0 + std::abs(fx))) {
      out.converged = true;
      break;
    }
    Vec dir = -Hinv * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      Hinv.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    Vec x_new;
    double f_new = 0.0;
    bool found = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = out.x + step * dir;
      f_new = neg(x_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        found = true;
        break;
      }
      step *= 0.5;
    }
    if (!found) {
      // No descent along a reset direction either: treat as converged when the
      // gradient is at the noise level of the numerical differences.
      out.converged = g.lpNorm<Eigen::Infinity>() <= 1e-3 * (1.0 + std::abs(fx));
      break;
    }
    const Vec g_new = numeric_gradient(neg, x_new);
    const Vec s = x_new - out.x;
    const Vec y = g_new - g;
    const double sy = s.dot(y);
    const double change = std::abs(fx - f_new) / (1.0 + std::abs(fx));
    out.x = x_new;
    fx = f_new;
    g = g_new;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (it == 0) Hinv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Mat I = Mat::Identity(n, n);
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if (change < opts.value_tol && g.lpNorm<Eigen::Infinity>() <= 1e-3 * (1.0 + std::abs(fx))) {
      out.converged = true;
      break;
    }
  }
  out.value = -fx;
  return out;
}

}  // namespace esn
