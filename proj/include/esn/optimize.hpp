#pragma once

#include "esn/linalg.hpp"

#include <functional>

namespace esn {

using Objective = std::function<double(const Vec&)>;

/// Central-difference gradient with step h_i = rel_step * max(1, |x_i|).
Vec numeric_gradient(const Objective& f, const Vec& x, double rel_step = 1e-5);

/// Central second differences of f.
Mat numeric_hessian(const Objective& f, const Vec& x, double rel_step = 1e-4);

struct OptimizeOptions {
  int max_iterations = 500;
  double gradient_tol = 1e-5;  ///< on sup |grad| scaled by 1 + |f|
  double value_tol = 1e-12;    ///< relative change of f between iterations
};

struct OptimizeResult {
  Vec x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Maximizes f by BFGS with numerical gradients and a backtracking Armijo
/// line search. Non-finite trial values are treated as infeasible and the
/// step is shortened.
OptimizeResult bfgs_maximize(const Objective& f, const Vec& x0, const OptimizeOptions& opts = {});

}  // namespace esn
