#pragma once

#include <Eigen/Core>
#include <functional>
#include <string_view>
#include <vector>

namespace procam {

struct LMConfig {
  double lambda_init = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  int max_iters = 200;
  double gradient_tol = 1e-12;
  /// Relative step: stop when ‖δ‖ ≤ step_tol·(‖x‖ + step_tol).
  double step_tol = 1e-8;
  /// Absolute sum-of-squares cost.
  double residual_tol = 1e-10;
  /// Relative forward-difference step; absolute floor `jacobian_floor`.
  double jacobian_step = 1e-6;
  double jacobian_floor = 1e-8;

  /// Throws InvalidArgument when any field violates its invariant.
  void validate() const;
};

enum class LMStop {
  ResidualTolerance,
  GradientTolerance,
  StepTolerance,
  NoFurtherDecrease,
  MaxIterations,
};

std::string_view to_string(LMStop stop);

struct LMDiagnostics {
  int iterations = 0;
  int evaluations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double final_lambda = 0.0;
  double last_step_norm = 0.0;
  LMStop stop = LMStop::MaxIterations;
  /// Cost after every accepted step, starting with the initial cost.
  std::vector<double> accepted_costs;

  bool converged() const { return stop != LMStop::MaxIterations; }
};

struct LMResult {
  Eigen::VectorXd x;
  LMDiagnostics diagnostics;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Levenberg-Marquardt with a forward-difference Jacobian and Marquardt
/// (diagonal) damping. Never throws on non-convergence: the best iterate is
/// returned with `stop == MaxIterations`. Throws InvalidArgument when the
/// residual is non-finite at x0.
LMResult levenberg_marquardt(const ResidualFn& residuals, const Eigen::VectorXd& x0,
                             const LMConfig& config = {});

/// Forward-difference Jacobian used by the optimizer, exposed for tests.
Eigen::MatrixXd numeric_jacobian(const ResidualFn& residuals, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& r0, const LMConfig& config);

}  // namespace procam
