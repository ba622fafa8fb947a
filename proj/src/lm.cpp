#include "procam/lm.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "procam/error.hpp"

namespace procam {

namespace {
constexpr double kLambdaCeiling = 1e16;
constexpr double kLambdaFloor = 1e-15;
}  // namespace

void LMConfig::validate() const {
  const bool ok = lambda_init > 0.0 && lambda_up > 1.0 && lambda_down > 0.0 &&
                  lambda_down < 1.0 && max_iters > 0 && gradient_tol > 0.0 &&
                  step_tol > 0.0 && residual_tol > 0.0 && jacobian_step > 0.0 &&
                  jacobian_floor > 0.0;
  if (!ok) throw Error(ErrorKind::InvalidArgument, "invalid Levenberg-Marquardt configuration");
}

std::string_view to_string(LMStop stop) {
  switch (stop) {
    case LMStop::ResidualTolerance: return "residual_tolerance";
    case LMStop::GradientTolerance: return "gradient_tolerance";
    case LMStop::StepTolerance: return "step_tolerance";
    case LMStop::NoFurtherDecrease: return "no_further_decrease";
    case LMStop::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

Eigen::MatrixXd numeric_jacobian(const ResidualFn& residuals, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& r0, const LMConfig& config) {
  Eigen::MatrixXd J(r0.size(), x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = std::max(config.jacobian_step * std::abs(x(j)), config.jacobian_floor);
    xp(j) = x(j) + h;
    const double actual = xp(j) - x(j);
    J.col(j) = (residuals(xp) - r0) / actual;
    xp(j) = x(j);
  }
  return J;
}

LMResult levenberg_marquardt(const ResidualFn& residuals, const Eigen::VectorXd& x0,
                             const LMConfig& config) {
  config.validate();
  LMResult out{x0, {}};
  LMDiagnostics& diag = out.diagnostics;

  Eigen::VectorXd x = x0;
  Eigen::VectorXd r = residuals(x);
  ++diag.evaluations;
  if (!r.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "residuals are not finite at the initial point");
  }
  double cost = r.squaredNorm();
  double lambda = config.lambda_init;
  diag.initial_cost = cost;
  diag.accepted_costs.push_back(cost);

  diag.stop = LMStop::MaxIterations;
  while (true) {
    if (cost <= config.residual_tol) {
      diag.stop = LMStop::ResidualTolerance;
      break;
    }
    if (diag.iterations >= config.max_iters) break;

    const Eigen::MatrixXd J = numeric_jacobian(residuals, x, r, config);
    diag.evaluations += static_cast<int>(x.size());
    const Eigen::VectorXd g = J.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() <= config.gradient_tol) {
      diag.stop = LMStop::GradientTolerance;
      break;
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    Eigen::VectorXd scale = JtJ.diagonal();
    const double scale_floor = std::max(scale.maxCoeff(), 1.0) * 1e-12;
    scale = scale.cwiseMax(scale_floor);

    ++diag.iterations;
    bool accepted = false;
    while (lambda <= kLambdaCeiling) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * scale;
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      const Eigen::VectorXd x_new = x + step;
      const Eigen::VectorXd r_new = residuals(x_new);
      ++diag.evaluations;
      const double cost_new = r_new.allFinite() ? r_new.squaredNorm()
                                                : std::numeric_limits<double>::infinity();
      if (step.allFinite() && cost_new < cost) {
        x = x_new;
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda * config.lambda_down, kLambdaFloor);
        diag.last_step_norm = step.norm();
        diag.accepted_costs.push_back(cost);
        accepted = true;
        break;
      }
      lambda *= config.lambda_up;
    }
    if (!accepted) {
      diag.stop = LMStop::NoFurtherDecrease;
      break;
    }
    if (diag.last_step_norm <= config.step_tol * (x.norm() + config.step_tol)) {
      diag.stop = LMStop::StepTolerance;
      break;
    }
  }

  out.x = x;
  diag.final_cost = cost;
  diag.final_lambda = lambda;
  return out;
}

}  // namespace procam
