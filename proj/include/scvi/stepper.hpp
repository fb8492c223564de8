#pragma once

#include <functional>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "scvi/contact_state.hpp"

namespace scvi {

struct SolverOptions {
    int max_iters = 50;
    double tol = 1e-12;  ///< infinity-norm of the nonlinear residual
};

struct StepResult {
    ContactState next;
    double lambda = std::numeric_limits<double>::quiet_NaN();  ///< conformal factor of the step
    int newton_iters = 0;
    double residual = 0.0;  ///< final nonlinear-solve residual (0 for explicit updates)
};

/// A one-step map plus the metadata integrate() needs. Immutable after
/// construction; step is pure given (state, h, dW).
struct Stepper {
    std::string name;
    int n = 1;
    int m = 0;
    bool records_lambda = false;
    std::function<StepResult(const ContactState&, double, const Eigen::VectorXd&)> step;
};

}  // namespace scvi
