#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scvi/contact_model.hpp"
#include "scvi/contact_state.hpp"
#include "scvi/discrete_lagrangian.hpp"
#include "scvi/stepper.hpp"
#include "scvi/trajectory.hpp"
#include "scvi/wiener_path.hpp"

namespace scvi {

/// Optional analytic Jacobian supplier: (state, h, dW) -> (2n+1)x(2n+1).
using JacobianFn =
    std::function<Eigen::MatrixXd(const ContactState&, double, const Eigen::VectorXd&)>;

/// Derivative of a one-step map at fixed noise, in flat (q, p, s) coordinates.
struct StepJacobian {
    Eigen::MatrixXd J;
    std::string method;  ///< "analytic" or "finite-difference"
    double fd_step = 0.0;
};

/// Central finite differences column by column; each of the 2n+1 coordinates
/// is perturbed by +-fd_step*(1+|x_i|) and the step re-run with the same dW.
/// Errors from a perturbed re-step are rethrown with the coordinate index.
StepJacobian step_jacobian(const Stepper& stepper, const ContactState& state, double h,
                           const Eigen::VectorXd& dW, double fd_step = 1e-6);

/// Per-step pullback residuals r_j = || J_j^T eta(x_{j+1}) - lambda_j eta(x_j) ||_inf.
/// lambda_j is the trajectory's record for contact runs; for runs without one
/// it is fitted as the s-component of the pulled-back form.
struct ContactReport {
    std::vector<double> residuals;
    double max_residual = 0.0;
    std::vector<double> lambdas;
    double lambda_ref = std::numeric_limits<double>::quiet_NaN();
};

ContactReport contact_residuals(const Stepper& stepper, const Trajectory& traj,
                                const WienerPath& path, double fd_step = 1e-6,
                                const JacobianFn& analytic = {},
                                double lambda_ref = std::numeric_limits<double>::quiet_NaN());

/// Reference the recorded conformal factors are compared against:
///  - Continuous: exp of the trapezoid rule for the continuous-time rate,
///    integral of dL/ds (= -dH0/ds) minus the Stratonovich noise terms;
///  - Discrete: exp of the same sums built from the discrete Lagrangian data.
enum class ConformalMode { Continuous, Discrete };

struct ConformalSeries {
    std::vector<double> lambda;
    std::vector<double> lambda_ref;
    std::vector<double> deviation;
    double max_deviation = 0.0;
};

ConformalSeries conformal_compare(const Trajectory& traj, const ContactModel& model,
                                  ConformalMode mode, const DiscreteLagrangian* ld = nullptr);

/// Terminal action s_N of a fixed q-path under the discrete action recursion,
/// with fixed noise. Each step's s-value is solved to |residual| <= tol (the
/// recursion may be implicit in s_{j+1}).
double herglotz_terminal_action(const DiscreteLagrangian& ld,
                                const std::vector<Eigen::VectorXd>& qpath, double s0,
                                const Eigen::MatrixXd& dW, double h, double tol = 1e-14);

/// |d s_N / d q_j| by central differences: perturb interior point j of the
/// trajectory's q-path, re-run the recursion, difference. Returns the
/// infinity norm over the components of q_j. Throws std::out_of_range unless
/// 1 <= j <= N-1.
double criticality_residual(const DiscreteLagrangian& ld, const Trajectory& traj,
                            const WienerPath& path, int j, double fd_step = 1e-6);

/// One row of a self-convergence table.
struct ConvergenceRow {
    int level = 0;
    double h = 0.0;
    double strong_error = 0.0;  ///< RMS terminal-state distance to the finest level
    int failed_paths = 0;       ///< seeds excluded at this level set
};

/// Integrate the same underlying noise at `levels` dyadic resolutions (base
/// grid refined by Brownian bridges) for n_paths seeds; strong error at each
/// level is the RMS distance of terminal states to the finest level. Seeds
/// whose integration fails at any level are excluded and counted.
std::vector<ConvergenceRow> self_convergence(const Stepper& stepper, const ContactState& initial,
                                             std::uint64_t base_seed, double h0,
                                             std::int64_t base_steps, int levels, int n_paths);

/// Least-squares slope of log(strong_error) vs log(h), ignoring zero rows.
double loglog_slope(const std::vector<ConvergenceRow>& rows);

/// Sample mean-square norms of an ensemble of states (root of the mean
/// squared Euclidean norm, per block and for the full state).
struct EnsembleStats {
    std::size_t count = 0;
    double q_norm = 0.0;
    double p_norm = 0.0;
    double s_norm = 0.0;
    double state_norm = 0.0;
};

EnsembleStats ensemble_norms(const std::vector<ContactState>& states);

}  // namespace scvi
