#pragma once

#include <string>

#include <Eigen/Dense>

#include "scvi/contact_state.hpp"
#include "scvi/discrete_lagrangian.hpp"
#include "scvi/stepper.hpp"

namespace scvi {

/// The step-local quantities the discrete momenta are built from:
///   D = h dL/dq(slot) - sum_k dHk/dq(slot) . dW
///   E = h dL/ds(slot) - sum_k dHk/ds(slot) . dW
/// "minus" uses the second-slot partials (q_{j+1}, s_{j+1}) of the step's
/// Lagrangian, "plus" the first-slot partials (q_j, s_j).
struct DEQuantities {
    Eigen::VectorXd D;
    double E = 0.0;
};

/// s_{j+1} from the discrete action recursion, in explicit form:
/// s_j + h L_j - sum_k H_k^j dW_k. (L_j itself may depend on s_{j+1}; the
/// implicit solve uses the residual form of the same expression.)
double action_update(const DiscreteLagrangianData& data, double h, const Eigen::VectorXd& dW,
                     double s_j);

DEQuantities compute_de_minus(const DiscreteLagrangianData& data, double h,
                              const Eigen::VectorXd& dW);
DEQuantities compute_de_plus(const DiscreteLagrangianData& data, double h,
                             const Eigen::VectorXd& dW);

/// Slot-explicit forms: evaluate Ld at the given grid arguments first.
/// compute_de_minus takes (q_{j-1}, q_j, s_{j-1}, s_j) and the step-(j-1)
/// increment; compute_de_plus takes (q_j, q_{j+1}, s_j, s_{j+1}) and the
/// step-j increment.
DEQuantities compute_de_minus(const DiscreteLagrangian& ld, const Eigen::VectorXd& q_prev,
                              const Eigen::VectorXd& q, double s_prev, double s, double h,
                              double t_prev, const Eigen::VectorXd& dW);
DEQuantities compute_de_plus(const DiscreteLagrangian& ld, const Eigen::VectorXd& q,
                             const Eigen::VectorXd& q_next, double s, double s_next, double h,
                             double t, const Eigen::VectorXd& dW);

/// p^- = D / (1 - E). Throws std::domain_error when |1 - E| < 1e-12 (step size
/// too large for the dissipation rate).
Eigen::VectorXd momentum_minus(const DEQuantities& de);

/// p^+ = -D / (1 + E). Same degeneracy guard on |1 + E|.
Eigen::VectorXd momentum_plus(const DEQuantities& de);

/// Conformal factor of one step:
///   (1 + h dL/ds_j - sum dHk/ds_j . dW) / (1 - h dL/ds_{j+1} + sum dHk/ds_{j+1} . dW)
double conformal_factor(const DiscreteLagrangianData& data, double h, const Eigen::VectorXd& dW);

/// Variational one-step map. Solves the coupled system in (q_{j+1}, s_{j+1}):
///   momentum matching  p_j = p_j^+        (n equations)
///   action recursion   s_{j+1} - s_j - h L_j + sum_k H_k^j dW_k = 0,
/// by Newton iteration with a forward-difference Jacobian, then recovers
/// p_{j+1} = p_{j+1}^- and the step's conformal factor.
///
/// Initial guess is the explicit predictor q_{j+1} = q_j + h p_j followed by
/// one pass of the action recursion. h == 0 returns the state unchanged with
/// lambda = 1.
///
/// Throws SolveError on non-convergence or a non-finite iterate, and
/// propagates std::domain_error from degenerate denominators or model
/// singularities.
StepResult step_contact(const DiscreteLagrangian& ld, const ContactState& state, double h,
                        const Eigen::VectorXd& dW, const SolverOptions& opts = {});

/// Wrap step_contact as a reusable Stepper.
Stepper make_contact_stepper(DiscreteLagrangian ld, SolverOptions opts = {},
                             std::string name = "contact");

}  // namespace scvi
