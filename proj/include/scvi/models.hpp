#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scvi/contact_model.hpp"
#include "scvi/discrete_lagrangian.hpp"
#include "scvi/stepper.hpp"

namespace scvi {

/// Scalar potential with first and second derivatives (the second feeds the
/// analytic one-step Jacobian where one exists).
struct Potential {
    std::function<double(double)> value;
    std::function<double(double)> deriv;
    std::function<double(double)> curvature;
};

/// V(q) = q^2 / 2.
Potential quadratic_potential();

/// Damped oscillator with additive noise: H0 = p^2/2 + V(q) + alpha*s,
/// H1 = epsilon.
struct DampedOscillatorParams {
    double alpha = 0.1;
    double epsilon = 0.02;
    Potential potential = quadratic_potential();
};

/// Damped oscillator with multiplicative noise: H0 = p^2/2 + V(q) +
/// alpha*s^2/2, H1 = sin q.
struct MultiplicativeOscillatorParams {
    double alpha = 0.1;
    Potential potential = quadratic_potential();
};

/// Kepler problem with linear drag: H0 = p^2/2 - 1/|q| + beta*s, H1 = gamma*q.
/// Defined on q > q_min; iterates that cross the guard raise a domain error.
struct KeplerDragParams {
    double beta = 0.01;
    double gamma = 0.1;
    double q_min = 1e-8;
};

ContactModel damped_oscillator_model(const DampedOscillatorParams& p);
ContactModel multiplicative_oscillator_model(const MultiplicativeOscillatorParams& p);
ContactModel kepler_drag_model(const KeplerDragParams& p);

/// Midpoint-velocity quadratures of the three Lagrangians, with the discrete
/// noise Hamiltonians evaluated at the step's left endpoint.
DiscreteLagrangian damped_oscillator_lagrangian(const DampedOscillatorParams& p);
DiscreteLagrangian multiplicative_oscillator_lagrangian(const MultiplicativeOscillatorParams& p);
DiscreteLagrangian kepler_drag_lagrangian(const KeplerDragParams& p);

/// Closed-form variational one-step maps (fully explicit for the additive
/// oscillator; scalar quadratic in s for the multiplicative one; 2-d Newton in
/// (q, p) plus a linear s-solve for Kepler drag).
StepResult damped_oscillator_contact_step(const DampedOscillatorParams& p,
                                          const ContactState& state, double h, double dW);
StepResult multiplicative_oscillator_contact_step(const MultiplicativeOscillatorParams& p,
                                                  const ContactState& state, double h, double dW,
                                                  const SolverOptions& opts = {});
StepResult kepler_drag_contact_step(const KeplerDragParams& p, const ContactState& state, double h,
                                    double dW, const SolverOptions& opts = {});

/// Euler-Maruyama one-step maps, written exactly as the scheme displays them.
ContactState damped_oscillator_em_step(const DampedOscillatorParams& p, const ContactState& state,
                                       double h, double dW);
ContactState multiplicative_oscillator_em_step(const MultiplicativeOscillatorParams& p,
                                               const ContactState& state, double h, double dW);
ContactState kepler_drag_em_step(const KeplerDragParams& p, const ContactState& state, double h,
                                 double dW);

/// Analytic one-step Jacobian of the additive-oscillator contact scheme in the
/// flat (q, p, s) coordinates.
Eigen::Matrix3d damped_oscillator_contact_jacobian(const DampedOscillatorParams& p,
                                                   const ContactState& state, double h);

/// Everything the harness needs about one registered model.
struct ModelBundle {
    std::string name;
    ContactModel model;
    DiscreteLagrangian lagrangian;
    Stepper contact;  ///< closed-form variational scheme
    Stepper em;       ///< scheme-specific Euler-Maruyama
    /// Analytic step Jacobian in flat coordinates, when one exists.
    std::function<Eigen::MatrixXd(const ContactState&, double, const Eigen::VectorXd&)>
        analytic_jacobian;
    /// Continuous-time dissipation rate r: the nominal conformal reference is
    /// exp(-r*h) per step.
    double dissipation_rate = 0.0;
};

/// Registered model names for CLI lookup.
std::vector<std::string> model_names();

/// Per-model default parameters (the experiment defaults).
std::map<std::string, double> default_params(const std::string& name);

/// Build a bundle from a registered name and a (possibly partial) parameter
/// map; unspecified entries fall back to defaults. Throws
/// std::invalid_argument for unknown names or unknown parameter keys.
ModelBundle make_model(const std::string& name, const std::map<std::string, double>& params = {});

}  // namespace scvi
