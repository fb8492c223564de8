#pragma once

#include <string>

#include <Eigen/Dense>

#include "scvi/contact_model.hpp"
#include "scvi/contact_state.hpp"
#include "scvi/stepper.hpp"

namespace scvi {

/// One explicit Euler-Maruyama step of the contact Hamiltonian system: drift
/// and diffusion coefficients evaluated at the current state, increments
/// multiplying the diffusion directly.
ContactState step_euler_maruyama(const ContactModel& model, const ContactState& state, double h,
                                 const Eigen::VectorXd& dW);

/// Wrap as a Stepper; records no conformal factor.
Stepper make_em_stepper(ContactModel model, std::string name = "em");

}  // namespace scvi
