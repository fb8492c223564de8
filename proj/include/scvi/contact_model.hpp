#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scvi/contact_state.hpp"

namespace scvi {

/// Partials of a Hamiltonian at a state: (dH/dq, dH/dp, dH/ds).
struct GradientTriple {
    Eigen::VectorXd dq;
    Eigen::VectorXd dp;
    double ds = 0.0;
};

/// Continuous-time problem definition: a drift Hamiltonian H0, m noise
/// Hamiltonians H1..Hm, their analytic partials, and the Lagrangian of the
/// drift part. Immutable after construction; safe to share read-only across
/// threads.
struct ContactModel {
    int n = 1;  ///< configuration dimension
    int m = 0;  ///< number of independent Wiener processes

    /// Index 0 holds H0, indices 1..m the noise Hamiltonians.
    std::vector<std::function<double(const ContactState&)>> hamiltonian_fns;
    std::vector<std::function<GradientTriple(const ContactState&)>> gradient_fns;

    /// Continuous Lagrangian L(q, qdot, s, t) of the drift part.
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&, double, double)> lagrangian;

    std::map<std::string, double> params;

    /// H_k(state); k = 0 returns H0.  Throws std::out_of_range for k > m and
    /// propagates std::domain_error from model singularities.
    double hamiltonian(int k, const ContactState& state) const;

    /// Analytic partials of H_k at the state.
    GradientTriple gradient(int k, const ContactState& state) const;
};

}  // namespace scvi
