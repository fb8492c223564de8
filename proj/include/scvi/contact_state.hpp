#pragma once

#include <Eigen/Dense>

namespace scvi {

/// A point (q, p, s) on the (2n+1)-dimensional contact phase space, plus the
/// current time. Value type; freely copyable between threads.
///
/// Layout convention used everywhere a flat vector or a Jacobian index is
/// needed: (q-block, p-block, s).
struct ContactState {
    Eigen::VectorXd q;
    Eigen::VectorXd p;
    double s = 0.0;
    double t = 0.0;

    ContactState() = default;

    /// Throws std::invalid_argument on dimension mismatch, empty q, or any
    /// non-finite component.
    ContactState(Eigen::VectorXd q_in, Eigen::VectorXd p_in, double s_in, double t_in = 0.0);

    /// One-degree-of-freedom convenience.
    static ContactState scalar(double q, double p, double s, double t = 0.0);

    Eigen::Index dim() const { return q.size(); }

    /// Flat (q, p, s) vector of length 2n+1.
    Eigen::VectorXd flat() const;

    /// Rebuild from a flat (q, p, s) vector, keeping this state's time.
    static ContactState from_flat(const Eigen::VectorXd& x, double t);
};

/// Coefficients of the contact one-form eta = ds - p.dq at a state, ordered
/// (q-block, p-block, s) = (-p, 0, 1).
struct ContactForm {
    Eigen::VectorXd coeffs;
};

ContactForm contact_form_at(const ContactState& state);

}  // namespace scvi
