#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scvi/contact_state.hpp"
#include "scvi/stepper.hpp"
#include "scvi/wiener_path.hpp"

namespace scvi {

/// Time-indexed sequence of states plus the per-step conformal factors and
/// noise increments that produced it.
struct Trajectory {
    std::vector<ContactState> states;  ///< N+1 entries
    std::vector<double> lambdas;       ///< N entries when has_lambda, else empty
    Eigen::MatrixXd noise;             ///< N x m increments actually consumed
    bool has_lambda = false;
    double h = 0.0;

    long total_newton_iters = 0;
    double max_solver_residual = 0.0;

    std::size_t step_count() const { return states.empty() ? 0 : states.size() - 1; }

    /// CSV with header "t,q1..qn,p1..pn,s,lambda,dW1..dWm"; 17 significant
    /// digits. Row j carries the lambda and increments of the step leaving
    /// t_j; the last row (and every row of a non-contact run) leaves the
    /// lambda cell empty.
    void write_csv(std::ostream& os) const;
};

struct IntegrationResult {
    Trajectory trajectory;
    bool ok = true;
    std::string error;               ///< failing step's message when !ok
    std::ptrdiff_t failed_step = -1; ///< index of the step that threw
};

/// Fold the stepper over the path's increments. Aborts on the first step
/// error, returning the partial trajectory plus the error.
IntegrationResult integrate(const Stepper& stepper, const ContactState& initial,
                            const WienerPath& path);

}  // namespace scvi
