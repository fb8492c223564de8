#include "scvi/trajectory.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <ostream>
#include <stdexcept>

namespace scvi {

namespace {

void append_g17(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

void Trajectory::write_csv(std::ostream& os) const {
    if (states.empty()) throw std::invalid_argument("Trajectory::write_csv: empty trajectory");
    const Eigen::Index n = states.front().dim();
    const Eigen::Index m = noise.cols();
    const std::size_t steps = step_count();

    os << 't';
    for (Eigen::Index i = 0; i < n; ++i) os << ",q" << (i + 1);
    for (Eigen::Index i = 0; i < n; ++i) os << ",p" << (i + 1);
    os << ",s,lambda";
    for (Eigen::Index k = 0; k < m; ++k) os << ",dW" << (k + 1);
    os << '\n';

    for (std::size_t j = 0; j < states.size(); ++j) {
        const ContactState& x = states[j];
        append_g17(os, x.t);
        for (Eigen::Index i = 0; i < n; ++i) {
            os << ',';
            append_g17(os, x.q(i));
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            os << ',';
            append_g17(os, x.p(i));
        }
        os << ',';
        append_g17(os, x.s);
        os << ',';
        if (has_lambda && j < steps) append_g17(os, lambdas[j]);
        for (Eigen::Index k = 0; k < m; ++k) {
            os << ',';
            if (j < steps) append_g17(os, noise(static_cast<Eigen::Index>(j), k));
        }
        os << '\n';
    }
}

IntegrationResult integrate(const Stepper& stepper, const ContactState& initial,
                            const WienerPath& path) {
    if (stepper.m != path.processes()) {
        throw std::invalid_argument("integrate: stepper noise dimension does not match path");
    }
    if (initial.dim() != stepper.n) {
        throw std::invalid_argument("integrate: initial state dimension does not match stepper");
    }

    const std::int64_t steps = path.steps();
    const double h = path.step_size();
    const Eigen::MatrixXd dw = path.increments();

    IntegrationResult result;
    Trajectory& traj = result.trajectory;
    traj.h = h;
    traj.has_lambda = stepper.records_lambda;
    traj.states.reserve(static_cast<std::size_t>(steps) + 1);
    traj.states.push_back(initial);
    if (traj.has_lambda) traj.lambdas.reserve(static_cast<std::size_t>(steps));
    traj.noise.resize(0, path.processes());

    for (std::int64_t j = 0; j < steps; ++j) {
        const Eigen::VectorXd dWj = dw.row(j).transpose();
        StepResult step;
        try {
            step = stepper.step(traj.states.back(), h, dWj);
        } catch (const std::exception& e) {
            result.ok = false;
            result.error = e.what();
            result.failed_step = static_cast<std::ptrdiff_t>(j);
            break;
        }
        traj.states.push_back(step.next);
        if (traj.has_lambda) traj.lambdas.push_back(step.lambda);
        traj.total_newton_iters += step.newton_iters;
        traj.max_solver_residual = std::max(traj.max_solver_residual, step.residual);
    }

    const auto completed = static_cast<Eigen::Index>(traj.step_count());
    traj.noise = dw.topRows(completed);
    return result;
}

}  // namespace scvi
