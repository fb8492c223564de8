#include "scvi/herglotz.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "scvi/errors.hpp"

namespace scvi {

namespace {
constexpr double kDenominatorFloor = 1e-12;
}

DiscreteLagrangianData DiscreteLagrangianData::zero(int n, int m) {
    DiscreteLagrangianData d;
    d.value_Hk = Eigen::VectorXd::Zero(m);
    d.dL_dqj = Eigen::VectorXd::Zero(n);
    d.dL_dqj1 = Eigen::VectorXd::Zero(n);
    d.dHk_dqj = Eigen::MatrixXd::Zero(m, n);
    d.dHk_dqj1 = Eigen::MatrixXd::Zero(m, n);
    d.dHk_dsj = Eigen::VectorXd::Zero(m);
    d.dHk_dsj1 = Eigen::VectorXd::Zero(m);
    return d;
}

double action_update(const DiscreteLagrangianData& data, double h, const Eigen::VectorXd& dW,
                     double s_j) {
    return s_j + h * data.value_L - data.value_Hk.dot(dW);
}

DEQuantities compute_de_minus(const DiscreteLagrangianData& data, double h,
                              const Eigen::VectorXd& dW) {
    DEQuantities de;
    de.D = h * data.dL_dqj1 - data.dHk_dqj1.transpose() * dW;
    de.E = h * data.dL_dsj1 - data.dHk_dsj1.dot(dW);
    return de;
}

DEQuantities compute_de_plus(const DiscreteLagrangianData& data, double h,
                             const Eigen::VectorXd& dW) {
    DEQuantities de;
    de.D = h * data.dL_dqj - data.dHk_dqj.transpose() * dW;
    de.E = h * data.dL_dsj - data.dHk_dsj.dot(dW);
    return de;
}

DEQuantities compute_de_minus(const DiscreteLagrangian& ld, const Eigen::VectorXd& q_prev,
                              const Eigen::VectorXd& q, double s_prev, double s, double h,
                              double t_prev, const Eigen::VectorXd& dW) {
    return compute_de_minus(ld.eval(q_prev, q, s_prev, s, h, t_prev), h, dW);
}

DEQuantities compute_de_plus(const DiscreteLagrangian& ld, const Eigen::VectorXd& q,
                             const Eigen::VectorXd& q_next, double s, double s_next, double h,
                             double t, const Eigen::VectorXd& dW) {
    return compute_de_plus(ld.eval(q, q_next, s, s_next, h, t), h, dW);
}

Eigen::VectorXd momentum_minus(const DEQuantities& de) {
    const double denom = 1.0 - de.E;
    if (std::abs(denom) < kDenominatorFloor) {
        throw std::domain_error(
            "momentum_minus: degenerate denominator 1 - E; step size too large for the "
            "dissipation rate");
    }
    return de.D / denom;
}

Eigen::VectorXd momentum_plus(const DEQuantities& de) {
    const double denom = 1.0 + de.E;
    if (std::abs(denom) < kDenominatorFloor) {
        throw std::domain_error(
            "momentum_plus: degenerate denominator 1 + E; step size too large for the "
            "dissipation rate");
    }
    return -de.D / denom;
}

double conformal_factor(const DiscreteLagrangianData& data, double h, const Eigen::VectorXd& dW) {
    const double num = 1.0 + h * data.dL_dsj - data.dHk_dsj.dot(dW);
    const double den = 1.0 - h * data.dL_dsj1 + data.dHk_dsj1.dot(dW);
    if (std::abs(den) < kDenominatorFloor) {
        throw std::domain_error("conformal_factor: degenerate denominator");
    }
    return num / den;
}

namespace {

// Residual of the coupled (q_{j+1}, s_{j+1}) system at unknown u.
Eigen::VectorXd step_residual(const DiscreteLagrangian& ld, const ContactState& state, double h,
                              const Eigen::VectorXd& dW, const Eigen::VectorXd& u) {
    const int n = ld.n;
    const Eigen::VectorXd q_next = u.head(n);
    const double s_next = u(n);
    const DiscreteLagrangianData data = ld.eval(state.q, q_next, state.s, s_next, h, state.t);

    Eigen::VectorXd r(n + 1);
    r.head(n) = momentum_plus(compute_de_plus(data, h, dW)) - state.p;
    r(n) = s_next - state.s - h * data.value_L + data.value_Hk.dot(dW);
    return r;
}

}  // namespace

StepResult step_contact(const DiscreteLagrangian& ld, const ContactState& state, double h,
                        const Eigen::VectorXd& dW, const SolverOptions& opts) {
    if (state.dim() != ld.n) {
        throw std::invalid_argument("step_contact: state dimension does not match Lagrangian");
    }
    if (dW.size() != ld.m) {
        throw std::invalid_argument("step_contact: noise dimension does not match Lagrangian");
    }
    if (h == 0.0) {
        return StepResult{state, 1.0, 0, 0.0};
    }

    const int n = ld.n;
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());

    // Explicit predictor: Euler in q, one pass of the action recursion in s.
    Eigen::VectorXd u(n + 1);
    u.head(n) = state.q + h * state.p;
    {
        const DiscreteLagrangianData d0 = ld.eval(state.q, u.head(n), state.s, state.s, h, state.t);
        u(n) = action_update(d0, h, dW, state.s);
    }

    Eigen::VectorXd r = step_residual(ld, state, h, dW, u);
    double rnorm = r.lpNorm<Eigen::Infinity>();
    int iters = 0;

    while (rnorm > opts.tol) {
        if (iters >= opts.max_iters) {
            throw SolveError("step_contact: Newton iteration did not converge", iters, rnorm);
        }

        // Forward-difference Jacobian of the (n+1)-dimensional residual.
        Eigen::MatrixXd jac(n + 1, n + 1);
        for (int i = 0; i <= n; ++i) {
            const double du = sqrt_eps * (1.0 + std::abs(u(i)));
            Eigen::VectorXd up = u;
            up(i) += du;
            jac.col(i) = (step_residual(ld, state, h, dW, up) - r) / du;
        }

        const Eigen::VectorXd delta = jac.partialPivLu().solve(r);
        if (!delta.allFinite()) {
            throw SolveError("step_contact: non-finite Newton update (singular system)", iters,
                             rnorm);
        }
        u -= delta;
        ++iters;

        r = step_residual(ld, state, h, dW, u);
        rnorm = r.lpNorm<Eigen::Infinity>();
        if (!std::isfinite(rnorm)) {
            throw SolveError("step_contact: non-finite residual", iters, rnorm);
        }
    }

    const Eigen::VectorXd q_next = u.head(n);
    const double s_next = u(n);
    const DiscreteLagrangianData data = ld.eval(state.q, q_next, state.s, s_next, h, state.t);

    StepResult result;
    result.next = ContactState(q_next, momentum_minus(compute_de_minus(data, h, dW)), s_next,
                               state.t + h);
    result.lambda = conformal_factor(data, h, dW);
    result.newton_iters = iters;
    result.residual = rnorm;
    return result;
}

Stepper make_contact_stepper(DiscreteLagrangian ld, SolverOptions opts, std::string name) {
    Stepper stepper;
    stepper.name = std::move(name);
    stepper.n = ld.n;
    stepper.m = ld.m;
    stepper.records_lambda = true;
    stepper.step = [ld = std::move(ld), opts](const ContactState& state, double h,
                                              const Eigen::VectorXd& dW) {
        return step_contact(ld, state, h, dW, opts);
    };
    return stepper;
}

}  // namespace scvi
