#include "scvi/models.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "scvi/errors.hpp"

namespace scvi {

namespace {

void require_scalar(const ContactState& state, const char* who) {
    if (state.dim() != 1) {
        throw std::invalid_argument(std::string(who) + ": model is one-dimensional");
    }
}

Eigen::VectorXd vec1(double v) {
    Eigen::VectorXd x(1);
    x << v;
    return x;
}

void check_kepler_domain(double q, double q_min, const char* who) {
    if (!(q > q_min)) {
        std::ostringstream msg;
        msg << who << ": q = " << q << " crossed the singularity guard q_min = " << q_min;
        throw std::domain_error(msg.str());
    }
}

}  // namespace

Potential quadratic_potential() {
    Potential v;
    v.value = [](double q) { return 0.5 * q * q; };
    v.deriv = [](double q) { return q; };
    v.curvature = [](double) { return 1.0; };
    return v;
}

// ---------------------------------------------------------------------------
// Continuous models
// ---------------------------------------------------------------------------

ContactModel damped_oscillator_model(const DampedOscillatorParams& p) {
    ContactModel model;
    model.n = 1;
    model.m = 1;
    model.params = {{"alpha", p.alpha}, {"epsilon", p.epsilon}};
    const Potential v = p.potential;
    const double alpha = p.alpha;
    const double epsilon = p.epsilon;

    model.hamiltonian_fns = {
        [v, alpha](const ContactState& x) {
            return 0.5 * x.p(0) * x.p(0) + v.value(x.q(0)) + alpha * x.s;
        },
        [epsilon](const ContactState&) { return epsilon; },
    };
    model.gradient_fns = {
        [v, alpha](const ContactState& x) {
            return GradientTriple{vec1(v.deriv(x.q(0))), vec1(x.p(0)), alpha};
        },
        [](const ContactState&) {
            return GradientTriple{vec1(0.0), vec1(0.0), 0.0};
        },
    };
    model.lagrangian = [v, alpha](const Eigen::VectorXd& q, const Eigen::VectorXd& qdot, double s,
                                  double) {
        return 0.5 * qdot(0) * qdot(0) - v.value(q(0)) - alpha * s;
    };
    return model;
}

ContactModel multiplicative_oscillator_model(const MultiplicativeOscillatorParams& p) {
    ContactModel model;
    model.n = 1;
    model.m = 1;
    model.params = {{"alpha", p.alpha}};
    const Potential v = p.potential;
    const double alpha = p.alpha;

    model.hamiltonian_fns = {
        [v, alpha](const ContactState& x) {
            return 0.5 * x.p(0) * x.p(0) + v.value(x.q(0)) + 0.5 * alpha * x.s * x.s;
        },
        [](const ContactState& x) { return std::sin(x.q(0)); },
    };
    model.gradient_fns = {
        [v, alpha](const ContactState& x) {
            return GradientTriple{vec1(v.deriv(x.q(0))), vec1(x.p(0)), alpha * x.s};
        },
        [](const ContactState& x) {
            return GradientTriple{vec1(std::cos(x.q(0))), vec1(0.0), 0.0};
        },
    };
    model.lagrangian = [v, alpha](const Eigen::VectorXd& q, const Eigen::VectorXd& qdot, double s,
                                  double) {
        return 0.5 * qdot(0) * qdot(0) - v.value(q(0)) - 0.5 * alpha * s * s;
    };
    return model;
}

ContactModel kepler_drag_model(const KeplerDragParams& p) {
    ContactModel model;
    model.n = 1;
    model.m = 1;
    model.params = {{"beta", p.beta}, {"gamma", p.gamma}, {"q_min", p.q_min}};
    const double beta = p.beta;
    const double gamma = p.gamma;
    const double q_min = p.q_min;

    model.hamiltonian_fns = {
        [beta, q_min](const ContactState& x) {
            check_kepler_domain(x.q(0), q_min, "kepler_drag H0");
            return 0.5 * x.p(0) * x.p(0) - 1.0 / x.q(0) + beta * x.s;
        },
        [gamma](const ContactState& x) { return gamma * x.q(0); },
    };
    model.gradient_fns = {
        [beta, q_min](const ContactState& x) {
            check_kepler_domain(x.q(0), q_min, "kepler_drag grad H0");
            return GradientTriple{vec1(1.0 / (x.q(0) * x.q(0))), vec1(x.p(0)), beta};
        },
        [gamma](const ContactState&) {
            return GradientTriple{vec1(gamma), vec1(0.0), 0.0};
        },
    };
    model.lagrangian = [beta, q_min](const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                                     double s, double) {
        check_kepler_domain(q(0), q_min, "kepler_drag L");
        return 0.5 * qdot(0) * qdot(0) + 1.0 / q(0) - beta * s;
    };
    return model;
}

// ---------------------------------------------------------------------------
// Discrete Lagrangians
// ---------------------------------------------------------------------------

DiscreteLagrangian damped_oscillator_lagrangian(const DampedOscillatorParams& p) {
    DiscreteLagrangian ld;
    ld.n = 1;
    ld.m = 1;
    const Potential v = p.potential;
    const double alpha = p.alpha;
    const double epsilon = p.epsilon;
    ld.eval = [v, alpha, epsilon](const Eigen::VectorXd& q0, const Eigen::VectorXd& q1, double s0,
                                  double /*s1*/, double h, double /*t0*/) {
        DiscreteLagrangianData d = DiscreteLagrangianData::zero(1, 1);
        const double dq = (q1(0) - q0(0)) / h;
        d.value_L = 0.5 * dq * dq - 0.5 * (v.value(q0(0)) + v.value(q1(0))) - alpha * s0;
        d.dL_dqj(0) = -dq / h - 0.5 * v.deriv(q0(0));
        d.dL_dqj1(0) = dq / h - 0.5 * v.deriv(q1(0));
        d.dL_dsj = -alpha;
        d.dL_dsj1 = 0.0;
        d.value_Hk(0) = epsilon;
        return d;
    };
    return ld;
}

DiscreteLagrangian multiplicative_oscillator_lagrangian(const MultiplicativeOscillatorParams& p) {
    DiscreteLagrangian ld;
    ld.n = 1;
    ld.m = 1;
    const Potential v = p.potential;
    const double alpha = p.alpha;
    ld.eval = [v, alpha](const Eigen::VectorXd& q0, const Eigen::VectorXd& q1, double s0, double s1,
                         double h, double /*t0*/) {
        DiscreteLagrangianData d = DiscreteLagrangianData::zero(1, 1);
        const double dq = (q1(0) - q0(0)) / h;
        d.value_L = 0.5 * dq * dq - 0.5 * (v.value(q0(0)) + v.value(q1(0))) -
                    0.25 * alpha * s0 * s0 - 0.25 * alpha * s1 * s1;
        d.dL_dqj(0) = -dq / h - 0.5 * v.deriv(q0(0));
        d.dL_dqj1(0) = dq / h - 0.5 * v.deriv(q1(0));
        d.dL_dsj = -0.5 * alpha * s0;
        d.dL_dsj1 = -0.5 * alpha * s1;
        d.value_Hk(0) = std::sin(q0(0));
        d.dHk_dqj(0, 0) = std::cos(q0(0));
        return d;
    };
    return ld;
}

DiscreteLagrangian kepler_drag_lagrangian(const KeplerDragParams& p) {
    DiscreteLagrangian ld;
    ld.n = 1;
    ld.m = 1;
    const double beta = p.beta;
    const double gamma = p.gamma;
    const double q_min = p.q_min;
    ld.eval = [beta, gamma, q_min](const Eigen::VectorXd& q0, const Eigen::VectorXd& q1, double s0,
                                   double s1, double h, double /*t0*/) {
        check_kepler_domain(q0(0), q_min, "kepler_drag L_d");
        check_kepler_domain(q1(0), q_min, "kepler_drag L_d");
        DiscreteLagrangianData d = DiscreteLagrangianData::zero(1, 1);
        const double dq = (q1(0) - q0(0)) / h;
        const double u = q0(0) + q1(0);
        d.value_L = 0.5 * dq * dq + 2.0 / u - 0.5 * beta * (s0 + s1);
        d.dL_dqj(0) = -dq / h - 2.0 / (u * u);
        d.dL_dqj1(0) = dq / h - 2.0 / (u * u);
        d.dL_dsj = -0.5 * beta;
        d.dL_dsj1 = -0.5 * beta;
        d.value_Hk(0) = gamma * q0(0);
        d.dHk_dqj(0, 0) = gamma;
        return d;
    };
    return ld;
}

// ---------------------------------------------------------------------------
// Closed-form contact schemes
// ---------------------------------------------------------------------------

StepResult damped_oscillator_contact_step(const DampedOscillatorParams& p,
                                          const ContactState& state, double h, double dW) {
    require_scalar(state, "damped_oscillator_contact_step");
    if (h == 0.0) return StepResult{state, 1.0, 0, 0.0};

    const Potential& v = p.potential;
    const double lambda = 1.0 - p.alpha * h;
    const double q0 = state.q(0), p0 = state.p(0), s0 = state.s;

    const double q1 = q0 + h * lambda * p0 - 0.5 * h * h * v.deriv(q0);
    const double p1 = lambda * p0 - 0.5 * h * (v.deriv(q0) + v.deriv(q1));
    const double s1 = s0 + (q1 - q0) * (q1 - q0) / (2.0 * h) -
                      0.5 * h * (v.value(q0) + v.value(q1)) - p.alpha * h * s0 - p.epsilon * dW;

    return StepResult{ContactState::scalar(q1, p1, s1, state.t + h), lambda, 0, 0.0};
}

StepResult multiplicative_oscillator_contact_step(const MultiplicativeOscillatorParams& p,
                                                  const ContactState& state, double h, double dW,
                                                  const SolverOptions&) {
    require_scalar(state, "multiplicative_oscillator_contact_step");
    if (h == 0.0) return StepResult{state, 1.0, 0, 0.0};

    const Potential& v = p.potential;
    const double q0 = state.q(0), p0 = state.p(0), s0 = state.s;
    const double half_ha = 0.5 * h * p.alpha;

    const double q1 = q0 + h * (1.0 - half_ha * s0) * p0 - h * std::cos(q0) * dW -
                      0.5 * h * h * v.deriv(q0);

    // s-update: (alpha h / 4) s1^2 + s1 - c = 0, root continuous in h.
    const double c = s0 + (q1 - q0) * (q1 - q0) / (2.0 * h) -
                     0.5 * h * (v.value(q0) + v.value(q1)) - 0.25 * p.alpha * h * s0 * s0 -
                     std::sin(q0) * dW;
    const double a = 0.25 * p.alpha * h;
    double s1;
    if (a == 0.0) {
        s1 = c;
    } else {
        const double disc = 1.0 + 4.0 * a * c;
        if (disc < 0.0) {
            throw SolveError(
                "multiplicative_oscillator_contact_step: complex roots of the s-update "
                "quadratic (step size too large)",
                0, disc);
        }
        s1 = 2.0 * c / (1.0 + std::sqrt(disc));
    }

    const double den = 1.0 + half_ha * s1;
    if (std::abs(den) < 1e-12) {
        throw std::domain_error(
            "multiplicative_oscillator_contact_step: degenerate momentum denominator");
    }
    const double p1 =
        ((1.0 - half_ha * s0) * p0 - std::cos(q0) * dW - 0.5 * h * (v.deriv(q0) + v.deriv(q1))) /
        den;
    const double lambda = (1.0 - half_ha * s0) / den;

    // back-substituted s-equation residual, for the record
    const double residual = std::abs(s1 - c + a * s1 * s1);

    return StepResult{ContactState::scalar(q1, p1, s1, state.t + h), lambda, 0, residual};
}

StepResult kepler_drag_contact_step(const KeplerDragParams& p, const ContactState& state, double h,
                                    double dW, const SolverOptions& opts) {
    require_scalar(state, "kepler_drag_contact_step");
    const double q0 = state.q(0), p0 = state.p(0), s0 = state.s;
    check_kepler_domain(q0, p.q_min, "kepler_drag_contact_step");
    if (h == 0.0) return StepResult{state, 1.0, 0, 0.0};

    const double bp = 0.5 * p.beta * h;
    const double rhs_p = (1.0 - bp) * p0 - p.gamma * dW;

    // Coupled (q1, p1) system:
    //   r1 = q1 - q0 - (h/2) [ (1+bp) p1 + rhs_p ]
    //   r2 = (1+bp) p1 - (q1-q0)/h + 2h/(q0+q1)^2
    double q1 = q0 + h * p0;
    double p1 = p0;
    check_kepler_domain(q1, p.q_min, "kepler_drag_contact_step");

    double rnorm = 0.0;
    int iters = 0;
    for (;; ++iters) {
        const double u = q0 + q1;
        const double r1 = q1 - q0 - 0.5 * h * ((1.0 + bp) * p1 + rhs_p);
        const double r2 = (1.0 + bp) * p1 - (q1 - q0) / h + 2.0 * h / (u * u);
        rnorm = std::max(std::abs(r1), std::abs(r2));
        if (rnorm <= opts.tol) break;
        if (iters >= opts.max_iters) {
            throw SolveError("kepler_drag_contact_step: Newton iteration did not converge", iters,
                             rnorm);
        }

        // analytic 2x2 Jacobian
        const double j11 = 1.0;
        const double j12 = -0.5 * h * (1.0 + bp);
        const double j21 = -1.0 / h - 4.0 * h / (u * u * u);
        const double j22 = 1.0 + bp;
        const double det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-300 || !std::isfinite(det)) {
            throw SolveError("kepler_drag_contact_step: singular Newton system", iters, rnorm);
        }
        const double dq = (r1 * j22 - j12 * r2) / det;
        const double dp = (j11 * r2 - j21 * r1) / det;
        q1 -= dq;
        p1 -= dp;
        if (!std::isfinite(q1) || !std::isfinite(p1)) {
            throw SolveError("kepler_drag_contact_step: non-finite Newton iterate", iters, rnorm);
        }
        check_kepler_domain(q1, p.q_min, "kepler_drag_contact_step");
    }

    const double u = q0 + q1;
    const double s1 = (s0 * (1.0 - bp) + (q1 - q0) * (q1 - q0) / (2.0 * h) + 2.0 * h / std::abs(u) -
                       p.gamma * q0 * dW) /
                      (1.0 + bp);
    const double lambda = (1.0 - bp) / (1.0 + bp);

    return StepResult{ContactState::scalar(q1, p1, s1, state.t + h), lambda, iters, rnorm};
}

// ---------------------------------------------------------------------------
// Euler-Maruyama schemes
// ---------------------------------------------------------------------------

ContactState damped_oscillator_em_step(const DampedOscillatorParams& p, const ContactState& state,
                                       double h, double dW) {
    require_scalar(state, "damped_oscillator_em_step");
    const Potential& v = p.potential;
    const double q0 = state.q(0), p0 = state.p(0), s0 = state.s;
    const double q1 = q0 + h * p0;
    const double p1 = p0 - h * (v.deriv(q0) + p.alpha * p0);
    const double s1 = s0 + 0.5 * h * p0 * p0 - h * v.value(q0) - p.alpha * h * s0 - p.epsilon * dW;
    return ContactState::scalar(q1, p1, s1, state.t + h);
}

ContactState multiplicative_oscillator_em_step(const MultiplicativeOscillatorParams& p,
                                               const ContactState& state, double h, double dW) {
    require_scalar(state, "multiplicative_oscillator_em_step");
    const Potential& v = p.potential;
    const double q0 = state.q(0), p0 = state.p(0), s0 = state.s;
    const double q1 = q0 + h * p0;
    const double qdot = (q1 - q0) / h;
    const double p1 = p0 - h * (v.deriv(q0) + p.alpha * s0 * qdot) - std::cos(q0) * dW;
    const double s1 = s0 + h * (0.5 * qdot * qdot - v.value(q0) - 0.5 * p.alpha * s0 * s0) -
                      std::sin(q0) * dW;
    return ContactState::scalar(q1, p1, s1, state.t + h);
}

ContactState kepler_drag_em_step(const KeplerDragParams& p, const ContactState& state, double h,
                                 double dW) {
    require_scalar(state, "kepler_drag_em_step");
    const double q0 = state.q(0), p0 = state.p(0), s0 = state.s;
    check_kepler_domain(q0, p.q_min, "kepler_drag_em_step");
    const double q1 = q0 + h * p0;
    const double p1 = p0 - h * (1.0 / (q0 * q0) + p.beta * p0) - p.gamma * dW;
    const double s1 =
        s0 + h * (0.5 * p0 * p0 + 1.0 / std::abs(q0) - p.beta * s0) - p.gamma * q0 * dW;
    return ContactState::scalar(q1, p1, s1, state.t + h);
}

// ---------------------------------------------------------------------------
// Analytic step Jacobian (additive oscillator)
// ---------------------------------------------------------------------------

Eigen::Matrix3d damped_oscillator_contact_jacobian(const DampedOscillatorParams& p,
                                                   const ContactState& state, double h) {
    require_scalar(state, "damped_oscillator_contact_jacobian");
    const Potential& v = p.potential;
    const double lambda = 1.0 - p.alpha * h;
    const double q0 = state.q(0), p0 = state.p(0);
    const double q1 = q0 + h * lambda * p0 - 0.5 * h * h * v.deriv(q0);
    const double delta = (q1 - q0) / h;

    const double dq1_dq0 = 1.0 - 0.5 * h * h * v.curvature(q0);
    const double dq1_dp0 = h * lambda;

    Eigen::Matrix3d jac;
    jac(0, 0) = dq1_dq0;
    jac(0, 1) = dq1_dp0;
    jac(0, 2) = 0.0;
    jac(1, 0) = -0.5 * h * (v.curvature(q0) + v.curvature(q1) * dq1_dq0);
    jac(1, 1) = lambda - 0.5 * h * v.curvature(q1) * dq1_dp0;
    jac(1, 2) = 0.0;
    jac(2, 0) = delta * (dq1_dq0 - 1.0) - 0.5 * h * (v.deriv(q0) + v.deriv(q1) * dq1_dq0);
    jac(2, 1) = delta * dq1_dp0 - 0.5 * h * v.deriv(q1) * dq1_dp0;
    jac(2, 2) = lambda;
    return jac;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace {

const char* kAdditiveName = "damped-oscillator-additive";
const char* kMultiplicativeName = "damped-multiplicative";
const char* kKeplerName = "kepler-drag";

double scalar_dw(const Eigen::VectorXd& dW) {
    if (dW.size() != 1) throw std::invalid_argument("model stepper: expected one noise increment");
    return dW(0);
}

void merge_params(std::map<std::string, double>& defaults,
                  const std::map<std::string, double>& given, const std::string& name) {
    for (const auto& [key, value] : given) {
        auto it = defaults.find(key);
        if (it == defaults.end()) {
            throw std::invalid_argument("unknown parameter '" + key + "' for model " + name);
        }
        if (!std::isfinite(value)) {
            throw std::invalid_argument("non-finite parameter '" + key + "' for model " + name);
        }
        it->second = value;
    }
}

}  // namespace

std::vector<std::string> model_names() {
    return {kAdditiveName, kMultiplicativeName, kKeplerName};
}

std::map<std::string, double> default_params(const std::string& name) {
    if (name == kAdditiveName) return {{"alpha", 0.1}, {"epsilon", 0.02}};
    if (name == kMultiplicativeName) return {{"alpha", 0.1}};
    if (name == kKeplerName) return {{"beta", 0.01}, {"gamma", 0.1}, {"q_min", 1e-8}};
    std::string known;
    for (const auto& n : model_names()) known += " " + n;
    throw std::invalid_argument("unknown model '" + name + "'; registered models:" + known);
}

ModelBundle make_model(const std::string& name, const std::map<std::string, double>& params) {
    std::map<std::string, double> merged = default_params(name);
    merge_params(merged, params, name);

    ModelBundle bundle;
    bundle.name = name;

    if (name == kAdditiveName) {
        DampedOscillatorParams p;
        p.alpha = merged.at("alpha");
        p.epsilon = merged.at("epsilon");
        if (p.alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
        bundle.model = damped_oscillator_model(p);
        bundle.lagrangian = damped_oscillator_lagrangian(p);
        bundle.contact = Stepper{
            "contact", 1, 1, true,
            [p](const ContactState& x, double h, const Eigen::VectorXd& dW) {
                return damped_oscillator_contact_step(p, x, h, scalar_dw(dW));
            }};
        bundle.em = Stepper{"em", 1, 1, false,
                            [p](const ContactState& x, double h, const Eigen::VectorXd& dW) {
                                StepResult r;
                                r.next = damped_oscillator_em_step(p, x, h, scalar_dw(dW));
                                return r;
                            }};
        bundle.analytic_jacobian = [p](const ContactState& x, double h, const Eigen::VectorXd&) {
            return Eigen::MatrixXd(damped_oscillator_contact_jacobian(p, x, h));
        };
        bundle.dissipation_rate = p.alpha;
    } else if (name == kMultiplicativeName) {
        MultiplicativeOscillatorParams p;
        p.alpha = merged.at("alpha");
        if (p.alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
        bundle.model = multiplicative_oscillator_model(p);
        bundle.lagrangian = multiplicative_oscillator_lagrangian(p);
        bundle.contact = Stepper{
            "contact", 1, 1, true,
            [p](const ContactState& x, double h, const Eigen::VectorXd& dW) {
                return multiplicative_oscillator_contact_step(p, x, h, scalar_dw(dW));
            }};
        bundle.em = Stepper{"em", 1, 1, false,
                            [p](const ContactState& x, double h, const Eigen::VectorXd& dW) {
                                StepResult r;
                                r.next = multiplicative_oscillator_em_step(p, x, h, scalar_dw(dW));
                                return r;
                            }};
        bundle.dissipation_rate = p.alpha;
    } else if (name == kKeplerName) {
        KeplerDragParams p;
        p.beta = merged.at("beta");
        p.gamma = merged.at("gamma");
        p.q_min = merged.at("q_min");
        if (p.beta < 0.0) throw std::invalid_argument("beta must be >= 0");
        if (!(p.q_min > 0.0)) throw std::invalid_argument("q_min must be > 0");
        bundle.model = kepler_drag_model(p);
        bundle.lagrangian = kepler_drag_lagrangian(p);
        bundle.contact =
            Stepper{"contact", 1, 1, true,
                    [p](const ContactState& x, double h, const Eigen::VectorXd& dW) {
                        return kepler_drag_contact_step(p, x, h, scalar_dw(dW));
                    }};
        bundle.em = Stepper{"em", 1, 1, false,
                            [p](const ContactState& x, double h, const Eigen::VectorXd& dW) {
                                StepResult r;
                                r.next = kepler_drag_em_step(p, x, h, scalar_dw(dW));
                                return r;
                            }};
        bundle.dissipation_rate = p.beta;
    }

    return bundle;
}

}  // namespace scvi
