#include "scvi/diagnostics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "scvi/errors.hpp"
#include "scvi/herglotz.hpp"

namespace scvi {

StepJacobian step_jacobian(const Stepper& stepper, const ContactState& state, double h,
                           const Eigen::VectorXd& dW, double fd_step) {
    const Eigen::Index n = state.dim();
    const Eigen::Index d = 2 * n + 1;
    const Eigen::VectorXd x0 = state.flat();

    StepJacobian out;
    out.J.resize(d, d);
    out.method = "finite-difference";
    out.fd_step = fd_step;

    for (Eigen::Index i = 0; i < d; ++i) {
        const double du = fd_step * (1.0 + std::abs(x0(i)));
        Eigen::VectorXd xp = x0, xm = x0;
        xp(i) += du;
        xm(i) -= du;
        try {
            const Eigen::VectorXd fp =
                stepper.step(ContactState::from_flat(xp, state.t), h, dW).next.flat();
            const Eigen::VectorXd fm =
                stepper.step(ContactState::from_flat(xm, state.t), h, dW).next.flat();
            out.J.col(i) = (fp - fm) / (2.0 * du);
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "step_jacobian: perturbation of coordinate " << i << " failed: " << e.what();
            throw std::runtime_error(msg.str());
        }
    }
    return out;
}

ContactReport contact_residuals(const Stepper& stepper, const Trajectory& traj,
                                const WienerPath& path, double fd_step, const JacobianFn& analytic,
                                double lambda_ref) {
    const std::size_t steps = traj.step_count();
    if (path.steps() < static_cast<std::int64_t>(steps)) {
        throw std::invalid_argument("contact_residuals: path shorter than trajectory");
    }
    const double h = traj.h;
    const Eigen::MatrixXd dw = path.increments();

    ContactReport report;
    report.residuals.reserve(steps);
    report.lambdas.reserve(steps);
    report.lambda_ref = lambda_ref;

    for (std::size_t j = 0; j < steps; ++j) {
        const ContactState& x0 = traj.states[j];
        const ContactState& x1 = traj.states[j + 1];
        const Eigen::VectorXd dWj = dw.row(static_cast<Eigen::Index>(j)).transpose();

        const Eigen::MatrixXd jac =
            analytic ? analytic(x0, h, dWj) : step_jacobian(stepper, x0, h, dWj, fd_step).J;

        const Eigen::VectorXd eta0 = contact_form_at(x0).coeffs;
        const Eigen::VectorXd eta1 = contact_form_at(x1).coeffs;
        const Eigen::VectorXd pulled = jac.transpose() * eta1;

        const double lambda = traj.has_lambda ? traj.lambdas[j] : pulled(2 * x0.dim());
        const double r = (pulled - lambda * eta0).lpNorm<Eigen::Infinity>();

        report.lambdas.push_back(lambda);
        report.residuals.push_back(r);
        if (r > report.max_residual) report.max_residual = r;
    }
    return report;
}

ConformalSeries conformal_compare(const Trajectory& traj, const ContactModel& model,
                                  ConformalMode mode, const DiscreteLagrangian* ld) {
    if (!traj.has_lambda) {
        throw std::invalid_argument("conformal_compare: trajectory has no conformal records");
    }
    if (mode == ConformalMode::Discrete && ld == nullptr) {
        throw std::invalid_argument("conformal_compare: discrete mode needs a DiscreteLagrangian");
    }

    const std::size_t steps = traj.step_count();
    const double h = traj.h;

    ConformalSeries series;
    series.lambda = traj.lambdas;
    series.lambda_ref.reserve(steps);
    series.deviation.reserve(steps);

    for (std::size_t j = 0; j < steps; ++j) {
        const ContactState& x0 = traj.states[j];
        const ContactState& x1 = traj.states[j + 1];
        const Eigen::VectorXd dWj = traj.noise.row(static_cast<Eigen::Index>(j)).transpose();

        double exponent = 0.0;
        if (mode == ConformalMode::Continuous) {
            // dL/ds = -dH0/ds along the trajectory; trapezoid in time,
            // trapezoid-in-state for the Stratonovich noise terms.
            exponent = -0.5 * h * (model.gradient(0, x0).ds + model.gradient(0, x1).ds);
            for (int k = 1; k <= model.m; ++k) {
                exponent -=
                    0.5 * (model.gradient(k, x0).ds + model.gradient(k, x1).ds) * dWj(k - 1);
            }
        } else {
            const DiscreteLagrangianData data = ld->eval(x0.q, x1.q, x0.s, x1.s, h, x0.t);
            exponent = h * (data.dL_dsj + data.dL_dsj1) -
                       (data.dHk_dsj + data.dHk_dsj1).dot(dWj);
        }
        const double ref = std::exp(exponent);
        const double dev = std::abs(traj.lambdas[j] - ref);
        series.lambda_ref.push_back(ref);
        series.deviation.push_back(dev);
        if (dev > series.max_deviation) series.max_deviation = dev;
    }
    return series;
}

double herglotz_terminal_action(const DiscreteLagrangian& ld,
                                const std::vector<Eigen::VectorXd>& qpath, double s0,
                                const Eigen::MatrixXd& dW, double h, double tol) {
    if (qpath.size() < 2) {
        throw std::invalid_argument("herglotz_terminal_action: need at least one step");
    }
    const std::size_t steps = qpath.size() - 1;
    if (dW.rows() < static_cast<Eigen::Index>(steps)) {
        throw std::invalid_argument("herglotz_terminal_action: not enough noise rows");
    }

    double s = s0;
    for (std::size_t j = 0; j < steps; ++j) {
        const Eigen::VectorXd dWj = dW.row(static_cast<Eigen::Index>(j)).transpose();
        const double t = h * static_cast<double>(j);

        // Solve s_next - s - h L_j + sum H_k^j dW = 0 for s_next (scalar
        // Newton; the analytic s_{j+1}-partials give the derivative).
        DiscreteLagrangianData data = ld.eval(qpath[j], qpath[j + 1], s, s, h, t);
        double s_next = action_update(data, h, dWj, s);
        double f;
        for (int it = 0;; ++it) {
            data = ld.eval(qpath[j], qpath[j + 1], s, s_next, h, t);
            f = s_next - action_update(data, h, dWj, s);
            if (std::abs(f) <= tol) break;
            if (it >= 100) {
                throw SolveError("herglotz_terminal_action: recursion solve stalled", it,
                                 std::abs(f));
            }
            const double fp = 1.0 - h * data.dL_dsj1 + data.dHk_dsj1.dot(dWj);
            if (std::abs(fp) < 1e-12) {
                throw std::domain_error("herglotz_terminal_action: degenerate recursion slope");
            }
            s_next -= f / fp;
        }
        s = s_next;
    }
    return s;
}

double criticality_residual(const DiscreteLagrangian& ld, const Trajectory& traj,
                            const WienerPath& path, int j, double fd_step) {
    const int steps = static_cast<int>(traj.step_count());
    if (j < 1 || j > steps - 1) {
        throw std::out_of_range("criticality_residual: j must lie in 1..N-1");
    }
    if (!ld.p_independent) {
        throw std::invalid_argument(
            "criticality_residual: requires a momentum-independent discrete Lagrangian");
    }

    std::vector<Eigen::VectorXd> qpath;
    qpath.reserve(traj.states.size());
    for (const ContactState& x : traj.states) qpath.push_back(x.q);
    const double s0 = traj.states.front().s;
    const Eigen::MatrixXd dw = path.increments();
    const double h = traj.h;

    double worst = 0.0;
    for (Eigen::Index c = 0; c < qpath[static_cast<std::size_t>(j)].size(); ++c) {
        std::vector<Eigen::VectorXd> qp = qpath;
        qp[static_cast<std::size_t>(j)](c) += fd_step;
        const double sp = herglotz_terminal_action(ld, qp, s0, dw, h);
        qp[static_cast<std::size_t>(j)](c) -= 2.0 * fd_step;
        const double sm = herglotz_terminal_action(ld, qp, s0, dw, h);
        worst = std::max(worst, std::abs((sp - sm) / (2.0 * fd_step)));
    }
    return worst;
}

std::vector<ConvergenceRow> self_convergence(const Stepper& stepper, const ContactState& initial,
                                             std::uint64_t base_seed, double h0,
                                             std::int64_t base_steps, int levels, int n_paths) {
    if (levels < 1) throw std::invalid_argument("self_convergence: levels must be >= 1");
    if (n_paths < 1) throw std::invalid_argument("self_convergence: n_paths must be >= 1");

    std::vector<double> sq_sum(static_cast<std::size_t>(levels), 0.0);
    int valid = 0;
    int failed = 0;

    for (int i = 0; i < n_paths; ++i) {
        std::vector<WienerPath> paths;
        paths.reserve(static_cast<std::size_t>(levels));
        paths.push_back(WienerPath::generate(base_seed + static_cast<std::uint64_t>(i),
                                             stepper.m, base_steps, h0));
        for (int l = 1; l < levels; ++l) paths.push_back(paths.back().refine());

        std::vector<Eigen::VectorXd> terminal;
        terminal.reserve(static_cast<std::size_t>(levels));
        bool ok = true;
        for (int l = 0; l < levels && ok; ++l) {
            IntegrationResult res = integrate(stepper, initial, paths[static_cast<std::size_t>(l)]);
            if (!res.ok) {
                ok = false;
            } else {
                terminal.push_back(res.trajectory.states.back().flat());
            }
        }
        if (!ok) {
            ++failed;
            continue;
        }
        ++valid;
        for (int l = 0; l < levels; ++l) {
            sq_sum[static_cast<std::size_t>(l)] +=
                (terminal[static_cast<std::size_t>(l)] - terminal.back()).squaredNorm();
        }
    }

    std::vector<ConvergenceRow> rows;
    rows.reserve(static_cast<std::size_t>(levels));
    for (int l = 0; l < levels; ++l) {
        ConvergenceRow row;
        row.level = l;
        row.h = h0 / static_cast<double>(std::int64_t{1} << l);
        row.strong_error =
            valid > 0 ? std::sqrt(sq_sum[static_cast<std::size_t>(l)] / valid) : 0.0;
        row.failed_paths = failed;
        rows.push_back(row);
    }
    return rows;
}

double loglog_slope(const std::vector<ConvergenceRow>& rows) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (const ConvergenceRow& row : rows) {
        if (row.strong_error <= 0.0) continue;
        const double x = std::log(row.h);
        const double y = std::log(row.strong_error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < 2) return std::numeric_limits<double>::quiet_NaN();
    return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

EnsembleStats ensemble_norms(const std::vector<ContactState>& states) {
    if (states.empty()) throw std::invalid_argument("ensemble_norms: empty sample");
    const Eigen::Index n = states.front().dim();

    EnsembleStats stats;
    stats.count = states.size();
    double q2 = 0, p2 = 0, s2 = 0;
    for (const ContactState& x : states) {
        if (x.dim() != n) throw std::invalid_argument("ensemble_norms: inhomogeneous dimensions");
        q2 += x.q.squaredNorm();
        p2 += x.p.squaredNorm();
        s2 += x.s * x.s;
    }
    const double inv = 1.0 / static_cast<double>(states.size());
    stats.q_norm = std::sqrt(q2 * inv);
    stats.p_norm = std::sqrt(p2 * inv);
    stats.s_norm = std::sqrt(s2 * inv);
    stats.state_norm = std::sqrt((q2 + p2 + s2) * inv);
    return stats;
}

}  // namespace scvi
