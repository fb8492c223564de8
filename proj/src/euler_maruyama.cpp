#include "scvi/euler_maruyama.hpp"

#include <stdexcept>
#include <utility>

namespace scvi {

ContactState step_euler_maruyama(const ContactModel& model, const ContactState& state, double h,
                                 const Eigen::VectorXd& dW) {
    if (state.dim() != model.n) {
        throw std::invalid_argument("step_euler_maruyama: state dimension mismatch");
    }
    if (dW.size() != model.m) {
        throw std::invalid_argument("step_euler_maruyama: noise dimension mismatch");
    }

    const GradientTriple g0 = model.gradient(0, state);
    const double h0 = model.hamiltonian(0, state);

    Eigen::VectorXd q = state.q + h * g0.dp;
    Eigen::VectorXd p = state.p - h * (g0.dq + g0.ds * state.p);
    double s = state.s + h * (state.p.dot(g0.dp) - h0);

    for (int k = 1; k <= model.m; ++k) {
        const GradientTriple gk = model.gradient(k, state);
        const double hk = model.hamiltonian(k, state);
        const double w = dW(k - 1);
        q += gk.dp * w;
        p -= (gk.dq + gk.ds * state.p) * w;
        s += (state.p.dot(gk.dp) - hk) * w;
    }

    return ContactState(std::move(q), std::move(p), s, state.t + h);
}

Stepper make_em_stepper(ContactModel model, std::string name) {
    Stepper stepper;
    stepper.name = std::move(name);
    stepper.n = model.n;
    stepper.m = model.m;
    stepper.records_lambda = false;
    stepper.step = [model = std::move(model)](const ContactState& state, double h,
                                              const Eigen::VectorXd& dW) {
        StepResult result;
        result.next = step_euler_maruyama(model, state, h, dW);
        return result;
    };
    return stepper;
}

}  // namespace scvi
