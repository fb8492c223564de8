#include "scvi/contact_state.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace scvi {

ContactState::ContactState(Eigen::VectorXd q_in, Eigen::VectorXd p_in, double s_in, double t_in)
    : q(std::move(q_in)), p(std::move(p_in)), s(s_in), t(t_in) {
    if (q.size() < 1) {
        throw std::invalid_argument("ContactState: q must have length >= 1");
    }
    if (q.size() != p.size()) {
        throw std::invalid_argument("ContactState: q and p must have identical length");
    }
    if (!q.allFinite() || !p.allFinite() || !std::isfinite(s) || !std::isfinite(t)) {
        throw std::invalid_argument("ContactState: non-finite component");
    }
}

ContactState ContactState::scalar(double q, double p, double s, double t) {
    Eigen::VectorXd qv(1), pv(1);
    qv << q;
    pv << p;
    return ContactState(std::move(qv), std::move(pv), s, t);
}

Eigen::VectorXd ContactState::flat() const {
    const Eigen::Index n = q.size();
    Eigen::VectorXd x(2 * n + 1);
    x.head(n) = q;
    x.segment(n, n) = p;
    x(2 * n) = s;
    return x;
}

ContactState ContactState::from_flat(const Eigen::VectorXd& x, double t) {
    const Eigen::Index n = (x.size() - 1) / 2;
    return ContactState(x.head(n), x.segment(n, n), x(2 * n), t);
}

ContactForm contact_form_at(const ContactState& state) {
    const Eigen::Index n = state.dim();
    ContactForm form;
    form.coeffs = Eigen::VectorXd::Zero(2 * n + 1);
    form.coeffs.head(n) = -state.p;
    form.coeffs(2 * n) = 1.0;
    return form;
}

}  // namespace scvi
