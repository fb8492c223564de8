#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "scvi/errors.hpp"
#include "scvi/euler_maruyama.hpp"
#include "scvi/herglotz.hpp"
#include "scvi/models.hpp"
#include "scvi/trajectory.hpp"
#include "scvi/wiener_path.hpp"

using namespace scvi;

namespace {

const ContactState kStart = ContactState::scalar(0.75, -0.25, 0.08);

Eigen::VectorXd vec1(double v) {
    Eigen::VectorXd x(1);
    x << v;
    return x;
}

DiscreteLagrangian zero_lagrangian(int n, int m) {
    DiscreteLagrangian ld;
    ld.n = n;
    ld.m = m;
    ld.eval = [n, m](const Eigen::VectorXd&, const Eigen::VectorXd&, double, double, double,
                     double) { return DiscreteLagrangianData::zero(n, m); };
    return ld;
}

// Central-difference consistency of the analytic partials carried in
// DiscreteLagrangianData against the values they claim to differentiate.
void check_data_partials(const DiscreteLagrangian& ld, const Eigen::VectorXd& q0,
                         const Eigen::VectorXd& q1, double s0, double s1, double h) {
    const double fd = 1e-6;
    const DiscreteLagrangianData base = ld.eval(q0, q1, s0, s1, h, 0.0);
    auto value_at = [&](double dq0, double dq1, double ds0, double ds1) {
        return ld.eval(q0 + vec1(dq0), q1 + vec1(dq1), s0 + ds0, s1 + ds1, h, 0.0);
    };
    auto check = [&](double analytic, double plus, double minus) {
        const double est = (plus - minus) / (2.0 * fd);
        CHECK(std::abs(analytic - est) <= 1e-6 * std::max(1.0, std::abs(est)));
    };
    check(base.dL_dqj(0), value_at(fd, 0, 0, 0).value_L, value_at(-fd, 0, 0, 0).value_L);
    check(base.dL_dqj1(0), value_at(0, fd, 0, 0).value_L, value_at(0, -fd, 0, 0).value_L);
    check(base.dL_dsj, value_at(0, 0, fd, 0).value_L, value_at(0, 0, -fd, 0).value_L);
    check(base.dL_dsj1, value_at(0, 0, 0, fd).value_L, value_at(0, 0, 0, -fd).value_L);
    check(base.dHk_dqj(0, 0), value_at(fd, 0, 0, 0).value_Hk(0), value_at(-fd, 0, 0, 0).value_Hk(0));
    check(base.dHk_dqj1(0, 0), value_at(0, fd, 0, 0).value_Hk(0),
          value_at(0, -fd, 0, 0).value_Hk(0));
    check(base.dHk_dsj(0), value_at(0, 0, fd, 0).value_Hk(0), value_at(0, 0, -fd, 0).value_Hk(0));
    check(base.dHk_dsj1(0), value_at(0, 0, 0, fd).value_Hk(0), value_at(0, 0, 0, -fd).value_Hk(0));
}

}  // namespace

TEST_CASE("action_update explicit form") {
    DiscreteLagrangianData zero = DiscreteLagrangianData::zero(1, 1);
    CHECK(action_update(zero, 0.1, vec1(0.3), 0.08) == 0.08);

    // additive oscillator, first step with the frozen q-pair and no noise
    const DiscreteLagrangian ld = damped_oscillator_lagrangian({});
    const DiscreteLagrangianData data = ld.eval(vec1(0.75), vec1(0.7215), 0.08, 0.0, 0.1, 0.0);
    CHECK(action_update(data, 0.1, vec1(0.0), 0.08) ==
          doctest::Approx(0.05618469375).epsilon(1e-10));

    // linearity in the noise
    DiscreteLagrangianData two = DiscreteLagrangianData::zero(1, 2);
    two.value_Hk = Eigen::VectorXd::Ones(2);
    Eigen::VectorXd dw(2);
    dw << 0.4, -0.1;
    CHECK(action_update(two, 0.5, dw, 1.0) == doctest::Approx(1.0 - 0.3).epsilon(1e-15));
}

TEST_CASE("D/E quantities for the additive-oscillator discretization") {
    const DiscreteLagrangian ld = damped_oscillator_lagrangian({});
    const double h = 0.1;
    const Eigen::VectorXd dw = vec1(0.17);

    const double qa = 0.6, qb = 0.72, sa = 0.05, sb = 0.09;
    const DEQuantities minus = compute_de_minus(ld, vec1(qa), vec1(qb), sa, sb, h, 0.0, dw);
    // D = (q_j - q_{j-1})/h - (h/2) V'(q_j),  E = 0 for this discretization
    CHECK(minus.D(0) == doctest::Approx((qb - qa) / h - 0.5 * h * qb).epsilon(1e-14));
    CHECK(minus.E == 0.0);

    const DEQuantities plus = compute_de_plus(ld, vec1(qa), vec1(qb), sa, sb, h, 0.0, dw);
    CHECK(plus.D(0) == doctest::Approx(-(qb - qa) / h - 0.5 * h * qa).epsilon(1e-14));
    CHECK(plus.E == doctest::Approx(-0.1 * h).epsilon(1e-15));

    // the paper-facing momenta
    CHECK(momentum_minus(minus)(0) ==
          doctest::Approx((qb - qa) / h - 0.5 * h * qb).epsilon(1e-14));
    CHECK(momentum_plus(plus)(0) ==
          doctest::Approx(((qb - qa) / h + 0.5 * h * qa) / (1.0 - 0.1 * h)).epsilon(1e-14));

    // zero Lagrangian edge
    const DiscreteLagrangian zl = zero_lagrangian(1, 1);
    const DEQuantities z = compute_de_plus(zl, vec1(0.0), vec1(1.0), 0.0, 0.0, h, 0.0, dw);
    CHECK(z.D(0) == 0.0);
    CHECK(z.E == 0.0);

    // consistency as h -> 0 along smooth data: the minus-quantity tends to
    // the velocity (it is the discrete momentum), the plus-quantity to its
    // negative, and E vanishes linearly
    for (double hh : {1e-2, 1e-3, 1e-4}) {
        const double qdot = 0.3;
        const DEQuantities m =
            compute_de_minus(ld, vec1(qa), vec1(qa + hh * qdot), sa, sa, hh, 0.0, vec1(0.0));
        CHECK(std::abs(m.D(0) - qdot) <= 1.0 * hh);
        const DEQuantities pl =
            compute_de_plus(ld, vec1(qa), vec1(qa + hh * qdot), sa, sa, hh, 0.0, vec1(0.0));
        CHECK(std::abs(pl.D(0) + qdot) <= 1.0 * hh);
        CHECK(std::abs(pl.E) <= 0.2 * hh);
    }
}

TEST_CASE("multiplicative discretization matches its momentum denominators") {
    const DiscreteLagrangian ld = multiplicative_oscillator_lagrangian({});
    const double h = 0.1, alpha = 0.1;
    const DEQuantities plus =
        compute_de_plus(ld, vec1(0.3), vec1(0.35), 0.4, 0.5, h, 0.0, vec1(0.0));
    CHECK(plus.E == doctest::Approx(-0.5 * h * alpha * 0.4).epsilon(1e-15));
    const DEQuantities minus =
        compute_de_minus(ld, vec1(0.3), vec1(0.35), 0.4, 0.5, h, 0.0, vec1(0.0));
    CHECK(minus.E == doctest::Approx(-0.5 * h * alpha * 0.5).epsilon(1e-15));
}

TEST_CASE("momentum maps and degenerate denominators") {
    DEQuantities de;
    de.D = Eigen::VectorXd::Zero(2);
    de.E = 0.3;
    CHECK(momentum_minus(de).isZero(0.0));

    de.D = Eigen::VectorXd(2);
    de.D << 1.0, 2.0;
    de.E = 0.5;
    const Eigen::VectorXd pm = momentum_minus(de);
    CHECK(pm(0) == 2.0);
    CHECK(pm(1) == 4.0);
    const Eigen::VectorXd pp = momentum_plus(de);
    CHECK(pp(0) == doctest::Approx(-1.0 / 1.5).epsilon(1e-15));

    de.E = 1.0 - 1e-13;
    CHECK_THROWS_AS(momentum_minus(de), std::domain_error);
    de.E = -1.0 + 1e-13;
    CHECK_THROWS_AS(momentum_plus(de), std::domain_error);
}

TEST_CASE("conformal factor closed forms") {
    // s-independent data
    DiscreteLagrangianData flat = DiscreteLagrangianData::zero(1, 1);
    CHECK(conformal_factor(flat, 0.1, vec1(0.7)) == 1.0);

    // additive oscillator: lambda = 1 - alpha h for every state and noise draw
    const DiscreteLagrangian ld1 = damped_oscillator_lagrangian({});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const DiscreteLagrangianData d =
            ld1.eval(vec1(u(rng)), vec1(u(rng)), u(rng), u(rng), 0.1, 0.0);
        CHECK(conformal_factor(d, 0.1, vec1(u(rng))) == 1.0 - 0.1 * 0.1);
    }

    // Kepler drag: (1 - beta h/2)/(1 + beta h/2)
    const DiscreteLagrangian ld3 = kepler_drag_lagrangian({});
    const DiscreteLagrangianData d3 = ld3.eval(vec1(0.8), vec1(0.82), 0.1, 0.2, 0.1, 0.0);
    CHECK(conformal_factor(d3, 0.1, vec1(0.4)) ==
          doctest::Approx(0.999000499750125).epsilon(1e-12));
}

TEST_CASE("discrete Lagrangian partials agree with finite differences") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const DiscreteLagrangian lds[3] = {damped_oscillator_lagrangian({}),
                                       multiplicative_oscillator_lagrangian({}),
                                       kepler_drag_lagrangian({})};
    for (int im = 0; im < 3; ++im) {
        for (int i = 0; i < 25; ++i) {
            double qa = u(rng), qb = qa + 0.1 * u(rng);
            if (im == 2) {
                qa = 1.0 + 0.5 * u(rng);
                qb = qa + 0.1 * u(rng);
            }
            check_data_partials(lds[im], vec1(qa), vec1(qb), u(rng), u(rng), 0.1);
        }
    }
}

TEST_CASE("discrete Lagrangian tends to the continuous one along smooth data") {
    const ModelBundle bundle = make_model("damped-oscillator-additive");
    const double q = 0.4, qdot = -0.3, s = 0.6;
    for (double h : {0.1, 0.05, 0.025}) {
        const DiscreteLagrangianData d =
            bundle.lagrangian.eval(vec1(q), vec1(q + h * qdot), s, s, h, 0.0);
        const double mid = bundle.model.lagrangian(vec1(q + 0.5 * h * qdot), vec1(qdot), s, 0.0);
        CHECK(std::abs(d.value_L - mid) <= 2.0 * h);
    }
}

TEST_CASE("generic contact step reproduces the additive-oscillator scheme") {
    const StepResult r = step_contact(damped_oscillator_lagrangian({}), kStart, 0.1, vec1(0.0));
    CHECK(r.next.q(0) == doctest::Approx(0.7215).epsilon(1e-12));
    CHECK(r.next.p(0) == doctest::Approx(-0.321075).epsilon(1e-12));
    CHECK(r.next.s == doctest::Approx(0.05618469375).epsilon(1e-10));
    CHECK(r.lambda == 0.99);
    CHECK(r.residual <= 1e-12);
    CHECK(r.newton_iters <= 5);
}

TEST_CASE("contact step is continuous as h -> 0") {
    // h below ~5e-4 would push the momentum-residual tolerance under the
    // floating-point resolution ulp(q)/h; the solver correctly refuses there
    const DiscreteLagrangian ld = damped_oscillator_lagrangian({});
    for (double h : {1e-2, 1e-3, 5e-4}) {
        const StepResult r = step_contact(ld, kStart, h, vec1(0.0));
        CHECK((r.next.flat() - kStart.flat()).lpNorm<Eigen::Infinity>() <= 10.0 * h);
    }
    const StepResult fixed = step_contact(ld, kStart, 0.0, vec1(0.0));
    CHECK(fixed.next.flat() == kStart.flat());
    CHECK(fixed.lambda == 1.0);
}

TEST_CASE("degenerate system raises instead of fabricating a state") {
    // zero Lagrangian, zero noise Hamiltonians: the momentum-matching rows
    // cannot reproduce a nonzero p
    CHECK_THROWS_AS(step_contact(zero_lagrangian(1, 1), kStart, 0.1, vec1(0.0)), SolveError);
}

TEST_CASE("euler-maruyama step: frozen first step and structure") {
    const ContactModel model = damped_oscillator_model({});
    const ContactState r = step_euler_maruyama(model, kStart, 0.1, vec1(0.0));
    CHECK(r.q(0) == doctest::Approx(0.725).epsilon(1e-14));
    CHECK(r.p(0) == doctest::Approx(-0.3225).epsilon(1e-14));
    CHECK(r.s == doctest::Approx(0.0542).epsilon(1e-14));

    // zero drift/diffusion model: identity map
    ContactModel trivial;
    trivial.n = 1;
    trivial.m = 0;
    trivial.hamiltonian_fns = {[](const ContactState&) { return 0.0; }};
    trivial.gradient_fns = {[](const ContactState&) {
        return GradientTriple{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), 0.0};
    }};
    const ContactState same = step_euler_maruyama(trivial, kStart, 0.1, Eigen::VectorXd());
    CHECK(same.q == kStart.q);
    CHECK(same.p == kStart.p);
    CHECK(same.s == kStart.s);

    // additive noise: the output is affine in dW
    const ContactState a = step_euler_maruyama(model, kStart, 0.1, vec1(0.2));
    const ContactState b = step_euler_maruyama(model, kStart, 0.1, vec1(0.4));
    const ContactState c = step_euler_maruyama(model, kStart, 0.1, vec1(0.6));
    CHECK((c.flat() - b.flat() - (b.flat() - a.flat())).lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("generic EM equals the scheme-specific EM formulas") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const ModelBundle bundles[3] = {make_model("damped-oscillator-additive"),
                                    make_model("damped-multiplicative"),
                                    make_model("kepler-drag")};
    for (int im = 0; im < 3; ++im) {
        const Stepper em_generic = make_em_stepper(bundles[im].model);
        for (int i = 0; i < 200; ++i) {
            const double q = (im == 2) ? 1.0 + 0.5 * u(rng) : u(rng);
            const ContactState x = ContactState::scalar(q, u(rng), u(rng));
            const Eigen::VectorXd dw = vec1(0.3 * u(rng));
            const Eigen::VectorXd a = em_generic.step(x, 0.1, dw).next.flat();
            const Eigen::VectorXd b = bundles[im].em.step(x, 0.1, dw).next.flat();
            CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-13);
        }
    }
}

TEST_CASE("integrate: empty fold and frozen regression") {
    const ModelBundle bundle = make_model("damped-oscillator-additive");

    // zero-step fold: the trajectory is just the initial state
    WienerPath empty = WienerPath::generate(9, 1, 0, 0.1);
    const IntegrationResult res0 = integrate(bundle.contact, kStart, empty);
    CHECK(res0.ok);
    CHECK(res0.trajectory.states.size() == 1);
    CHECK(res0.trajectory.states.front().flat() == kStart.flat());

    // golden regression: s-column of the paper-parameter contact run, seed 42
    WienerPath path = WienerPath::generate(42, 1, 200, 0.1);
    const IntegrationResult res = integrate(bundle.contact, kStart, path);
    REQUIRE(res.ok);

    std::ifstream golden(std::string(SCVI_TEST_DATA_DIR) + "/damped_oscillator_contact_seed42.csv");
    REQUIRE(golden.good());
    std::string line;
    std::getline(golden, line);  // header
    std::size_t row = 0;
    while (std::getline(golden, line)) {
        std::istringstream cells(line);
        std::string cell;
        double s = 0.0;
        for (int c = 0; c <= 3 && std::getline(cells, cell, ','); ++c) {
            if (c == 3) s = std::stod(cell);
        }
        REQUIRE(row < res.trajectory.states.size());
        CHECK(std::abs(res.trajectory.states[row].s - s) <=
              1e-12 * std::max(1.0, std::abs(s)));
        ++row;
    }
    CHECK(row == res.trajectory.states.size());

    // EM and contact diverge visibly while both stay bounded
    const IntegrationResult em = integrate(bundle.em, kStart, path);
    REQUIRE(em.ok);
    double diff = 0.0, bound = 0.0;
    for (std::size_t j = 0; j < res.trajectory.states.size(); ++j) {
        diff = std::max(diff, (res.trajectory.states[j].flat() - em.trajectory.states[j].flat())
                                  .lpNorm<Eigen::Infinity>());
        bound = std::max(bound, res.trajectory.states[j].flat().lpNorm<Eigen::Infinity>());
        bound = std::max(bound, em.trajectory.states[j].flat().lpNorm<Eigen::Infinity>());
    }
    CHECK(diff > 0.01);
    CHECK(bound < 10.0);
}

TEST_CASE("integrate aborts on a failing step and keeps the partial trajectory") {
    const ModelBundle bundle = make_model("kepler-drag");
    WienerPath path = WienerPath::generate(1, 1, 2000, 0.1);
    const IntegrationResult res = integrate(bundle.contact, kStart, path);
    CHECK_FALSE(res.ok);
    CHECK(res.failed_step >= 1);
    CHECK(res.trajectory.step_count() == static_cast<std::size_t>(res.failed_step));
    CHECK_FALSE(res.error.empty());
    CHECK(res.trajectory.noise.rows() == static_cast<Eigen::Index>(res.trajectory.step_count()));
}

TEST_CASE("scheme equivalence: generic solve vs closed forms over random inputs") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uq(-1.2, 1.2);
    std::uniform_real_distribution<double> up(-1.0, 1.0);
    std::uniform_real_distribution<double> us(-1.5, 1.5);
    std::uniform_real_distribution<double> uh(1e-3, 0.2);
    std::normal_distribution<double> normal(0.0, 1.0);
    const SolverOptions opts{};  // default 1e-12: the achievable floor over h in [1e-3, 0.2]

    const ModelBundle b1 = make_model("damped-oscillator-additive");
    const ModelBundle b2 = make_model("damped-multiplicative");
    const ModelBundle b3 = make_model("kepler-drag");

    for (int i = 0; i < 1000; ++i) {
        const double h = uh(rng);
        const Eigen::VectorXd dw = vec1(std::sqrt(h) * normal(rng));

        const ContactState x = ContactState::scalar(uq(rng), up(rng), us(rng));
        const Eigen::VectorXd g1 = step_contact(b1.lagrangian, x, h, dw, opts).next.flat();
        const Eigen::VectorXd c1 = b1.contact.step(x, h, dw).next.flat();
        REQUIRE((g1 - c1).lpNorm<Eigen::Infinity>() <= 1e-12);

        const Eigen::VectorXd g2 = step_contact(b2.lagrangian, x, h, dw, opts).next.flat();
        const Eigen::VectorXd c2 = b2.contact.step(x, h, dw).next.flat();
        REQUIRE((g2 - c2).lpNorm<Eigen::Infinity>() <= 1e-10);

        // Kepler states sampled inside the guarded well-posed region
        const ContactState xk =
            ContactState::scalar(0.6 + 0.7 * (uq(rng) + 1.2) / 2.4, 0.8 * up(rng), us(rng));
        const Eigen::VectorXd g3 = step_contact(b3.lagrangian, xk, h, dw, opts).next.flat();
        const Eigen::VectorXd c3 = b3.contact.step(xk, h, dw).next.flat();
        REQUIRE((g3 - c3).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
}

TEST_CASE("momentum matching and action consistency along trajectories") {
    const ModelBundle bundles[2] = {make_model("damped-oscillator-additive"),
                                    make_model("damped-multiplicative")};
    for (const ModelBundle& bundle : bundles) {
        WienerPath path = WienerPath::generate(5, 1, 200, 0.1);
        const IntegrationResult res = integrate(bundle.contact, kStart, path);
        REQUIRE(res.ok);
        const Eigen::MatrixXd dw = path.increments();
        for (std::size_t j = 0; j < res.trajectory.step_count(); ++j) {
            const ContactState& a = res.trajectory.states[j];
            const ContactState& b = res.trajectory.states[j + 1];
            const Eigen::VectorXd dWj = dw.row(static_cast<Eigen::Index>(j)).transpose();

            // Eq.-style momentum matching: recomputed p^+ equals the incoming p
            const DEQuantities plus =
                compute_de_plus(bundle.lagrangian, a.q, b.q, a.s, b.s, 0.1, a.t, dWj);
            CHECK((momentum_plus(plus) - a.p).lpNorm<Eigen::Infinity>() <= 1e-12);

            // action recursion residual
            const DiscreteLagrangianData data =
                bundle.lagrangian.eval(a.q, b.q, a.s, b.s, 0.1, a.t);
            CHECK(std::abs(b.s - action_update(data, 0.1, dWj, a.s)) <= 1e-12);

            // the recorded lambda is the conformal-factor arithmetic identity
            CHECK(std::abs(res.trajectory.lambdas[j] - conformal_factor(data, 0.1, dWj)) <=
                  1e-14);
        }
    }
}

TEST_CASE("conformal factor is exp of the dissipation sums up to O(h^2)") {
    const ModelBundle bundle = make_model("damped-multiplicative");
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-0.8, 0.8);

    double fitted_c = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
        const double h = pass == 0 ? 0.1 : 0.05;
        double worst_ratio = 0.0;
        for (int i = 0; i < 200; ++i) {
            const ContactState x = ContactState::scalar(u(rng), u(rng), u(rng));
            const Eigen::VectorXd dw = vec1(std::sqrt(h) * u(rng));
            const StepResult r = bundle.contact.step(x, h, dw);
            const DiscreteLagrangianData d =
                bundle.lagrangian.eval(x.q, r.next.q, x.s, r.next.s, h, x.t);
            const double esum =
                h * (d.dL_dsj + d.dL_dsj1) - (d.dHk_dsj + d.dHk_dsj1).dot(dw);
            worst_ratio = std::max(worst_ratio, std::abs(r.lambda - std::exp(esum)) / (h * h));
        }
        if (pass == 0) {
            fitted_c = worst_ratio;  // calibrate C at the coarsest step
        } else {
            CHECK(worst_ratio <= 1.05 * fitted_c);  // must hold at the finer step
        }
    }
}

TEST_CASE("deterministic reduction: dissipation-free scheme is symplectic-like") {
    DampedOscillatorParams p;
    p.alpha = 0.0;
    p.epsilon = 0.0;
    const DiscreteLagrangian ld = damped_oscillator_lagrangian(p);

    ContactState x = ContactState::scalar(0.75, -0.25, 0.0);
    const double h = 0.01;
    const auto energy = [](const ContactState& y) {
        return 0.5 * y.p(0) * y.p(0) + 0.5 * y.q(0) * y.q(0);
    };
    const double e0 = energy(x);
    double first_window = 0.0, last_window = 0.0, max_osc = 0.0;
    const int steps = 10000;
    for (int j = 0; j < steps; ++j) {
        const StepResult r = step_contact(ld, x, h, vec1(0.0));
        CHECK(r.lambda == 1.0);
        x = r.next;
        const double e = energy(x);
        max_osc = std::max(max_osc, std::abs(e - e0));
        if (j < 100) first_window += e;
        if (j >= steps - 100) last_window += e;
    }
    CHECK(max_osc <= 1e-3);                                  // bounded oscillation
    CHECK(std::abs(last_window - first_window) / 100.0 <= 1e-6);  // no secular drift
}
