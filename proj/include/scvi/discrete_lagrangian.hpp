#pragma once

#include <functional>

#include <Eigen/Dense>

namespace scvi {

/// Per-step values and partials of a discrete Lagrangian L_j and the discrete
/// noise Hamiltonians H_k^j, all as functions of (q_j, q_{j+1}, s_j, s_{j+1}).
///
/// Naming: the "j" suffix means the first slot (q_j or s_j), "j1" the second
/// slot (q_{j+1} or s_{j+1}).
struct DiscreteLagrangianData {
    double value_L = 0.0;
    Eigen::VectorXd value_Hk;  ///< length m

    Eigen::VectorXd dL_dqj;   ///< length n
    Eigen::VectorXd dL_dqj1;  ///< length n
    double dL_dsj = 0.0;
    double dL_dsj1 = 0.0;

    Eigen::MatrixXd dHk_dqj;   ///< m x n
    Eigen::MatrixXd dHk_dqj1;  ///< m x n
    Eigen::VectorXd dHk_dsj;   ///< length m
    Eigen::VectorXd dHk_dsj1;  ///< length m

    static DiscreteLagrangianData zero(int n, int m);
};

/// One-step quadrature of a continuous Lagrangian together with discrete noise
/// Hamiltonians. Deliberately has no momentum arguments: every discretization
/// shipped here closes in (q, s) alone, which is what makes the one-step solve
/// an (n+1)-dimensional system.
struct DiscreteLagrangian {
    int n = 1;
    int m = 0;
    bool p_independent = true;

    /// eval(q_j, q_{j+1}, s_j, s_{j+1}, h, t_j)
    std::function<DiscreteLagrangianData(const Eigen::VectorXd&, const Eigen::VectorXd&, double,
                                         double, double, double)>
        eval;
};

}  // namespace scvi
