#pragma once

#include <cstdint>
#include <iosfwd>

#include <Eigen/Dense>

namespace scvi {

/// Seeded realization of m independent Wiener processes on a uniform grid.
///
/// Immutable after construction. refine() halves the step by Brownian-bridge
/// conditional sampling: values at shared grid points are reused bit-exactly,
/// so nested-grid self-convergence studies see a single underlying noise
/// realization at every resolution.
class WienerPath {
public:
    /// Generate on the base grid: values(j+1,k) = values(j,k) + sqrt(h)*xi,
    /// xi drawn from stream position (seed, 0, j, k).
    static WienerPath generate(std::uint64_t seed, int m, std::int64_t steps, double h);

    /// Dyadic refinement: even indices copy this path; odd index 2j+1 is
    /// (values(j)+values(j+1))/2 + eta*sqrt(h/4) with eta from stream position
    /// (seed, level+1, j, k).
    WienerPath refine() const;

    /// steps x m matrix of increments W(t_{j+1}) - W(t_j).
    Eigen::MatrixXd increments() const;

    int processes() const { return m_; }
    std::int64_t steps() const { return steps_; }
    double step_size() const { return h_; }
    std::uint64_t seed() const { return seed_; }
    int level() const { return level_; }
    double time_at(std::int64_t j) const { return h_ * static_cast<double>(j); }

    /// (steps+1) x m matrix; row 0 is zero.
    const Eigen::MatrixXd& values() const { return values_; }

    /// CSV with mandatory header "t,W1..Wm".
    void write_csv(std::ostream& os) const;

private:
    WienerPath(std::uint64_t seed, int m, std::int64_t steps, double h, int level,
               Eigen::MatrixXd values);

    std::uint64_t seed_ = 0;
    int m_ = 0;
    std::int64_t steps_ = 0;
    double h_ = 0.0;
    int level_ = 0;
    Eigen::MatrixXd values_;
};

}  // namespace scvi
