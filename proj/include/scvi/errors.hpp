#pragma once

#include <stdexcept>
#include <string>

namespace scvi {

/// Failure of a nonlinear one-step solve: Newton non-convergence, a complex
/// root of a scalar sub-equation, or a non-finite iterate.
class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& what, int iterations, double residual)
        : std::runtime_error(what), iterations_(iterations), residual_(residual) {}

    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    int iterations_ = 0;
    double residual_ = 0.0;
};

}  // namespace scvi
