#include "scvi/wiener_path.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "scvi/normal_stream.hpp"

namespace scvi {

WienerPath::WienerPath(std::uint64_t seed, int m, std::int64_t steps, double h, int level,
                       Eigen::MatrixXd values)
    : seed_(seed), m_(m), steps_(steps), h_(h), level_(level), values_(std::move(values)) {}

WienerPath WienerPath::generate(std::uint64_t seed, int m, std::int64_t steps, double h) {
    if (steps < 0) throw std::invalid_argument("WienerPath::generate: steps must be >= 0");
    if (!(h > 0.0)) throw std::invalid_argument("WienerPath::generate: h must be > 0");
    if (m < 0) throw std::invalid_argument("WienerPath::generate: m must be >= 0");

    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(steps + 1, m);
    const double sqrt_h = std::sqrt(h);
    for (int k = 0; k < m; ++k) {
        for (std::int64_t j = 0; j < steps; ++j) {
            values(j + 1, k) = values(j, k) +
                               sqrt_h * normal_draw(seed, 0, static_cast<std::uint64_t>(j),
                                                    static_cast<std::uint64_t>(k));
        }
    }
    return WienerPath(seed, m, steps, h, 0, std::move(values));
}

WienerPath WienerPath::refine() const {
    const std::int64_t fine_steps = 2 * steps_;
    const double fine_h = 0.5 * h_;
    const double bridge_sd = std::sqrt(0.25 * h_);
    const std::uint64_t child_level = static_cast<std::uint64_t>(level_) + 1;

    Eigen::MatrixXd fine = Eigen::MatrixXd::Zero(fine_steps + 1, m_);
    for (int k = 0; k < m_; ++k) {
        for (std::int64_t j = 0; j < steps_; ++j) {
            fine(2 * j, k) = values_(j, k);
            fine(2 * j + 1, k) = 0.5 * (values_(j, k) + values_(j + 1, k)) +
                                 bridge_sd * normal_draw(seed_, child_level,
                                                         static_cast<std::uint64_t>(j),
                                                         static_cast<std::uint64_t>(k));
        }
        fine(fine_steps, k) = values_(steps_, k);
    }
    return WienerPath(seed_, m_, fine_steps, fine_h, level_ + 1, std::move(fine));
}

Eigen::MatrixXd WienerPath::increments() const {
    return values_.bottomRows(steps_) - values_.topRows(steps_);
}

void WienerPath::write_csv(std::ostream& os) const {
    os << 't';
    for (int k = 0; k < m_; ++k) os << ",W" << (k + 1);
    os << '\n';
    char buf[40];
    for (std::int64_t j = 0; j <= steps_; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", time_at(j));
        os << buf;
        for (int k = 0; k < m_; ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", values_(j, k));
            os << ',' << buf;
        }
        os << '\n';
    }
}

}  // namespace scvi
