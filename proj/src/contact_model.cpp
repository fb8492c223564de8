#include "scvi/contact_model.hpp"

#include <stdexcept>

namespace scvi {

double ContactModel::hamiltonian(int k, const ContactState& state) const {
    if (k < 0 || k > m) {
        throw std::out_of_range("ContactModel::hamiltonian: index k out of range 0..m");
    }
    return hamiltonian_fns.at(static_cast<std::size_t>(k))(state);
}

GradientTriple ContactModel::gradient(int k, const ContactState& state) const {
    if (k < 0 || k > m) {
        throw std::out_of_range("ContactModel::gradient: index k out of range 0..m");
    }
    return gradient_fns.at(static_cast<std::size_t>(k))(state);
}

}  // namespace scvi
