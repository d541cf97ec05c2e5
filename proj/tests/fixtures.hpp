#pragma once

#include <cstdint>

#include "rankderiv/derivations.hpp"

namespace fixture {

using rankderiv::CanonicalDerivation;
using rankderiv::Element;
using rankderiv::FieldDerivation;
using rankderiv::FieldSpec;
using rankderiv::Matrix;

// Random (A, mu) with A(0,0) = 0. mu is c * d/dt with random nonzero c on
// function fields and zero otherwise (the only derivation of Q or F_p).
inline CanonicalDerivation random_canonical(std::size_t n, const FieldSpec& F, std::uint64_t seed) {
    rankderiv::Rng rng(seed);
    Matrix A = rankderiv::random_matrix(n, n, F, rng);
    A(0, 0) = Element::zero(F);
    if (!F.is_function_field()) return {A, FieldDerivation::zero(F)};
    Element c = rankderiv::random_element(F, rng);
    while (c.is_zero()) c = rankderiv::random_element(F, rng);
    return {A, FieldDerivation::scaled_ddt(c)};
}

// x -> A x - x A + (mu(x_ij)), written out entry by entry.
inline Matrix reference_apply(const CanonicalDerivation& D, const Matrix& x) {
    const std::size_t n = x.rows();
    const FieldSpec& F = x.field();
    Matrix out(n, n, F);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Element v = D.mu(x(i, j));
            for (std::size_t k = 0; k < n; ++k) v += D.A(i, k) * x(k, j) - x(i, k) * D.A(k, j);
            out(i, j) = v;
        }
    return out;
}

}  // namespace fixture
