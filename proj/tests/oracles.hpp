#pragma once

// Brute-force reference computations for small finite fields. These avoid
// Gaussian elimination entirely so they can check the library's elimination
// based routines independently.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "rankderiv/matrix.hpp"

namespace oracle {

using rankderiv::Element;
using rankderiv::FieldSpec;
using rankderiv::Matrix;

// All q^len coefficient vectors over F_q, as index tuples.
inline std::vector<std::vector<std::uint64_t>> all_tuples(std::size_t len, std::uint64_t q) {
    std::vector<std::vector<std::uint64_t>> out;
    std::vector<std::uint64_t> t(len, 0);
    for (;;) {
        out.push_back(t);
        std::size_t i = 0;
        while (i < len && ++t[i] == q) t[i++] = 0;
        if (i == len) break;
    }
    return out;
}

// rank = log_q |row space|, with the row space listed by brute force.
inline std::size_t span_rank(const Matrix& m) {
    const std::uint64_t q = m.field().order();
    std::set<std::string> span;
    for (const auto& coeffs : all_tuples(m.rows(), q)) {
        std::string key;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            Element acc = Element::zero(m.field());
            for (std::size_t i = 0; i < m.rows(); ++i)
                acc += Element::from_index(m.field(), coeffs[i]) * m(i, j);
            key += acc.to_string() + ",";
        }
        span.insert(key);
    }
    std::size_t r = 0;
    for (std::size_t size = 1; size < span.size(); size *= q) ++r;
    return r;
}

// Every n x n matrix over F_q, lexicographic in row-major entries.
inline std::vector<Matrix> all_matrices(std::size_t n, const FieldSpec& F) {
    std::vector<Matrix> out;
    for (const auto& t : all_tuples(n * n, F.order())) {
        Matrix m(n, n, F);
        // all_tuples varies the first slot fastest; reverse for lexicographic order.
        for (std::size_t i = 0; i < n * n; ++i) m(i / n, i % n) = Element::from_index(F, t[n * n - 1 - i]);
        out.push_back(std::move(m));
    }
    return out;
}

inline std::vector<Matrix> brute_rank_k(std::size_t n, std::size_t k, const FieldSpec& F) {
    std::vector<Matrix> out;
    for (auto& m : all_matrices(n, F))
        if (span_rank(m) == k) out.push_back(std::move(m));
    return out;
}

}  // namespace oracle
