#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rankderiv/derivations.hpp"
#include "rankderiv/matrix.hpp"

namespace rankderiv {

/// The rank-s product rule delta(xy) = delta(x) y + x delta(y) written as a
/// homogeneous linear system over F_p in the entries of delta.
///
/// Unknown (d, a, b) is entry (a, b) of delta(domain[d]) and has column
/// index d * n^2 + a * n + b.
struct ConstraintSystem {
    struct Term {
        std::uint32_t column;
        std::uint32_t coeff;  // in [1, p)
    };
    struct Provenance {
        std::uint32_t x;  // index into generators
        std::uint32_t y;
        std::uint16_t row;
        std::uint16_t col;
    };

    std::size_t n = 0;
    std::size_t s = 0;
    FieldSpec field = FieldSpec::rationals();
    std::vector<Matrix> generators;  // rank-s matrices, enumeration order
    std::vector<Matrix> domain;      // generators and their products, by rank then lexicographic
    std::unordered_map<std::string, std::size_t> domain_index;
    std::vector<std::vector<Term>> equations;  // only nonzero rows are stored
    std::vector<Provenance> provenance;        // parallel to equations
    std::size_t block_count = 0;               // one block per ordered pair

    std::size_t unknown_count() const { return domain.size() * n * n; }
};

inline constexpr std::size_t max_unknowns = 1'000'000;
inline constexpr std::size_t max_pair_blocks = 10'000'000;

// Prime field only; 1 <= s <= n/2. ResourceError beyond the size guards.
ConstraintSystem build_constraint_system(std::size_t n, std::size_t s, const FieldSpec& field);

struct SolutionSpace {
    std::size_t dimension = 0;
    std::size_t unknowns = 0;
    std::size_t blocks = 0;
    std::size_t equation_rank = 0;
    // Reduced-echelon basis of the nullspace, each read back as a delta
    // table on the system's domain (domain tag rank-leq(s)).
    std::vector<DeltaMap> basis;
};

SolutionSpace solution_space(std::size_t n, std::size_t s, const FieldSpec& field);
SolutionSpace solve_constraint_system(const ConstraintSystem& system);

// Number of rank-k n x n matrices by exhaustive enumeration.
std::uint64_t rank_count(std::size_t n, std::size_t k, const FieldSpec& field);
// prod_{i<k} (q^n - q^i)^2 / (q^k - q^i), computed independently of enumeration.
std::uint64_t rank_count_formula(std::size_t n, std::size_t k, std::uint64_t q);

}  // namespace rankderiv
