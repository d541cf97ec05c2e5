#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rankderiv/matrix.hpp"

namespace rankderiv {

/// y = y1 * y2 with rank(y1) = rank(y2) = s.
struct RankSFactorization {
    Matrix y1;
    Matrix y2;
    std::size_t s;
};

// Which diagonal slots pad the two factors up to rank s. With
// y = P J_k Q, the standard order pads y1 with slots k+1..s and y2 with
// s+1..2s-k; the mirrored order swaps the two pad sets. Both give a valid
// factorization; the mirrored one serves as an independent second witness.
enum class PadOrder { standard, mirrored };

// Requires 1 <= s <= n and 2s - n <= rank(y) <= s; PreconditionError naming
// the violated bound otherwise.
RankSFactorization factor_rank_s(const Matrix& y, std::size_t s, PadOrder order = PadOrder::standard);

enum class AdaptedCase { case_i, case_ii };

std::string to_string(AdaptedCase c);

/// Factorization x = x1 * x2 of a rank-one x into rank-s factors, adapted to
/// a rank-s partner y so that x2 * y is either rank s (case I) or zero
/// (case II).
struct AdaptedFactorization {
    Matrix x1;
    Matrix x2;
    AdaptedCase case_tag;
};

// Requires rank(x) = 1, rank(y) = s, 1 <= s <= n/2.
AdaptedFactorization adapted_factor(const Matrix& x, const Matrix& y, std::size_t s);

// { n + 1 - 2^i : 0 <= i <= ceil(log2(n/2 + 1)) } in decreasing order; n >= 2.
std::vector<std::size_t> rank_set(std::size_t n);

// Smallest s' in rank_set(n) with 2s' - n <= k <= s'.
std::size_t cover_rank(std::size_t n, std::size_t k);

// Ranks strictly between consecutive members of rank_set(n), ascending.
std::vector<std::size_t> gap_ranks(std::size_t n);

}  // namespace rankderiv
