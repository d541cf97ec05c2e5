#include "rankderiv/rank_factor.hpp"

#include <algorithm>
#include <stdexcept>

#include "rankderiv/errors.hpp"

namespace rankderiv {

namespace {

std::vector<std::size_t> iota_range(std::size_t from, std::size_t to) {
    std::vector<std::size_t> out;
    for (std::size_t i = from; i < to; ++i) out.push_back(i);
    return out;
}

std::vector<std::size_t> concat(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

RankSFactorization factor_rank_s(const Matrix& y, std::size_t s, PadOrder order) {
    const std::size_t n = y.n();
    if (s < 1 || s > n)
        throw PreconditionError("factor_rank_s needs 1 <= s <= n (s = " + std::to_string(s) +
                                ", n = " + std::to_string(n) + ")");
    const RankNormalForm form = rank_normal_form(y);
    const std::size_t k = form.k;
    if (k > s)
        throw PreconditionError("factor_rank_s needs rank(y) <= s (rank = " + std::to_string(k) +
                                ", s = " + std::to_string(s) + ")");
    if (2 * s > n + k)
        throw PreconditionError("factor_rank_s needs 2s - n <= rank(y) (rank = " + std::to_string(k) +
                                ", 2s - n = " + std::to_string(2 * s - n) + ")");

    const FieldSpec& F = y.field();
    const auto shared = iota_range(0, k);
    const auto pad_left = iota_range(k, s);           // slots k+1..s
    const auto pad_right = iota_range(s, 2 * s - k);  // slots s+1..2s-k
    const bool standard = order == PadOrder::standard;
    Matrix y1 = form.P * Matrix::diagonal_ones(n, concat(shared, standard ? pad_left : pad_right), F);
    Matrix y2 = Matrix::diagonal_ones(n, concat(shared, standard ? pad_right : pad_left), F) * form.Q;
    return RankSFactorization{std::move(y1), std::move(y2), s};
}

std::string to_string(AdaptedCase c) { return c == AdaptedCase::case_i ? "case-I" : "case-II"; }

AdaptedFactorization adapted_factor(const Matrix& x, const Matrix& y, std::size_t s) {
    const std::size_t n = x.n();
    if (y.n() != n || !(x.field() == y.field())) throw UsageError("adapted_factor: x and y must share n and field");
    if (s < 1 || 2 * s > n)
        throw PreconditionError("adapted_factor needs 1 <= s <= n/2 (s = " + std::to_string(s) +
                                ", n = " + std::to_string(n) + ")");
    const RankNormalForm fx = rank_normal_form(x);
    if (fx.k != 1) throw PreconditionError("adapted_factor needs rank(x) = 1, got " + std::to_string(fx.k));
    const RankNormalForm fy = rank_normal_form(y);
    if (fy.k != s)
        throw PreconditionError("adapted_factor needs rank(y) = s = " + std::to_string(s) + ", got " +
                                std::to_string(fy.k));

    const FieldSpec& F = x.field();
    // x = P e11 Q, y = R J_s S; everything hinges on M = Q R J_s.
    const Matrix M = fx.Q * fy.P * Matrix::leading_ones(n, s, F);

    bool first_row_zero = true;
    for (std::size_t j = 0; j < n; ++j) first_row_zero = first_row_zero && M(0, j).is_zero();

    if (!first_row_zero) {
        // Greedy: smallest row indices keeping the selected rows of M independent.
        std::vector<std::size_t> selected{0};
        for (std::size_t i = 1; i < n && selected.size() < s; ++i) {
            Matrix rows(selected.size() + 1, n, F);
            for (std::size_t r = 0; r < selected.size(); ++r)
                for (std::size_t j = 0; j < n; ++j) rows(r, j) = M(selected[r], j);
            for (std::size_t j = 0; j < n; ++j) rows(selected.size(), j) = M(i, j);
            if (rank(rows) == selected.size() + 1) selected.push_back(i);
        }
        if (selected.size() != s) throw std::logic_error("adapted_factor: Q R J_s lost rank");

        std::vector<std::size_t> spare_slots{0};
        for (std::size_t i = 1; i < n && spare_slots.size() < s; ++i)
            if (std::find(selected.begin(), selected.end(), i) == selected.end()) spare_slots.push_back(i);

        return AdaptedFactorization{fx.P * Matrix::diagonal_ones(n, spare_slots, F),
                                    Matrix::diagonal_ones(n, selected, F) * fx.Q, AdaptedCase::case_i};
    }

    // Case II: M = [0; G] with G of size (n-1) x s and rank s. H stacks
    // s-1 kernel vectors of G^T, so H G = 0.
    Matrix Gt(s, n - 1, F);
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < s; ++j) Gt(j, i - 1) = M(i, j);
    const auto kernel = nullspace(Gt);
    if (kernel.size() + 1 < s) throw std::logic_error("adapted_factor: kernel of G^T too small");

    Matrix block(n, n, F);
    block(0, 0) = Element::one(F);
    for (std::size_t r = 0; r + 1 < s; ++r)
        for (std::size_t c = 0; c + 1 < n; ++c) block(r + 1, c + 1) = kernel[r][c];

    std::vector<std::size_t> slots{0};
    for (std::size_t i = s; i + 1 < 2 * s; ++i) slots.push_back(i);  // 1-based slots s+1..2s-1
    return AdaptedFactorization{fx.P * Matrix::diagonal_ones(n, slots, F), block * fx.Q, AdaptedCase::case_ii};
}

std::vector<std::size_t> rank_set(std::size_t n) {
    if (n < 2) throw PreconditionError("rank_set needs n >= 2, got " + std::to_string(n));
    // m = ceil(log2(n/2 + 1)) is the least m with 2^(m+1) >= n + 2.
    std::size_t m = 0;
    while ((std::size_t{2} << m) < n + 2) ++m;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i <= m; ++i) out.push_back(n + 1 - (std::size_t{1} << i));
    return out;
}

std::size_t cover_rank(std::size_t n, std::size_t k) {
    if (k > n) throw PreconditionError("cover_rank needs 0 <= k <= n");
    const auto ranks = rank_set(n);
    for (auto it = ranks.rbegin(); it != ranks.rend(); ++it)
        if (*it >= k && 2 * *it <= n + k) return *it;
    throw std::logic_error("cover_rank: no covering rank for n = " + std::to_string(n) + ", k = " + std::to_string(k));
}

std::vector<std::size_t> gap_ranks(std::size_t n) {
    const auto ranks = rank_set(n);
    std::vector<std::size_t> out;
    for (std::size_t i = ranks.back() + 1; i < ranks.front(); ++i)
        if (std::find(ranks.begin(), ranks.end(), i) == ranks.end()) out.push_back(i);
    return out;
}

}  // namespace rankderiv
