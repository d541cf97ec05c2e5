#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rankderiv/errors.hpp"
#include "rankderiv/rank_factor.hpp"

using namespace rankderiv;

namespace {

const FieldSpec Q = FieldSpec::rationals();
const FieldSpec F2 = FieldSpec::prime(2);
const FieldSpec F3 = FieldSpec::prime(3);

Matrix e(std::size_t n, std::size_t i, std::size_t j, const FieldSpec& f = Q) { return Matrix::unit(n, i, j, f); }

void check_factorization(const Matrix& y, std::size_t s, PadOrder order) {
    const auto f = factor_rank_s(y, s, order);
    CHECK(f.s == s);
    CHECK(f.y1 * f.y2 == y);
    CHECK(rank(f.y1) == s);
    CHECK(rank(f.y2) == s);
}

void check_adapted(const Matrix& x, const Matrix& y, std::size_t s) {
    const auto a = adapted_factor(x, y, s);
    CHECK(a.x1 * a.x2 == x);
    CHECK(rank(a.x1) == s);
    CHECK(rank(a.x2) == s);
    const std::size_t r = rank(a.x2 * y);
    CHECK((r == 0 || r == s));
    CHECK((a.case_tag == AdaptedCase::case_i) == (r == s));
}

// Floating-point reference for the exponent bound.
std::size_t ceil_log2_half_plus_one(std::size_t n) {
    return static_cast<std::size_t>(std::ceil(std::log2(0.5 * static_cast<double>(n) + 1.0)));
}

}  // namespace

TEST_CASE("factorization examples") {
    auto f = factor_rank_s(e(4, 0, 0), 2);
    CHECK(f.y1 == e(4, 0, 0) + e(4, 1, 1));
    CHECK(f.y2 == e(4, 0, 0) + e(4, 2, 2));

    auto z = factor_rank_s(Matrix::zero(2, Q), 1);
    CHECK(z.y1 == e(2, 0, 0));
    CHECK(z.y2 == e(2, 1, 1));

    auto m = factor_rank_s(e(4, 0, 0), 2, PadOrder::mirrored);
    CHECK(m.y1 == e(4, 0, 0) + e(4, 2, 2));
    CHECK(m.y2 == e(4, 0, 0) + e(4, 1, 1));
}

TEST_CASE("factorization preconditions") {
    CHECK_THROWS_AS(factor_rank_s(Matrix::identity(2, Q), 1), PreconditionError);
    // rank 0 with s = 2 in M_3 needs 2s - n = 1 <= 0.
    CHECK_THROWS_AS(factor_rank_s(Matrix::zero(3, Q), 2), PreconditionError);
    CHECK_THROWS_AS(factor_rank_s(Matrix::zero(3, Q), 0), PreconditionError);
    CHECK_THROWS_AS(factor_rank_s(Matrix::zero(3, Q), 4), PreconditionError);
    try {
        factor_rank_s(Matrix::identity(2, Q), 1);
    } catch (const PreconditionError& err) {
        CHECK(std::string(err.what()).find("rank(y) <= s") != std::string::npos);
    }
}

TEST_CASE("factorization postconditions exhaustively over F2") {
    for (std::size_t n = 2; n <= 3; ++n)
        for (std::size_t k = 0; k <= n; ++k) {
            const auto ys = collect_rank_k(n, k, F2);
            for (std::size_t s = std::max<std::size_t>(k, 1); s <= n; ++s) {
                if (2 * s > n + k) continue;
                for (const auto& y : ys) {
                    check_factorization(y, s, PadOrder::standard);
                    check_factorization(y, s, PadOrder::mirrored);
                }
            }
        }
}

TEST_CASE("factorization postconditions on random matrices") {
    for (const auto& f : {Q, F3, FieldSpec::rational_functions(Q)}) {
        Rng rng(mix_seed(41, f.characteristic()));
        for (int trial = 0; trial < 60; ++trial) {
            const std::size_t n = 2 + rng.below(4);
            const std::size_t s = 1 + rng.below(n);
            const std::size_t k = 2 * s > n ? 2 * s - n + rng.below(n - s + 1) : rng.below(s + 1);
            check_factorization(random_rank_k(n, k, f, rng.next()), s, PadOrder::standard);
        }
    }
}

TEST_CASE("adapted factorization examples") {
    const auto a = adapted_factor(e(2, 0, 0), e(2, 0, 0), 1);
    CHECK(a.case_tag == AdaptedCase::case_i);
    CHECK(a.x1 == e(2, 0, 0));
    CHECK(a.x2 == e(2, 0, 0));

    const auto b = adapted_factor(e(2, 0, 0), e(2, 1, 0), 1);
    CHECK(b.case_tag == AdaptedCase::case_ii);
    CHECK(b.x1 * b.x2 == e(2, 0, 0));
    CHECK((b.x2 * e(2, 1, 0)).is_zero());

    CHECK(to_string(AdaptedCase::case_i) == "case-I");
    CHECK(to_string(AdaptedCase::case_ii) == "case-II");
    CHECK_THROWS_AS(adapted_factor(e(2, 0, 0) + e(2, 1, 1), e(2, 0, 0), 1), PreconditionError);
    CHECK_THROWS_AS(adapted_factor(e(3, 0, 0), e(3, 0, 0), 2), PreconditionError);
}

TEST_CASE("adapted factorization exhaustively over F2") {
    for (std::size_t n = 2; n <= 3; ++n) {
        const auto xs = collect_rank_k(n, 1, F2);
        for (std::size_t s = 1; 2 * s <= n; ++s)
            for (const auto& y : collect_rank_k(n, s, F2))
                for (const auto& x : xs) check_adapted(x, y, s);
    }
}

TEST_CASE("adapted factorization on random inputs") {
    for (const auto& f : {Q, F3}) {
        Rng rng(mix_seed(8, f.characteristic()));
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 2 + rng.below(5);
            const std::size_t s = 1 + rng.below(n / 2);
            check_adapted(random_rank_k(n, 1, f, rng.next()), random_rank_k(n, s, f, rng.next()), s);
        }
    }
}

TEST_CASE("rank set examples") {
    CHECK(rank_set(2) == std::vector<std::size_t>{2, 1});
    CHECK(rank_set(4) == std::vector<std::size_t>{4, 3, 1});
    CHECK(rank_set(8) == std::vector<std::size_t>{8, 7, 5, 1});
    CHECK(cover_rank(4, 2) == 3);
    CHECK(cover_rank(8, 6) == 7);
    CHECK(cover_rank(4, 3) == 3);
    CHECK(gap_ranks(4) == std::vector<std::size_t>{2});
    CHECK(gap_ranks(8) == std::vector<std::size_t>{2, 3, 4, 6});
    CHECK(gap_ranks(2).empty());
}

TEST_CASE("rank set properties") {
    for (std::size_t n = 2; n <= 128; ++n) {
        CAPTURE(n);
        const auto set = rank_set(n);
        const std::size_t m = ceil_log2_half_plus_one(n);
        REQUIRE(set.size() == m + 1);
        for (std::size_t i = 0; i <= m; ++i) CHECK(set[i] == n + 1 - (std::size_t{1} << i));
        CHECK(2 * set.back() <= n);
        for (std::size_t k = 0; k <= n; ++k) {
            // Brute-force smallest member covering k.
            std::size_t best = n + 1;
            for (auto s : set)
                if (k <= s && 2 * s <= n + k) best = std::min(best, s);
            REQUIRE(best <= n);
            CHECK(cover_rank(n, k) == best);
        }
        const auto gaps = gap_ranks(n);
        for (std::size_t r = set.back() + 1; r < set.front(); ++r) {
            const bool in_set = std::find(set.begin(), set.end(), r) != set.end();
            const bool in_gaps = std::find(gaps.begin(), gaps.end(), r) != gaps.end();
            CHECK(in_set != in_gaps);
        }
        CHECK(std::is_sorted(gaps.begin(), gaps.end()));
    }
}
