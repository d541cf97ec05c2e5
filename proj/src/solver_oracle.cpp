#include "rankderiv/solver_oracle.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <unordered_set>

#include <gmpxx.h>

#include "rankderiv/errors.hpp"

namespace rankderiv {

namespace {

std::uint64_t mod_inv(std::uint64_t a, std::uint64_t p) {
    std::uint64_t result = 1, base = a % p, exp = p - 2;
    while (exp) {
        if (exp & 1) result = result * base % p;
        base = base * base % p;
        exp >>= 1;
    }
    return result;
}

}  // namespace

ConstraintSystem build_constraint_system(std::size_t n, std::size_t s, const FieldSpec& field) {
    if (field.kind() != FieldSpec::Kind::prime)
        throw UsageError("constraint systems need a prime field, got " + field.to_string());
    if (s < 1 || 2 * s > n)
        throw PreconditionError("build_constraint_system needs 1 <= s <= n/2 (s = " + std::to_string(s) +
                                ", n = " + std::to_string(n) + ")");

    ConstraintSystem sys;
    sys.n = n;
    sys.s = s;
    sys.field = field;
    sys.generators = collect_rank_k(n, s, field);
    const std::size_t g = sys.generators.size();
    if (g > 0 && g > max_pair_blocks / g)
        throw ResourceError("constraint system would need " + std::to_string(g) + "^2 pair blocks; use sampled "
                            "verification (verify --mode sampled) instead");

    std::unordered_set<std::string> reachable;
    for (const auto& x : sys.generators) reachable.insert(x.key());
    for (const auto& x : sys.generators)
        for (const auto& y : sys.generators) reachable.insert((x * y).key());
    if (reachable.size() * n * n > max_unknowns)
        throw ResourceError("constraint system would have " + std::to_string(reachable.size() * n * n) +
                            " unknowns (limit " + std::to_string(max_unknowns) +
                            "); use sampled verification (verify --mode sampled) instead");
    for (auto& m : collect_rank_at_most(n, s, field)) {
        if (!reachable.count(m.key())) continue;
        sys.domain_index.emplace(m.key(), sys.domain.size());
        sys.domain.push_back(std::move(m));
    }

    const std::uint64_t p = field.characteristic();
    const std::size_t nn = n * n;
    auto column = [&](std::size_t d, std::size_t a, std::size_t b) {
        return static_cast<std::uint32_t>(d * nn + a * n + b);
    };

    for (std::uint32_t xi = 0; xi < g; ++xi) {
        const Matrix& x = sys.generators[xi];
        const std::size_t dx = sys.domain_index.at(x.key());
        for (std::uint32_t yi = 0; yi < g; ++yi) {
            const Matrix& y = sys.generators[yi];
            const std::size_t dy = sys.domain_index.at(y.key());
            const std::size_t dxy = sys.domain_index.at((x * y).key());
            ++sys.block_count;
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b) {
                    // delta(xy)_ab - sum_c delta(x)_ac y_cb - sum_c x_ac delta(y)_cb = 0
                    std::map<std::uint32_t, std::uint64_t> row;
                    row[column(dxy, a, b)] += 1;
                    for (std::size_t c = 0; c < n; ++c) {
                        const std::uint64_t ycb = y(c, b).index();
                        if (ycb) row[column(dx, a, c)] += p - ycb;
                        const std::uint64_t xac = x(a, c).index();
                        if (xac) row[column(dy, c, b)] += p - xac;
                    }
                    std::vector<ConstraintSystem::Term> terms;
                    for (const auto& [col, v] : row)
                        if (v % p) terms.push_back({col, static_cast<std::uint32_t>(v % p)});
                    if (terms.empty()) continue;
                    sys.equations.push_back(std::move(terms));
                    sys.provenance.push_back(
                        {xi, yi, static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b)});
                }
        }
    }
    return sys;
}

SolutionSpace solve_constraint_system(const ConstraintSystem& sys) {
    const std::uint64_t p = sys.field.characteristic();
    const std::size_t N = sys.unknown_count();

    // Row echelon form with sparse pivot rows; each pivot row is monic at
    // its leading column and the incoming row is reduced in column order.
    std::vector<std::vector<ConstraintSystem::Term>> pivot_rows(N);
    std::vector<bool> has_pivot(N, false);
    std::vector<std::uint64_t> acc(N, 0);
    std::vector<bool> touched_flag(N, false);
    std::vector<std::uint32_t> touched;
    std::size_t equation_rank = 0;

    for (const auto& eq : sys.equations) {
        std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> order;
        auto touch = [&](std::uint32_t c) {
            if (!touched_flag[c]) {
                touched_flag[c] = true;
                touched.push_back(c);
                order.push(c);
            }
        };
        for (const auto& t : eq) {
            acc[t.column] = t.coeff;
            touch(t.column);
        }
        while (!order.empty()) {
            const std::uint32_t c = order.top();
            order.pop();
            if (acc[c] == 0) continue;
            if (!has_pivot[c]) {
                const std::uint64_t inv = mod_inv(acc[c], p);
                std::vector<ConstraintSystem::Term> row;
                std::vector<std::uint32_t> cols(touched.begin(), touched.end());
                std::sort(cols.begin(), cols.end());
                for (auto col : cols)
                    if (acc[col]) row.push_back({col, static_cast<std::uint32_t>(acc[col] * inv % p)});
                pivot_rows[c] = std::move(row);
                has_pivot[c] = true;
                ++equation_rank;
                break;
            }
            const std::uint64_t f = acc[c];
            for (const auto& t : pivot_rows[c]) {
                acc[t.column] = (acc[t.column] + p - f * t.coeff % p) % p;
                touch(t.column);
            }
        }
        for (auto c : touched) {
            acc[c] = 0;
            touched_flag[c] = false;
        }
        touched.clear();
    }

    // One nullspace vector per free column, by back substitution.
    std::vector<std::vector<std::uint64_t>> basis;
    for (std::size_t f = 0; f < N; ++f) {
        if (has_pivot[f]) continue;
        std::vector<std::uint64_t> v(N, 0);
        v[f] = 1;
        for (std::size_t c = N; c-- > 0;) {
            if (!has_pivot[c]) continue;
            std::uint64_t sum = 0;
            for (const auto& t : pivot_rows[c])
                if (t.column != c) sum = (sum + t.coeff * v[t.column]) % p;
            v[c] = (p - sum) % p;
        }
        basis.push_back(std::move(v));
    }

    // Canonical form: reduced row echelon form of the basis (vectors as rows).
    std::size_t r = 0;
    for (std::size_t c = 0; c < N && r < basis.size(); ++c) {
        std::size_t pi = r;
        while (pi < basis.size() && basis[pi][c] == 0) ++pi;
        if (pi == basis.size()) continue;
        std::swap(basis[pi], basis[r]);
        const std::uint64_t inv = mod_inv(basis[r][c], p);
        for (auto& e : basis[r]) e = e * inv % p;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            if (i == r || basis[i][c] == 0) continue;
            const std::uint64_t f = basis[i][c];
            for (std::size_t j = 0; j < N; ++j) basis[i][j] = (basis[i][j] + p - f * basis[r][j] % p) % p;
        }
        ++r;
    }

    SolutionSpace out;
    out.dimension = basis.size();
    out.unknowns = N;
    out.blocks = sys.block_count;
    out.equation_rank = equation_rank;
    const std::size_t n = sys.n;
    for (const auto& v : basis) {
        std::vector<std::pair<Matrix, Matrix>> records;
        for (std::size_t d = 0; d < sys.domain.size(); ++d) {
            Matrix value(n, n, sys.field);
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b)
                    value(a, b) = Element::from_index(sys.field, v[d * n * n + a * n + b]);
            records.emplace_back(sys.domain[d], std::move(value));
        }
        out.basis.push_back(DeltaMap::from_table(n, sys.field, Domain::rank_leq(sys.s), std::move(records)));
    }
    return out;
}

SolutionSpace solution_space(std::size_t n, std::size_t s, const FieldSpec& field) {
    return solve_constraint_system(build_constraint_system(n, s, field));
}

std::uint64_t rank_count(std::size_t n, std::size_t k, const FieldSpec& field) {
    std::uint64_t count = 0;
    auto it = enumerate_rank_k(n, k, field);
    while (it.next()) ++count;
    return count;
}

std::uint64_t rank_count_formula(std::size_t n, std::size_t k, std::uint64_t q) {
    if (k > n) return 0;
    mpz_class num = 1, den = 1;
    mpz_class qn, qi, qk;
    mpz_ui_pow_ui(qn.get_mpz_t(), q, n);
    mpz_ui_pow_ui(qk.get_mpz_t(), q, k);
    for (std::size_t i = 0; i < k; ++i) {
        mpz_ui_pow_ui(qi.get_mpz_t(), q, i);
        num *= (qn - qi) * (qn - qi);
        den *= qk - qi;
    }
    const mpz_class result = num / den;
    if (!result.fits_ulong_p()) throw ResourceError("rank count exceeds 64 bits");
    return result.get_ui();
}

}  // namespace rankderiv
