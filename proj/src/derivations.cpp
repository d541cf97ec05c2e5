#include "rankderiv/derivations.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "rankderiv/errors.hpp"
#include "rankderiv/rank_factor.hpp"

namespace rankderiv {

Matrix apply_derivation(const CanonicalDerivation& D, const Matrix& x) {
    if (!(D.A.field() == x.field()) || D.A.rows() != x.rows() || D.A.cols() != x.cols())
        throw UsageError("apply_derivation: derivation over M_" + std::to_string(D.A.rows()) + "(" +
                         D.A.field().to_string() + ") applied to a " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + " matrix over " + x.field().to_string());
    Matrix out = commutator(D.A, x);
    if (D.mu.rule() != FieldDerivation::Rule::zero) out = out + x.map([&](const Element& e) { return D.mu(e); });
    return out;
}

Matrix normalize_inner(const Matrix& A) {
    const Element shift = A(0, 0);
    return A - Matrix::identity(A.n(), A.field()).scaled(shift);
}

// ---------------------------------------------------------------------------
// Domain

bool Domain::contains_rank(std::size_t n, std::size_t r) const {
    switch (kind_) {
    case Kind::full: return true;
    case Kind::rank_leq: return r <= s_;
    case Kind::rank_exact: return r == s_;
    case Kind::rank_set_union: {
        const auto ranks = rank_set(n);
        return std::find(ranks.begin(), ranks.end(), r) != ranks.end();
    }
    }
    return false;
}

std::string Domain::tag() const {
    switch (kind_) {
    case Kind::full: return "full";
    case Kind::rank_leq: return "rank-leq(" + std::to_string(s_) + ")";
    case Kind::rank_exact: return "rank-exact(" + std::to_string(s_) + ")";
    case Kind::rank_set_union: return "cor31-union";
    }
    return "?";
}

Domain Domain::parse(const std::string& tag) {
    if (tag == "full") return full();
    if (tag == "cor31-union") return rank_set_union();
    auto parametrized = [&](const std::string& prefix) -> std::optional<std::size_t> {
        if (tag.size() <= prefix.size() + 1 || tag.compare(0, prefix.size(), prefix) != 0 || tag.back() != ')')
            return std::nullopt;
        const std::string digits = tag.substr(prefix.size(), tag.size() - prefix.size() - 1);
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
        return std::stoul(digits);
    };
    if (auto s = parametrized("rank-leq(")) return rank_leq(*s);
    if (auto s = parametrized("rank-exact(")) return rank_exact(*s);
    throw ParseError("bad domain tag '" + tag + "'");
}

// ---------------------------------------------------------------------------
// DeltaMap

DeltaMap DeltaMap::from_rule(std::size_t n, const FieldSpec& field, Domain domain, Rule rule) {
    DeltaMap d(n, field, domain);
    d.rule_ = std::move(rule);
    return d;
}

DeltaMap DeltaMap::from_table(std::size_t n, const FieldSpec& field, Domain domain,
                              std::vector<std::pair<Matrix, Matrix>> records) {
    auto table = std::make_shared<Table>();
    for (auto& [in, out] : records) {
        if (in.rows() != n || in.cols() != n || out.rows() != n || out.cols() != n || !(in.field() == field) ||
            !(out.field() == field))
            throw UsageError("delta table record does not match n = " + std::to_string(n) + " over " +
                             field.to_string());
        auto [it, inserted] = table->index.emplace(in.key(), table->records.size());
        if (!inserted) throw UsageError("duplicate delta table record for input " + in.key());
        table->records.emplace_back(std::move(in), std::move(out));
    }
    DeltaMap d(n, field, domain);
    d.table_ = std::move(table);
    return d;
}

const std::vector<std::pair<Matrix, Matrix>>& DeltaMap::records() const {
    static const std::vector<std::pair<Matrix, Matrix>> none;
    return table_ ? table_->records : none;
}

bool DeltaMap::defined_at(const Matrix& x) const {
    if (x.rows() != n_ || x.cols() != n_ || !(x.field() == field_)) return false;
    if (!domain_.contains_rank(n_, rank(x))) return false;
    return !table_ || table_->index.count(x.key()) > 0;
}

Matrix DeltaMap::operator()(const Matrix& x) const {
    if (x.rows() != n_ || x.cols() != n_ || !(x.field() == field_))
        throw UsageError("delta over M_" + std::to_string(n_) + "(" + field_.to_string() +
                         ") evaluated at a foreign matrix");
    const std::size_t r = rank(x);
    if (!domain_.contains_rank(n_, r))
        throw DomainError("delta evaluated outside its domain " + domain_.tag() + " at rank-" + std::to_string(r) +
                          " matrix [" + x.key() + "]");
    if (table_) {
        auto it = table_->index.find(x.key());
        if (it == table_->index.end()) throw DomainError("delta table has no record for [" + x.key() + "]");
        return table_->records[it->second].second;
    }
    return rule_(x);
}

DeltaMap DeltaMap::tabulate(const std::vector<Matrix>& points) const {
    std::vector<std::pair<Matrix, Matrix>> records;
    records.reserve(points.size());
    for (const auto& p : points) records.emplace_back(p, (*this)(p));
    return from_table(n_, field_, domain_, std::move(records));
}

// ---------------------------------------------------------------------------
// Fixtures

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

DeltaMap make_delta(const CanonicalDerivation& D, const std::set<std::size_t>& garbage_ranks, std::uint64_t seed,
                    std::optional<std::size_t> target_s) {
    if (target_s)
        for (auto r : garbage_ranks)
            if (r <= *target_s)
                throw PreconditionError("make_delta: garbage rank " + std::to_string(r) + " lies in [0, s = " +
                                        std::to_string(*target_s) + "]");
    const std::size_t n = D.A.n();
    const FieldSpec field = D.A.field();
    return DeltaMap::from_rule(n, field, Domain::full(), [D, garbage_ranks, seed, n, field](const Matrix& x) {
        if (!garbage_ranks.empty() && garbage_ranks.count(rank(x))) {
            Rng rng(mix_seed(seed, fnv1a(x.key())));
            return random_matrix(n, n, field, rng);
        }
        return apply_derivation(D, x);
    });
}

DeltaMap identity_delta(std::size_t n, const FieldSpec& field) {
    return DeltaMap::from_rule(n, field, Domain::full(), [](const Matrix& x) { return x; });
}

DeltaMap zero_delta(std::size_t n, const FieldSpec& field) {
    return DeltaMap::from_rule(n, field, Domain::full(), [n, field](const Matrix&) { return Matrix::zero(n, field); });
}

namespace {

Domain intersect(const Domain& a, const Domain& b) {
    if (a == b || b.kind() == Domain::Kind::full) return a;
    if (a.kind() == Domain::Kind::full) return b;
    if (a.kind() == Domain::Kind::rank_leq && b.kind() == Domain::Kind::rank_leq)
        return Domain::rank_leq(std::min(a.s(), b.s()));
    if (a.kind() == Domain::Kind::rank_exact && b.kind() == Domain::Kind::rank_leq && a.s() <= b.s()) return a;
    if (b.kind() == Domain::Kind::rank_exact && a.kind() == Domain::Kind::rank_leq && b.s() <= a.s()) return b;
    throw UsageError("cannot intersect delta domains " + a.tag() + " and " + b.tag());
}

}  // namespace

DeltaMap linear_combination(const DeltaMap& d1, const DeltaMap& d2, const Element& l1, const Element& l2) {
    if (d1.n() != d2.n() || !(d1.field() == d2.field()) || !(l1.field() == d1.field()) ||
        !(l2.field() == d1.field()))
        throw UsageError("linear_combination: maps and scalars must share n and field");
    return DeltaMap::from_rule(d1.n(), d1.field(), intersect(d1.domain(), d2.domain()),
                               [d1, d2, l1, l2](const Matrix& x) { return d1(x).scaled(l1) + d2(x).scaled(l2); });
}

// ---------------------------------------------------------------------------
// Verification

namespace {

class CachedDelta {
public:
    explicit CachedDelta(const DeltaMap& delta) : delta_(delta) {}

    const Matrix& operator()(const Matrix& x) {
        std::string key = x.key();
        auto it = cache_.find(key);
        if (it == cache_.end()) it = cache_.emplace(std::move(key), delta_(x)).first;
        return it->second;
    }

private:
    const DeltaMap& delta_;
    std::unordered_map<std::string, Matrix> cache_;
};

void check_pair(CachedDelta& delta, const Matrix& x, const Matrix& y, VerifyReport& report) {
    ++report.pairs_checked;
    const Matrix lhs = delta(x * y);
    const Matrix rhs = delta(x) * y + x * delta(y);
    if (lhs == rhs) return;
    ++report.violation_count;
    if (report.violations.size() < VerifyReport::max_recorded) report.violations.push_back({x, y, lhs, rhs});
}

}  // namespace

VerifyReport verify_hypothesis(const DeltaMap& delta, std::size_t s, const VerifyMode& mode, VerifyScope scope) {
    const std::size_t n = delta.n();
    const FieldSpec& F = delta.field();
    if (s > n) throw PreconditionError("verify_hypothesis needs s <= n");
    CachedDelta cached(delta);
    VerifyReport report;

    if (mode.exhaustive) {
        if (!F.is_finite()) throw UsageError("exhaustive verification needs a finite field, got " + F.to_string());
        if (scope == VerifyScope::rank_s_pairs) {
            const auto xs = collect_rank_k(n, s, F);
            for (const auto& x : xs)
                for (const auto& y : xs) check_pair(cached, x, y, report);
        } else {
            const auto low = collect_rank_at_most(n, std::min<std::size_t>(1, s), F);
            const auto upto = collect_rank_at_most(n, s, F);
            for (const auto& x : low)
                for (const auto& y : upto) {
                    check_pair(cached, x, y, report);
                    check_pair(cached, y, x, report);
                }
        }
        return report;
    }

    Rng rng(mode.seed);
    for (std::size_t i = 0; i < mode.samples; ++i) {
        if (scope == VerifyScope::rank_s_pairs) {
            check_pair(cached, random_rank_k(n, s, F, rng.next()), random_rank_k(n, s, F, rng.next()), report);
        } else {
            const std::size_t rx = rng.below(std::min<std::size_t>(1, s) + 1);
            const std::size_t ry = rng.below(s + 1);
            const Matrix x = random_rank_k(n, rx, F, rng.next());
            const Matrix y = random_rank_k(n, ry, F, rng.next());
            check_pair(cached, x, y, report);
            check_pair(cached, y, x, report);
        }
    }
    return report;
}

LinearCombinationReport check_linear_combination(const DeltaMap& d1, const DeltaMap& d2, const Element& l1,
                                                 const Element& l2, std::size_t s, const VerifyMode& mode) {
    LinearCombinationReport out;
    out.first = verify_hypothesis(d1, s, mode);
    out.second = verify_hypothesis(d2, s, mode);
    out.combined = verify_hypothesis(linear_combination(d1, d2, l1, l2), s, mode);
    return out;
}

// ---------------------------------------------------------------------------
// Extension to ranks below s

ExtensionResult extend_to_low_ranks(const DeltaMap& delta, std::size_t s) {
    const std::size_t n = delta.n();
    const FieldSpec& F = delta.field();
    if (!F.is_finite()) throw UsageError("extend_to_low_ranks needs a finite field, got " + F.to_string());
    if (s < 1 || 2 * s > n)
        throw PreconditionError("extend_to_low_ranks needs 1 <= s <= n/2 (s = " + std::to_string(s) +
                                ", n = " + std::to_string(n) + ")");

    CachedDelta cached(delta);
    std::vector<std::pair<Matrix, Matrix>> records;
    std::vector<Inconsistency> inconsistencies;
    std::size_t extended = 0;

    for (std::size_t r = 0; r < s; ++r) {
        auto it = enumerate_rank_k(n, r, F);
        while (auto y = it.next()) {
            const auto f1 = factor_rank_s(*y, s, PadOrder::standard);
            const auto f2 = factor_rank_s(*y, s, PadOrder::mirrored);
            Matrix v1 = cached(f1.y1) * f1.y2 + f1.y1 * cached(f1.y2);
            Matrix v2 = cached(f2.y1) * f2.y2 + f2.y1 * cached(f2.y2);
            if (v1 != v2) inconsistencies.push_back({*y, v1, v2});
            records.emplace_back(std::move(*y), std::move(v1));
            ++extended;
        }
    }
    auto top = enumerate_rank_k(n, s, F);
    while (auto w = top.next()) {
        Matrix v = cached(*w);
        records.emplace_back(std::move(*w), std::move(v));
    }
    return ExtensionResult{DeltaMap::from_table(n, F, Domain::rank_leq(s), std::move(records)), extended,
                           std::move(inconsistencies)};
}

// ---------------------------------------------------------------------------
// Extraction

std::vector<Element> default_probes(const FieldSpec& field) {
    if (field.is_function_field()) {
        const Element t = Element::generator(field);
        return {t, t * t, t + Element::one(field), Element::one(field)};
    }
    if (field.is_finite()) return all_elements(field);
    return {Element::one(field), Element::from_int(field, 2), Element::from_rational(field, mpq_class(1, 2))};
}

namespace {

std::string pos(std::size_t i, std::size_t j) {
    return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
}

}  // namespace

CanonicalDerivation extract_derivation(const DeltaMap& delta, std::size_t s, const std::vector<Element>& probes) {
    const std::size_t n = delta.n();
    const FieldSpec& F = delta.field();
    if (n < 2 || s < 1 || 2 * s > n)
        throw PreconditionError("extract_derivation needs n >= 2 and 1 <= s <= n/2 (n = " + std::to_string(n) +
                                ", s = " + std::to_string(s) + ")");

    auto e = [&](std::size_t i, std::size_t j) { return Matrix::unit(n, i, j, F); };

    // delta(e_ii) = e_ii delta(e_ii) + delta(e_ii) e_ii: supported on row i and
    // column i, with zero (i,i) entry.
    std::vector<Matrix> diag_images;
    for (std::size_t i = 0; i < n; ++i) {
        Matrix d = delta(e(i, i));
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                const bool allowed = (a == i) != (b == i);
                if (!allowed && !d(a, b).is_zero())
                    throw ExtractionError("delta(e_ii) = e_ii delta(e_ii) + delta(e_ii) e_ii",
                                          "entry " + pos(a, b) + " of delta(e_" + std::to_string(i + 1) +
                                              std::to_string(i + 1) + ") is nonzero");
            }
        diag_images.push_back(std::move(d));
    }
    // 0 = delta(e_ii e_jj) forces the (i,j) entries of delta(e_ii), delta(e_jj) to cancel.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && diag_images[j](i, j) != -diag_images[i](i, j))
                throw ExtractionError("a_ij^(j) = -a_ij^(i)", "fails at " + pos(i, j));

    // B = sum_i delta(e_ii) e_ii: column i of B is column i of delta(e_ii).
    Matrix B(n, n, F);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < n; ++a) B(a, i) = diag_images[i](a, i);

    // lambda_ij = (i,j) entry of delta(e_ij), with delta(e_ij) = [B, e_ij] + lambda_ij e_ij.
    Matrix lambda(n, n, F);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const Matrix eij = e(i, j);
            const Matrix d = i == j ? diag_images[i] : delta(eij);
            lambda(i, j) = d(i, j);
            if (d - commutator(B, eij) != eij.scaled(lambda(i, j)))
                throw ExtractionError("delta(e_ij) = [B, e_ij] + lambda_ij e_ij", "fails at " + pos(i, j));
        }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                if (lambda(i, k) != lambda(i, j) + lambda(j, k))
                    throw ExtractionError("lambda_ik = lambda_ij + lambda_jk",
                                          "fails at i,j,k = " + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                              "," + std::to_string(k + 1));

    // A = B + sum_j lambda_j1 e_jj
    Matrix A = B;
    for (std::size_t j = 0; j < n; ++j) A(j, j) += lambda(j, 0);

    // mu(a) = (1,1) entry of (delta - ad_A)(a e_11), which must be a multiple of e_11.
    const Matrix e11 = e(0, 0);
    auto mu_at = [&](const Element& a) {
        if (a.is_zero()) return Element::zero(F);
        const Matrix x = e11.scaled(a);
        const Matrix reduced = delta(x) - commutator(A, x);
        if (reduced != e11.scaled(reduced(0, 0)))
            throw ExtractionError("delta'(a e_11) = mu(a) e_11", "fails at a = " + a.to_string());
        return reduced(0, 0);
    };

    std::vector<std::pair<Element, Element>> samples;
    const std::vector<Element> points = F.is_finite() ? all_elements(F) : (probes.empty() ? default_probes(F) : probes);
    for (const auto& a : points) {
        if (!(a.field() == F)) throw UsageError("probe " + a.to_string() + " is not in " + F.to_string());
        samples.emplace_back(a, mu_at(a));
    }

    if (F.is_finite()) {
        // The full table is available: check the derivation laws on it.
        const auto& table = samples;
        const std::uint64_t q = F.order();
        for (std::uint64_t a = 0; a < q; ++a)
            for (std::uint64_t b = 0; b < q; ++b) {
                const Element& x = table[a].first;
                const Element& y = table[b].first;
                const Element& mx = table[a].second;
                const Element& my = table[b].second;
                if (table[(x + y).index()].second != mx + my)
                    throw ExtractionError("mu(a+b) = mu(a) + mu(b)",
                                          "fails at a = " + x.to_string() + ", b = " + y.to_string());
                if (table[(x * y).index()].second != x * my + mx * y)
                    throw ExtractionError("mu(ab) = a mu(b) + mu(a) b",
                                          "fails at a = " + x.to_string() + ", b = " + y.to_string());
            }
    }

    return CanonicalDerivation{std::move(A), fit_field_derivation(F, samples)};
}

// ---------------------------------------------------------------------------
// Full-ring reconstruction

ReconstructionReport reconstruct_full(const DeltaMap& delta, const VerifyMode& mode,
                                      const std::vector<Element>& probes) {
    const std::size_t n = delta.n();
    const FieldSpec& F = delta.field();
    ReconstructionReport report{CanonicalDerivation{Matrix::zero(n, F), FieldDerivation::zero(F)}, 0, {}, {}, 0, {}};
    report.union_ranks = rank_set(n);
    report.gap_ranks = gap_ranks(n);
    report.s = report.union_ranks.back();
    if (report.s == 0)
        throw PreconditionError("reconstruct_full: rank_set(" + std::to_string(n) +
                                ") bottoms out at rank 0, so no rank s with 1 <= s <= n/2 is available");
    report.derivation = extract_derivation(delta, report.s, probes);

    auto in_union = [&](std::size_t r) {
        return std::find(report.union_ranks.begin(), report.union_ranks.end(), r) != report.union_ranks.end();
    };
    CachedDelta cached(delta);

    auto check = [&](const Matrix& z, std::size_t r) {
        ++report.checked;
        const Matrix expected = apply_derivation(report.derivation, z);
        std::optional<Matrix> value;
        if (in_union(r)) {
            value = cached(z);
        } else {
            const auto f = factor_rank_s(z, cover_rank(n, r));
            value = cached(f.y1) * f.y2 + f.y1 * cached(f.y2);
            if (delta.defined_at(z) && cached(z) != *value) {
                report.failures.push_back({z, r, "factorization"});
                return;
            }
        }
        if (*value != expected) report.failures.push_back({z, r, "derivation"});
    };

    for (std::size_t r = 0; r <= n; ++r) {
        if (mode.exhaustive) {
            if (!F.is_finite()) throw UsageError("exhaustive reconstruction needs a finite field");
            auto it = enumerate_rank_k(n, r, F);
            while (auto z = it.next()) check(*z, r);
        } else {
            Rng rng(mix_seed(mode.seed, r));
            for (std::size_t i = 0; i < mode.samples; ++i) check(random_rank_k(n, r, F, rng.next()), r);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Delta-table text format

void write_delta_table(std::ostream& os, const DeltaMap& table) {
    if (!table.is_table()) throw UsageError("write_delta_table needs a table-backed delta (use tabulate)");
    os << "delta n " << table.n() << " field " << table.field().to_string() << " domain " << table.domain().tag()
       << '\n';
    for (const auto& [in, out] : table.records()) os << in.key() << " -> " << out.key() << '\n';
}

std::string format_delta_table(const DeltaMap& table) {
    std::ostringstream os;
    write_delta_table(os, table);
    return os.str();
}

DeltaMap read_delta_table(std::istream& is) {
    std::string line;
    while (std::getline(is, line) && line.find_first_not_of(" \t\r") == std::string::npos) {
    }
    std::istringstream hs(line);
    std::string w_delta, w_n, w_field, spec, w_domain, tag, extra;
    std::size_t n = 0;
    if (!(hs >> w_delta >> w_n >> n >> w_field >> spec >> w_domain >> tag) || (hs >> extra) || w_delta != "delta" ||
        w_n != "n" || w_field != "field" || w_domain != "domain" || n == 0)
        throw ParseError("bad delta table header '" + line +
                         "' (expected \"delta n <n> field <spec> domain <tag>\")");
    const FieldSpec field = FieldSpec::parse(spec);
    const Domain domain = Domain::parse(tag);

    std::vector<std::pair<Matrix, Matrix>> records;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream rs(line);
        std::vector<std::string> in, out;
        std::string tok;
        bool arrow = false;
        while (rs >> tok) {
            if (tok == "->") {
                if (arrow) throw ParseError("delta table line " + std::to_string(line_no) + ": repeated '->'");
                arrow = true;
            } else {
                (arrow ? out : in).push_back(tok);
            }
        }
        if (!arrow || in.size() != n * n || out.size() != n * n)
            throw ParseError("delta table line " + std::to_string(line_no) + ": expected " + std::to_string(n * n) +
                             " literals, '->', " + std::to_string(n * n) + " literals");
        records.emplace_back(matrix_from_literals(n, field, in), matrix_from_literals(n, field, out));
    }
    try {
        return DeltaMap::from_table(n, field, domain, std::move(records));
    } catch (const UsageError& e) {
        throw ParseError(e.what());
    }
}

DeltaMap parse_delta_table(const std::string& text) {
    std::istringstream is(text);
    return read_delta_table(is);
}

}  // namespace rankderiv
