#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "rankderiv/matrix.hpp"
#include "rankderiv/scalars.hpp"

namespace rankderiv {

/// D = ad_A + mu-bar: x -> A x - x A + (mu(x_ij)).
///
/// Extraction always returns A with A(0,0) = 0; A is otherwise only
/// determined up to adding a scalar matrix.
struct CanonicalDerivation {
    Matrix A;
    FieldDerivation mu;
};

Matrix apply_derivation(const CanonicalDerivation& D, const Matrix& x);

// Representative of A modulo scalar matrices with zero (1,1) entry.
Matrix normalize_inner(const Matrix& A);

/// Where a DeltaMap may be evaluated.
class Domain {
public:
    enum class Kind { full, rank_leq, rank_exact, rank_set_union };

    static Domain full() { return Domain(Kind::full, 0); }
    static Domain rank_leq(std::size_t s) { return Domain(Kind::rank_leq, s); }
    static Domain rank_exact(std::size_t s) { return Domain(Kind::rank_exact, s); }
    static Domain rank_set_union() { return Domain(Kind::rank_set_union, 0); }
    // "full", "rank-leq(<s>)", "rank-exact(<s>)", "cor31-union"
    static Domain parse(const std::string& tag);

    Kind kind() const { return kind_; }
    std::size_t s() const { return s_; }
    bool contains_rank(std::size_t n, std::size_t r) const;
    std::string tag() const;

    friend bool operator==(const Domain&, const Domain&) = default;

private:
    Domain(Kind kind, std::size_t s) : kind_(kind), s_(s) {}
    Kind kind_;
    std::size_t s_;
};

/// An arbitrary (not necessarily additive) map M_n(K) -> M_n(K) with a
/// declared domain, backed either by a rule or by a finite table keyed by
/// Matrix::key(). Copies share the underlying rule/table.
class DeltaMap {
public:
    using Rule = std::function<Matrix(const Matrix&)>;

    static DeltaMap from_rule(std::size_t n, const FieldSpec& field, Domain domain, Rule rule);
    static DeltaMap from_table(std::size_t n, const FieldSpec& field, Domain domain,
                               std::vector<std::pair<Matrix, Matrix>> records);

    std::size_t n() const { return n_; }
    const FieldSpec& field() const { return field_; }
    const Domain& domain() const { return domain_; }
    bool is_table() const { return static_cast<bool>(table_); }
    // Table records in insertion order; empty for rule-backed maps.
    const std::vector<std::pair<Matrix, Matrix>>& records() const;

    // True when x lies in the declared domain and (for tables) has a record.
    bool defined_at(const Matrix& x) const;
    // DomainError outside the domain or at a missing table record.
    Matrix operator()(const Matrix& x) const;

    // Table-backed copy holding the values at the given points.
    DeltaMap tabulate(const std::vector<Matrix>& points) const;

private:
    struct Table {
        std::vector<std::pair<Matrix, Matrix>> records;
        std::unordered_map<std::string, std::size_t> index;
    };

    DeltaMap(std::size_t n, FieldSpec field, Domain domain) : n_(n), field_(field), domain_(domain) {}

    std::size_t n_;
    FieldSpec field_;
    Domain domain_;
    Rule rule_;
    std::shared_ptr<const Table> table_;
};

// Test fixture: equals D except on matrices whose rank is in garbage_ranks,
// where the value is a pseudo-random matrix determined by (seed, x).
// When target_s is given, garbage ranks must all exceed it.
DeltaMap make_delta(const CanonicalDerivation& D, const std::set<std::size_t>& garbage_ranks, std::uint64_t seed,
                    std::optional<std::size_t> target_s = std::nullopt);

// The identity map x -> x and the zero map, on the full ring.
DeltaMap identity_delta(std::size_t n, const FieldSpec& field);
DeltaMap zero_delta(std::size_t n, const FieldSpec& field);

// Pointwise l1 * d1 + l2 * d2 over the intersection of the domains.
DeltaMap linear_combination(const DeltaMap& d1, const DeltaMap& d2, const Element& l1, const Element& l2);

struct VerifyMode {
    bool exhaustive = true;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;

    static VerifyMode exhaustive_mode() { return VerifyMode{}; }
    static VerifyMode sampled(std::size_t count, std::uint64_t seed) { return VerifyMode{false, count, seed}; }
};

// rank_s_pairs: the hypothesis itself, x and y both of rank s.
// mixed_low_rank: x of rank <= 1 against y of rank <= s, both orders.
enum class VerifyScope { rank_s_pairs, mixed_low_rank };

struct Violation {
    Matrix x;
    Matrix y;
    Matrix lhs;  // delta(xy)
    Matrix rhs;  // delta(x) y + x delta(y)
};

struct VerifyReport {
    std::size_t pairs_checked = 0;
    std::size_t violation_count = 0;
    std::vector<Violation> violations;  // first max_recorded only

    static constexpr std::size_t max_recorded = 1000;
    bool passed() const { return violation_count == 0; }
};

// Checks delta(xy) = delta(x) y + x delta(y). Exhaustive mode needs a finite
// field. DomainError from delta propagates.
VerifyReport verify_hypothesis(const DeltaMap& delta, std::size_t s, const VerifyMode& mode,
                               VerifyScope scope = VerifyScope::rank_s_pairs);

struct LinearCombinationReport {
    VerifyReport first;
    VerifyReport second;
    VerifyReport combined;
    // The closure property: passing inputs give a passing combination.
    bool holds() const { return !(first.passed() && second.passed()) || combined.passed(); }
};

LinearCombinationReport check_linear_combination(const DeltaMap& d1, const DeltaMap& d2, const Element& l1,
                                                 const Element& l2, std::size_t s,
                                                 const VerifyMode& mode = VerifyMode::exhaustive_mode());

struct Inconsistency {
    Matrix y;
    Matrix first;   // via the standard factorization
    Matrix second;  // via the mirrored factorization
};

struct ExtensionResult {
    DeltaMap extended;
    std::size_t extended_count = 0;
    std::vector<Inconsistency> inconsistencies;
    bool consistent() const { return inconsistencies.empty(); }
};

// Defines delta on every matrix of rank < s through y = y1 y2 with rank-s
// factors, and cross-checks a second factorization. Finite fields only.
ExtensionResult extend_to_low_ranks(const DeltaMap& delta, std::size_t s);

// Default probe points: {t, t^2, t+1, 1} on function fields, {1, 2, 1/2} on Q.
std::vector<Element> default_probes(const FieldSpec& field);

// Recovers (A, mu) from delta's values on rank <= 1 matrices. Throws
// ExtractionError naming the first structural identity that fails.
CanonicalDerivation extract_derivation(const DeltaMap& delta, std::size_t s, const std::vector<Element>& probes = {});

struct EqualityWitness {
    Matrix z;
    std::size_t rank;
    std::string kind;  // "derivation" (delta(z) != D(z)) or "factorization"
};

struct ReconstructionReport {
    CanonicalDerivation derivation;
    std::size_t s = 0;
    std::vector<std::size_t> union_ranks;
    std::vector<std::size_t> gap_ranks;
    std::size_t checked = 0;
    std::vector<EqualityWitness> failures;
    bool passed() const { return failures.empty(); }
};

// Extracts D at s = min(rank_set(n)) and compares delta with D on every rank:
// directly on ranks of the union, through cover_rank factorizations elsewhere.
ReconstructionReport reconstruct_full(const DeltaMap& delta, const VerifyMode& mode = VerifyMode::exhaustive_mode(),
                                      const std::vector<Element>& probes = {});

// Delta-table text format: "delta n <n> field <spec> domain <tag>" then one
// "<n^2 literals> -> <n^2 literals>" record per line.
void write_delta_table(std::ostream& os, const DeltaMap& table);
std::string format_delta_table(const DeltaMap& table);
DeltaMap read_delta_table(std::istream& is);
DeltaMap parse_delta_table(const std::string& text);

}  // namespace rankderiv
