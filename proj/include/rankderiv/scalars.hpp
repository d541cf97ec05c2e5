#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <gmpxx.h>

#include "rankderiv/random.hpp"

namespace rankderiv {

/// A field chosen at runtime: Q, F_p, Q(t) or F_p(t).
///
/// Rational function fields nest exactly one level over Q or F_p.
class FieldSpec {
public:
    enum class Kind { rationals, prime, rational_functions };

    static FieldSpec rationals() { return FieldSpec(false, 0); }
    // Throws UsageError unless p is a prime below 2^32.
    static FieldSpec prime(std::uint64_t p);
    // Throws UsageError when base is itself a function field.
    static FieldSpec rational_functions(const FieldSpec& base);
    // Accepts "Q", "F<p>", "Q(t)", "F<p>(t)".
    static FieldSpec parse(std::string_view text);

    Kind kind() const {
        if (function_field_) return Kind::rational_functions;
        return p_ == 0 ? Kind::rationals : Kind::prime;
    }
    std::uint64_t characteristic() const { return p_; }
    bool is_finite() const { return !function_field_ && p_ != 0; }
    bool is_function_field() const { return function_field_; }
    // Coefficient field of a function field; the field itself otherwise.
    FieldSpec base() const { return FieldSpec(false, p_); }
    // Number of elements; only meaningful when is_finite().
    std::uint64_t order() const { return p_; }

    std::string to_string() const;

    friend bool operator==(const FieldSpec&, const FieldSpec&) = default;

private:
    FieldSpec(bool function_field, std::uint64_t p) : function_field_(function_field), p_(p) {}

    bool function_field_;
    std::uint64_t p_;  // 0 means characteristic zero
};

struct RationalFunction;

/// Exact element of a FieldSpec, always held in canonical form, so
/// equality is representational equality.
///
/// Prime-field elements are residues in [0, p), rationals are reduced
/// fractions, and rational functions are reduced num/den pairs with a
/// monic denominator.
class Element {
public:
    // Zero of Q; only useful as a placeholder before assignment.
    Element();

    static Element zero(const FieldSpec& field);
    static Element one(const FieldSpec& field);
    static Element from_int(const FieldSpec& field, long long value);
    static Element from_rational(const FieldSpec& field, const mpq_class& value);
    // The transcendental t of a function field.
    static Element generator(const FieldSpec& field);
    // Element with index i in the deterministic enumeration of a finite field.
    static Element from_index(const FieldSpec& field, std::uint64_t index);
    static Element parse(const FieldSpec& field, std::string_view text);

    const FieldSpec& field() const { return field_; }
    bool is_zero() const;
    bool is_one() const;
    // Index in [0, q) for finite fields.
    std::uint64_t index() const;

    Element inv() const;
    // Formal d/dt (quotient rule); identically zero outside function fields.
    Element ddt() const;

    std::string to_string() const;

    Element operator-() const;
    friend Element operator+(const Element& a, const Element& b);
    friend Element operator-(const Element& a, const Element& b);
    friend Element operator*(const Element& a, const Element& b);
    friend Element operator/(const Element& a, const Element& b);
    Element& operator+=(const Element& b) { return *this = *this + b; }
    Element& operator-=(const Element& b) { return *this = *this - b; }
    Element& operator*=(const Element& b) { return *this = *this * b; }

    friend bool operator==(const Element& a, const Element& b);
    friend bool operator!=(const Element& a, const Element& b) { return !(a == b); }

private:
    using Rep = std::variant<std::uint64_t, mpq_class, std::shared_ptr<const RationalFunction>>;

    Element(FieldSpec field, Rep rep) : field_(field), rep_(std::move(rep)) {}

    const RationalFunction& ratfun() const;
    static Element make_ratfun(const FieldSpec& field, std::vector<Element> num, std::vector<Element> den);

    FieldSpec field_;
    Rep rep_;

    friend struct ElementAccess;
};

enum class ArithOp { add, sub, mul, div };

// Checked binary arithmetic: UsageError on field mismatch, DomainError on /0.
Element eval_arith(const Element& a, const Element& b, ArithOp op);
// DomainError when a is zero.
Element inv(const Element& a);

// Seeded random element. For infinite fields the values are kept small
// (bounded numerators/denominators, low-degree polynomials).
Element random_element(const FieldSpec& field, Rng& rng);

/// A derivation mu of the field: additive and Leibniz.
///
/// Constructible ground truths are the zero derivation and c * d/dt on
/// function fields. Extraction can also produce a raw table when the probed
/// values do not fit either family; evaluating such a table off its keys is
/// a DomainError.
class FieldDerivation {
public:
    enum class Rule { zero, scaled_ddt, table };

    static FieldDerivation zero(const FieldSpec& field);
    // c * d/dt; c must belong to a function field.
    static FieldDerivation scaled_ddt(const Element& c);
    // Keys are canonical literals of the inputs.
    static FieldDerivation table(const FieldSpec& field, std::map<std::string, Element> values);

    Rule rule() const { return rule_; }
    const FieldSpec& field() const { return field_; }
    // Scale factor for scaled_ddt; zero for the zero rule.
    const Element& scale() const { return scale_; }
    const std::map<std::string, Element>& values() const { return values_; }

    Element operator()(const Element& a) const;

    // "zero", "c*d/dt c=<literal>" or "table <k>=<v> ...".
    std::string describe() const;

private:
    FieldDerivation(FieldSpec field, Rule rule, Element scale)
        : field_(field), rule_(rule), scale_(std::move(scale)) {}

    FieldSpec field_;
    Rule rule_;
    Element scale_;
    std::map<std::string, Element> values_;
};

inline Element derive(const FieldDerivation& mu, const Element& a) { return mu(a); }

// Fits sampled (a, mu(a)) pairs to the zero rule or c*d/dt; returns a raw
// table when neither is consistent with every sample.
FieldDerivation fit_field_derivation(const FieldSpec& field,
                                     const std::vector<std::pair<Element, Element>>& samples);

// Every element of a finite field in index order.
std::vector<Element> all_elements(const FieldSpec& field);

}  // namespace rankderiv
