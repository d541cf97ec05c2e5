#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "rankderiv/errors.hpp"
#include "rankderiv/scalars.hpp"

using namespace rankderiv;

namespace {

const FieldSpec Q = FieldSpec::rationals();
const FieldSpec F2 = FieldSpec::prime(2);
const FieldSpec F7 = FieldSpec::prime(7);
const FieldSpec Qt = FieldSpec::rational_functions(Q);
const FieldSpec F3t = FieldSpec::rational_functions(FieldSpec::prime(3));

Element lit(const FieldSpec& f, const char* text) { return Element::parse(f, text); }

std::vector<FieldSpec> all_fields() { return {Q, F2, F7, Qt, F3t}; }

}  // namespace

TEST_CASE("field parsing and printing") {
    CHECK(FieldSpec::parse("Q") == Q);
    CHECK(FieldSpec::parse("F7") == F7);
    CHECK(FieldSpec::parse("Q(t)") == Qt);
    CHECK(FieldSpec::parse("F3(t)") == F3t);
    for (const auto& f : all_fields()) CHECK(FieldSpec::parse(f.to_string()) == f);
    CHECK_THROWS_AS(FieldSpec::parse("F6"), UsageError);
    CHECK_THROWS_AS(FieldSpec::parse("F1"), UsageError);
    CHECK_THROWS_AS(FieldSpec::parse("R"), UsageError);
    CHECK_THROWS_AS(FieldSpec::parse("F4294967311"), UsageError);
    CHECK_THROWS_AS(FieldSpec::rational_functions(Qt), UsageError);
    CHECK(F7.is_finite());
    CHECK_FALSE(Qt.is_finite());
    CHECK(F3t.base() == FieldSpec::prime(3));
}

TEST_CASE("worked arithmetic examples") {
    CHECK(lit(F7, "3") * lit(F7, "5") == Element::one(F7));
    CHECK(lit(Q, "2/3") / lit(Q, "2/3") == Element::one(Q));
    CHECK(lit(Qt, "t+1") * lit(Qt, "t-1") == lit(Qt, "t^2-1"));
    CHECK((lit(Qt, "t+1") * lit(Qt, "t-1")).to_string() == "t^2-1");
    CHECK(inv(lit(F7, "3")) == lit(F7, "5"));
    CHECK_THROWS_AS(inv(Element::zero(F7)), DomainError);
    CHECK_THROWS_AS(eval_arith(Element::one(Q), Element::zero(Q), ArithOp::div), DomainError);
    CHECK_THROWS_AS(Element::zero(Qt).inv(), DomainError);
}

TEST_CASE("canonical forms") {
    CHECK(lit(Q, "4/6").to_string() == "2/3");
    CHECK(lit(Q, "-4/-6").to_string() == "2/3");
    CHECK(lit(F7, "10").to_string() == "3");
    CHECK(lit(F7, "-1").to_string() == "6");
    CHECK(lit(F7, "1/3") == lit(F7, "5"));
    CHECK(lit(Qt, "(t^2-1)/(t-1)") == lit(Qt, "t+1"));
    CHECK(lit(Qt, "(2*t)/(4*t+2)") == lit(Qt, "t/(2*t+1)"));
    CHECK(lit(Qt, "t^-1") * Element::generator(Qt) == Element::one(Qt));
    CHECK(lit(Qt, "3/2*t+1").to_string() == "3/2*t+1");
    CHECK_THROWS_AS(lit(Q, "t"), ParseError);
    CHECK_THROWS_AS(lit(Q, "1/0"), ParseError);
    CHECK_THROWS_AS(lit(Q, "1+"), ParseError);
    CHECK_THROWS_AS(lit(Qt, "(t"), ParseError);
}

TEST_CASE("finite field enumeration") {
    const auto elems = all_elements(F7);
    REQUIRE(elems.size() == 7);
    for (std::uint64_t i = 0; i < 7; ++i) {
        CHECK(elems[i].index() == i);
        CHECK(Element::from_index(F7, i) == elems[i]);
    }
    CHECK(Element::from_index(F2, 1).is_one());
}

TEST_CASE("field mismatch is a usage error") {
    CHECK_THROWS_AS(eval_arith(Element::one(Q), Element::one(F7), ArithOp::add), UsageError);
    CHECK_THROWS_AS(Element::one(F2) * Element::one(F7), UsageError);
}

// Ring laws on seeded random triples, with an independent integer model for F_p.
TEST_CASE("field axioms on random samples") {
    for (const auto& f : all_fields()) {
        CAPTURE(f.to_string());
        Rng rng(mix_seed(17, f.characteristic() + (f.is_function_field() ? 1000 : 0)));
        for (int trial = 0; trial < 200; ++trial) {
            const Element a = random_element(f, rng), b = random_element(f, rng), c = random_element(f, rng);
            CHECK((a + b) + c == a + (b + c));
            CHECK((a * b) * c == a * (b * c));
            CHECK(a + b == b + a);
            CHECK(a * b == b * a);
            CHECK(a * (b + c) == a * b + a * c);
            CHECK(a - a == Element::zero(f));
            CHECK(a + Element::zero(f) == a);
            CHECK(a * Element::one(f) == a);
            if (!a.is_zero()) CHECK(a * a.inv() == Element::one(f));
            if (!b.is_zero()) CHECK((a / b) * b == a);
            if (f.is_finite()) {
                const std::uint64_t p = f.characteristic();
                CHECK((a + b).index() == (a.index() + b.index()) % p);
                CHECK((a * b).index() == (a.index() * b.index()) % p);
            }
        }
    }
}

TEST_CASE("function-field coefficients past 64 bits stay exact") {
    // Oracle: the same coefficients computed with plain gmp integers.
    const mpz_class x = mpz_class(1) << 70, y = mpz_class("4052555153018976267");  // 3^39
    const Element tx = Element::from_rational(Qt, mpq_class(x)) * Element::generator(Qt);
    const Element cy = Element::from_rational(Qt, mpq_class(y));
    const mpz_class x2 = x * x, y2 = y * y;
    CHECK(((tx + cy) * (tx - cy)).to_string() == x2.get_str() + "*t^2-" + y2.get_str());
    CHECK(((tx + cy) * (tx - cy)) == lit(Qt, ("2^140*t^2-" + y2.get_str()).c_str()));

    // Results that fit again compare equal to small literals.
    const Element big = lit(Qt, "2^62");
    CHECK(big + big - lit(Qt, "2^63") + Element::one(Qt) == Element::one(Qt));
    CHECK(lit(Qt, "(t+1/3^40)*3^40") == lit(Qt, "3^40*t+1"));
    CHECK((lit(Qt, "(t+1/3^40)*3^40") - lit(Qt, "3^40*t")).is_one());
    CHECK(lit(Qt, "1/(2^65*t+1)").to_string() == "1/(36893488147419103232*t+1)");

    Rng rng(mix_seed(29, 0));
    auto huge = [&]() {
        const mpz_class num = (mpz_class(static_cast<unsigned long>(rng.next() >> 1)) << 64) +
                              static_cast<unsigned long>(rng.next());
        const mpz_class den = mpz_class(static_cast<unsigned long>(rng.next() | 1)) << 3;
        mpq_class q(rng.below(2) == 1 ? num : mpz_class(-num), den);
        q.canonicalize();
        const Element c = Element::from_rational(Qt, q);
        return c * Element::generator(Qt) + random_element(Qt, rng);
    };
    for (int trial = 0; trial < 100; ++trial) {
        const Element a = huge(), b = huge();
        CHECK((a + b) - b == a);
        CHECK((a * b) / b == a);
        CHECK(a * (b + a) == a * b + a * a);
        CHECK(Element::parse(Qt, a.to_string()) == a);
    }
}

TEST_CASE("printing is canonical and parse inverts it") {
    for (const auto& f : all_fields()) {
        Rng rng(mix_seed(3, f.characteristic()));
        for (int trial = 0; trial < 200; ++trial) {
            const Element a = random_element(f, rng);
            const std::string text = a.to_string();
            const Element back = Element::parse(f, text);
            CHECK(back == a);
            CHECK(back.to_string() == text);
        }
    }
}

TEST_CASE("formal derivative") {
    const Element t = Element::generator(Qt);
    CHECK(t.ddt() == Element::one(Qt));
    CHECK((t * t).ddt() == lit(Qt, "2*t"));
    CHECK(Element::one(Qt).ddt().is_zero());
    CHECK(lit(Qt, "1/t").ddt() == lit(Qt, "-1/t^2"));
    CHECK(lit(Q, "5/3").ddt().is_zero());
    // In characteristic 3, d/dt(t^3) = 3t^2 = 0.
    CHECK(lit(F3t, "t^3").ddt().is_zero());
}

// Leibniz and additivity are the oracle for every constructible derivation.
TEST_CASE("derivation laws") {
    const std::vector<FieldDerivation> derivations = {
        FieldDerivation::zero(Q),
        FieldDerivation::zero(F7),
        FieldDerivation::scaled_ddt(Element::one(Qt)),
        FieldDerivation::scaled_ddt(lit(Qt, "(t^2+1)/(3*t-2)")),
        FieldDerivation::scaled_ddt(lit(F3t, "t+2")),
    };
    for (const auto& mu : derivations) {
        CAPTURE(mu.describe());
        const FieldSpec& f = mu.field();
        CHECK(mu(Element::one(f)).is_zero());
        Rng rng(mix_seed(99, f.characteristic()));
        for (int trial = 0; trial < 200; ++trial) {
            const Element a = random_element(f, rng), b = random_element(f, rng);
            CHECK(mu(a + b) == mu(a) + mu(b));
            CHECK(mu(a * b) == a * mu(b) + mu(a) * b);
            if (!b.is_zero()) CHECK(mu(a / b) == (mu(a) * b - a * mu(b)) / (b * b));
        }
    }
    const auto c = lit(Qt, "3*t");
    const auto mu = FieldDerivation::scaled_ddt(c);
    CHECK(mu(Element::generator(Qt)) == c);
    CHECK(mu(lit(Qt, "t^2")) == lit(Qt, "6*t^2"));
    CHECK_THROWS_AS(FieldDerivation::scaled_ddt(Element::one(Q)), UsageError);
}

TEST_CASE("table derivations and fitting") {
    auto t = Element::generator(Qt);
    std::vector<std::pair<Element, Element>> samples;
    const Element c = lit(Qt, "t^2+1");
    for (const char* p : {"t", "t^2", "t+1", "1"}) samples.emplace_back(lit(Qt, p), c * lit(Qt, p).ddt());
    const auto fitted = fit_field_derivation(Qt, samples);
    CHECK(fitted.rule() == FieldDerivation::Rule::scaled_ddt);
    CHECK(fitted.scale() == c);

    std::vector<std::pair<Element, Element>> zeros = {{t, Element::zero(Qt)}, {Element::one(Qt), Element::zero(Qt)}};
    CHECK(fit_field_derivation(Qt, zeros).rule() == FieldDerivation::Rule::zero);

    // mu(t) = 1 but mu(t^2) = 0 fits neither family.
    std::vector<std::pair<Element, Element>> bad = {{t, Element::one(Qt)}, {t * t, Element::zero(Qt)}};
    const auto raw = fit_field_derivation(Qt, bad);
    CHECK(raw.rule() == FieldDerivation::Rule::table);
    CHECK(raw(t) == Element::one(Qt));
    CHECK_THROWS_AS(raw(lit(Qt, "t+5")), DomainError);
}
