#include "rankderiv/scalars.hpp"

#include <cctype>
#include <limits>
#include <sstream>
#include <type_traits>

#include "rankderiv/errors.hpp"

namespace rankderiv {

namespace {

bool is_prime(std::uint64_t p) {
    if (p < 2) return false;
    for (std::uint64_t d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t p) {
    std::uint64_t result = 1 % p;
    base %= p;
    while (exp) {
        if (exp & 1) result = result * base % p;
        base = base * base % p;
        exp >>= 1;
    }
    return result;
}

std::uint64_t reduce(const mpz_class& z, std::uint64_t p) {
    mpz_class r = z % static_cast<unsigned long>(p);
    if (r < 0) r += static_cast<unsigned long>(p);
    return r.get_ui();
}

// Binary gcd; std::gcd divides, which dominates small-coefficient arithmetic.
std::uint64_t gcd64(std::uint64_t a, std::uint64_t b) {
    if (a == 0) return b;
    if (b == 0) return a;
    const int shift = __builtin_ctzll(a | b);
    a >>= __builtin_ctzll(a);
    do {
        b >>= __builtin_ctzll(b);
        if (a > b) std::swap(a, b);
        b -= a;
    } while (b != 0);
    return a << shift;
}

// Rational coefficient with an inline int64 fast path that spills to mpq on
// overflow. Values that fit are always stored inline, so equal values have
// equal representations.
class QCoef {
public:
    QCoef() = default;
    QCoef(long v) : n_(v) {
        if (v == std::numeric_limits<long>::min()) set(mpq_class(v));
    }
    explicit QCoef(const mpq_class& q) { set(q); }
    QCoef(const QCoef& o) : n_(o.n_), d_(o.d_), big_(o.big_ ? std::make_unique<mpq_class>(*o.big_) : nullptr) {}
    QCoef(QCoef&&) noexcept = default;
    QCoef& operator=(const QCoef& o) {
        if (this != &o) {
            n_ = o.n_;
            d_ = o.d_;
            big_ = o.big_ ? std::make_unique<mpq_class>(*o.big_) : nullptr;
        }
        return *this;
    }
    QCoef& operator=(QCoef&&) noexcept = default;

    int sign() const { return big_ ? sgn(*big_) : (n_ > 0) - (n_ < 0); }
    bool is_small() const { return !big_; }
    std::int64_t num() const { return n_; }
    std::int64_t den() const { return d_; }
    mpq_class to_mpq() const {
        if (big_) return *big_;
        mpq_class q(static_cast<long>(n_), static_cast<unsigned long>(d_));
        return q;
    }
    std::string get_str() const {
        if (big_) return big_->get_str();
        return d_ == 1 ? std::to_string(n_) : std::to_string(n_) + "/" + std::to_string(d_);
    }
    const mpq_class* big() const { return big_.get(); }

    friend bool operator==(const QCoef& a, const QCoef& b) {
        if (a.big_ || b.big_) return a.big_ && b.big_ && *a.big_ == *b.big_;
        return a.n_ == b.n_ && a.d_ == b.d_;
    }
    friend bool operator==(const QCoef& a, long v) { return !a.big_ && a.d_ == 1 && a.n_ == v; }

    static QCoef add(const QCoef& a, const QCoef& b) {
        if (a.big_ || b.big_) return QCoef(mpq_class(a.to_mpq() + b.to_mpq()));
        // Knuth: only g = gcd(d_a, d_b) can cancel against the new numerator.
        const std::uint64_t da = static_cast<std::uint64_t>(a.d_), db = static_cast<std::uint64_t>(b.d_);
        const std::uint64_t g = gcd64(da, db);
        if (g == 1) return from_parts(I128(a.n_) * I128(db) + I128(b.n_) * I128(da), U128(da) * db);
        const I128 t = I128(a.n_) * I128(db / g) + I128(b.n_) * I128(da / g);
        const U128 abs_t = t < 0 ? U128(-t) : U128(t);
        const std::uint64_t g2 = gcd64(static_cast<std::uint64_t>(abs_t % g), g);
        return from_parts(t / I128(g2), U128(da / g) * (db / g2));
    }
    static QCoef mul(const QCoef& a, const QCoef& b) {
        if (a.big_ || b.big_) return QCoef(mpq_class(a.to_mpq() * b.to_mpq()));
        if (a.n_ == 0 || b.n_ == 0) return QCoef();
        const auto abs64 = [](std::int64_t v) { return static_cast<std::uint64_t>(v < 0 ? -v : v); };
        const std::uint64_t g1 = gcd64(abs64(a.n_), static_cast<std::uint64_t>(b.d_));
        const std::uint64_t g2 = gcd64(abs64(b.n_), static_cast<std::uint64_t>(a.d_));
        return from_parts(I128(a.n_ / static_cast<std::int64_t>(g1)) * I128(b.n_ / static_cast<std::int64_t>(g2)),
                          U128(static_cast<std::uint64_t>(a.d_) / g2) * (static_cast<std::uint64_t>(b.d_) / g1));
    }
    QCoef negated() const {
        if (big_) return QCoef(mpq_class(-*big_));
        QCoef r;
        r.n_ = -n_;
        r.d_ = d_;
        return r;
    }
    // Nonzero only.
    QCoef inverse() const {
        if (big_) return QCoef(mpq_class(1 / *big_));
        QCoef r;
        r.n_ = n_ < 0 ? -d_ : d_;
        r.d_ = n_ < 0 ? -n_ : n_;
        return r;
    }

private:
    using I128 = __int128;
    using U128 = unsigned __int128;

    // num/den already in lowest terms, den > 0.
    static QCoef from_parts(I128 num, U128 den) {
        constexpr I128 lim = std::numeric_limits<std::int64_t>::max();
        if (num <= lim && num >= -lim && den <= U128(lim)) {
            QCoef r;
            r.n_ = static_cast<std::int64_t>(num);
            r.d_ = static_cast<std::int64_t>(den);
            return r;
        }
        return spill(num, den);
    }
    [[gnu::noinline]] static QCoef spill(I128 num, U128 den) {
        QCoef r;
        r.big_ = std::make_unique<mpq_class>(to_mpz(num < 0 ? U128(-num) : U128(num)), to_mpz(den));
        if (num < 0) *r.big_ = -*r.big_;
        return r;
    }
    static mpz_class to_mpz(U128 v) {
        mpz_class hi(static_cast<unsigned long>(v >> 64));
        mpz_class z = hi << 64;
        z += static_cast<unsigned long>(v & 0xffffffffffffffffULL);
        return z;
    }
    void set(const mpq_class& q) {
        const mpz_class& n = q.get_num();
        const mpz_class& d = q.get_den();
        if (n.fits_slong_p() && d.fits_slong_p() && n != std::numeric_limits<long>::min()) {
            n_ = n.get_si();
            d_ = d.get_si();
            big_.reset();
        } else {
            big_ = std::make_unique<mpq_class>(q);
        }
    }

    std::int64_t n_ = 0;
    std::int64_t d_ = 1;
    std::unique_ptr<mpq_class> big_;
};

// Coefficient rings for the polynomial layer. Function-field elements keep
// raw coefficients (inline rationals or residues) rather than Elements.
struct RatRing {
    using T = QCoef;
    static bool is_zero(const T& a) { return a.sign() == 0; }
    static bool is_one(const T& a) { return a == 1L; }
    T one() const { return T(1L); }
    void add(T& r, const T& a, const T& b) const { r = T::add(a, b); }
    void sub(T& r, const T& a, const T& b) const { r = T::add(a, b.negated()); }
    void mul(T& r, const T& a, const T& b) const { r = T::mul(a, b); }
    void neg(T& r, const T& a) const { r = a.negated(); }
    T inv(const T& a) const { return a.inverse(); }
    T from_int(long v) const { return T(v); }
};

struct ModRing {
    using T = std::uint64_t;
    std::uint64_t p;
    static bool is_zero(T a) { return a == 0; }
    static bool is_one(T a) { return a == 1; }
    T one() const { return 1; }
    void add(T& r, T a, T b) const { r = (a + b) % p; }
    void sub(T& r, T a, T b) const { r = (a + p - b) % p; }
    void mul(T& r, T a, T b) const { r = a * b % p; }
    void neg(T& r, T a) const { r = a == 0 ? 0 : p - a; }
    T inv(T a) const { return pow_mod(a, p - 2, p); }
    T from_int(long v) const {
        const auto m = static_cast<long>(p);
        return static_cast<T>(((v % m) + m) % m);
    }
};

template <class R>
using PolyOf = std::vector<typename R::T>;

template <class R>
void trim(const R&, PolyOf<R>& a) {
    while (!a.empty() && R::is_zero(a.back())) a.pop_back();
}

template <class R>
bool is_constant_one(const PolyOf<R>& a) {
    return a.size() == 1 && R::is_one(a[0]);
}

template <class R>
PolyOf<R> poly_add(const R& ring, const PolyOf<R>& a, const PolyOf<R>& b) {
    PolyOf<R> r = a.size() >= b.size() ? a : b;
    const PolyOf<R>& other = a.size() >= b.size() ? b : a;
    for (std::size_t i = 0; i < other.size(); ++i) ring.add(r[i], r[i], other[i]);
    trim(ring, r);
    return r;
}

template <class R>
PolyOf<R> poly_neg(const R& ring, PolyOf<R> a) {
    for (auto& c : a) ring.neg(c, c);
    return a;
}

template <class R>
PolyOf<R> poly_sub(const R& ring, const PolyOf<R>& a, const PolyOf<R>& b) {
    PolyOf<R> r = a;
    if (r.size() < b.size()) r.resize(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) ring.sub(r[i], r[i], b[i]);
    trim(ring, r);
    return r;
}

template <class R>
PolyOf<R> poly_mul(const R& ring, const PolyOf<R>& a, const PolyOf<R>& b) {
    if (a.empty() || b.empty()) return {};
    if (is_constant_one<R>(a)) return b;
    if (is_constant_one<R>(b)) return a;
    PolyOf<R> r(a.size() + b.size() - 1);
    typename R::T tmp{};
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) {
            ring.mul(tmp, a[i], b[j]);
            ring.add(r[i + j], r[i + j], tmp);
        }
    trim(ring, r);
    return r;
}

template <class R>
PolyOf<R> poly_scale(const R& ring, PolyOf<R> a, const typename R::T& c) {
    if (R::is_one(c)) return a;
    for (auto& x : a) ring.mul(x, x, c);
    trim(ring, a);
    return a;
}

// b must be nonzero.
template <class R>
std::pair<PolyOf<R>, PolyOf<R>> poly_divmod(const R& ring, PolyOf<R> a, const PolyOf<R>& b) {
    if (a.size() < b.size()) return {PolyOf<R>{}, std::move(a)};
    PolyOf<R> q(a.size() - b.size() + 1);
    const typename R::T lead_inv = ring.inv(b.back());
    typename R::T tmp{};
    while (!a.empty() && a.size() >= b.size()) {
        const std::size_t shift = a.size() - b.size();
        typename R::T c{};
        ring.mul(c, a.back(), lead_inv);
        for (std::size_t i = 0; i < b.size(); ++i) {
            ring.mul(tmp, c, b[i]);
            ring.sub(a[shift + i], a[shift + i], tmp);
        }
        q[shift] = std::move(c);
        trim(ring, a);
    }
    trim(ring, q);
    return {std::move(q), std::move(a)};
}

template <class R>
PolyOf<R> make_monic(const R& ring, PolyOf<R> a) {
    if (a.empty()) return a;
    const auto lead_inv = ring.inv(a.back());
    return poly_scale(ring, std::move(a), lead_inv);
}

// Degree filter for gcds over Q: reduce mod a large prime P. When P divides
// no coefficient denominator and neither leading coefficient, deg gcd mod P
// bounds deg gcd over Q from above, so a constant gcd mod P settles it.
constexpr std::uint64_t gcd_prime = (1ULL << 61) - 1;

// Inputs below P; P is a Mersenne prime so reduction is shift and add.
std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b) {
    const unsigned __int128 x = static_cast<unsigned __int128>(a) * b;
    std::uint64_t r = (static_cast<std::uint64_t>(x) & gcd_prime) + static_cast<std::uint64_t>(x >> 61);
    if (r >= gcd_prime) r -= gcd_prime;
    return r;
}

std::uint64_t residue(std::int64_t v) {
    const std::uint64_t r = static_cast<std::uint64_t>(v < 0 ? -v : v) % gcd_prime;
    return v < 0 && r != 0 ? gcd_prime - r : r;
}

// The image of a mod P up to a nonzero constant: coefficient i is scaled by
// the product of the other denominators, so no inversion is needed. False
// when P divides a denominator or the leading coefficient.
bool reduce_mod_prime(const PolyOf<RatRing>& a, std::vector<std::uint64_t>& out) {
    const std::size_t n = a.size();
    if (n == 0) return false;
    std::vector<std::uint64_t> dens(n);
    out.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (const mpq_class* q = a[i].big()) {
            out[i] = mpz_fdiv_ui(q->get_num_mpz_t(), gcd_prime);
            dens[i] = mpz_fdiv_ui(q->get_den_mpz_t(), gcd_prime);
        } else {
            out[i] = residue(a[i].num());
            dens[i] = residue(a[i].den());
        }
        if (dens[i] == 0) return false;
    }
    std::uint64_t prefix = 1;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = mul_mod(out[i], prefix);
        prefix = mul_mod(prefix, dens[i]);
    }
    std::uint64_t suffix = 1;
    for (std::size_t i = n; i-- > 0;) {
        out[i] = mul_mod(out[i], suffix);
        suffix = mul_mod(suffix, dens[i]);
    }
    return out.back() != 0;
}

// Fraction-free Euclid mod P: x := lead(y) x - lead(x) t^k y.
bool coprime_mod_prime(const PolyOf<RatRing>& a, const PolyOf<RatRing>& b) {
    std::vector<std::uint64_t> x, y;
    if (!reduce_mod_prime(a, x) || !reduce_mod_prime(b, y)) return false;
    if (x.size() < y.size()) std::swap(x, y);
    while (y.size() > 1) {
        const std::uint64_t ly = y.back();
        while (x.size() >= y.size()) {
            const std::uint64_t lx = x.back();
            const std::size_t shift = x.size() - y.size();
            for (std::size_t i = 0; i < shift; ++i) x[i] = mul_mod(x[i], ly);
            for (std::size_t i = 0; i < y.size(); ++i) {
                const std::uint64_t v = mul_mod(x[shift + i], ly) + gcd_prime - mul_mod(lx, y[i]);
                x[shift + i] = v >= gcd_prime ? v - gcd_prime : v;
            }
            while (!x.empty() && x.back() == 0) x.pop_back();
        }
        std::swap(x, y);
    }
    return y.size() == 1;
}

// Monic gcd; remainders are kept monic to limit coefficient growth over Q.
template <class R>
PolyOf<R> poly_gcd(const R& ring, PolyOf<R> a, PolyOf<R> b) {
    if (a.size() < b.size()) std::swap(a, b);
    if (b.size() == 1) return PolyOf<R>{ring.one()};
    if constexpr (std::is_same_v<R, RatRing>)
        if (!b.empty() && coprime_mod_prime(a, b)) return PolyOf<R>{ring.one()};
    while (!b.empty()) {
        if (b.size() == 1) return PolyOf<R>{ring.one()};
        PolyOf<R> r = poly_divmod(ring, std::move(a), b).second;
        a = std::move(b);
        b = make_monic(ring, std::move(r));
    }
    return make_monic(ring, std::move(a));
}

template <class R>
PolyOf<R> exact_quotient(const R& ring, const PolyOf<R>& a, const PolyOf<R>& g) {
    return is_constant_one<R>(g) ? a : poly_divmod(ring, a, g).first;
}

template <class R>
PolyOf<R> poly_ddt(const R& ring, const PolyOf<R>& a) {
    if (a.size() <= 1) return {};
    PolyOf<R> r(a.size() - 1);
    for (std::size_t i = 1; i < a.size(); ++i) ring.mul(r[i - 1], a[i], ring.from_int(static_cast<long>(i)));
    trim(ring, r);
    return r;
}

// Coefficient printing for polynomial terms: sign separated from magnitude.
std::pair<bool, std::string> signed_coefficient(const QCoef& c) {
    std::string s = c.get_str();
    if (!s.empty() && s[0] == '-') return {true, s.substr(1)};
    return {false, s};
}

std::pair<bool, std::string> signed_coefficient(std::uint64_t c) { return {false, std::to_string(c)}; }

template <class T>
std::string poly_to_string(const std::vector<T>& a) {
    if (a.empty()) return "0";
    std::string out;
    for (std::size_t k = a.size(); k-- > 0;) {
        if (a[k] == 0) continue;
        auto [negative, mag] = signed_coefficient(a[k]);
        if (negative)
            out += "-";
        else if (!out.empty())
            out += "+";
        if (k == 0) {
            out += mag;
            continue;
        }
        if (mag != "1") out += mag + "*";
        out += "t";
        if (k > 1) out += "^" + std::to_string(k);
    }
    return out;
}

// Reduced num/den with a monic den; zero is 0/1.
template <class T>
struct Frac {
    using num_type = T;
    std::vector<T> num, den;
};

template <class R>
Frac<typename R::T> normalize(const R& ring, PolyOf<R> num, PolyOf<R> den) {
    trim(ring, num);
    trim(ring, den);
    if (den.empty()) throw DomainError("division by zero");
    if (num.empty()) return {{}, {ring.one()}};
    const PolyOf<R> g = poly_gcd(ring, num, den);
    if (!is_constant_one<R>(g)) {
        num = poly_divmod(ring, std::move(num), g).first;
        den = poly_divmod(ring, std::move(den), g).first;
    }
    const auto lead_inv = ring.inv(den.back());
    return {poly_scale(ring, std::move(num), lead_inv), poly_scale(ring, std::move(den), lead_inv)};
}

template <class R>
Frac<typename R::T> frac_add(const R& ring, const Frac<typename R::T>& x, const Frac<typename R::T>& y) {
    if (is_constant_one<R>(x.den) && is_constant_one<R>(y.den)) {
        PolyOf<R> num = poly_add(ring, x.num, y.num);
        return {std::move(num), {ring.one()}};
    }
    // Henrici: with g = gcd(den_x, den_y) only g can still divide the new numerator.
    const PolyOf<R> g = poly_gcd(ring, x.den, y.den);
    if (is_constant_one<R>(g)) {
        PolyOf<R> num = poly_add(ring, poly_mul(ring, x.num, y.den), poly_mul(ring, y.num, x.den));
        if (num.empty()) return {{}, {ring.one()}};
        return {std::move(num), poly_mul(ring, x.den, y.den)};
    }
    const PolyOf<R> dx = exact_quotient(ring, x.den, g), dy = exact_quotient(ring, y.den, g);
    PolyOf<R> num = poly_add(ring, poly_mul(ring, x.num, dy), poly_mul(ring, y.num, dx));
    if (num.empty()) return {{}, {ring.one()}};
    const PolyOf<R> h = poly_gcd(ring, num, g);
    return {exact_quotient(ring, num, h), poly_mul(ring, dx, exact_quotient(ring, y.den, h))};
}

template <class R>
Frac<typename R::T> frac_mul(const R& ring, const Frac<typename R::T>& x, const Frac<typename R::T>& y) {
    // Cross-cancel so the product of reduced fractions stays reduced.
    const PolyOf<R> g1 = poly_gcd(ring, x.num, y.den), g2 = poly_gcd(ring, y.num, x.den);
    PolyOf<R> num = poly_mul(ring, exact_quotient(ring, x.num, g1), exact_quotient(ring, y.num, g2));
    PolyOf<R> den = poly_mul(ring, exact_quotient(ring, x.den, g2), exact_quotient(ring, y.den, g1));
    const auto lead_inv = ring.inv(den.back());
    return {poly_scale(ring, std::move(num), lead_inv), poly_scale(ring, std::move(den), lead_inv)};
}

template <class R>
Frac<typename R::T> frac_inv(const R& ring, const Frac<typename R::T>& x) {
    const auto lead_inv = ring.inv(x.num.back());
    return {poly_scale(ring, x.den, lead_inv), poly_scale(ring, x.num, lead_inv)};
}

template <class R>
Frac<typename R::T> frac_ddt(const R& ring, const Frac<typename R::T>& x) {
    PolyOf<R> num = poly_sub(ring, poly_mul(ring, poly_ddt(ring, x.num), x.den),
                             poly_mul(ring, x.num, poly_ddt(ring, x.den)));
    return normalize(ring, std::move(num), poly_mul(ring, x.den, x.den));
}

}  // namespace

struct RationalFunction {
    // Coefficients lowest degree first, no trailing zeros; Q or F_p by characteristic.
    std::variant<Frac<QCoef>, Frac<std::uint64_t>> parts;
};

using Poly = std::vector<Element>;

// Grants the parser and polynomial helpers access to Element internals.
struct ElementAccess {
    static Element ratfun(const FieldSpec& f, Poly num, Poly den) {
        return Element::make_ratfun(f, std::move(num), std::move(den));
    }
    template <class T>
    static Element wrap(const FieldSpec& f, Frac<T> fr) {
        auto rf = std::make_shared<RationalFunction>();
        rf->parts = std::move(fr);
        return Element(f, std::shared_ptr<const RationalFunction>(std::move(rf)));
    }
    template <class R>
    static const Frac<typename R::T>& frac(const R&, const Element& e) {
        return std::get<Frac<typename R::T>>(e.ratfun().parts);
    }
    static const mpq_class& rational(const Element& e) { return std::get<1>(e.rep_); }
};

namespace {

// Runs fn with the coefficient ring of a function field.
template <class Fn>
Element with_ring(const FieldSpec& field, Fn&& fn) {
    if (field.characteristic() == 0) return fn(RatRing{});
    return fn(ModRing{field.characteristic()});
}

template <class R>
typename R::T raw_coefficient(const R&, const Element& e) {
    if constexpr (std::is_same_v<R, RatRing>)
        return QCoef(ElementAccess::rational(e));
    else
        return e.index();
}

}  // namespace

// ---------------------------------------------------------------------------
// FieldSpec

FieldSpec FieldSpec::prime(std::uint64_t p) {
    if (p >= (1ULL << 32) || !is_prime(p))
        throw UsageError("field modulus " + std::to_string(p) + " is not a prime below 2^32");
    return FieldSpec(false, p);
}

FieldSpec FieldSpec::rational_functions(const FieldSpec& base) {
    if (base.function_field_) throw UsageError("rational function fields nest only one level");
    return FieldSpec(true, base.p_);
}

FieldSpec FieldSpec::parse(std::string_view text) {
    bool function_field = false;
    if (text.size() > 3 && text.substr(text.size() - 3) == "(t)") {
        function_field = true;
        text.remove_suffix(3);
    }
    FieldSpec base = rationals();
    if (text == "Q") {
        base = rationals();
    } else if (text.size() >= 2 && text[0] == 'F') {
        std::uint64_t p = 0;
        for (char c : text.substr(1)) {
            if (!std::isdigit(static_cast<unsigned char>(c)) || p > (1ULL << 40))
                throw ParseError("bad field spec '" + std::string(text) + "'");
            p = p * 10 + static_cast<std::uint64_t>(c - '0');
        }
        if (p >= (1ULL << 32) || !is_prime(p))
            throw ParseError("bad field spec '" + std::string(text) + "': " + std::to_string(p) +
                             " is not a prime below 2^32");
        base = prime(p);
    } else {
        throw ParseError("bad field spec '" + std::string(text) + "' (expected Q, F<p>, Q(t) or F<p>(t))");
    }
    return function_field ? rational_functions(base) : base;
}

std::string FieldSpec::to_string() const {
    std::string s = p_ == 0 ? "Q" : "F" + std::to_string(p_);
    return function_field_ ? s + "(t)" : s;
}

// ---------------------------------------------------------------------------
// Element

Element::Element() : field_(FieldSpec::rationals()), rep_(mpq_class(0)) {}

Element Element::zero(const FieldSpec& field) { return from_int(field, 0); }

Element Element::one(const FieldSpec& field) { return from_int(field, 1); }

Element Element::from_int(const FieldSpec& field, long long value) {
    if (field.is_function_field())
        return with_ring(field, [&](const auto& ring) {
            using R = std::decay_t<decltype(ring)>;
            PolyOf<R> num;
            auto c = ring.from_int(static_cast<long>(value));
            if (!R::is_zero(c)) num.push_back(std::move(c));
            return ElementAccess::wrap(field, Frac<typename R::T>{std::move(num), {ring.one()}});
        });
    return from_rational(field, mpq_class(static_cast<long>(value)));
}

Element Element::from_rational(const FieldSpec& field, const mpq_class& value) {
    switch (field.kind()) {
    case FieldSpec::Kind::prime: {
        const std::uint64_t p = field.characteristic();
        const std::uint64_t den = reduce(value.get_den(), p);
        if (den == 0) throw DomainError("denominator divisible by the characteristic");
        const std::uint64_t num = reduce(value.get_num(), p);
        return Element(field, num * pow_mod(den, p - 2, p) % p);
    }
    case FieldSpec::Kind::rationals: {
        mpq_class q = value;
        q.canonicalize();
        return Element(field, std::move(q));
    }
    case FieldSpec::Kind::rational_functions: {
        const FieldSpec base = field.base();
        Poly num;
        Element c = from_rational(base, value);
        if (!c.is_zero()) num.push_back(std::move(c));
        return make_ratfun(field, std::move(num), Poly{one(base)});
    }
    }
    throw UsageError("unreachable field kind");
}

Element Element::generator(const FieldSpec& field) {
    if (!field.is_function_field()) throw UsageError("field " + field.to_string() + " has no generator t");
    const FieldSpec base = field.base();
    return make_ratfun(field, Poly{zero(base), one(base)}, Poly{one(base)});
}

Element Element::from_index(const FieldSpec& field, std::uint64_t index) {
    if (!field.is_finite() || index >= field.order())
        throw UsageError("element index out of range for field " + field.to_string());
    return Element(field, index);
}

Element Element::make_ratfun(const FieldSpec& field, Poly num, Poly den) {
    return with_ring(field, [&](const auto& ring) {
        using R = std::decay_t<decltype(ring)>;
        PolyOf<R> n, d;
        for (const auto& c : num) n.push_back(raw_coefficient(ring, c));
        for (const auto& c : den) d.push_back(raw_coefficient(ring, c));
        return ElementAccess::wrap(field, normalize(ring, std::move(n), std::move(d)));
    });
}

const RationalFunction& Element::ratfun() const {
    return *std::get<std::shared_ptr<const RationalFunction>>(rep_);
}

bool Element::is_zero() const {
    switch (rep_.index()) {
    case 0: return std::get<0>(rep_) == 0;
    case 1: return sgn(std::get<1>(rep_)) == 0;
    default: return std::visit([](const auto& f) { return f.num.empty(); }, ratfun().parts);
    }
}

bool Element::is_one() const {
    switch (rep_.index()) {
    case 0: return std::get<0>(rep_) == 1;
    case 1: return std::get<1>(rep_) == 1;
    default:
        return std::visit(
            [](const auto& f) {
                return f.num.size() == 1 && f.num[0] == 1 && f.den.size() == 1 && f.den[0] == 1;
            },
            ratfun().parts);
    }
}

std::uint64_t Element::index() const {
    if (!field_.is_finite()) throw UsageError("index() requires a finite field");
    return std::get<0>(rep_);
}

Element Element::inv() const {
    if (is_zero()) throw DomainError("inverse of zero");
    switch (rep_.index()) {
    case 0: {
        const std::uint64_t p = field_.characteristic();
        return Element(field_, pow_mod(std::get<0>(rep_), p - 2, p));
    }
    case 1: return Element(field_, mpq_class(1 / std::get<1>(rep_)));
    default:
        return with_ring(field_, [&](const auto& ring) {
            return ElementAccess::wrap(field_, frac_inv(ring, ElementAccess::frac(ring, *this)));
        });
    }
}

Element Element::ddt() const {
    if (!field_.is_function_field()) return zero(field_);
    return with_ring(field_, [&](const auto& ring) {
        return ElementAccess::wrap(field_, frac_ddt(ring, ElementAccess::frac(ring, *this)));
    });
}

std::string Element::to_string() const {
    switch (rep_.index()) {
    case 0: return std::to_string(std::get<0>(rep_));
    case 1: return std::get<1>(rep_).get_str();
    default:
        return std::visit(
            [](const auto& f) -> std::string {
                using T = typename std::decay_t<decltype(f)>::num_type;
                if (f.den.size() == 1 && f.den[0] == 1) return poly_to_string(f.num);
                std::vector<T> num = f.num, den = f.den;
                if constexpr (std::is_same_v<T, QCoef>) {
                    // Print with an integer, primitive denominator: scale by lcm(dens) / gcd(nums).
                    mpz_class l = 1, g = 0;
                    for (const auto& c : den) {
                        const mpq_class q = c.to_mpq();
                        mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
                        mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), q.get_num_mpz_t());
                    }
                    mpq_class scale(l, g);
                    scale.canonicalize();
                    const QCoef k(scale);
                    for (auto& c : num) c = QCoef::mul(c, k);
                    for (auto& c : den) c = QCoef::mul(c, k);
                }
                auto single_term = [](const std::vector<T>& a) {
                    std::size_t terms = 0;
                    for (const auto& c : a) terms += !(c == 0);
                    return terms == 1;
                };
                const std::string n = poly_to_string(num), d = poly_to_string(den);
                const bool bare_den = single_term(den) && den.back() == 1;
                const bool bare_num = single_term(num) && n.find('/') == std::string::npos;
                return (bare_num ? n : "(" + n + ")") + "/" + (bare_den ? d : "(" + d + ")");
            },
            ratfun().parts);
    }
}

namespace {

void require_same_field(const Element& a, const Element& b) {
    if (!(a.field() == b.field()))
        throw UsageError("field mismatch: " + a.field().to_string() + " vs " + b.field().to_string());
}

}  // namespace

Element Element::operator-() const {
    switch (rep_.index()) {
    case 0: {
        const std::uint64_t v = std::get<0>(rep_);
        return Element(field_, v == 0 ? 0 : field_.characteristic() - v);
    }
    case 1: return Element(field_, mpq_class(-std::get<1>(rep_)));
    default:
        if (is_zero()) return *this;
        return with_ring(field_, [&](const auto& ring) {
            const auto& f = ElementAccess::frac(ring, *this);
            return ElementAccess::wrap(field_, Frac<typename std::decay_t<decltype(ring)>::T>{
                                                   poly_neg(ring, f.num), f.den});
        });
    }
}

Element operator+(const Element& a, const Element& b) {
    require_same_field(a, b);
    switch (a.rep_.index()) {
    case 0: return Element(a.field_, (std::get<0>(a.rep_) + std::get<0>(b.rep_)) % a.field_.characteristic());
    case 1: return Element(a.field_, mpq_class(std::get<1>(a.rep_) + std::get<1>(b.rep_)));
    default:
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        return with_ring(a.field_, [&](const auto& ring) {
            return ElementAccess::wrap(a.field_,
                                       frac_add(ring, ElementAccess::frac(ring, a), ElementAccess::frac(ring, b)));
        });
    }
}

Element operator-(const Element& a, const Element& b) {
    require_same_field(a, b);
    return a + (-b);
}

Element operator*(const Element& a, const Element& b) {
    require_same_field(a, b);
    switch (a.rep_.index()) {
    case 0: return Element(a.field_, std::get<0>(a.rep_) * std::get<0>(b.rep_) % a.field_.characteristic());
    case 1: return Element(a.field_, mpq_class(std::get<1>(a.rep_) * std::get<1>(b.rep_)));
    default:
        if (a.is_zero()) return a;
        if (b.is_zero()) return b;
        if (a.is_one()) return b;
        if (b.is_one()) return a;
        return with_ring(a.field_, [&](const auto& ring) {
            return ElementAccess::wrap(a.field_,
                                       frac_mul(ring, ElementAccess::frac(ring, a), ElementAccess::frac(ring, b)));
        });
    }
}

Element operator/(const Element& a, const Element& b) {
    require_same_field(a, b);
    return a * b.inv();
}

bool operator==(const Element& a, const Element& b) {
    if (!(a.field_ == b.field_)) return false;
    switch (a.rep_.index()) {
    case 0: return std::get<0>(a.rep_) == std::get<0>(b.rep_);
    case 1: return std::get<1>(a.rep_) == std::get<1>(b.rep_);
    default: {
        const auto& x = a.ratfun().parts;
        const auto& y = b.ratfun().parts;
        return std::visit(
            [&](const auto& fx) {
                using F = std::decay_t<decltype(fx)>;
                const auto& fy = std::get<F>(y);
                return fx.num == fy.num && fx.den == fy.den;
            },
            x);
    }
    }
}

Element eval_arith(const Element& a, const Element& b, ArithOp op) {
    switch (op) {
    case ArithOp::add: return a + b;
    case ArithOp::sub: return a - b;
    case ArithOp::mul: return a * b;
    case ArithOp::div: return a / b;
    }
    throw UsageError("unknown arithmetic op");
}

Element inv(const Element& a) { return a.inv(); }

// ---------------------------------------------------------------------------
// Literal parsing

namespace {

class LiteralParser {
public:
    LiteralParser(const FieldSpec& field, std::string_view text) : field_(field), text_(text) {}

    Element parse() {
        Element v = expr();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw ParseError("bad element literal '" + std::string(text_) + "' for field " + field_.to_string() +
                         ": " + why);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Element expr() {
        Element v = term();
        for (;;) {
            if (accept('+'))
                v = v + term();
            else if (accept('-'))
                v = v - term();
            else
                return v;
        }
    }

    Element term() {
        Element v = unary();
        for (;;) {
            if (accept('*')) {
                v = v * unary();
            } else if (accept('/')) {
                Element d = unary();
                if (d.is_zero()) fail("division by zero");
                v = v / d;
            } else {
                return v;
            }
        }
    }

    Element unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }

    Element power() {
        Element base = primary();
        if (!accept('^')) return base;
        const bool negative = accept('-');
        skip_space();
        const mpz_class e = digits();
        if (e > 4096) fail("exponent too large");
        Element r = Element::one(field_);
        for (unsigned long i = 0; i < e.get_ui(); ++i) r = r * base;
        if (negative) {
            if (r.is_zero()) fail("division by zero");
            r = r.inv();
        }
        return r;
    }

    mpz_class digits() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (start == pos_) fail("expected a number");
        return mpz_class(std::string(text_.substr(start, pos_ - start)));
    }

    Element primary() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Element v = expr();
            if (!accept(')')) fail("missing ')'");
            return v;
        }
        if (c == 't') {
            ++pos_;
            if (!field_.is_function_field()) fail("'t' is only valid in a rational function field");
            return Element::generator(field_);
        }
        if (std::isdigit(static_cast<unsigned char>(c))) return Element::from_rational(field_, mpq_class(digits()));
        fail("unexpected '" + std::string(1, c) + "'");
    }

    FieldSpec field_;
    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

Element Element::parse(const FieldSpec& field, std::string_view text) {
    try {
        return LiteralParser(field, text).parse();
    } catch (const DomainError& e) {
        throw ParseError("bad element literal '" + std::string(text) + "': " + e.what());
    }
}

// ---------------------------------------------------------------------------

Element random_element(const FieldSpec& field, Rng& rng) {
    switch (field.kind()) {
    case FieldSpec::Kind::prime: return Element::from_index(field, rng.below(field.order()));
    case FieldSpec::Kind::rationals: {
        const auto num = rng.between(-9, 9);
        const auto den = rng.between(1, 9);
        return Element::from_rational(field, mpq_class(static_cast<long>(num), static_cast<unsigned long>(den)));
    }
    case FieldSpec::Kind::rational_functions: {
        const FieldSpec base = field.base();
        auto coeff = [&]() {
            if (base.is_finite()) return Element::from_index(base, rng.below(base.order()));
            return Element::from_int(base, rng.between(-3, 3));
        };
        Poly num;
        const auto num_deg = rng.below(3);
        for (std::uint64_t i = 0; i <= num_deg; ++i) num.push_back(coeff());
        Poly den{Element::one(base)};
        if (rng.below(2) == 1) den = Poly{coeff(), Element::one(base)};
        return ElementAccess::ratfun(field, std::move(num), std::move(den));
    }
    }
    throw UsageError("unreachable field kind");
}

std::vector<Element> all_elements(const FieldSpec& field) {
    if (!field.is_finite()) throw UsageError("field " + field.to_string() + " is infinite");
    std::vector<Element> out;
    out.reserve(field.order());
    for (std::uint64_t i = 0; i < field.order(); ++i) out.push_back(Element::from_index(field, i));
    return out;
}

// ---------------------------------------------------------------------------
// FieldDerivation

FieldDerivation FieldDerivation::zero(const FieldSpec& field) {
    return FieldDerivation(field, Rule::zero, Element::zero(field));
}

FieldDerivation FieldDerivation::scaled_ddt(const Element& c) {
    if (!c.field().is_function_field())
        throw UsageError("d/dt needs a rational function field, got " + c.field().to_string());
    if (c.is_zero()) return zero(c.field());
    return FieldDerivation(c.field(), Rule::scaled_ddt, c);
}

FieldDerivation FieldDerivation::table(const FieldSpec& field, std::map<std::string, Element> values) {
    FieldDerivation mu(field, Rule::table, Element::zero(field));
    mu.values_ = std::move(values);
    return mu;
}

Element FieldDerivation::operator()(const Element& a) const {
    if (!(a.field() == field_))
        throw UsageError("field mismatch: derivation over " + field_.to_string() + " applied to " +
                         a.field().to_string());
    switch (rule_) {
    case Rule::zero: return Element::zero(field_);
    case Rule::scaled_ddt: return scale_ * a.ddt();
    case Rule::table: {
        auto it = values_.find(a.to_string());
        if (it == values_.end()) throw DomainError("derivation table has no value at " + a.to_string());
        return it->second;
    }
    }
    throw UsageError("unreachable derivation rule");
}

std::string FieldDerivation::describe() const {
    switch (rule_) {
    case Rule::zero: return "zero";
    case Rule::scaled_ddt: return "c*d/dt c=" + scale_.to_string();
    case Rule::table: {
        std::ostringstream os;
        os << "table";
        for (const auto& [k, v] : values_) os << ' ' << k << '=' << v.to_string();
        return os.str();
    }
    }
    return "?";
}

FieldDerivation fit_field_derivation(const FieldSpec& field,
                                     const std::vector<std::pair<Element, Element>>& samples) {
    bool all_zero = true;
    for (const auto& [a, mu_a] : samples) all_zero = all_zero && mu_a.is_zero();
    if (all_zero) return FieldDerivation::zero(field);

    if (field.is_function_field()) {
        for (const auto& [a, mu_a] : samples) {
            const Element da = a.ddt();
            if (da.is_zero()) continue;
            const Element c = mu_a / da;
            bool fits = true;
            for (const auto& [b, mu_b] : samples) fits = fits && mu_b == c * b.ddt();
            if (fits) return FieldDerivation::scaled_ddt(c);
            break;
        }
    }
    std::map<std::string, Element> values;
    for (const auto& [a, mu_a] : samples) values.emplace(a.to_string(), mu_a);
    return FieldDerivation::table(field, std::move(values));
}

}  // namespace rankderiv
