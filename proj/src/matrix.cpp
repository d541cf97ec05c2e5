#include "rankderiv/matrix.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

#include "rankderiv/errors.hpp"

namespace rankderiv {

Matrix::Matrix(std::size_t rows, std::size_t cols, const FieldSpec& field)
    : rows_(rows), cols_(cols), field_(field), data_(rows * cols, Element::zero(field)) {}

Matrix Matrix::identity(std::size_t n, const FieldSpec& field) {
    Matrix m(n, n, field);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = Element::one(field);
    return m;
}

Matrix Matrix::unit(std::size_t n, std::size_t i, std::size_t j, const FieldSpec& field) {
    if (i >= n || j >= n) throw UsageError("unit matrix index out of range");
    Matrix m(n, n, field);
    m(i, j) = Element::one(field);
    return m;
}

Matrix Matrix::diagonal_ones(std::size_t n, const std::vector<std::size_t>& positions, const FieldSpec& field) {
    Matrix m(n, n, field);
    for (std::size_t p : positions) {
        if (p >= n) throw UsageError("diagonal position out of range");
        m(p, p) = Element::one(field);
    }
    return m;
}

Matrix Matrix::leading_ones(std::size_t n, std::size_t k, const FieldSpec& field) {
    if (k > n) throw UsageError("J_k needs k <= n");
    Matrix m(n, n, field);
    for (std::size_t i = 0; i < k; ++i) m(i, i) = Element::one(field);
    return m;
}

Matrix Matrix::column(const Vector& v) {
    if (v.empty()) throw UsageError("empty column vector");
    Matrix m(v.size(), 1, v.front().field());
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
}

std::size_t Matrix::n() const {
    if (!is_square()) throw UsageError("matrix is not square");
    return rows_;
}

bool Matrix::is_zero() const {
    for (const auto& e : data_)
        if (!e.is_zero()) return false;
    return true;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_, field_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::scaled(const Element& c) const {
    return map([&](const Element& e) { return e * c; });
}

std::string Matrix::key() const {
    std::string out;
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (i) out += ' ';
        out += data_[i].to_string();
    }
    return out;
}

namespace {

void require_compatible(const Matrix& a, const Matrix& b, bool product) {
    if (!(a.field() == b.field()))
        throw UsageError("field mismatch: " + a.field().to_string() + " vs " + b.field().to_string());
    const bool ok = product ? a.cols() == b.rows() : (a.rows() == b.rows() && a.cols() == b.cols());
    if (!ok)
        throw UsageError("dimension mismatch: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace

Matrix operator+(const Matrix& a, const Matrix& b) {
    require_compatible(a, b, false);
    Matrix r = a;
    for (std::size_t i = 0; i < r.data_.size(); ++i) r.data_[i] += b.data_[i];
    return r;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    require_compatible(a, b, false);
    Matrix r = a;
    for (std::size_t i = 0; i < r.data_.size(); ++i) r.data_[i] -= b.data_[i];
    return r;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    require_compatible(a, b, true);
    Matrix r(a.rows_, b.cols_, a.field_);
    for (std::size_t i = 0; i < a.rows_; ++i)
        for (std::size_t l = 0; l < a.cols_; ++l) {
            const Element& ail = a(i, l);
            if (ail.is_zero()) continue;
            for (std::size_t j = 0; j < b.cols_; ++j) {
                const Element& blj = b(l, j);
                if (!blj.is_zero()) r(i, j) += ail * blj;
            }
        }
    return r;
}

Matrix Matrix::operator-() const {
    return map([](const Element& e) { return -e; });
}

bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.field_ == b.field_ && a.data_ == b.data_;
}

Matrix mat_arith(const Matrix& a, const Matrix& b, MatOp op) {
    switch (op) {
    case MatOp::add: return a + b;
    case MatOp::sub: return a - b;
    case MatOp::mul: return a * b;
    }
    throw UsageError("unknown matrix op");
}

Matrix commutator(const Matrix& a, const Matrix& x) { return a * x - x * a; }

// ---------------------------------------------------------------------------
// Elimination

namespace {

// Gauss-Jordan on a in place; pivot = first nonzero in the column scan.
// Returns the pivot columns.
std::vector<std::size_t> rref_in_place(Matrix& a) {
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < a.cols() && r < a.rows(); ++c) {
        std::size_t pi = r;
        while (pi < a.rows() && a(pi, c).is_zero()) ++pi;
        if (pi == a.rows()) continue;
        if (pi != r)
            for (std::size_t j = 0; j < a.cols(); ++j) std::swap(a(pi, j), a(r, j));
        const Element inv = a(r, c).inv();
        for (std::size_t j = c; j < a.cols(); ++j) a(r, j) *= inv;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            if (i == r || a(i, c).is_zero()) continue;
            const Element f = a(i, c);
            for (std::size_t j = c; j < a.cols(); ++j) a(i, j) -= f * a(r, j);
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

}  // namespace

std::size_t rank(const Matrix& m) {
    std::vector<Element> a = m.entries();
    const std::size_t rows = m.rows();
    const std::size_t cols = m.cols();
    auto at = [&](std::size_t i, std::size_t j) -> Element& { return a[i * cols + j]; };
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t pi = r;
        while (pi < rows && at(pi, c).is_zero()) ++pi;
        if (pi == rows) continue;
        if (pi != r)
            for (std::size_t j = c; j < cols; ++j) std::swap(at(pi, j), at(r, j));
        const Element inv = at(r, c).inv();
        for (std::size_t i = r + 1; i < rows; ++i) {
            if (at(i, c).is_zero()) continue;
            const Element f = at(i, c) * inv;
            for (std::size_t j = c; j < cols; ++j) at(i, j) -= f * at(r, j);
        }
        ++r;
    }
    return r;
}

Matrix reduced_row_echelon(const Matrix& m) {
    Matrix a = m;
    const std::size_t r = rref_in_place(a).size();
    Matrix out(r, m.cols(), m.field());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = a(i, j);
    return out;
}

std::vector<Vector> nullspace(const Matrix& m) {
    Matrix a = m;
    const auto pivots = rref_in_place(a);
    std::vector<bool> is_pivot(m.cols(), false);
    for (auto c : pivots) is_pivot[c] = true;

    std::vector<Vector> basis;
    for (std::size_t f = 0; f < m.cols(); ++f) {
        if (is_pivot[f]) continue;
        Vector v(m.cols(), Element::zero(m.field()));
        v[f] = Element::one(m.field());
        for (std::size_t t = 0; t < pivots.size(); ++t) v[pivots[t]] = -a(t, f);
        basis.push_back(std::move(v));
    }
    return basis;
}

RankNormalForm rank_normal_form(const Matrix& m) {
    const std::size_t n = m.n();
    const FieldSpec& F = m.field();
    Matrix work = m;
    Matrix P = Matrix::identity(n, F);
    Matrix Q = Matrix::identity(n, F);

    // Invariant: P * work * Q == m. Row ops on work are undone on the
    // columns of P, column ops on the rows of Q.
    std::size_t r = 0;
    for (; r < n; ++r) {
        std::size_t pi = n, pc = n;
        for (std::size_t c = r; c < n && pi == n; ++c)
            for (std::size_t i = r; i < n; ++i)
                if (!work(i, c).is_zero()) {
                    pi = i;
                    pc = c;
                    break;
                }
        if (pi == n) break;

        if (pi != r)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(work(pi, j), work(r, j));
                std::swap(P(j, pi), P(j, r));
            }
        if (pc != r)
            for (std::size_t i = 0; i < n; ++i) {
                std::swap(work(i, pc), work(i, r));
                std::swap(Q(pc, i), Q(r, i));
            }

        const Element pivot = work(r, r);
        const Element pivot_inv = pivot.inv();
        for (std::size_t j = 0; j < n; ++j) work(r, j) *= pivot_inv;
        for (std::size_t i = 0; i < n; ++i) P(i, r) *= pivot;

        // row_i -= a row_r  <=>  column r of P += a column i of P
        for (std::size_t i = 0; i < n; ++i) {
            if (i == r || work(i, r).is_zero()) continue;
            const Element a = work(i, r);
            for (std::size_t j = 0; j < n; ++j) work(i, j) -= a * work(r, j);
            for (std::size_t t = 0; t < n; ++t) P(t, r) += a * P(t, i);
        }
        // col_j -= b col_r  <=>  row r of Q += b row j of Q
        for (std::size_t j = r + 1; j < n; ++j) {
            if (work(r, j).is_zero()) continue;
            const Element b = work(r, j);
            for (std::size_t i = 0; i < n; ++i) work(i, j) -= b * work(i, r);
            for (std::size_t t = 0; t < n; ++t) Q(r, t) += b * Q(j, t);
        }
    }
    return RankNormalForm{std::move(P), r, std::move(Q)};
}

// ---------------------------------------------------------------------------
// Enumeration

RankKEnumerator::RankKEnumerator(std::size_t n, std::size_t k, const FieldSpec& field)
    : n_(n), k_(k), field_(field), rows_per_level_(1) {
    if (!field.is_finite()) throw UsageError("enumeration needs a finite field, got " + field.to_string());
    if (n == 0 || k > n) throw UsageError("enumeration needs 0 <= k <= n and n >= 1");
    for (std::size_t i = 0; i < n; ++i) {
        if (rows_per_level_ > (1ULL << 40) / field.order()) throw ResourceError("enumeration space too large");
        rows_per_level_ *= field.order();
    }
    elements_ = all_elements(field);
    current_.assign(n, Vector{});
    counters_.assign(n, 0);
    bases_.assign(n + 1, Echelon{});
}

Vector RankKEnumerator::row_from_counter(std::uint64_t counter) const {
    Vector row(n_, elements_[0]);
    for (std::size_t j = n_; j-- > 0;) {
        row[j] = elements_[counter % field_.order()];
        counter /= field_.order();
    }
    return row;
}

std::optional<Matrix> RankKEnumerator::next() {
    while (depth_ >= 0) {
        const auto r = static_cast<std::size_t>(depth_);
        if (counters_[r] == rows_per_level_) {
            --depth_;
            continue;
        }
        Vector row = row_from_counter(counters_[r]++);

        // Reduce against the echelon basis of the rows above.
        const Echelon& above = bases_[r];
        Vector reduced = row;
        for (std::size_t b = 0; b < above.rows.size(); ++b) {
            const std::size_t p = above.pivots[b];
            if (reduced[p].is_zero()) continue;
            const Element f = reduced[p];
            for (std::size_t j = 0; j < n_; ++j) reduced[j] -= f * above.rows[b][j];
        }
        std::size_t lead = 0;
        while (lead < n_ && reduced[lead].is_zero()) ++lead;
        const std::size_t new_rank = above.rows.size() + (lead < n_ ? 1 : 0);
        const std::size_t rows_left = n_ - r - 1;
        if (new_rank > k_ || new_rank + rows_left < k_) continue;

        Echelon next = above;
        if (lead < n_) {
            const Element inv = reduced[lead].inv();
            for (auto& e : reduced) e *= inv;
            // Keep the basis fully reduced so a single pass suffices above.
            for (auto& other : next.rows) {
                if (other[lead].is_zero()) continue;
                const Element f = other[lead];
                for (std::size_t j = 0; j < n_; ++j) other[j] -= f * reduced[j];
            }
            next.rows.push_back(std::move(reduced));
            next.pivots.push_back(lead);
        }
        current_[r] = std::move(row);
        bases_[r + 1] = std::move(next);

        if (r + 1 == n_) {
            Matrix m(n_, n_, field_);
            for (std::size_t i = 0; i < n_; ++i)
                for (std::size_t j = 0; j < n_; ++j) m(i, j) = current_[i][j];
            return m;
        }
        depth_ = static_cast<long>(r + 1);
        counters_[r + 1] = 0;
    }
    return std::nullopt;
}

RankKEnumerator enumerate_rank_k(std::size_t n, std::size_t k, const FieldSpec& field) {
    return RankKEnumerator(n, k, field);
}

std::vector<Matrix> collect_rank_k(std::size_t n, std::size_t k, const FieldSpec& field) {
    std::vector<Matrix> out;
    auto it = enumerate_rank_k(n, k, field);
    while (auto m = it.next()) out.push_back(std::move(*m));
    return out;
}

std::vector<Matrix> collect_rank_at_most(std::size_t n, std::size_t k, const FieldSpec& field) {
    std::vector<Matrix> out;
    for (std::size_t r = 0; r <= k && r <= n; ++r) {
        auto part = collect_rank_k(n, r, field);
        out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random generation

Matrix random_matrix(std::size_t rows, std::size_t cols, const FieldSpec& field, Rng& rng) {
    Matrix m(rows, cols, field);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = random_element(field, rng);
    return m;
}

Matrix random_rank_k(std::size_t n, std::size_t k, const FieldSpec& field, std::uint64_t seed) {
    if (k > n) throw UsageError("random_rank_k needs k <= n");
    if (k == 0) return Matrix::zero(n, field);
    Rng rng(seed);
    for (;;) {
        Matrix left = random_matrix(n, k, field, rng);
        Matrix right = random_matrix(k, n, field, rng);
        if (rank(left) != k || rank(right) != k) continue;
        Matrix m = left * right;
        if (rank(m) == k) return m;
    }
}

// ---------------------------------------------------------------------------
// Text format

std::string format_matrix(const Matrix& m) {
    std::ostringstream os;
    write_matrix(os, m);
    return os.str();
}

void write_matrix(std::ostream& os, const Matrix& m) {
    const std::size_t n = m.n();
    os << "n " << n << " field " << m.field().to_string() << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j) os << ' ';
            os << m(i, j).to_string();
        }
        os << '\n';
    }
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

bool next_nonblank(std::istream& is, std::string& line) {
    while (std::getline(is, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    return false;
}

}  // namespace

Matrix matrix_from_literals(std::size_t n, const FieldSpec& field, const std::vector<std::string>& literals) {
    if (literals.size() != n * n)
        throw ParseError("expected " + std::to_string(n * n) + " entries, got " + std::to_string(literals.size()));
    Matrix m(n, n, field);
    for (std::size_t i = 0; i < n * n; ++i) m(i / n, i % n) = Element::parse(field, literals[i]);
    return m;
}

std::optional<Matrix> read_matrix(std::istream& is) {
    std::string line;
    if (!next_nonblank(is, line)) return std::nullopt;
    const auto header = split_ws(line);
    if (header.size() != 4 || header[0] != "n" || header[2] != "field")
        throw ParseError("bad matrix header '" + line + "' (expected \"n <n> field <spec>\")");
    std::size_t n = 0;
    try {
        n = std::stoul(header[1]);
    } catch (const std::exception&) {
        throw ParseError("bad matrix dimension '" + header[1] + "'");
    }
    if (n == 0) throw ParseError("matrix dimension must be positive");
    const FieldSpec field = FieldSpec::parse(header[3]);
    std::vector<std::string> literals;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(is, line)) throw ParseError("matrix truncated after " + std::to_string(i) + " rows");
        auto row = split_ws(line);
        if (row.size() != n)
            throw ParseError("matrix row " + std::to_string(i + 1) + " has " + std::to_string(row.size()) +
                             " entries, expected " + std::to_string(n));
        literals.insert(literals.end(), row.begin(), row.end());
    }
    return matrix_from_literals(n, field, literals);
}

Matrix parse_matrix(std::string_view text) {
    std::istringstream is{std::string(text)};
    auto m = read_matrix(is);
    if (!m) throw ParseError("no matrix in input");
    std::string rest;
    if (next_nonblank(is, rest)) throw ParseError("trailing content after matrix: '" + rest + "'");
    return *m;
}

}  // namespace rankderiv
