#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rankderiv/scalars.hpp"

namespace rankderiv {

using Vector = std::vector<Element>;

/// Dense exact matrix over one FieldSpec, stored row-major.
///
/// Square n x n matrices are the main citizens; rectangular shapes exist for
/// rank factors and kernel blocks. Indices are 0-based throughout the API.
class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols, const FieldSpec& field);

    static Matrix zero(std::size_t n, const FieldSpec& field) { return Matrix(n, n, field); }
    static Matrix identity(std::size_t n, const FieldSpec& field);
    // e_{ij}
    static Matrix unit(std::size_t n, std::size_t i, std::size_t j, const FieldSpec& field);
    // Sum of e_{ii} over the given diagonal positions.
    static Matrix diagonal_ones(std::size_t n, const std::vector<std::size_t>& positions, const FieldSpec& field);
    // J_k = e_{11} + ... + e_{kk}
    static Matrix leading_ones(std::size_t n, std::size_t k, const FieldSpec& field);
    // Column vector as an n x 1 matrix.
    static Matrix column(const Vector& v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    // Dimension of a square matrix; UsageError otherwise.
    std::size_t n() const;
    bool is_square() const { return rows_ == cols_; }
    const FieldSpec& field() const { return field_; }

    const Element& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    // Callers must keep entries in field().
    Element& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const std::vector<Element>& entries() const { return data_; }

    bool is_zero() const;
    Matrix transpose() const;
    Matrix scaled(const Element& c) const;
    // Entrywise map (used for the lift of a field derivation).
    template <typename F>
    Matrix map(F&& f) const {
        Matrix r(rows_, cols_, field_);
        for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] = f(data_[i]);
        return r;
    }

    // Space-separated entry literals in row-major order; unique per matrix.
    std::string key() const;

    friend Matrix operator+(const Matrix& a, const Matrix& b);
    friend Matrix operator-(const Matrix& a, const Matrix& b);
    friend Matrix operator*(const Matrix& a, const Matrix& b);
    Matrix operator-() const;
    friend bool operator==(const Matrix& a, const Matrix& b);
    friend bool operator!=(const Matrix& a, const Matrix& b) { return !(a == b); }

private:
    std::size_t rows_;
    std::size_t cols_;
    FieldSpec field_;
    std::vector<Element> data_;
};

enum class MatOp { add, sub, mul };

// Checked ring operation; UsageError on shape or field mismatch.
Matrix mat_arith(const Matrix& a, const Matrix& b, MatOp op);

// [a, x] = a x - x a
Matrix commutator(const Matrix& a, const Matrix& x);

std::size_t rank(const Matrix& m);

struct RankNormalForm {
    Matrix P;
    std::size_t k;
    Matrix Q;
};

// P * J_k * Q == m with P, Q invertible; m must be square.
RankNormalForm rank_normal_form(const Matrix& m);

// Basis of {v : m v = 0}, one vector per free column of the reduced row
// echelon form, with a 1 in that free position.
std::vector<Vector> nullspace(const Matrix& m);

// Rows of m brought to reduced row echelon form (zero rows dropped).
Matrix reduced_row_echelon(const Matrix& m);

/// Cursor over all n x n matrices of rank exactly k over a finite field, in
/// lexicographic order of the row-major entry sequence (entries ordered by
/// field index). Rows are chosen depth-first and branches that cannot reach
/// rank k are pruned.
class RankKEnumerator {
public:
    RankKEnumerator(std::size_t n, std::size_t k, const FieldSpec& field);

    std::optional<Matrix> next();

private:
    struct Echelon {
        std::vector<Vector> rows;
        std::vector<std::size_t> pivots;
    };

    Vector row_from_counter(std::uint64_t counter) const;

    std::size_t n_;
    std::size_t k_;
    FieldSpec field_;
    std::uint64_t rows_per_level_;
    std::vector<Element> elements_;
    std::vector<Vector> current_;
    std::vector<std::uint64_t> counters_;
    std::vector<Echelon> bases_;  // bases_[r] spans rows 0..r-1
    long depth_ = 0;
};

// UsageError for infinite fields or k > n.
RankKEnumerator enumerate_rank_k(std::size_t n, std::size_t k, const FieldSpec& field);
std::vector<Matrix> collect_rank_k(std::size_t n, std::size_t k, const FieldSpec& field);
// All matrices of rank <= k, ordered by rank then lexicographically.
std::vector<Matrix> collect_rank_at_most(std::size_t n, std::size_t k, const FieldSpec& field);

Matrix random_matrix(std::size_t rows, std::size_t cols, const FieldSpec& field, Rng& rng);
// Deterministic per seed: product of random full-rank n x k and k x n factors.
Matrix random_rank_k(std::size_t n, std::size_t k, const FieldSpec& field, std::uint64_t seed);

// Text format: "n <n> field <spec>" followed by n lines of n literals.
std::string format_matrix(const Matrix& m);
void write_matrix(std::ostream& os, const Matrix& m);
// Reads the next matrix from the stream, skipping blank lines; nullopt at EOF.
std::optional<Matrix> read_matrix(std::istream& is);
Matrix parse_matrix(std::string_view text);
// Parses n*n literals (row-major) into a square matrix.
Matrix matrix_from_literals(std::size_t n, const FieldSpec& field, const std::vector<std::string>& literals);

}  // namespace rankderiv
