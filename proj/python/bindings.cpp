#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rankderiv/derivations.hpp"
#include "rankderiv/errors.hpp"
#include "rankderiv/rank_factor.hpp"
#include "rankderiv/solver_oracle.hpp"

namespace py = pybind11;
using namespace rankderiv;

namespace {

Element to_element(const FieldSpec& field, const py::handle& v) {
    if (py::isinstance<Element>(v)) return v.cast<Element>();
    if (py::isinstance<py::int_>(v)) return Element::parse(field, py::str(v).cast<std::string>());
    return Element::parse(field, v.cast<std::string>());
}

// Rows of literals, ints or Elements.
Matrix matrix_from_rows(const FieldSpec& field, const py::sequence& rows) {
    const std::size_t r = rows.size();
    std::size_t c = 0;
    std::vector<std::vector<Element>> cells;
    for (const auto& row : rows) {
        const auto seq = row.cast<py::sequence>();
        if (!cells.empty() && seq.size() != c) throw UsageError("ragged rows");
        c = seq.size();
        std::vector<Element> line;
        for (const auto& v : seq) line.push_back(to_element(field, v));
        cells.push_back(std::move(line));
    }
    Matrix m(r, c, field);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = cells[i][j];
    return m;
}

py::list matrix_to_rows(const Matrix& m) {
    py::list rows;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        py::list row;
        for (std::size_t j = 0; j < m.cols(); ++j) row.append(m(i, j).to_string());
        rows.append(row);
    }
    return rows;
}

VerifyMode mode_of(bool exhaustive, std::size_t samples, std::uint64_t seed) {
    return exhaustive ? VerifyMode::exhaustive_mode() : VerifyMode::sampled(samples, seed);
}

}  // namespace

PYBIND11_MODULE(_rankderiv, m) {
    m.doc() = "Exact matrices over Q, F_p and rational function fields; rank-s product-rule maps.";

    auto usage = py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", usage.ptr());
    py::register_exception<DomainError>(m, "DomainError", PyExc_ArithmeticError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<ResourceError>(m, "ResourceError", PyExc_RuntimeError);
    py::register_exception<ExtractionError>(m, "ExtractionError", PyExc_RuntimeError);

    py::class_<FieldSpec>(m, "Field")
        .def(py::init([](const std::string& spec) { return FieldSpec::parse(spec); }), py::arg("spec"))
        .def_property_readonly("characteristic", &FieldSpec::characteristic)
        .def_property_readonly("is_finite", &FieldSpec::is_finite)
        .def_property_readonly("is_function_field", &FieldSpec::is_function_field)
        .def_property_readonly("order", &FieldSpec::order)
        .def(py::self == py::self)
        .def("__str__", &FieldSpec::to_string)
        .def("__repr__", [](const FieldSpec& f) { return "Field('" + f.to_string() + "')"; });

    py::class_<Element>(m, "Element")
        .def(py::init([](const FieldSpec& f, const py::object& v) { return to_element(f, v); }), py::arg("field"),
             py::arg("value"))
        .def_static("zero", &Element::zero)
        .def_static("one", &Element::one)
        .def_static("generator", &Element::generator)
        .def_property_readonly("field", &Element::field)
        .def("is_zero", &Element::is_zero)
        .def("is_one", &Element::is_one)
        .def("inv", &Element::inv)
        .def("ddt", &Element::ddt)
        .def(py::self + py::self)
        .def(py::self - py::self)
        .def(py::self * py::self)
        .def(py::self / py::self)
        .def(-py::self)
        .def(py::self == py::self)
        .def(py::self != py::self)
        .def("__hash__", [](const Element& e) { return py::hash(py::str(e.field().to_string() + ":" + e.to_string())); })
        .def("__str__", &Element::to_string)
        .def("__repr__", [](const Element& e) { return "Element('" + e.to_string() + "')"; });

    py::class_<Matrix>(m, "Matrix")
        .def(py::init(&matrix_from_rows), py::arg("field"), py::arg("rows"))
        .def_static("parse", &parse_matrix)
        .def_static("zero", &Matrix::zero)
        .def_static("identity", &Matrix::identity)
        .def_static("unit", &Matrix::unit, py::arg("n"), py::arg("i"), py::arg("j"), py::arg("field"))
        .def_property_readonly("rows", &Matrix::rows)
        .def_property_readonly("cols", &Matrix::cols)
        .def_property_readonly("field", &Matrix::field)
        .def("__getitem__",
             [](const Matrix& a, std::pair<std::size_t, std::size_t> ij) {
                 if (ij.first >= a.rows() || ij.second >= a.cols()) throw py::index_error("matrix index out of range");
                 return a(ij.first, ij.second);
             })
        .def("to_list", &matrix_to_rows)
        .def("is_zero", &Matrix::is_zero)
        .def("key", &Matrix::key)
        .def("transpose", &Matrix::transpose)
        .def("__add__", [](const Matrix& a, const Matrix& b) { return mat_arith(a, b, MatOp::add); })
        .def("__sub__", [](const Matrix& a, const Matrix& b) { return mat_arith(a, b, MatOp::sub); })
        .def("__matmul__", [](const Matrix& a, const Matrix& b) { return mat_arith(a, b, MatOp::mul); })
        .def("__neg__", [](const Matrix& a) { return -a; })
        .def(py::self == py::self)
        .def(py::self != py::self)
        .def("__str__", &format_matrix)
        .def("__repr__", [](const Matrix& a) { return "Matrix.parse('''" + format_matrix(a) + "''')"; });

    m.def("rank", &rank);
    m.def("commutator", &commutator);
    m.def("rank_normal_form", [](const Matrix& a) {
        auto r = rank_normal_form(a);
        return py::make_tuple(r.P, r.k, r.Q);
    });
    m.def("nullspace", [](const Matrix& a) {
        std::vector<Matrix> out;
        for (const auto& v : nullspace(a)) out.push_back(Matrix::column(v));
        return out;
    });
    m.def("collect_rank_k", &collect_rank_k, py::arg("n"), py::arg("k"), py::arg("field"));
    m.def("collect_rank_at_most", &collect_rank_at_most, py::arg("n"), py::arg("k"), py::arg("field"));
    m.def("random_rank_k", &random_rank_k, py::arg("n"), py::arg("k"), py::arg("field"), py::arg("seed"));

    m.def(
        "factor_rank_s",
        [](const Matrix& y, std::size_t s, bool mirrored) {
            auto f = factor_rank_s(y, s, mirrored ? PadOrder::mirrored : PadOrder::standard);
            return py::make_tuple(f.y1, f.y2);
        },
        py::arg("y"), py::arg("s"), py::arg("mirrored") = false);
    m.def(
        "adapted_factor",
        [](const Matrix& x, const Matrix& y, std::size_t s) {
            auto f = adapted_factor(x, y, s);
            return py::make_tuple(f.x1, f.x2, to_string(f.case_tag));
        },
        py::arg("x"), py::arg("y"), py::arg("s"));
    m.def("rank_set", &rank_set);
    m.def("cover_rank", &cover_rank, py::arg("n"), py::arg("k"));
    m.def("gap_ranks", &gap_ranks);

    py::class_<FieldDerivation>(m, "FieldDerivation")
        .def_static("zero", &FieldDerivation::zero)
        .def_static("scaled_ddt", &FieldDerivation::scaled_ddt)
        .def_property_readonly("scale", &FieldDerivation::scale)
        .def("__call__", &FieldDerivation::operator())
        .def("describe", &FieldDerivation::describe)
        .def("__repr__", &FieldDerivation::describe);

    py::class_<CanonicalDerivation>(m, "CanonicalDerivation")
        .def(py::init([](const Matrix& A, const FieldDerivation& mu) { return CanonicalDerivation{A, mu}; }),
             py::arg("A"), py::arg("mu"))
        .def_readonly("A", &CanonicalDerivation::A)
        .def_readonly("mu", &CanonicalDerivation::mu)
        .def("__call__", [](const CanonicalDerivation& D, const Matrix& x) { return apply_derivation(D, x); });
    m.def("apply_derivation", &apply_derivation);
    m.def("normalize_inner", &normalize_inner);

    py::class_<Domain>(m, "Domain")
        .def_static("full", &Domain::full)
        .def_static("rank_leq", &Domain::rank_leq)
        .def_static("rank_exact", &Domain::rank_exact)
        .def_static("rank_set_union", &Domain::rank_set_union)
        .def_static("parse", &Domain::parse)
        .def("contains_rank", &Domain::contains_rank, py::arg("n"), py::arg("r"))
        .def(py::self == py::self)
        .def("__str__", &Domain::tag);

    py::class_<DeltaMap>(m, "DeltaMap")
        .def_static("from_function", &DeltaMap::from_rule, py::arg("n"), py::arg("field"), py::arg("domain"),
                    py::arg("fn"))
        .def_static("from_table", &DeltaMap::from_table, py::arg("n"), py::arg("field"), py::arg("domain"),
                    py::arg("records"))
        .def_static("parse", &parse_delta_table)
        .def_property_readonly("n", &DeltaMap::n)
        .def_property_readonly("field", &DeltaMap::field)
        .def_property_readonly("domain", &DeltaMap::domain)
        .def_property_readonly("records", &DeltaMap::records)
        .def("defined_at", &DeltaMap::defined_at)
        .def("__call__", &DeltaMap::operator())
        .def("tabulate", &DeltaMap::tabulate)
        .def("__str__", &format_delta_table);

    m.def("make_delta", &make_delta, py::arg("D"), py::arg("garbage_ranks"), py::arg("seed"),
          py::arg("target_s") = std::nullopt);
    m.def("identity_delta", &identity_delta);
    m.def("zero_delta", &zero_delta);
    m.def("linear_combination", &linear_combination);

    py::class_<Violation>(m, "Violation")
        .def_readonly("x", &Violation::x)
        .def_readonly("y", &Violation::y)
        .def_readonly("lhs", &Violation::lhs)
        .def_readonly("rhs", &Violation::rhs);
    py::class_<VerifyReport>(m, "VerifyReport")
        .def_readonly("pairs_checked", &VerifyReport::pairs_checked)
        .def_readonly("violation_count", &VerifyReport::violation_count)
        .def_readonly("violations", &VerifyReport::violations)
        .def_property_readonly("passed", &VerifyReport::passed);
    m.def(
        "verify_hypothesis",
        [](const DeltaMap& delta, std::size_t s, bool exhaustive, std::size_t samples, std::uint64_t seed,
           bool mixed) {
            return verify_hypothesis(delta, s, mode_of(exhaustive, samples, seed),
                                     mixed ? VerifyScope::mixed_low_rank : VerifyScope::rank_s_pairs);
        },
        py::arg("delta"), py::arg("s"), py::arg("exhaustive") = true, py::arg("samples") = 1000,
        py::arg("seed") = 0, py::arg("mixed") = false);

    py::class_<LinearCombinationReport>(m, "LinearCombinationReport")
        .def_readonly("first", &LinearCombinationReport::first)
        .def_readonly("second", &LinearCombinationReport::second)
        .def_readonly("combined", &LinearCombinationReport::combined)
        .def_property_readonly("holds", &LinearCombinationReport::holds);
    m.def(
        "check_linear_combination",
        [](const DeltaMap& d1, const DeltaMap& d2, const Element& l1, const Element& l2, std::size_t s) {
            return check_linear_combination(d1, d2, l1, l2, s);
        },
        py::arg("d1"), py::arg("d2"), py::arg("l1"), py::arg("l2"), py::arg("s"));

    py::class_<Inconsistency>(m, "Inconsistency")
        .def_readonly("y", &Inconsistency::y)
        .def_readonly("first", &Inconsistency::first)
        .def_readonly("second", &Inconsistency::second);
    py::class_<ExtensionResult>(m, "ExtensionResult")
        .def_readonly("extended", &ExtensionResult::extended)
        .def_readonly("extended_count", &ExtensionResult::extended_count)
        .def_readonly("inconsistencies", &ExtensionResult::inconsistencies)
        .def_property_readonly("consistent", &ExtensionResult::consistent);
    m.def("extend_to_low_ranks", &extend_to_low_ranks, py::arg("delta"), py::arg("s"));

    m.def("default_probes", &default_probes);
    m.def("extract_derivation", &extract_derivation, py::arg("delta"), py::arg("s"),
          py::arg("probes") = std::vector<Element>{});

    py::class_<EqualityWitness>(m, "EqualityWitness")
        .def_readonly("z", &EqualityWitness::z)
        .def_readonly("rank", &EqualityWitness::rank)
        .def_readonly("kind", &EqualityWitness::kind);
    py::class_<ReconstructionReport>(m, "ReconstructionReport")
        .def_readonly("derivation", &ReconstructionReport::derivation)
        .def_readonly("s", &ReconstructionReport::s)
        .def_readonly("union_ranks", &ReconstructionReport::union_ranks)
        .def_readonly("gap_ranks", &ReconstructionReport::gap_ranks)
        .def_readonly("checked", &ReconstructionReport::checked)
        .def_readonly("failures", &ReconstructionReport::failures)
        .def_property_readonly("passed", &ReconstructionReport::passed);
    m.def(
        "reconstruct_full",
        [](const DeltaMap& delta, bool exhaustive, std::size_t samples, std::uint64_t seed) {
            return reconstruct_full(delta, mode_of(exhaustive, samples, seed));
        },
        py::arg("delta"), py::arg("exhaustive") = true, py::arg("samples") = 1000, py::arg("seed") = 0);

    py::class_<SolutionSpace>(m, "SolutionSpace")
        .def_readonly("dimension", &SolutionSpace::dimension)
        .def_readonly("unknowns", &SolutionSpace::unknowns)
        .def_readonly("blocks", &SolutionSpace::blocks)
        .def_readonly("equation_rank", &SolutionSpace::equation_rank)
        .def_readonly("basis", &SolutionSpace::basis);
    m.def("solution_space", &solution_space, py::arg("n"), py::arg("s"), py::arg("field"));
    m.def("rank_count", &rank_count, py::arg("n"), py::arg("k"), py::arg("field"));
    m.def("rank_count_formula", &rank_count_formula, py::arg("n"), py::arg("k"), py::arg("q"));
}
