import random
from fractions import Fraction

import pytest

import rankderiv as rd

F2 = rd.Field("F2")
F3 = rd.Field("F3")
Q = rd.Field("Q")
Qt = rd.Field("Q(t)")


def fraction_rank(rows):
    # Plain Gaussian elimination over Fraction.
    m = [[Fraction(v) for v in row] for row in rows]
    r = 0
    for c in range(len(m[0])):
        pivot = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c] / m[r][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        r += 1
    return r


def test_fields_and_elements():
    assert str(Qt) == "Q(t)"
    assert F3.is_finite and F3.order == 3
    assert rd.Element(F3, 2) * rd.Element(F3, 2) == rd.Element.one(F3)
    t = rd.Element.generator(Qt)
    assert str((t + rd.Element(Qt, 1)) * (t - rd.Element(Qt, 1))) == "t^2-1"
    assert (t * t).ddt() == rd.Element(Qt, "2*t")
    with pytest.raises(rd.ParseError):
        rd.Field("F9")
    with pytest.raises(rd.DomainError):
        rd.Element.zero(Q).inv()
    with pytest.raises(rd.UsageError):
        rd.Element(F2, 1) + rd.Element(F3, 1)


def test_rank_matches_fraction_oracle():
    rng = random.Random(11)
    for _ in range(50):
        n = rng.randint(1, 4)
        rows = [[rng.randint(-2, 2) for _ in range(n)] for _ in range(n)]
        assert rd.rank(rd.Matrix(Q, rows)) == fraction_rank(rows)


def test_rank_normal_form_round_trip():
    for seed in range(10):
        y = rd.random_rank_k(4, seed % 5, F3, seed)
        P, k, Qm = rd.rank_normal_form(y)
        J = rd.Matrix(F3, [[1 if i == j and i < k else 0 for j in range(4)] for i in range(4)])
        assert P @ J @ Qm == y
        assert k == rd.rank(y)


def test_factor_rank_s_postconditions():
    y = rd.Matrix.unit(4, 0, 0, F2)
    y1, y2 = rd.factor_rank_s(y, 2)
    assert y1.to_list() == [["1", "0", "0", "0"], ["0", "1", "0", "0"], ["0"] * 4, ["0"] * 4]
    assert y1 @ y2 == y
    m1, m2 = rd.factor_rank_s(y, 2, mirrored=True)
    assert (m1, m2) == (y2, y1)
    for y in rd.collect_rank_k(3, 1, F2):
        for s in (1, 2):
            y1, y2 = rd.factor_rank_s(y, s)
            assert y1 @ y2 == y and rd.rank(y1) == s and rd.rank(y2) == s
    with pytest.raises(rd.PreconditionError):
        rd.factor_rank_s(rd.Matrix.identity(2, F2), 1)


def test_adapted_factor():
    x = rd.Matrix.unit(4, 0, 1, F2)
    y = rd.Matrix.unit(4, 1, 1, F2) + rd.Matrix.unit(4, 2, 2, F2)
    x1, x2, case = rd.adapted_factor(x, y, 2)
    assert x1 @ x2 == x
    assert rd.rank(x2 @ y) in (0, 2)
    assert case in ("case-I", "case-II")


def test_rank_set_and_cover():
    assert rd.rank_set(8) == [8, 7, 5, 1]
    assert rd.gap_ranks(8) == [2, 3, 4, 6]
    assert rd.cover_rank(8, 6) == 7
    for n in range(2, 40):
        assert min(rd.rank_set(n)) <= n // 2
        for k in range(n + 1):
            s = rd.cover_rank(n, k)
            assert 2 * s - n <= k <= s


def test_solver_dimensions():
    assert rd.solution_space(2, 1, F2).dimension == 3
    assert rd.solution_space(2, 1, F3).dimension == 3
    space = rd.solution_space(2, 1, F2)
    assert (space.unknowns, space.blocks) == (40, 81)
    for b in space.basis:
        assert rd.verify_hypothesis(b, 1).passed
    assert rd.rank_count(2, 1, F2) == rd.rank_count_formula(2, 1, 2) == 9


def test_round_trip_over_f3():
    rng = random.Random(5)
    rows = [[rng.randint(0, 2) for _ in range(3)] for _ in range(3)]
    rows[0][0] = 0
    D = rd.CanonicalDerivation(rd.Matrix(F3, rows), rd.FieldDerivation.zero(F3))
    delta = rd.make_delta(D, {2, 3}, seed=9, target_s=1)
    got = rd.extract_derivation(delta, 1)
    assert got.A == rd.normalize_inner(D.A)
    for x in rd.collect_rank_at_most(3, 1, F3):
        assert delta(x) == got(x)


def test_function_field_mu():
    c = rd.Element(Qt, "t+2")
    A = rd.Matrix(Qt, [[0, "t"], ["1/t", 3]])
    D = rd.CanonicalDerivation(A, rd.FieldDerivation.scaled_ddt(c))
    delta = rd.make_delta(D, {2}, seed=1, target_s=1)
    got = rd.extract_derivation(delta, 1, rd.default_probes(Qt))
    t = rd.Element.generator(Qt)
    assert got.mu(t) == c
    assert got.A == rd.normalize_inner(A)
    x = rd.random_rank_k(2, 1, Qt, 4)
    assert delta(x) == rd.apply_derivation(got, x)


def test_verify_identity_fails_and_python_rules_work():
    bad = rd.verify_hypothesis(rd.identity_delta(2, F2), 1)
    assert not bad.passed and bad.pairs_checked == 81
    A = rd.Matrix(F2, [[0, 1], [1, 1]])
    ad = rd.DeltaMap.from_function(2, F2, rd.Domain.full(), lambda x: rd.commutator(A, x))
    assert rd.verify_hypothesis(ad, 1).passed
    report = rd.reconstruct_full(ad)
    assert report.passed and report.checked == 16
    ext = rd.extend_to_low_ranks(ad.tabulate(rd.collect_rank_k(2, 1, F2)), 1)
    assert ext.consistent
    assert ext.extended(rd.Matrix.zero(2, F2)).is_zero()


def test_delta_table_text_round_trip():
    table = rd.identity_delta(2, F2).tabulate(rd.collect_rank_at_most(2, 1, F2))
    text = str(table)
    assert text.startswith("delta n 2 field F2 domain full\n")
    back = rd.DeltaMap.parse(text)
    assert len(back.records) == 10
    assert str(back) == text
