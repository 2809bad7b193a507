import math
from fractions import Fraction

import pytest

from cpdzip.analysis import (
    CheckRow,
    PermScalingRelation,
    UnsupportedModelError,
    WRelation,
    banded_rows_matrix_tensor,
    bilinear_sign_model,
    brute_force_zero_prob,
    count_factorizations,
    cubic_census_classification,
    cubic_sign_model,
    cubic_sign_tensor,
    exact_rank_deficiency_prob,
    find_perm_scaling,
    find_w_relation,
    full_rank_prob_bound,
    gamma_bound,
    prob_zero_tensor,
    rank_one_sign_model,
    uniqueness_census,
    verify_examples,
)
from cpdzip.model import (
    Alphabet,
    BudgetExceededError,
    CpdzipError,
    Distribution,
    ModelSpec,
    uniform,
)
from cpdzip.rng import sample_tuple, stream_rng
from cpdzip.tensors import (
    FactorMatrix,
    FactorTuple,
    cpd_compose,
    rank_exact,
    zero_tensor,
)

U2 = uniform(2)


def generic_sign_model(n, order=3, r=2):
    a = Alphabet((-1, 1))
    row = tuple(U2 for _ in range(r))
    return ModelSpec(order, n, r, (a,) * order, (row,) * order)


# --- order-3 supersymmetric counts ------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 4])
def test_cubic_zero_tensor_count_is_2_to_n(n):
    m = cubic_sign_model(n, U2, U2)
    census = count_factorizations(zero_tensor(3, n), m)
    assert census.total_count == 2**n
    # every generator is a rank-deficient [a, -a] matrix
    assert census.full_rank_count == 0
    for ft in census.representatives:
        x = ft.matrices[0]
        assert x.column(1) == tuple(-v for v in x.column(0))


def test_cubic_single_anchor_count_is_2():
    n = 4
    m = cubic_sign_model(n, U2, U2)
    t = cubic_sign_tensor((1, 1, 1, 1), (-1, -1, -1, 1))
    census = count_factorizations(t, m)
    assert census.total_count == 2


def test_cubic_all_anchors_count_is_1():
    n = 4
    m = cubic_sign_model(n, U2, U2)
    t = cubic_sign_tensor((1, 1, 1, 1), (1, 1, 1, 1))
    assert count_factorizations(t, m).total_count == 1


def test_cubic_census_classification_n3():
    rows = cubic_census_classification(3)
    assert all(r.ok for r in rows)
    assert rows[-1].observed == "ok"


def test_cubic_census_respects_supersymmetric_space():
    # the census enumerates one matrix and replicates; total candidates 2^(2n)
    m = cubic_sign_model(2, U2, U2)
    census = count_factorizations(zero_tensor(3, 2), m, budget=16)
    assert census.total_count == 4
    with pytest.raises(BudgetExceededError):
        count_factorizations(zero_tensor(3, 2), m, budget=15)


# --- order-2 counts -----------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3])
def test_bilinear_zero_count_is_2_to_2n_plus_1(n):
    m = bilinear_sign_model(n, U2, U2, U2, U2)
    census = count_factorizations(zero_tensor(2, n), m)
    assert census.total_count == 2 ** (2 * n + 1)
    assert census.full_rank_count == 0


@pytest.mark.parametrize("m_rows,expected", [(1, 32), (2, 16), (3, 8)])
def test_bilinear_banded_counts(m_rows, expected):
    n = 4
    model = bilinear_sign_model(n, U2, U2, U2, U2)
    t = banded_rows_matrix_tensor(n, m_rows)
    census = count_factorizations(t, model)
    assert census.total_count == expected == 2 ** (n - m_rows + 2)
    # the second factor matrix is rank-deficient in every generator
    for ft in census.representatives:
        assert rank_exact(ft.matrices[1].rows) == 1


@pytest.mark.parametrize("n", [2, 3])
def test_bilinear_full_census_recorded(n):
    from cpdzip.analysis import bilinear_census_summary

    histogram = bilinear_census_summary(n)
    # every tuple in the 2^(4n) space lands somewhere
    assert sum(count * tensors for count, tensors in histogram.items()) == 2 ** (4 * n)
    # the zero matrix is the unique tensor with the maximal count 2^(2n+1)
    assert histogram[2 ** (2 * n + 1)] == 1
    assert max(histogram) == 2 ** (2 * n + 1)


def test_banded_tensor_shape():
    t = banded_rows_matrix_tensor(4, 2)
    assert t.entries[:4] == (0, 0, 0, 0)
    assert t.entries[4:8] == (2, 2, 2, 2)
    assert t.entries[8:12] == (2, 2, 2, 2)
    assert t.entries[12:] == (0, 0, 0, 0)


# --- closed-form probabilities ------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3])
def test_cubic_zero_prob_uniform(n):
    m = cubic_sign_model(n, U2, U2)
    assert prob_zero_tensor(m) == Fraction(1, 2) ** n
    assert prob_zero_tensor(m) == brute_force_zero_prob(m)


@pytest.mark.parametrize("n", [2, 3])
def test_cubic_zero_prob_skewed_matches_brute_force(n):
    p = Distribution((Fraction(1, 4), Fraction(3, 4)))
    q = Distribution((Fraction(2, 3), Fraction(1, 3)))
    m = cubic_sign_model(n, p, q)
    # bracket: P(-1)Q(1) + P(1)Q(-1) = 1/12 + 6/12 = 7/12
    assert prob_zero_tensor(m) == Fraction(7, 12) ** n
    assert prob_zero_tensor(m) == brute_force_zero_prob(m)


def test_bilinear_zero_prob_uniform_n2():
    m = bilinear_sign_model(2, U2, U2, U2, U2)
    assert prob_zero_tensor(m) == Fraction(1, 8)
    assert prob_zero_tensor(m) == brute_force_zero_prob(m)


def test_bilinear_zero_prob_skewed_matches_brute_force():
    px = Distribution((Fraction(1, 4), Fraction(3, 4)))
    pu = Distribution((Fraction(1, 3), Fraction(2, 3)))
    py = Distribution((Fraction(2, 5), Fraction(3, 5)))
    pv = U2
    m = bilinear_sign_model(2, px, pu, py, pv)
    assert prob_zero_tensor(m) == brute_force_zero_prob(m)


def test_prob_zero_refuses_other_shapes():
    with pytest.raises(UnsupportedModelError):
        prob_zero_tensor(rank_one_sign_model(3, 3, [U2] * 3))
    with pytest.raises(UnsupportedModelError):
        prob_zero_tensor(generic_sign_model(3))  # order 3 but not supersymmetric


# --- full-rank probability bounds ---------------------------------------------------


def test_full_rank_bound_values():
    p = Distribution((Fraction(1, 4), Fraction(3, 4)))
    m = rank_one_sign_model(5, 1, [U2])
    b = full_rank_prob_bound(m)
    assert b.rho_per_mode == (Fraction(1, 2),)
    assert b.zeta_per_mode == (Fraction(1, 32),)

    a = Alphabet((-1, 1))
    m2 = ModelSpec(1, 10, 2, (a,), ((p, p),))
    b2 = full_rank_prob_bound(m2)
    assert b2.rho_per_mode == (Fraction(3, 4),)
    assert b2.zeta_per_mode == (Fraction(3, 4) ** 10 + Fraction(3, 4) ** 9,)
    assert float(b2.zeta_per_mode[0]) == pytest.approx(0.13139820098876953)


def test_zeta_decreasing_in_n():
    p = Distribution((Fraction(1, 4), Fraction(3, 4)))
    a = Alphabet((-1, 1))
    zetas = []
    for n in (4, 6, 8, 10):
        m = ModelSpec(1, n, 2, (a,), ((p, p),))
        zetas.append(full_rank_prob_bound(m).zeta_per_mode[0])
    assert all(x > y for x, y in zip(zetas, zetas[1:]))


def test_exact_rank_deficiency_2x2_uniform_is_half():
    m = generic_sign_model(2)
    assert exact_rank_deficiency_prob(m, 1) == Fraction(1, 2)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("skewed", [False, True])
def test_rank_deficiency_below_zeta(n, skewed):
    a = Alphabet((-1, 1))
    d = Distribution((Fraction(3, 4), Fraction(1, 4))) if skewed else U2
    m = ModelSpec(3, n, 2, (a,) * 3, ((d, d),) * 3)
    bound = full_rank_prob_bound(m)
    for mode in (1, 2, 3):
        assert exact_rank_deficiency_prob(m, mode) <= bound.zeta_per_mode[mode - 1]


def test_rank_one_no_zero_symbol_never_deficient():
    m = rank_one_sign_model(3, 2, [U2] * 2)
    assert exact_rank_deficiency_prob(m, 1) == 0


# --- gamma bound --------------------------------------------------------------------


def test_gamma_bound_sign_order3():
    assert gamma_bound(generic_sign_model(4)) == 32  # 2! * 4^2


def test_gamma_bound_rank_one_sign():
    m = rank_one_sign_model(4, 3, [U2] * 3)
    assert gamma_bound(m) == 4  # scaling triples with product 1


def test_gamma_bound_asymmetric_alphabet_is_r_factorial():
    a = Alphabet((1, 2))
    m = ModelSpec(3, 4, 2, (a,) * 3, ((U2, U2),) * 3)
    assert gamma_bound(m) == math.factorial(2)  # only identity scalings feasible


def test_gamma_bound_order2_counts_invertible_minors():
    m = bilinear_sign_model(4, U2, U2, U2, U2)
    # 8 invertible 2x2 sign matrices, bound = 8^2
    assert gamma_bound(m) == 64


# --- essential uniqueness ------------------------------------------------------------


def full_rank_sample(m, seed, trial):
    while True:
        ft = sample_tuple(m, stream_rng(seed, trial))
        if all(rank_exact(x.rows) == m.components for x in ft.matrices):
            return ft
        trial += 10_000


def test_uniqueness_census_order3_certifies_all():
    m = generic_sign_model(4)
    for trial in range(5):
        ft = full_rank_sample(m, 101, trial)
        cert = uniqueness_census(cpd_compose(ft), m)
        assert cert.certified
        assert cert.full_rank_count <= cert.bound
        assert len(cert.relations) == cert.full_rank_count - 1
        for rel in cert.relations:
            assert isinstance(rel, PermScalingRelation)
            for r in range(m.components):
                prod_lam = math.prod(
                    (rel.lambdas[i][r] for i in range(3)), start=Fraction(1)
                )
                assert prod_lam == 1


def test_uniqueness_census_matches_brute_force_at_n3():
    m = generic_sign_model(3)
    ft = full_rank_sample(m, 103, 0)
    t = cpd_compose(ft)
    census = count_factorizations(t, m, budget=1 << 20)
    cert = uniqueness_census(t, m)
    assert cert.full_rank_count == census.full_rank_count
    # the generic full-rank class is the full orbit: 2 permutations x 16 scalings
    assert census.full_rank_count == 32
    assert len(census.classes) == 1 and len(census.classes[0]) == 32


def test_uniqueness_rank_one_scaling_only():
    m = rank_one_sign_model(3, 3, [U2] * 3)
    ft = full_rank_sample(m, 107, 0)
    t = cpd_compose(ft)
    cert = uniqueness_census(t, m)
    assert cert.certified
    assert cert.full_rank_count == 4  # sign flip patterns with product 1
    for rel in cert.relations:
        assert rel.permutation == (0,)
        assert math.prod((rel.lambdas[i][0] for i in range(3)), start=Fraction(1)) == 1


def test_uniqueness_order2_w_relation():
    m = bilinear_sign_model(3, U2, U2, U2, U2)
    ft = full_rank_sample(m, 109, 0)
    t = cpd_compose(ft)
    cert = uniqueness_census(t, m)
    assert cert.certified
    assert cert.full_rank_count >= 1
    for rel in cert.relations:
        assert isinstance(rel, WRelation)
        assert rank_exact(rel.w) == 2


def test_uniqueness_census_requires_full_rank_generator():
    m = generic_sign_model(3)
    with pytest.raises(CpdzipError):
        uniqueness_census(zero_tensor(3, 3), m)


def test_find_perm_scaling_detects_column_swap():
    rows = ((1, 1), (1, -1), (-1, 1))
    x = FactorMatrix(1, rows)
    ref = FactorTuple(tuple(FactorMatrix(i, rows) for i in (1, 2, 3)))
    swapped_rows = tuple((b, a) for a, b in rows)
    other = FactorTuple(tuple(FactorMatrix(i, swapped_rows) for i in (1, 2, 3)))
    rel = find_perm_scaling(ref, other)
    assert rel is not None
    assert rel.permutation == (1, 0)


def test_find_perm_scaling_rejects_unrelated():
    ref = FactorTuple(
        tuple(FactorMatrix(i, ((1, 1), (1, -1), (-1, 1))) for i in (1, 2, 3))
    )
    other = FactorTuple(
        tuple(FactorMatrix(i, ((1, 1), (1, -1), (-1, -1))) for i in (1, 2, 3))
    )
    assert find_perm_scaling(ref, other) is None


def test_find_w_relation_certifies_inverse_transpose_pair():
    x1 = FactorMatrix(1, ((1, 1), (1, -1), (-1, 1)))
    x2 = FactorMatrix(2, ((1, -1), (1, 1), (1, 1)))
    ref = FactorTuple((x1, x2))
    # W = [[0, 1], [1, 0]] swaps columns; (W^-1)^T = W
    y1 = FactorMatrix(1, tuple((b, a) for a, b in x1.rows))
    y2 = FactorMatrix(2, tuple((b, a) for a, b in x2.rows))
    rel = find_w_relation(ref, FactorTuple((y1, y2)))
    assert rel is not None
    assert rel.w == ((0, 1), (1, 0))


# --- verify-examples ------------------------------------------------------------------


def test_verify_examples_fast_all_pass():
    rows = verify_examples(fast=True)
    assert rows
    assert all(isinstance(r, CheckRow) for r in rows)
    failures = [r for r in rows if not r.ok]
    assert failures == []
