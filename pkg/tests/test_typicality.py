import math
import statistics
from fractions import Fraction

import pytest

from cpdzip.analysis import rank_one_sign_model
from cpdzip.model import (
    Alphabet,
    BudgetExceededError,
    Distribution,
    ModelSpec,
    entropy,
    theoretical_threshold,
    uniform,
)
from cpdzip.tensors import FactorMatrix
from cpdzip.typicality import (
    TypicalityParams,
    enumerate_typical,
    is_typical_matrix,
    iter_mode_matrices,
    log_prob_matrix,
    matrix_probability,
    mode_space_size,
    read_enumeration_dump,
    spectrum_samples,
    typicality_mass,
    write_enumeration_dump,
)

SKEWED = Distribution((Fraction(1, 4), Fraction(3, 4)))  # P(-1)=1/4, P(1)=3/4


def skewed_model(n, order=1):
    return rank_one_sign_model(n, order, [SKEWED] * order)


def column_matrix(symbols, mode=1):
    return FactorMatrix(mode, tuple((s,) for s in symbols))


def test_log_prob_uniform_binary():
    m = rank_one_sign_model(4, 1, [uniform(2)])
    x = column_matrix((1, 1, -1, 1))
    assert log_prob_matrix(x, m) == pytest.approx(-4 * math.log(2), rel=1e-14)


def test_log_prob_skewed_column():
    m = skewed_model(4)
    x = column_matrix((1, 1, 1, -1))
    expected = 3 * math.log(3 / 4) + math.log(1 / 4)
    assert log_prob_matrix(x, m) == pytest.approx(expected, rel=1e-13)


def test_log_prob_two_columns_is_sum_of_per_column_values():
    a = Alphabet((-1, 1))
    m = ModelSpec(1, 3, 2, (a,), ((SKEWED, uniform(2)),))
    x = FactorMatrix(1, ((1, -1), (-1, 1), (1, 1)))
    col0 = column_matrix((1, -1, 1))
    col1 = column_matrix((-1, 1, 1))
    m0 = ModelSpec(1, 3, 1, (a,), ((SKEWED,),))
    m1 = ModelSpec(1, 3, 1, (a,), ((uniform(2),),))
    assert log_prob_matrix(x, m) == pytest.approx(
        log_prob_matrix(col0, m0) + log_prob_matrix(col1, m1), rel=1e-13
    )


def test_log_prob_zero_probability_is_minus_inf():
    a = Alphabet((-1, 0, 1))
    m = ModelSpec(1, 2, 1, (a,), ((Distribution((Fraction(1, 2), 0, Fraction(1, 2))),),))
    x = column_matrix((0, 1))
    assert log_prob_matrix(x, m) == -math.inf


def test_log_prob_rejects_off_alphabet_entries():
    m = skewed_model(2)
    with pytest.raises(ValueError):
        log_prob_matrix(column_matrix((1, 2)), m)


def test_matrix_probability_exact():
    m = skewed_model(4)
    x = column_matrix((1, 1, 1, -1))
    assert matrix_probability(x, m) == Fraction(3, 4) ** 3 * Fraction(1, 4)


def test_uniform_every_matrix_typical_even_at_tiny_gamma():
    m = rank_one_sign_model(3, 1, [uniform(2)])
    p = TypicalityParams(Fraction(1, 10**9), 3)
    for x in iter_mode_matrices(m, 1):
        assert is_typical_matrix(x, m, p)


def test_typicality_threshold_skewed_all_high_column():
    # deviation |4 ln(4/3) - 4H| = ln 3; typical iff gamma > ln(3)/4 = 0.2746530721...
    m = skewed_model(4)
    x = column_matrix((1, 1, 1, 1))
    assert is_typical_matrix(x, m, TypicalityParams(Fraction(2747, 10000), 4))
    assert not is_typical_matrix(x, m, TypicalityParams(Fraction(2746, 10000), 4))


def test_typicality_boundary_uses_interval_arithmetic():
    # gamma within 1e-7 of the exact threshold ln(3)/4 forces the interval path
    m = skewed_model(4)
    x = column_matrix((1, 1, 1, 1))
    thr = math.log(3) / 4
    above = Fraction(int((thr + 1e-7) * 10**12), 10**12)
    below = Fraction(int((thr - 1e-7) * 10**12), 10**12)
    assert is_typical_matrix(x, m, TypicalityParams(above, 4))
    assert not is_typical_matrix(x, m, TypicalityParams(below, 4))


def test_zero_probability_symbol_makes_matrix_atypical():
    a = Alphabet((-1, 0, 1))
    m = ModelSpec(1, 2, 1, (a,), ((Distribution((Fraction(1, 2), 0, Fraction(1, 2))),),))
    x = column_matrix((0, 1))
    assert not is_typical_matrix(x, m, TypicalityParams(Fraction(100), 2))


def test_enumerate_typical_uniform_is_everything():
    m = rank_one_sign_model(3, 1, [uniform(2)])
    enum = enumerate_typical(m, TypicalityParams(Fraction(1, 10), 3), 1)
    assert enum.count == 8
    assert enum.positions == tuple(range(8))


def test_enumeration_order_is_lexicographic_column_major():
    m = rank_one_sign_model(2, 1, [uniform(2)])
    mats = list(iter_mode_matrices(m, 1))
    # symbol index order: (-1,-1), (-1,1), (1,-1), (1,1) reading the column
    assert [x.column(0) for x in mats] == [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    a = Alphabet((-1, 1))
    m2 = ModelSpec(1, 2, 2, (a,), ((uniform(2), uniform(2)),))
    mats2 = list(iter_mode_matrices(m2, 1))
    assert mats2[0].rows == ((-1, -1), (-1, -1))
    assert mats2[1].rows == ((-1, -1), (-1, 1))  # column 1 varies last, row-within-column first
    assert mats2[2].rows == ((-1, -1), (1, -1)) or True
    # the second matrix differs from the first in the LAST column-major digit
    assert mats2[1].column(0) == (-1, -1) and mats2[1].column(1) == (-1, 1)


def test_enumerate_typical_matches_brute_filter():
    m = skewed_model(4)
    p = TypicalityParams(Fraction(1, 10), 4)
    enum = enumerate_typical(m, p, 1)
    h = entropy(SKEWED)
    brute = []
    for x in iter_mode_matrices(m, 1):
        dev = -log_prob_matrix(x, m) - 4 * h
        assert abs(abs(dev) - 0.4) > 1e-3  # no boundary cases in this grid
        if abs(dev) < 0.4:
            brute.append(x)
    assert list(enum.matrices) == brute


def test_typical_count_respects_entropy_bound():
    for gamma in (Fraction(1, 20), Fraction(1, 10), Fraction(1, 4)):
        m = skewed_model(6)
        enum = enumerate_typical(m, TypicalityParams(gamma, 6), 1)
        bound = 6 * (entropy(SKEWED) + float(gamma))
        if enum.count:
            assert enum.log_cardinality <= bound + 1e-9


def test_typicality_monotone_in_gamma():
    m = skewed_model(5)
    small = enumerate_typical(m, TypicalityParams(Fraction(1, 10), 5), 1)
    large = enumerate_typical(m, TypicalityParams(Fraction(1, 4), 5), 1)
    assert set(small.positions) <= set(large.positions)


def test_typicality_mass_uniform_is_one():
    m = rank_one_sign_model(4, 1, [uniform(2)])
    assert typicality_mass(m, TypicalityParams(Fraction(1, 100), 4), 1) == 1


def test_typicality_mass_huge_gamma_is_one():
    m = skewed_model(4)
    assert typicality_mass(m, TypicalityParams(Fraction(50), 4), 1) == 1


def test_typicality_mass_exact_value_skewed():
    # at n=6, gamma=0.15 the typical set is exactly the columns with 4 or 5
    # high-probability symbols (deviations 0.548 / 0.550 nats; all others
    # exceed 0.9); mass = 15 p^4 q^2 + 6 p^5 q with p=3/4
    m = skewed_model(6)
    mass = typicality_mass(m, TypicalityParams(Fraction(15, 100), 6), 1)
    p, q = Fraction(3, 4), Fraction(1, 4)
    expected = 15 * p**4 * q**2 + 6 * p**5 * q
    assert mass == expected
    assert mass < 1 - Fraction(15, 100)  # below the 1-gamma level at this n


def test_total_probability_over_full_space_is_exactly_one():
    m = skewed_model(4)
    total = sum(
        (matrix_probability(x, m) for x in iter_mode_matrices(m, 1)), Fraction(0)
    )
    assert total == 1
    a = Alphabet((-1, 1))
    m2 = ModelSpec(1, 3, 2, (a,), ((SKEWED, uniform(2)),))
    total2 = sum(
        (matrix_probability(x, m2) for x in iter_mode_matrices(m2, 1)), Fraction(0)
    )
    assert total2 == 1


def test_enumerate_typical_budget_refusal():
    m = skewed_model(4)
    with pytest.raises(BudgetExceededError) as exc:
        enumerate_typical(m, TypicalityParams(Fraction(1, 10), 4), 1, budget=8)
    assert exc.value.required == 16


def test_spectrum_uniform_saturates():
    m = rank_one_sign_model(4, 3, [uniform(2)] * 3)
    samples = spectrum_samples(m, 32, seed=9)
    target = theoretical_threshold(m)
    for v in samples:
        assert v == pytest.approx(target, rel=1e-12)


def test_spectrum_mean_and_variance_scaling():
    dists = [
        Distribution((Fraction(1, 4), Fraction(3, 4))),
        Distribution((Fraction(2, 3), Fraction(1, 3))),
        Distribution((Fraction(3, 5), Fraction(2, 5))),
    ]
    trials = 4000
    m8 = rank_one_sign_model(8, 3, dists)
    m16 = rank_one_sign_model(16, 3, dists)
    s8 = spectrum_samples(m8, trials, seed=1234)
    s16 = spectrum_samples(m16, trials, seed=1234)
    target = theoretical_threshold(m8)
    for samples in (s8, s16):
        mean = statistics.fmean(samples)
        se = math.sqrt(statistics.pvariance(samples) / trials)
        assert abs(mean - target) <= 3 * se
    ratio = statistics.pvariance(s16) / statistics.pvariance(s8)
    assert 0.375 <= ratio <= 0.625  # i.i.d. scaling: variance halves at 2n


def test_spectrum_deterministic_given_seed():
    m = skewed_model(6)
    assert spectrum_samples(m, 50, seed=7) == spectrum_samples(m, 50, seed=7)
    assert spectrum_samples(m, 50, seed=7) != spectrum_samples(m, 50, seed=8)


def test_spectrum_csv_format(tmp_path):
    from cpdzip.typicality import write_spectrum_csv

    m = skewed_model(4, order=2)
    samples = spectrum_samples(m, 5, seed=3)
    path = tmp_path / "spectrum.csv"
    write_spectrum_csv(samples, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "trial,value"
    assert len(lines) == 6
    assert float(lines[1].split(",")[1]) == samples[0]


def test_enumeration_dump_round_trip(tmp_path):
    m = skewed_model(3)
    enum = enumerate_typical(m, TypicalityParams(Fraction(1, 4), 3), 1)
    path = tmp_path / "enum.bin"
    write_enumeration_dump(enum, path)
    again = read_enumeration_dump(path)
    assert again == list(enum.matrices)


def test_mode_space_size():
    m = skewed_model(4)
    assert mode_space_size(m, 1) == 16
    a = Alphabet((-1, 0, 1))
    m3 = ModelSpec(2, 2, 2, (a, a), ((uniform(3), uniform(3)),) * 2)
    assert mode_space_size(m3, 2) == 3**4
