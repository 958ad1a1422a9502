import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from histent.errors import DomainError, EmptyMargin, LengthMismatch, ZeroVariance
from histent.stats import (
    ContingencyTable,
    SummarySample,
    chi_square_yates,
    fisher_exact,
    fisher_tables,
    pearson,
    select_2x2_test,
    welch_t_test,
)


def test_welch_published_over_detection_row():
    res = welch_t_test(SummarySample(1.846, 1.506, 719), SummarySample(1.813, 1.678, 401))
    assert res.method == "welch"
    assert abs(res.p_value - 0.740) <= 0.01


def test_welch_matches_scipy_on_summaries():
    rng = random.Random(1)
    for _ in range(200):
        x = SummarySample(rng.uniform(0, 5), rng.uniform(0.1, 4), rng.randint(2, 900))
        y = SummarySample(rng.uniform(0, 5), rng.uniform(0.1, 4), rng.randint(2, 900))
        want = sps.ttest_ind_from_stats(x.mean, x.sd, x.n, y.mean, y.sd, y.n, equal_var=False)
        got = welch_t_test(x, y)
        assert got.statistic == pytest.approx(want.statistic, rel=1e-10)
        assert got.p_value == pytest.approx(want.pvalue, abs=1e-10)


def test_welch_raw_20_point_samples():
    rng = random.Random(4)
    for _ in range(50):
        x = [rng.gauss(0, 1) for _ in range(20)]
        y = [rng.gauss(0.5, 2) for _ in range(20)]
        want = sps.ttest_ind(x, y, equal_var=False)
        got = welch_t_test(x, y)
        assert got.p_value == pytest.approx(want.pvalue, abs=1e-10)
        assert got.df == pytest.approx(want.df, rel=1e-10)


def test_welch_identical_and_degenerate():
    s = SummarySample(2.0, 1.0, 10)
    res = welch_t_test(s, s)
    assert res.statistic == 0 and res.p_value == 1.0
    flat = welch_t_test([3, 3, 3], [3, 3])
    assert flat.p_value == 1.0 and flat.note
    apart = welch_t_test([3, 3, 3], [4, 4])
    assert apart.p_value == 0.0 and apart.note
    with pytest.raises(DomainError):
        welch_t_test([1.0], [1.0, 2.0])


def test_pearson_matches_scipy():
    rng = random.Random(9)
    for n in (3, 5, 20, 61, 200):
        x = [rng.gauss(0, 1) for _ in range(n)]
        y = [0.4 * a + rng.gauss(0, 1) for a in x]
        want = sps.pearsonr(x, y)
        got = pearson(x, y)
        assert got.statistic == pytest.approx(want.statistic, abs=1e-12)
        assert got.p_value == pytest.approx(want.pvalue, abs=1e-10)
        assert got.df == n - 2


def test_pearson_edges():
    x = [1.0, 2.0, 4.0, 7.0]
    assert pearson(x, x).statistic == 1.0
    with pytest.raises(LengthMismatch):
        pearson(x, x[:3])
    with pytest.raises(ZeroVariance):
        pearson(x, [1, 1, 1, 1])
    with pytest.raises(DomainError):
        pearson([1, 2], [2, 1])


@given(st.lists(st.floats(-100, 100), min_size=3, max_size=30).filter(lambda v: max(v) - min(v) > 1e-3),
       st.floats(0.1, 50), st.floats(-50, 50))
def test_pearson_affine_invariance(x, scale, shift):
    y = [v * v for v in x]
    try:
        base = pearson(x, y).statistic
    except ZeroVariance:
        return
    moved = pearson([scale * v + shift for v in x], y).statistic
    flipped = pearson([-scale * v + shift for v in x], y).statistic
    assert moved == pytest.approx(base, abs=1e-9)
    assert flipped == pytest.approx(-base, abs=1e-9)


def test_yates_known_table():
    res = chi_square_yates(ContingencyTable(40, 40, 14, 40))
    assert res.statistic == pytest.approx(6.80, abs=0.01)
    assert abs(res.p_value - 0.009) <= 0.002
    assert abs(chi_square_yates(ContingencyTable(268, 79, 227, 69)).p_value - 0.945) <= 0.005


def test_yates_matches_scipy():
    rng = random.Random(11)
    for _ in range(300):
        t = ContingencyTable(*(rng.randint(1, 300) for _ in range(4)))
        want = sps.chi2_contingency([[t.a, t.b], [t.c, t.d]], correction=True)
        got = chi_square_yates(t)
        assert got.statistic == pytest.approx(want.statistic, rel=1e-9, abs=1e-12)
        assert got.p_value == pytest.approx(want.pvalue, abs=1e-10)


def test_yates_clamps_correction():
    # |ad - bc| = 0 < N/2: statistic is 0, not the squared negative gap
    res = chi_square_yates(ContingencyTable(10, 10, 10, 10))
    assert res.statistic == 0.0 and res.p_value == 1.0


@pytest.mark.parametrize("cells,p", [((40, 4, 1, 1), 0.208), ((39, 2, 2, 3), 0.006), ((39, 2, 2, 2), 0.034)])
def test_fisher_published(cells, p):
    assert abs(fisher_exact(ContingencyTable(*cells)).p_value - p) <= 0.001


def test_fisher_matches_scipy():
    rng = random.Random(12)
    for _ in range(300):
        cells = [rng.randint(0, 25) for _ in range(4)]
        t = ContingencyTable(*cells)
        if t.n == 0 or 0 in t.margins:
            continue
        want = sps.fisher_exact([[t.a, t.b], [t.c, t.d]])
        assert fisher_exact(t).p_value == pytest.approx(want.pvalue, abs=1e-10)


def test_fisher_probabilities_sum_to_one():
    for cells in ((40, 4, 1, 1), (12, 30, 7, 50), (500, 3, 2, 400)):
        total = math.fsum(p for _, p in fisher_tables(ContingencyTable(*cells)))
        assert abs(total - 1.0) <= 1e-10


def test_empty_margins():
    for fn in (chi_square_yates, fisher_exact):
        with pytest.raises(EmptyMargin):
            fn(ContingencyTable(3, 4, 0, 0))
    with pytest.raises(EmptyMargin):
        select_2x2_test(ContingencyTable(0, 0, 0, 0))


def test_selection_rule():
    small = select_2x2_test(ContingencyTable(40, 4, 1, 1))
    assert small.method == "fisher exact" and abs(small.p_value - 0.208) <= 0.001
    big = select_2x2_test(ContingencyTable(40, 40, 14, 40))
    assert big.method.startswith("chi-square") and abs(big.p_value - 0.009) <= 0.002
    assert select_2x2_test(ContingencyTable(10, 10, 10, 10)).p_value == pytest.approx(1.0)


@given(st.tuples(*[st.integers(0, 60)] * 4))
def test_2x2_symmetries(cells):
    t = ContingencyTable(*cells)
    if t.n == 0 or 0 in t.margins:
        return
    p = select_2x2_test(t).p_value
    assert 0.0 <= p <= 1.0
    swapped = ContingencyTable(t.d, t.c, t.b, t.a)  # both rows and both columns
    assert select_2x2_test(swapped).p_value == pytest.approx(p, abs=1e-12)
    assert select_2x2_test(t.transposed()).p_value == pytest.approx(p, abs=1e-12)


def test_result_serializes():
    d = fisher_exact(ContingencyTable(40, 4, 1, 1)).as_dict()
    assert d["method"] == "fisher exact" and d["df"] is None
