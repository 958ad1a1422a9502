"""Two-sample and 2x2 significance tests used by the error-association analyses."""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Sequence

from ..errors import DomainError, EmptyMargin, LengthMismatch, ZeroVariance
from .special import chisq_sf, t_two_sided_p


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    df: float | None
    method: str
    note: str | None = None

    __test__ = False  # keep pytest from collecting this

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SummarySample:
    mean: float
    sd: float
    n: int

    @classmethod
    def of(cls, values: Sequence[float]) -> "SummarySample":
        n = len(values)
        if n == 0:
            raise ValueError("empty sample")
        mean = math.fsum(values) / n
        if n == 1:
            return cls(mean, 0.0, 1)
        var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
        return cls(mean, math.sqrt(var), n)


@dataclass(frozen=True)
class ContingencyTable:
    """2x2 counts: rows EM+RM / MMUD, columns inside / outside the section.

    a b
    c d
    """

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for v in (self.a, self.b, self.c, self.d):
            if v < 0:
                raise ValueError("counts must be non-negative")

    @property
    def n(self):
        return self.a + self.b + self.c + self.d

    @property
    def margins(self):
        return (self.a + self.b, self.c + self.d, self.a + self.c, self.b + self.d)

    def expected(self):
        r1, r2, c1, c2 = self.margins
        n = self.n
        return (r1 * c1 / n, r1 * c2 / n, r2 * c1 / n, r2 * c2 / n)

    def transposed(self):
        return ContingencyTable(self.a, self.c, self.b, self.d)


def welch_t_test(x: SummarySample | Sequence[float], y: SummarySample | Sequence[float]) -> TestResult:
    """Unequal-variance two-sample t-test, two-sided."""
    if not isinstance(x, SummarySample):
        x = SummarySample.of(list(x))
    if not isinstance(y, SummarySample):
        y = SummarySample.of(list(y))
    if x.n < 2 or y.n < 2:
        raise DomainError("each sample needs at least two observations")
    vx, vy = x.sd**2 / x.n, y.sd**2 / y.n
    se2 = vx + vy
    diff = x.mean - y.mean
    if se2 == 0:
        if diff == 0:
            return TestResult(0.0, 1.0, float(x.n + y.n - 2), "welch", "degenerate: zero variance, equal means")
        return TestResult(math.copysign(math.inf, diff), 0.0, float(x.n + y.n - 2), "welch",
                          "degenerate: zero variance")
    t = diff / math.sqrt(se2)
    df = se2**2 / (vx**2 / (x.n - 1) + vy**2 / (y.n - 1))
    return TestResult(t, t_two_sided_p(t, df), df, "welch")


def pearson(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Pearson r with a two-sided t-based p-value on n - 2 df."""
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} x values but {len(y)} y values")
    n = len(x)
    if n < 3:
        raise DomainError("pearson needs at least 3 pairs")
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    sxx = math.fsum((a - mx) ** 2 for a in x)
    syy = math.fsum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        raise ZeroVariance("a variable is constant")
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    df = n - 2
    if abs(r) == 1.0:
        return TestResult(r, 0.0, float(df), "pearson")
    t = r * math.sqrt(df / (1.0 - r * r))
    return TestResult(r, t_two_sided_p(t, df), float(df), "pearson")


def _check_margins(t: ContingencyTable):
    if t.n == 0 or 0 in t.margins:
        raise EmptyMargin(f"table {t.a, t.b, t.c, t.d} has an empty row or column")


def chi_square_yates(t: ContingencyTable) -> TestResult:
    """Continuity-corrected chi-square on 1 df.

    The correction never exceeds |ad - bc|, so the statistic is 0 for
    tables that are already as close to independence as integers allow.
    """
    _check_margins(t)
    n = t.n
    r1, r2, c1, c2 = t.margins
    dev = max(0.0, abs(t.a * t.d - t.b * t.c) - n / 2.0)
    stat = n * dev * dev / (r1 * r2 * c1 * c2)
    return TestResult(stat, chisq_sf(stat, 1), 1.0, "chi-square (Yates)")


def _log_hypergeom(a, r1, r2, c1):
    # P(top-left = a | margins), log space
    lg = math.lgamma
    b, c = r1 - a, c1 - a
    d = r2 - c
    n = r1 + r2
    return (lg(r1 + 1) + lg(r2 + 1) + lg(c1 + 1) + lg(n - c1 + 1) - lg(n + 1)
            - lg(a + 1) - lg(b + 1) - lg(c + 1) - lg(d + 1))


def fisher_tables(t: ContingencyTable):
    """(a, probability) for every table sharing t's margins."""
    r1, r2, c1, _ = t.margins
    lo, hi = max(0, c1 - r2), min(r1, c1)
    return [(a, math.exp(_log_hypergeom(a, r1, r2, c1))) for a in range(lo, hi + 1)]


def fisher_exact(t: ContingencyTable) -> TestResult:
    """Two-sided Fisher exact test: mass of tables no more probable than observed."""
    _check_margins(t)
    r1, r2, c1, _ = t.margins
    observed = _log_hypergeom(t.a, r1, r2, c1)
    # relative slack so ties that differ only by rounding are counted
    cutoff = observed + math.log1p(1e-7)
    lo, hi = max(0, c1 - r2), min(r1, c1)
    p = math.fsum(
        math.exp(lp) for lp in (_log_hypergeom(a, r1, r2, c1) for a in range(lo, hi + 1)) if lp <= cutoff
    )
    if t.b * t.c:
        odds = (t.a * t.d) / (t.b * t.c)
    else:
        odds = math.inf if t.a * t.d else math.nan
    return TestResult(odds, min(1.0, p), None, "fisher exact")


def select_2x2_test(t: ContingencyTable, min_expected=5.0) -> TestResult:
    """Fisher when any expected cell count is below ``min_expected``, else Yates."""
    if t.n == 0:
        raise EmptyMargin("empty table")
    if min(t.expected()) < min_expected:
        return fisher_exact(t)
    return chi_square_yates(t)
