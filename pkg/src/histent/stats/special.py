"""Special functions behind the t, chi-square and normal distributions.

Incomplete gamma uses the series / continued-fraction split at x = s + 1;
incomplete beta uses the modified Lentz continued fraction with the
symmetry I_x(a, b) = 1 - I_{1-x}(b, a) to stay in its fast region.
"""
import math

from ..errors import DomainError

EPS = 1e-16
TINY = 1e-300
MAX_ITER = 100_000


def log_gamma(x):
    if not x > 0 or math.isinf(x):
        raise DomainError(f"log_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def _gamma_series(s, x):
    ap = s
    term = total = 1.0 / s
    for _ in range(MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            break
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))


def _gamma_cf(s, x):
    # Q(s, x) by modified Lentz
    b = x + 1.0 - s
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    return math.exp(-x + s * math.log(x) - math.lgamma(s)) * h


def _check_gamma_args(s, x):
    if not s > 0 or math.isinf(s):
        raise DomainError(f"incomplete gamma needs s > 0, got {s}")
    if not x >= 0:
        raise DomainError(f"incomplete gamma needs x >= 0, got {x}")


def regularized_incomplete_gamma(s, x):
    """P(s, x), the lower regularized incomplete gamma function."""
    _check_gamma_args(s, x)
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < s + 1.0:
        return min(1.0, _gamma_series(s, x))
    return max(0.0, 1.0 - _gamma_cf(s, x))


def regularized_upper_incomplete_gamma(s, x):
    """Q(s, x) = 1 - P(s, x), computed directly in the tail."""
    _check_gamma_args(s, x)
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < s + 1.0:
        return max(0.0, 1.0 - _gamma_series(s, x))
    return min(1.0, _gamma_cf(s, x))


def _beta_cf(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < TINY:
        d = TINY
    d = 1.0 / d
    h = d
    for m in range(1, MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    return h


def regularized_incomplete_beta(a, b, x):
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if not (a > 0 and b > 0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"incomplete beta needs a, b > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"incomplete beta needs 0 <= x <= 1, got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return min(1.0, front * _beta_cf(a, b, x) / a)
    return max(0.0, 1.0 - front * _beta_cf(b, a, 1.0 - x) / b)


def _check_df(df):
    if not df > 0:
        raise DomainError(f"degrees of freedom must be positive, got {df}")


def t_cdf(t, df):
    _check_df(df)
    if math.isnan(t):
        raise DomainError("t is NaN")
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    if t == 0:
        return 0.5
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return 1.0 - tail if t > 0 else tail


def t_two_sided_p(t, df):
    """P(|T| >= |t|) without the cancellation of 2 * (1 - cdf)."""
    _check_df(df)
    if math.isinf(t):
        return 0.0
    if t == 0:
        return 1.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def chisq_cdf(x, df):
    _check_df(df)
    if x <= 0:
        return 0.0
    return regularized_incomplete_gamma(df / 2.0, x / 2.0)


def chisq_sf(x, df):
    _check_df(df)
    if x <= 0:
        return 1.0
    return regularized_upper_incomplete_gamma(df / 2.0, x / 2.0)


def normal_cdf(x):
    if math.isnan(x):
        raise DomainError("x is NaN")
    return 0.5 * math.erfc(-x / math.sqrt(2.0))
