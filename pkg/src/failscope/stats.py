"""Statistical procedures for judge agreement and study analysis.

Self-contained on purpose: the W statistic follows Royston's AS R94
approximation, Student-t tail probabilities go through a continued-fraction
regularized incomplete beta, and weighted kappa is direct matrix
arithmetic. No external stats package is required at runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

_NORMAL = NormalDist()


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class PairedSample:
    before: tuple[float, ...]
    after: tuple[float, ...]

    def __post_init__(self):
        if len(self.before) != len(self.after):
            raise StatsError("before/after lengths differ")
        if len(self.before) < 3:
            raise StatsError("paired sample needs at least 3 pairs")
        for v in (*self.before, *self.after):
            if not math.isfinite(v):
                raise StatsError("paired sample contains non-finite values")

    @classmethod
    def of(cls, before: Sequence[float], after: Sequence[float]) -> "PairedSample":
        return cls(tuple(float(v) for v in before), tuple(float(v) for v in after))

    @property
    def n(self) -> int:
        return len(self.before)

    @property
    def differences(self) -> list[float]:
        return [a - b for b, a in zip(self.before, self.after)]


def _mean(xs: Sequence[float]) -> float:
    return math.fsum(xs) / len(xs)


def _sd(xs: Sequence[float]) -> float:
    m = _mean(xs)
    return math.sqrt(math.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1))


def shapiro_wilk(xs: Sequence[float]) -> tuple[float, float]:
    """Shapiro-Wilk normality test (AS R94 approximation), 3 <= n <= 2000.

    Returns (W, p). The p-value is the upper tail of the normalized
    log-transformed W.
    """
    n = len(xs)
    if n < 3:
        raise StatsError(f"need at least 3 observations, got {n}")
    if n > 2000:
        raise StatsError(f"n={n} exceeds the supported range (<= 2000)")
    x = sorted(float(v) for v in xs)
    if x[-1] - x[0] == 0:
        raise StatsError("sample is constant; W is undefined")

    m = [_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)]
    ssq_m = math.fsum(v * v for v in m)
    rssq = math.sqrt(ssq_m)
    u = 1.0 / math.sqrt(n)

    a = [v / rssq for v in m]
    if n > 5:
        a_n = (
            -2.706056 * u**5 + 4.434685 * u**4 - 2.071190 * u**3
            - 0.147981 * u**2 + 0.221157 * u + m[-1] / rssq
        )
        a_n1 = (
            -3.582633 * u**5 + 5.682633 * u**4 - 1.752461 * u**3
            - 0.293762 * u**2 + 0.042981 * u + m[-2] / rssq
        )
        phi = (ssq_m - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * a_n**2 - 2 * a_n1**2)
        root = math.sqrt(phi)
        a = [v / root for v in m]
        a[-1], a[0] = a_n, -a_n
        a[-2], a[1] = a_n1, -a_n1
    elif n > 3:
        a_n = (
            -2.706056 * u**5 + 4.434685 * u**4 - 2.071190 * u**3
            - 0.147981 * u**2 + 0.221157 * u + m[-1] / rssq
        )
        phi = (ssq_m - 2 * m[-1] ** 2) / (1 - 2 * a_n**2)
        root = math.sqrt(phi)
        a = [v / root for v in m]
        a[-1], a[0] = a_n, -a_n
    else:
        a = [-math.sqrt(0.5), 0.0, math.sqrt(0.5)]

    mean = _mean(x)
    ssd = math.fsum((v - mean) ** 2 for v in x)
    w_num = math.fsum(a[i] * x[i] for i in range(n))
    w = min(w_num * w_num / ssd, 1.0)

    if n == 3:
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
        return w, p
    if n <= 11:
        gamma = -2.273 + 0.459 * n
        arg = gamma - math.log(1.0 - w)
        if arg <= 0:
            return w, 0.0
        lw = -math.log(arg)
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
    else:
        y = math.log(n)
        lw = math.log(1.0 - w)
        mu = -1.5861 - 0.31082 * y - 0.083751 * y**2 + 0.0038915 * y**3
        sigma = math.exp(-0.4803 - 0.082676 * y + 0.0030302 * y**2)
    z = (lw - mu) / sigma
    return w, 1.0 - _NORMAL.cdf(z)


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    max_iter = 300
    tiny = 1e-300
    eps = 1e-15
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise StatsError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) via the continued fraction, symmetric split at the mean."""
    if not 0.0 <= x <= 1.0:
        raise StatsError(f"x must be in [0, 1], got {x}")
    if x in (0.0, 1.0):
        return x
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf_two_sided(t: float, df: int) -> float:
    """Two-sided tail probability P(|T| >= |t|) for Student's t."""
    if df < 1:
        raise StatsError(f"df must be >= 1, got {df}")
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


def paired_t(sample: PairedSample) -> tuple[float, float, int]:
    """Paired t-test on before/after; returns (t, two-sided p, df)."""
    d = sample.differences
    sd = _sd(d)
    if sd == 0.0:
        raise StatsError("paired differences have zero variance")
    n = sample.n
    t = _mean(d) / (sd / math.sqrt(n))
    df = n - 1
    return t, student_t_sf_two_sided(t, df), df


def cohens_d(sample: PairedSample, variant: str = "pooled") -> float:
    """Effect size for the before/after comparison.

    pooled: standardized difference of the two means. paired_dz: mean of
    the paired differences over their standard deviation.
    """
    if variant == "pooled":
        s_before, s_after = _sd(sample.before), _sd(sample.after)
        n = sample.n
        pooled = math.sqrt(((n - 1) * s_before**2 + (n - 1) * s_after**2) / (2 * n - 2))
        if pooled == 0.0:
            if _mean(sample.after) == _mean(sample.before):
                return 0.0
            raise StatsError("pooled standard deviation is zero")
        return (_mean(sample.after) - _mean(sample.before)) / pooled
    if variant == "paired_dz":
        d = sample.differences
        sd = _sd(d)
        if sd == 0.0:
            if all(v == 0 for v in d):
                return 0.0
            raise StatsError("paired differences have zero variance")
        return _mean(d) / sd
    raise StatsError(f"unknown variant {variant!r}; use 'pooled' or 'paired_dz'")


def weighted_kappa(
    ratings_a: Sequence[int],
    ratings_b: Sequence[int],
    weights: str = "linear",
    k_levels: int = 5,
) -> float:
    """Weighted Cohen's kappa over an ordinal 1..k scale.

    kappa_w = 1 - sum(w * O) / sum(w * E) with w_ij = |i-j|/(k-1) for
    linear weights or ((i-j)/(k-1))^2 for quadratic ones; O holds observed
    proportions and E the outer product of the marginals.
    """
    if len(ratings_a) != len(ratings_b):
        raise StatsError("rating vectors must have equal length")
    if not ratings_a:
        raise StatsError("rating vectors are empty")
    if weights not in ("linear", "quadratic"):
        raise StatsError(f"unknown weights {weights!r}")
    n = len(ratings_a)
    k = k_levels
    for v in (*ratings_a, *ratings_b):
        if not isinstance(v, int) or not 1 <= v <= k:
            raise StatsError(f"ratings must be integers in 1..{k}, got {v!r}")

    observed = [[0.0] * k for _ in range(k)]
    for va, vb in zip(ratings_a, ratings_b):
        observed[va - 1][vb - 1] += 1.0 / n
    marg_a = [math.fsum(observed[i][j] for j in range(k)) for i in range(k)]
    marg_b = [math.fsum(observed[i][j] for i in range(k)) for j in range(k)]

    def weight(i: int, j: int) -> float:
        if weights == "linear":
            return abs(i - j) / (k - 1)
        return ((i - j) / (k - 1)) ** 2

    num = math.fsum(weight(i, j) * observed[i][j] for i in range(k) for j in range(k))
    den = math.fsum(weight(i, j) * marg_a[i] * marg_b[j] for i in range(k) for j in range(k))
    if den == 0.0:
        raise StatsError("degenerate marginals: expected-disagreement denominator is zero")
    return 1.0 - num / den


@dataclass(frozen=True)
class StudyStats:
    """Summary of a pre/post cohort for the study report."""

    n: int
    shapiro_pre: tuple[float, float]
    shapiro_post: tuple[float, float]
    t: float
    p: float
    df: int
    d_pooled: float
    d_paired_dz: float
    improved: int

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "shapiro_pre": {"W": self.shapiro_pre[0], "p": self.shapiro_pre[1]},
            "shapiro_post": {"W": self.shapiro_post[0], "p": self.shapiro_post[1]},
            "paired_t": {"t": self.t, "p": self.p, "df": self.df},
            "cohens_d": {"pooled": self.d_pooled, "paired_dz": self.d_paired_dz},
            "improved": self.improved,
        }


def study_report(pre: Sequence[float], post: Sequence[float]) -> StudyStats:
    """Run the study analysis battery over per-participant accuracies."""
    sample = PairedSample.of(pre, post)
    t, p, df = paired_t(sample)
    return StudyStats(
        n=sample.n,
        shapiro_pre=shapiro_wilk(sample.before),
        shapiro_post=shapiro_wilk(sample.after),
        t=t,
        p=p,
        df=df,
        d_pooled=cohens_d(sample, "pooled"),
        d_paired_dz=cohens_d(sample, "paired_dz"),
        improved=sum(1 for b, a in zip(sample.before, sample.after) if a > b),
    )
