"""Statistical kernels: power-law fit, assortativity, co-occurrence and prevalence tests."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, special
from scipy import stats as sps

from .graph import BipartiteGraph
from .rank import DomainSet


class DegenerateInputError(ValueError):
    pass


def significance_stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


# -- power law --------------------------------------------------------------

@dataclass(frozen=True)
class PowerLawFit:
    x_min: int
    alpha: float
    ks_distance: float
    n_tail: int
    method: str = "approx"

    @property
    def sigma(self) -> float:
        """Asymptotic standard error of alpha."""
        return (self.alpha - 1) / math.sqrt(self.n_tail)


def _alpha_zeta(sum_log: float, n: int, x_min: int) -> float:
    def nll(a):
        return n * math.log(special.zeta(a, x_min)) + a * sum_log

    res = optimize.minimize_scalar(nll, bounds=(1.0 + 1e-6, 50.0), method="bounded", options={"xatol": 1e-10})
    return float(res.x)


def _ks_discrete(values: np.ndarray, counts: np.ndarray, alpha: float, x_min: int) -> float:
    """Largest CDF gap between a discrete power-law tail and its empirical counterpart."""
    n = counts.sum()
    emp = np.cumsum(counts) / n
    norm = special.zeta(alpha, x_min)
    model = 1.0 - special.zeta(alpha, values + 1.0) / norm
    gap = np.abs(emp - model).max()
    # between observed values the empirical CDF is flat while the model keeps rising
    if len(values) > 1:
        before_next = 1.0 - special.zeta(alpha, values[1:].astype(np.float64)) / norm
        gap = max(gap, np.abs(before_next - emp[:-1]).max())
    return float(gap)


def fit_power_law(samples: Iterable[int], method: str = "auto", min_samples: int = 50,
                  exact_below: int = 100) -> PowerLawFit:
    """Discrete power-law fit choosing x_min by minimum KS distance.

    Every distinct sample value with at least two samples at or above it is
    tried as x_min. ``method="approx"`` uses the closed-form estimate with the
    half-integer offset; ``"zeta"`` maximizes the exact Hurwitz-zeta likelihood;
    ``"auto"`` uses the exact likelihood for candidates below ``exact_below``,
    where the offset approximation is biased enough to distort the KS choice.
    """
    x = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples)
    if method not in ("approx", "zeta", "auto"):
        raise ValueError("method must be 'approx', 'zeta' or 'auto'")
    if x.size < min_samples:
        raise DegenerateInputError(f"need at least {min_samples} samples, got {x.size}")
    if np.any(x < 1) or not np.all(np.equal(np.mod(x, 1), 0)):
        raise DegenerateInputError("samples must be positive integers")
    x = np.sort(x.astype(np.int64))
    values, counts = np.unique(x, return_counts=True)
    if values.size < 2:
        raise DegenerateInputError("all samples are equal")
    logs = np.log(x.astype(np.float64))
    # tail sums of log x, aligned with the first index of each distinct value
    tail_log = np.concatenate([np.cumsum(logs[::-1])[::-1], [0.0]])
    starts = np.searchsorted(x, values)
    best = None
    for k, (xm, start) in enumerate(zip(values, starts)):
        n_tail = x.size - start
        if n_tail < 2:
            break
        s = tail_log[start]
        exact = method == "zeta" or (method == "auto" and xm < exact_below)
        if exact:
            alpha = _alpha_zeta(s, n_tail, int(xm))
        else:
            denom = s - n_tail * math.log(xm - 0.5)
            alpha = 1.0 + n_tail / denom
        if not math.isfinite(alpha) or alpha <= 1:
            continue
        ks = _ks_discrete(values[k:].astype(np.float64), counts[k:], alpha, int(xm))
        if best is None or ks < best.ks_distance:
            best = PowerLawFit(int(xm), float(alpha), ks, int(n_tail), "zeta" if exact else "approx")
    if best is None:
        raise DegenerateInputError("no admissible x_min")
    return best


def sample_power_law(alpha: float, x_min: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Exact discrete power-law draws by inverting the tail distribution."""
    r = 1.0 - rng.random(size)  # in (0, 1]
    norm = special.zeta(alpha, x_min)

    def ccdf(v):
        return special.zeta(alpha, v) / norm

    lo = np.full(size, float(x_min))
    hi = np.full(size, float(x_min) * 2)
    grow = ccdf(hi) >= r
    while grow.any():
        hi[grow] *= 2
        if hi.max() > 2.0 ** 60:
            raise OverflowError("tail too heavy to sample")
        grow = ccdf(hi) >= r
    # invariant: ccdf(lo) >= r > ccdf(hi)
    while True:
        open_ = hi - lo > 1
        if not open_.any():
            break
        mid = np.floor((lo + hi) / 2)
        up = (ccdf(mid) >= r) & open_
        down = ~up & open_
        lo[up] = mid[up]
        hi[down] = mid[down]
    return lo.astype(np.int64)


# -- correlations -------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p_value: float
    n: int
    test: str = ""


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    return float((xc * yc).sum() / math.sqrt((xc * xc).sum() * (yc * yc).sum()))


def assortativity(g: BipartiteGraph, permutations: int = 1000, seed: int = 0) -> CorrelationResult:
    """Degree correlation across edges (site degree vs third-party degree).

    The two-sided p-value comes from a seeded permutation test that shuffles
    the third-party endpoint degrees across edges.
    """
    if g.n_edges < 2:
        raise DegenerateInputError("need at least two edges")
    coo = g.incidence.tocoo()
    x = g.site_degrees()[coo.row].astype(np.float64)
    y = g.third_party_degrees()[coo.col].astype(np.float64)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateInputError("degenerate degree sequence")
    r = _pearson(x, y)
    zx = (x - x.mean()) / x.std()
    zy = (y - y.mean()) / y.std()
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(permutations):
        rp = float(np.dot(zx, rng.permutation(zy)) / zx.size)
        if abs(rp) >= abs(r) - 1e-12:
            hits += 1
    p = (hits + 1) / (permutations + 1)
    return CorrelationResult(r, p, int(x.size), f"permutation({permutations}, seed={seed})")


def point_biserial(dichotomous: Sequence[int], continuous: Sequence[float]) -> CorrelationResult:
    """Point-biserial correlation with a two-sided t-distribution p-value."""
    d = np.asarray(dichotomous)
    c = np.asarray(continuous, dtype=np.float64)
    if d.shape != c.shape or d.ndim != 1:
        raise ValueError("inputs must be 1-d sequences of equal length")
    n = d.size
    if n < 3:
        raise DegenerateInputError("need at least three observations")
    if not np.isin(d, (0, 1)).all():
        raise ValueError("dichotomous values must be 0 or 1")
    n1 = int((d == 1).sum())
    n0 = n - n1
    if n1 == 0 or n0 == 0:
        raise DegenerateInputError("both groups must be nonempty")
    if c.std() == 0:
        raise DegenerateInputError("continuous variable has zero variance")
    # (M1 - M0) / s_n * sqrt(n1 n0 / n^2) rewritten over centered sums; the two
    # are algebraically equal, but this form gives exactly 1.0 when c == d
    df = d.astype(np.float64)
    dc = df - df.mean()
    cc = c - c.mean()
    r = float((dc * cc).sum() / math.sqrt((dc * dc).sum() * (cc * cc).sum()))
    r = max(-1.0, min(1.0, r))
    if abs(r) >= 1.0:
        p = 0.0
    else:
        t = r * math.sqrt((n - 2) / (1 - r * r))
        p = float(2 * sps.t.sf(abs(t), n - 2))
    return CorrelationResult(float(r), p, n, "t")


# -- co-occurrence -------------------------------------------------------------

def cond_prob_matrix(g: BipartiteGraph, trackers: Sequence[str]) -> np.ndarray:
    """``out[a, b]`` = P(trackers[a] | trackers[b]) over the sites of ``g``."""
    cols = []
    for t in trackers:
        if t not in g.tp_index:
            raise DegenerateInputError(f"tracker {t} does not occur in the graph")
        cols.append(g.tp_index[t])
    sub = g.incidence[:, cols].astype(np.float64)
    inter = (sub.T @ sub).toarray()
    support = np.diag(inter).copy()
    for t, s in zip(trackers, support):
        if s == 0:
            raise DegenerateInputError(f"tracker {t} is embedded on no site")
    return inter / support[np.newaxis, :]


@dataclass(frozen=True)
class ContingencyTable2x2:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValueError("cell counts must be nonnegative")
        if self.a + self.b + self.c + self.d == 0:
            raise ValueError("empty table")

    @classmethod
    def coerce(cls, t) -> "ContingencyTable2x2":
        if isinstance(t, cls):
            return t
        (a, b), (c, d) = t
        return cls(a, b, c, d)

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=np.float64)

    def expected(self) -> np.ndarray:
        obs = self.as_array()
        return np.outer(obs.sum(1), obs.sum(0)) / obs.sum()


@dataclass(frozen=True)
class G2Result:
    statistic: float
    p_value: float


def g2_test(table) -> G2Result:
    """Log-likelihood ratio test of independence for a 2x2 table (1 d.o.f.)."""
    t = ContingencyTable2x2.coerce(table)
    obs = t.as_array()
    if (obs.sum(0) == 0).any() or (obs.sum(1) == 0).any():
        raise DegenerateInputError("a row or column total is zero")
    exp = t.expected()
    nz = obs > 0
    g = 2.0 * float((obs[nz] * np.log(obs[nz] / exp[nz])).sum())
    g = max(g, 0.0)
    return G2Result(g, float(sps.chi2.sf(g, 1)))


@dataclass(frozen=True)
class PrevalenceResult:
    direction: str
    p_value: float
    statistic: float
    stars: str
    rate_critical: float
    rate_noncritical: float
    table: ContingencyTable2x2


def prevalence_test(tracker: str | Iterable[str], critical: DomainSet, noncritical: DomainSet,
                    g: BipartiteGraph) -> PrevalenceResult:
    """Does ``tracker`` occur on critical sites at the same rate as on the others?

    The table is (has / lacks tracker) x (critical / noncritical); ``tracker``
    may be a PLD or a collection of PLDs counted as one (a company).
    """
    if len(critical) == 0 or len(noncritical) == 0:
        raise DegenerateInputError("both domain sets must be nonempty")
    if critical.domains & noncritical.domains:
        raise ValueError("critical and noncritical sets overlap")
    plds = [tracker] if isinstance(tracker, str) else list(tracker)
    has = g.site_mask(plds)
    mc, mn = critical.mask(g), noncritical.mask(g)
    hc, hn = int((has & mc).sum()), int((has & mn).sum())
    nc, nn = int(mc.sum()), int(mn.sum())
    table = ContingencyTable2x2(hc, hn, nc - hc, nn - hn)
    res = g2_test(table)
    rc, rn = hc / nc, hn / nn
    if rc > rn:
        direction = "more_on_critical"
    elif rc < rn:
        direction = "more_on_noncritical"
    else:
        direction = "none"
    return PrevalenceResult(direction, res.p_value, res.statistic, significance_stars(res.p_value), rc, rn, table)
