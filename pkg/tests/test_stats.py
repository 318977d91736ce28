import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special
from scipy import stats as sps

from trackscope.rank import DomainSet
from trackscope.stats import (
    ContingencyTable2x2,
    DegenerateInputError,
    assortativity,
    cond_prob_matrix,
    fit_power_law,
    g2_test,
    point_biserial,
    prevalence_test,
    sample_power_law,
    significance_stars,
)

from conftest import bipartite_from_sets, random_site_sets


# -- power law ----------------------------------------------------------------

def test_sampler_matches_pmf():
    alpha, x_min, n = 2.2, 3, 200_000
    x = sample_power_law(alpha, x_min, n, np.random.default_rng(11))
    assert x.min() >= x_min
    values = np.arange(x_min, x_min + 8)
    pmf = values.astype(float) ** -alpha / special.zeta(alpha, x_min)
    observed = np.array([(x == v).sum() for v in values])
    expected = pmf * n
    chi2 = ((observed - expected) ** 2 / expected).sum()
    assert chi2 < sps.chi2.ppf(0.999, len(values))


@pytest.mark.parametrize("seed", range(4))
def test_fit_recovers_alpha_within_three_sigma(seed):
    x = sample_power_law(2.5, 5, 20_000, np.random.default_rng(seed))
    fit = fit_power_law(x)
    assert fit.x_min in (4, 5, 6)
    assert abs(fit.alpha - 2.5) < 3 * fit.sigma


def test_approx_method_close_for_large_xmin():
    x = sample_power_law(2.0, 200, 5_000, np.random.default_rng(2))
    fit = fit_power_law(x, method="approx")
    assert fit.method == "approx"
    assert abs(fit.alpha - 2.0) < 3 * fit.sigma + 0.05


def test_fit_ignores_a_non_power_law_head():
    rng = np.random.default_rng(4)
    tail = sample_power_law(2.5, 20, 8_000, rng)
    head = rng.integers(1, 20, 8_000)
    fit = fit_power_law(np.concatenate([head, tail]))
    assert 15 <= fit.x_min <= 25
    assert abs(fit.alpha - 2.5) < 0.15


@pytest.mark.parametrize("samples", [
    [3] * 100,
    list(range(1, 20)),
    [0] + list(range(1, 100)),
    [1.5] * 60 + [2] * 10,
    [],
])
def test_fit_degenerate_inputs(samples):
    with pytest.raises(DegenerateInputError):
        fit_power_law(samples)


def test_fit_bad_method():
    with pytest.raises(ValueError):
        fit_power_law(range(1, 100), method="mle")


# -- assortativity ------------------------------------------------------------

def test_assortativity_complete_bipartite_is_degenerate():
    g = bipartite_from_sets({f"s{i}.com": {"a.net", "b.net", "c.net"} for i in range(2)})
    with pytest.raises(DegenerateInputError):
        assortativity(g)


SIX_SITES = {
    "a.com": {"t1.net", "t2.net", "t3.net", "t4.net"},
    "b.com": {"t1.net", "t2.net"},
    "c.com": {"t1.net"},
    "d.com": {"t1.net", "t5.net"},
    "e.com": {"t2.net", "t3.net", "t6.net"},
    "f.com": {"t1.net"},
}


def test_assortativity_hand_built():
    g = bipartite_from_sets(SIX_SITES)
    site_deg = {s: len(t) for s, t in SIX_SITES.items()}
    tp_deg = {}
    for ts in SIX_SITES.values():
        for t in ts:
            tp_deg[t] = tp_deg.get(t, 0) + 1
    pairs = [(site_deg[s], tp_deg[t]) for s, ts in SIX_SITES.items() for t in ts]
    x, y = np.array(pairs, dtype=float).T
    res = assortativity(g, permutations=200, seed=1)
    assert res.r == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)
    assert res.n == len(pairs) == 13
    assert 0 < res.p_value <= 1


def test_assortativity_relabel_invariant_and_seeded():
    rng = np.random.default_rng(8)
    sites = random_site_sets(rng, 40, 10, 0.25)
    g = bipartite_from_sets(sites)
    renamed = bipartite_from_sets({f"z{len(sites) - i:03d}.{s}": {"q" + t for t in ts}
                                   for i, (s, ts) in enumerate(sites.items())})
    a, b = assortativity(g, 300, seed=3), assortativity(renamed, 300, seed=3)
    assert a.r == pytest.approx(b.r, abs=1e-12)
    assert assortativity(g, 300, seed=3) == a


def test_assortativity_permutation_p_value_is_calibrated():
    # degree-independent random graphs should rarely look significant
    small = 0
    for seed in range(40):
        g = bipartite_from_sets(random_site_sets(np.random.default_rng(seed), 30, 12, 0.2))
        small += assortativity(g, 199, seed=seed).p_value < 0.05
    assert small <= 8


# -- conditional probabilities -----------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cond_prob_matches_counting(seed):
    rng = np.random.default_rng(seed)
    sites = random_site_sets(rng, 25, 5, 0.4)
    g = bipartite_from_sets(sites)
    trackers = list(g.third_parties)
    if not trackers:
        return
    m = cond_prob_matrix(g, trackers)
    for i, a in enumerate(trackers):
        for j, b in enumerate(trackers):
            with_b = [s for s, ts in sites.items() if b in ts]
            assert m[i, j] == pytest.approx(sum(a in sites[s] for s in with_b) / len(with_b), abs=1e-15)
    assert np.allclose(np.diag(m), 1.0)
    # Bayes: P(a|b) P(b) = P(b|a) P(a)
    p = g.third_party_degrees()[[g.tp_index[t] for t in trackers]]
    assert np.allclose(m * p[np.newaxis, :], (m * p[np.newaxis, :]).T)


def test_cond_prob_unknown_tracker():
    g = bipartite_from_sets({"a.com": {"t.net"}})
    with pytest.raises(DegenerateInputError):
        cond_prob_matrix(g, ["t.net", "u.net"])


# -- G^2 ----------------------------------------------------------------------

def test_g2_independent_table_is_zero():
    res = g2_test([[10, 20], [30, 60]])
    assert res.statistic == 0.0 and res.p_value == 1.0


def test_g2_perfect_association():
    # [[10, 0], [0, 10]]: every observed cell is twice its expectation
    assert g2_test([[10, 0], [0, 10]]).statistic == pytest.approx(40 * math.log(2), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 500), min_size=4, max_size=4))
def test_g2_matches_scipy_and_is_transpose_invariant(cells):
    a, b, c, d = cells
    res = g2_test([[a, b], [c, d]])
    ref, p, _, _ = sps.chi2_contingency([[a, b], [c, d]], correction=False, lambda_="log-likelihood")
    assert res.statistic == pytest.approx(ref, rel=1e-9, abs=1e-9)
    assert res.p_value == pytest.approx(p, rel=1e-6, abs=1e-12)
    assert g2_test([[a, c], [b, d]]).statistic == pytest.approx(res.statistic, rel=1e-12, abs=1e-12)


def test_g2_degenerate_margins():
    with pytest.raises(DegenerateInputError):
        g2_test([[0, 0], [3, 4]])
    with pytest.raises(ValueError):
        ContingencyTable2x2(-1, 0, 1, 1)
    with pytest.raises(ValueError):
        ContingencyTable2x2(0, 0, 0, 0)


def test_significance_stars():
    assert [significance_stars(p) for p in (0.0001, 0.005, 0.03, 0.2)] == ["***", "**", "*", ""]


# -- point-biserial ----------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(4, 60))
def test_point_biserial_equals_pearson_and_textbook(seed, n):
    rng = np.random.default_rng(seed)
    d = rng.integers(0, 2, n)
    d[0], d[1] = 0, 1
    c = rng.normal(size=n) + d
    res = point_biserial(d, c)
    n1, n0 = d.sum(), n - d.sum()
    textbook = (c[d == 1].mean() - c[d == 0].mean()) / c.std() * math.sqrt(n1 * n0 / n**2)
    assert res.r == pytest.approx(textbook, abs=1e-12)
    assert res.r == pytest.approx(np.corrcoef(d, c)[0, 1], abs=1e-12)
    ref = sps.pointbiserialr(d, c)
    assert res.p_value == pytest.approx(ref.pvalue, rel=1e-8, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 1e3), st.floats(-1e3, 1e3))
def test_point_biserial_affine_invariant(seed, scale, shift):
    rng = np.random.default_rng(seed)
    d = np.array([0, 1] * 10)
    c = rng.normal(size=20)
    assert point_biserial(d, c * scale + shift).r == pytest.approx(point_biserial(d, c).r, abs=1e-10)
    assert point_biserial(1 - d, c).r == pytest.approx(-point_biserial(d, c).r, abs=1e-12)


def test_point_biserial_perfect_and_degenerate():
    d = [0, 0, 1, 1, 1]
    assert point_biserial(d, d).r == 1.0
    with pytest.raises(DegenerateInputError):
        point_biserial([1, 1, 1], [1, 2, 3])
    with pytest.raises(DegenerateInputError):
        point_biserial([0, 1, 1], [2, 2, 2])
    with pytest.raises(ValueError):
        point_biserial([0, 1, 2], [1, 2, 3])


# -- prevalence --------------------------------------------------------------

def test_prevalence_direction_and_table():
    sites = {f"h{i}.org": ({"t.net"} if i < 3 else set()) for i in range(10)}
    sites.update({f"l{i}.com": ({"t.net"} if i < 9 else set()) for i in range(10)})
    g = bipartite_from_sets(sites)
    crit = DomainSet.from_members(g, "high", [s for s in sites if s.startswith("h")])
    low = DomainSet.from_members(g, "low", [s for s in sites if s.startswith("l")])
    res = prevalence_test("t.net", crit, low, g)
    assert res.table == ContingencyTable2x2(3, 9, 7, 1)
    assert res.direction == "more_on_noncritical"
    assert (res.rate_critical, res.rate_noncritical) == (0.3, 0.9)
    assert res.p_value == pytest.approx(g2_test([[3, 9], [7, 1]]).p_value)
    with pytest.raises(ValueError):
        prevalence_test("t.net", crit, crit, g)
