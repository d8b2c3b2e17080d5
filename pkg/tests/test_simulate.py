import math

import numpy as np
import pytest
from scipy import stats

from pplasso.errors import UnstableModelError
from pplasso.geometry import Window
from pplasso.model import (
    ConstantField,
    CoordinateField,
    InteractionSpec,
    ModelSpec,
)
from pplasso.simulate import (
    SimConfig,
    campbell_check,
    gnz_check,
    replicate_rng,
    sample_poisson,
    sample_strauss,
    _thin,
)

W = Window(0.0, 1.0, 0.0, 1.0)


def _poisson_model(beta0, slope=None, window=W):
    if slope is None:
        return ModelSpec([ConstantField()], window, beta=[beta0])
    return ModelSpec([ConstantField(), CoordinateField("x")], window,
                     beta=[beta0, slope])


def _strauss_model(beta0, psi, R, window=W):
    return ModelSpec([ConstantField()], window, beta=[beta0],
                     interaction=InteractionSpec("strauss", R), psi=psi)


def _poisson_gof_pvalue(counts, mean):
    """Chi-squared goodness of fit of integer counts to Poisson(mean)."""
    counts = np.asarray(counts)
    lo = int(stats.poisson.ppf(0.001, mean))
    hi = int(stats.poisson.ppf(0.999, mean))
    edges = np.arange(lo, hi + 1)
    observed = [np.sum(counts <= lo)]
    expected = [stats.poisson.cdf(lo, mean)]
    for k in edges[1:]:
        observed.append(np.sum(counts == k))
        expected.append(stats.poisson.pmf(k, mean))
    observed.append(np.sum(counts > hi))
    expected.append(stats.poisson.sf(hi, mean))
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected) * counts.size
    # merge adjacent cells until every expected count is at least 5
    o_m, e_m = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= 5.0:
            o_m.append(acc_o)
            e_m.append(acc_e)
            acc_o = acc_e = 0.0
    o_m[-1] += acc_o
    e_m[-1] += acc_e
    return stats.chisquare(o_m, f_exp=e_m).pvalue


def test_config_validation():
    m = _poisson_model(1.0)
    with pytest.raises(ValueError):
        SimConfig(model=m, seed=-1)
    with pytest.raises(ValueError):
        SimConfig(model=m, seed=2**64)
    with pytest.raises(ValueError):
        SimConfig(model=m, seed=0, burn_in=-1)
    with pytest.raises(ValueError):
        SimConfig(model=m, seed=0, window=Window(0.0, 2.0, 0.0, 1.0))
    assert SimConfig(model=m, seed=0).sim_window is W


def test_replicate_streams_are_deterministic_and_distinct():
    a = replicate_rng(3, 0).uniform(size=5)
    b = replicate_rng(3, 0).uniform(size=5)
    c = replicate_rng(3, 1).uniform(size=5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_poisson_sampler_is_deterministic():
    config = SimConfig(model=_poisson_model(4.0, 1.0), seed=42)
    p1 = sample_poisson(config)
    p2 = sample_poisson(config)
    assert np.array_equal(p1.points, p2.points)
    p3 = sample_poisson(SimConfig(model=config.model, seed=43))
    assert p1.n != p3.n or not np.array_equal(p1.points, p3.points)


def test_samplers_check_the_interaction():
    with pytest.raises(ValueError):
        sample_poisson(SimConfig(model=_strauss_model(3.0, 0.0, 0.1), seed=0))
    with pytest.raises(ValueError):
        sample_strauss(SimConfig(model=_poisson_model(3.0), seed=0))


def test_homogeneous_count_law():
    # N ~ Poisson(50) exactly; chi-squared GOF over 2000 replicates
    model = _poisson_model(math.log(50.0))
    config = SimConfig(model=model, seed=0)
    counts = [sample_poisson(config, rng=replicate_rng(17, k)).n
              for k in range(2000)]
    counts = np.asarray(counts)
    se = math.sqrt(50.0 / counts.size)
    assert abs(counts.mean() - 50.0) < 3 * se
    assert _poisson_gof_pvalue(counts, 50.0) > 0.01


def test_inhomogeneous_mean_count():
    # rho = exp(4 + x) integrates to e^4 (e - 1) over the unit square
    target = math.exp(4.0) * (math.e - 1.0)
    config = SimConfig(model=_poisson_model(4.0, 1.0), seed=0)
    counts = np.array([sample_poisson(config, rng=replicate_rng(11, k)).n
                       for k in range(800)])
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - target) < 3 * se


def test_disjoint_window_counts_are_uncorrelated():
    model = _poisson_model(math.log(60.0))
    config = SimConfig(model=model, seed=0)
    left, right = [], []
    for k in range(1500):
        pat = sample_poisson(config, rng=replicate_rng(23, k))
        x = pat.points[:, 0]
        left.append(np.sum(x < 0.5))
        right.append(np.sum(x >= 0.5))
    r = np.corrcoef(left, right)[0, 1]
    assert abs(r) < 3.0 / math.sqrt(1500)


def test_vanishing_intensity_gives_empty_patterns():
    model = _poisson_model(math.log(1e-30))
    for seed in range(5):
        assert sample_poisson(SimConfig(model=model, seed=seed)).n == 0


def test_thinning_guard_rejects_understated_bound():
    # an intensity above the claimed bound must fail loudly, not thin wrongly
    model = _poisson_model(math.log(50.0))
    with pytest.raises(UnstableModelError):
        _thin(model, W, 25.0, np.random.default_rng(0))


def test_attractive_interaction_is_rejected():
    with pytest.raises(UnstableModelError):
        sample_strauss(SimConfig(model=_strauss_model(3.0, 0.1, 0.1), seed=0))


def test_strauss_sampler_is_deterministic():
    model = _strauss_model(math.log(45.0), -0.5, 0.07)
    config = SimConfig(model=model, seed=7, burn_in=5000, sweeps=500)
    p1 = sample_strauss(config)
    p2 = sample_strauss(config)
    assert np.array_equal(p1.points, p2.points)
    p3 = sample_strauss(SimConfig(model=model, seed=8, burn_in=5000,
                                  sweeps=500))
    assert p1.n != p3.n or not np.array_equal(p1.points, p3.points)


def test_birth_death_chain_preserves_poisson_law():
    # with psi = 0 the stationary law is the Poisson process itself; the
    # chain starts there, so any drift in the count law indicates a broken
    # acceptance ratio
    model = _strauss_model(math.log(40.0), 0.0, 0.05)
    counts = []
    for k in range(500):
        config = SimConfig(model=model, seed=k, burn_in=30_000, sweeps=0)
        counts.append(sample_strauss(config).n)
    counts = np.asarray(counts)
    se = math.sqrt(40.0 / counts.size)
    assert abs(counts.mean() - 40.0) < 3 * se
    assert _poisson_gof_pvalue(counts, 40.0) > 0.01


def test_strong_repulsion_leaves_no_close_pairs():
    # exp(psi) = e^-50: a violating pair survives with probability ~2e-22
    model = _strauss_model(math.log(60.0), -50.0, 0.06)
    for seed in range(30):
        pat = sample_strauss(SimConfig(model=model, seed=seed,
                                       burn_in=20_000, sweeps=0))
        if pat.n > 1:
            close = pat.neighbor_counts(pat.points, 0.06, leave_one_out=True)
            assert close.sum() == 0


def test_repulsion_lowers_the_mean_count():
    base = _strauss_model(math.log(60.0), 0.0, 0.1)
    repelled = _strauss_model(math.log(60.0), -1.0, 0.1)
    n0, n1 = [], []
    for seed in range(150):
        n0.append(sample_strauss(SimConfig(model=base, seed=seed,
                                           burn_in=20_000, sweeps=0)).n)
        n1.append(sample_strauss(SimConfig(model=repelled, seed=seed,
                                           burn_in=20_000, sweeps=0)).n)
    n0, n1 = np.asarray(n0, float), np.asarray(n1, float)
    gap = n0.mean() - n1.mean()
    se = math.sqrt(n0.var(ddof=1) / n0.size + n1.var(ddof=1) / n1.size)
    assert gap > 3 * se


def test_sim_window_restricts_the_sample():
    big = Window(0.0, 2.0, 0.0, 2.0)
    model = _poisson_model(math.log(50.0), window=big)
    sub = Window(0.0, 1.0, 0.0, 1.0)
    counts = []
    for k in range(300):
        pat = sample_poisson(SimConfig(model=model, seed=0, window=sub),
                             rng=replicate_rng(31, k))
        assert pat.window is sub
        assert np.all(pat.points <= 1.0)
        counts.append(pat.n)
    counts = np.asarray(counts)
    se = math.sqrt(50.0 / counts.size)
    assert abs(counts.mean() - 50.0) < 3 * se


def test_campbell_identity_constant_h():
    model = _poisson_model(4.0, 1.0)
    res = campbell_check(model, lambda x, y: np.ones_like(x), replicates=400)
    target = math.exp(4.0) * (math.e - 1.0)
    assert np.isclose(res.rhs, target, rtol=1e-6)
    assert abs(res.z) < 3.0


def test_campbell_identity_coordinate_h():
    model = _poisson_model(4.0, 1.0)
    res = campbell_check(model, lambda x, y: x, replicates=400, seed=123)
    # integral of x exp(4 + x) dx dy = e^4 (e - (e - 1)) = e^4
    assert np.isclose(res.rhs, math.exp(4.0), rtol=1e-5)
    assert abs(res.z) < 3.0


def test_campbell_degenerate_h_gives_zero_z():
    model = _poisson_model(4.0)
    res = campbell_check(model, lambda x, y: np.zeros_like(x), replicates=5)
    assert res.lhs == 0.0 and res.rhs == 0.0 and res.z == 0.0


def test_gnz_identity_poisson():
    # with no interaction the two sides are mean count and integral of rho
    model = _poisson_model(4.0)
    res = gnz_check(model, lambda x, y, s1: np.ones_like(x), replicates=200)
    assert np.isclose(res.rhs, math.exp(4.0), rtol=1e-9)
    assert abs(res.z) < 3.0


def test_gnz_identity_strauss_neighbor_count():
    model = _strauss_model(3.8, -0.8, 0.08)
    res = gnz_check(model, lambda x, y, s1: s1, replicates=100,
                    burn_in=20_000, sweeps=0)
    assert abs(res.z) < 3.0


def test_gnz_identity_strauss_constant_h():
    model = _strauss_model(3.8, -0.8, 0.08)
    res = gnz_check(model, lambda x, y, s1: np.ones_like(x), replicates=100,
                    burn_in=20_000, sweeps=0)
    assert abs(res.z) < 3.0
