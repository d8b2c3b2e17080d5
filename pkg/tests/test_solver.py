import numpy as np
import pytest

from pplasso.errors import NoPenalizedCoefficientsError, SingularDesignError
from pplasso.geometry import PointPattern, Window
from pplasso.model import (
    ConstantField,
    CoordinateField,
    InteractionSpec,
    ModelSpec,
    RasterField,
)
from pplasso.quadrature import approx_loglik, build_scheme
from pplasso.simulate import SimConfig, replicate_rng, sample_poisson
from pplasso.solver import (
    fit_path,
    fit_unpenalized,
    kkt_residual,
    make_penalty_plan,
    solve_at_tau,
    soft_threshold,
    tau_max,
)

W = Window(0.0, 1.0, 0.0, 1.0)


def _pattern(n, seed=0, window=W):
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(window.xmin, window.xmax, n),
                           rng.uniform(window.ymin, window.ymax, n)])
    return PointPattern(pts, window)


def _p2_setup(seed=3, n=80, dummy=(8, 8)):
    """Intercept + x-coordinate scheme with an adaptive plan."""
    pat = _pattern(n, seed=seed)
    model = ModelSpec([ConstantField(), CoordinateField("x")], W, beta=[0, 0])
    scheme = build_scheme(pat, model, dummy_grid=dummy)
    pilot = fit_unpenalized(scheme)
    plan = make_penalty_plan(model.penalty_mask, "adaptive", pilot=pilot)
    return scheme, plan


def test_soft_threshold_frozen_values():
    assert soft_threshold(3.0, 1.0) == 2.0
    assert soft_threshold(-0.5, 1.0) == 0.0
    assert soft_threshold(-3.0, 1.0) == -2.0
    assert soft_threshold(0.0, 0.0) == 0.0


def test_intercept_mle_closed_form():
    pat = _pattern(100, seed=9)
    model = ModelSpec([ConstantField()], W, beta=[0.0])
    s = build_scheme(pat, model, dummy_grid=(16, 16))
    beta = fit_unpenalized(s)
    assert beta[0] == pytest.approx(np.log(100.0), abs=1e-6)


def test_unpenalized_gradient_contract():
    scheme, _ = _p2_setup()
    beta = fit_unpenalized(scheme)
    plan = make_penalty_plan(np.ones(2, dtype=bool), "lasso")
    assert kkt_residual(scheme, plan, 0.0, beta) < 1e-8


def test_singular_design_raises():
    pat = _pattern(50, seed=4)
    # duplicated covariate makes the design rank deficient
    model = ModelSpec([ConstantField(), CoordinateField("x"),
                       CoordinateField("x")], W, beta=[0, 0, 0])
    s = build_scheme(pat, model, dummy_grid=(8, 8))
    with pytest.raises(SingularDesignError):
        fit_unpenalized(s)


def test_all_zero_strauss_column_is_singular():
    # R so small that no node has any neighbor: the interaction column is 0
    pat = _pattern(30, seed=12)
    model = ModelSpec([ConstantField()], W, beta=[0.0],
                      interaction=InteractionSpec("strauss", 1e-7), psi=0.0)
    s = build_scheme(pat, model, dummy_grid=(8, 8))
    assert np.all(s.design[:, 1] == 0.0)
    with pytest.raises(SingularDesignError):
        fit_unpenalized(s)


def test_newton_recovers_truth_over_replicates():
    # rho(u) = exp(4 + x). The ML estimator carries the usual O(1/mu)
    # small-sample bias (~0.02 at mu ~ 94, comparable to the MC standard
    # error of the mean at 500 replicates), so the tolerance is
    # 3 SE + 3/mu rather than 3 SE alone.
    truth = np.array([4.0, 1.0])
    model = ModelSpec([ConstantField(), CoordinateField("x")], W, beta=truth)
    config = SimConfig(model=model, seed=0)
    fit_model = ModelSpec([ConstantField(), CoordinateField("x")], W, beta=[0, 0])
    ests = []
    for k in range(500):
        pat = sample_poisson(config, rng=replicate_rng(77, k))
        s = build_scheme(pat, fit_model, dummy_grid=(32, 32))
        ests.append(fit_unpenalized(s))
    ests = np.asarray(ests)
    mean = ests.mean(axis=0)
    se = ests.std(axis=0, ddof=1) / np.sqrt(len(ests))
    mu = np.exp(4.0) * (np.e - 1.0)
    assert np.all(np.abs(mean - truth) < 3 * se + 3.0 / mu)


def test_tau_max_halves_when_weights_double():
    scheme, plan = _p2_setup()
    t1 = tau_max(scheme, plan)
    doubled = make_penalty_plan(plan.v > 0, "adaptive",
                                pilot=plan.pilot / 2.0, gamma=1.0)
    assert np.allclose(doubled.v, 2.0 * plan.v)
    t2 = tau_max(scheme, doubled)
    assert t2 == pytest.approx(t1 / 2.0, rel=1e-12)


def test_tau_max_boundary_behaviour():
    scheme, plan = _p2_setup()
    t = tau_max(scheme, plan)
    path = fit_path(scheme, plan, n_tau=5)
    assert path.taus[0] == t
    assert np.all(path.coefs[0][plan.penalized] == 0.0)
    beta, _, _, ok = solve_at_tau(scheme, plan, 0.99 * t)
    assert ok
    assert np.any(beta[plan.penalized] != 0.0)


def test_tau_max_zero_for_orthogonal_covariate():
    # an identically-zero covariate has zero score, so tau_max = 0 and the
    # path collapses to the single tau = 0 point
    pat = _pattern(40, seed=6)
    zero = RasterField(np.zeros((4, 4)), W, name="null")
    model = ModelSpec([ConstantField(), zero], W, beta=[0, 0])
    s = build_scheme(pat, model, dummy_grid=(8, 8))
    plan = make_penalty_plan(model.penalty_mask, "lasso")
    assert tau_max(s, plan) == 0.0
    path = fit_path(s, plan, n_tau=10)
    assert path.n_points == 1 and path.taus[0] == 0.0


def test_no_penalized_coefficients_error():
    scheme, _ = _p2_setup()
    plan = make_penalty_plan(np.zeros(2, dtype=bool), "lasso")
    with pytest.raises(NoPenalizedCoefficientsError):
        tau_max(scheme, plan)


def test_penalty_plan_validation():
    with pytest.raises(ValueError):
        make_penalty_plan(np.array([True, True]), "adaptive",
                          pilot=np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        make_penalty_plan(np.array([True]), "nonsense")


def _brute_force_q(scheme, plan, tau, mu):
    """Three-stage grid argmin of Q over [-10, 10]^2, final step 1e-3."""
    Z, w, y = scheme.design, scheme.weights, scheme.responses
    x = Z[:, 1]
    v1 = plan.v[1]

    def refine(c0, c1, half, step):
        b0 = np.arange(c0 - half, c0 + half + step / 2, step)
        b1 = np.arange(c1 - half, c1 + half + step / 2, step)
        best = (-np.inf, c0, c1)
        for bb1 in b1:
            eta = np.add.outer(x * bb1, b0)          # nodes x grid of b0
            ll = (w * y) @ eta - w @ np.exp(eta)
            q = ll / mu - tau * v1 * abs(bb1)
            k = int(np.argmax(q))
            if q[k] > best[0]:
                best = (q[k], b0[k], bb1)
        return best

    _, c0, c1 = refine(0.0, 0.0, 10.0, 0.2)
    _, c0, c1 = refine(c0, c1, 0.25, 1e-2)
    q, c0, c1 = refine(c0, c1, 0.015, 1e-3)
    return np.array([c0, c1]), q


def test_path_matches_brute_force_grid():
    scheme, plan = _p2_setup(seed=14, n=70)
    path = fit_path(scheme, plan, n_tau=12, tau_min_ratio=1e-3)
    assert path.converged.all()
    for k in range(path.n_points):
        ref, _ = _brute_force_q(scheme, plan, path.taus[k], path.mu_hat)
        assert np.max(np.abs(path.coefs[k] - ref)) < 5e-3, (
            f"tau index {k}: solver {path.coefs[k]}, grid {ref}")


def test_kkt_residual_certificates():
    scheme, plan = _p2_setup(seed=8)
    path = fit_path(scheme, plan, n_tau=25)
    assert path.converged.all()
    for k in range(path.n_points):
        assert kkt_residual(scheme, plan, path.taus[k], path.coefs[k]) < 1e-6
    # exact tau = 0 entry reduces to the gradient norm condition
    assert path.taus[-1] == 0.0
    assert kkt_residual(scheme, plan, 0.0, path.coefs[-1]) < 1e-8
    # perturbing one coordinate visibly violates stationarity
    beta = path.coefs[-1].copy()
    beta[0] += 0.1
    assert kkt_residual(scheme, plan, 0.0, beta) > 1e-3


def test_last_path_point_matches_unpenalized():
    scheme, plan = _p2_setup(seed=10)
    path = fit_path(scheme, plan, n_tau=30)
    unpen = fit_unpenalized(scheme)
    assert np.max(np.abs(path.coefs[-1] - unpen)) < 1e-4


def test_path_deterministic():
    scheme, plan = _p2_setup(seed=2)
    p1 = fit_path(scheme, plan, n_tau=15)
    p2 = fit_path(scheme, plan, n_tau=15)
    assert np.array_equal(p1.coefs, p2.coefs)
    assert np.array_equal(p1.taus, p2.taus)
    assert np.array_equal(p1.loglik, p2.loglik)


def test_standardization_invariance():
    # scaling a covariate by c rescales its estimate by 1/c and leaves the
    # fitted intensity unchanged when the adaptive plan is rebuilt
    rng = np.random.default_rng(31)
    vals = rng.normal(size=(16, 16))
    c = 3.0
    pat = _pattern(90, seed=18)
    m1 = ModelSpec([ConstantField(), RasterField(vals, W, name="z")], W, beta=[0, 0])
    m2 = ModelSpec([ConstantField(), RasterField(c * vals, W, name="cz")], W,
                   beta=[0, 0])
    s1 = build_scheme(pat, m1, dummy_grid=(8, 8))
    s2 = build_scheme(pat, m2, dummy_grid=(8, 8))
    plan1 = make_penalty_plan(m1.penalty_mask, "adaptive",
                              pilot=fit_unpenalized(s1))
    plan2 = make_penalty_plan(m2.penalty_mask, "adaptive",
                              pilot=fit_unpenalized(s2))
    p1 = fit_path(s1, plan1, n_tau=12)
    p2 = fit_path(s2, plan2, n_tau=12)
    assert np.allclose(p1.taus, p2.taus, rtol=1e-10)
    for k in range(p1.n_points):
        eta1 = s1.design @ p1.coefs[k]
        eta2 = s2.design @ p2.coefs[k]
        assert np.max(np.abs(np.exp(eta1) - np.exp(eta2))) < 1e-6
        assert p2.coefs[k][1] == pytest.approx(p1.coefs[k][1] / c, abs=1e-8)


def test_active_set_no_wild_oscillation():
    rng = np.random.default_rng(44)
    fields = [ConstantField()] + [
        RasterField(rng.normal(size=(8, 8)), W, name=f"z{j}") for j in range(5)]
    model = ModelSpec(fields, W, beta=np.zeros(6))
    pat = _pattern(120, seed=5)
    s = build_scheme(pat, model, dummy_grid=(8, 8))
    plan = make_penalty_plan(model.penalty_mask, "adaptive",
                             pilot=fit_unpenalized(s))
    path = fit_path(s, plan, n_tau=40)
    jumps = np.abs(np.diff(path.active_sizes))
    assert np.all(jumps <= s.q)
