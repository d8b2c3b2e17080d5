import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pplasso.geometry import PointPattern, Window
from pplasso.model import ConstantField, CoordinateField, InteractionSpec, ModelSpec
from pplasso.quadrature import (
    approx_loglik,
    build_scheme,
    gradient_and_hessian,
    write_scheme_csv,
)

W = Window(0.0, 1.0, 0.0, 1.0)


def _intercept_model(window=W, strauss_r=None, psi=-0.5):
    if strauss_r is None:
        return ModelSpec([ConstantField()], window, beta=[0.0])
    return ModelSpec([ConstantField()], window, beta=[0.0],
                     interaction=InteractionSpec("strauss", strauss_r), psi=psi)


def test_empty_pattern_weights():
    # empty pattern, 2x2 tiles on the unit square -> 4 dummy nodes, w = 0.25
    pat = PointPattern(np.empty((0, 2)), W)
    s = build_scheme(pat, _intercept_model(), dummy_grid=(2, 2))
    assert s.n_nodes == 4
    assert np.allclose(s.weights, 0.25)
    assert not s.is_data.any()
    assert s.n_observed == 0


def test_single_point_tile_sharing():
    # one data point at (0.1, 0.1) with 2x2 tiles: its tile holds 2 nodes,
    # each with weight area/count = 0.25/2, and y = 1/w = 8 at the data node
    pat = PointPattern(np.array([[0.1, 0.1]]), W)
    s = build_scheme(pat, _intercept_model(), dummy_grid=(2, 2))
    assert s.n_nodes == 5
    assert s.n_data == 1
    data_w = s.weights[s.is_data][0]
    assert data_w == pytest.approx(0.125)
    assert s.responses[s.is_data][0] == pytest.approx(8.0)
    assert np.all(s.responses[~s.is_data] == 0.0)
    assert abs(s.weights.sum() - 1.0) < 1e-10


def test_strauss_domain_erosion_and_weight_sum():
    pat = PointPattern(np.array([[0.5, 0.5], [0.52, 0.5]]), W)
    s = build_scheme(pat, _intercept_model(strauss_r=0.1), dummy_grid=(4, 4))
    assert s.domain.as_tuple() == (0.1, 0.9, 0.1, 0.9)
    assert s.weights.sum() == pytest.approx(0.64, abs=1e-12)


def test_strauss_column_leave_one_out():
    pat = PointPattern(np.array([[0.5, 0.5], [0.55, 0.5], [0.85, 0.85]]), W)
    s = build_scheme(pat, _intercept_model(strauss_r=0.1), dummy_grid=(4, 4))
    data_rows = s.design[s.is_data]
    # two close points see each other, the third sees nobody
    assert sorted(data_rows[:, 1]) == [0.0, 1.0, 1.0]


def test_loglik_frozen_values():
    # theta = (0,): loglik = sum w (0 - 1) = -|D| = -1 on the empty pattern
    pat = PointPattern(np.empty((0, 2)), W)
    s = build_scheme(pat, _intercept_model(), dummy_grid=(8, 8))
    assert approx_loglik(s, np.array([0.0])) == pytest.approx(-1.0)


def test_loglik_at_intercept_mle():
    # N=100: loglik at the MLE log(100) is 100 log 100 - 100
    rng = np.random.default_rng(5)
    pat = PointPattern(rng.uniform(0, 1, (100, 2)), W)
    s = build_scheme(pat, _intercept_model(), dummy_grid=(16, 16))
    val = approx_loglik(s, np.array([np.log(100.0)]))
    assert val == pytest.approx(100.0 * np.log(100.0) - 100.0, abs=1e-9)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    pat = PointPattern(rng.uniform(0, 1, (60, 2)), W)
    m = ModelSpec([ConstantField(), CoordinateField("x"), CoordinateField("y")],
                  W, beta=[0.0, 0.0, 0.0])
    s = build_scheme(pat, m, dummy_grid=(8, 8))
    h = 1e-5
    for _ in range(10):
        theta = rng.normal(scale=0.8, size=3)
        g, H = gradient_and_hessian(s, theta)
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (approx_loglik(s, theta + e) - approx_loglik(s, theta - e)) / (2 * h)
            assert np.isclose(g[j], fd, rtol=1e-6, atol=1e-8)
        assert np.allclose(H, H.T)
        eig = np.linalg.eigvalsh(H)
        assert eig.min() >= -1e-10 * np.trace(H)


@given(st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_weight_sum_invariant_randomized(seed):
    rng = np.random.default_rng(seed)
    x0, y0 = rng.uniform(-5, 5, 2)
    w = Window(x0, x0 + rng.uniform(0.5, 10), y0, y0 + rng.uniform(0.5, 10))
    nx, ny = rng.integers(1, 40, 2)
    n = int(rng.integers(0, 200))
    pts = np.column_stack([rng.uniform(w.xmin, w.xmax, n),
                           rng.uniform(w.ymin, w.ymax, n)])
    pat = PointPattern(pts, w)
    s = build_scheme(pat, _intercept_model(window=w), dummy_grid=(int(nx), int(ny)))
    assert s.weight_sum_error() < 1e-10


def test_responses_definition():
    rng = np.random.default_rng(21)
    pat = PointPattern(rng.uniform(0, 1, (25, 2)), W)
    s = build_scheme(pat, _intercept_model(), dummy_grid=(5, 5))
    np.testing.assert_allclose(s.responses[s.is_data] * s.weights[s.is_data], 1.0)
    assert np.all(s.responses[~s.is_data] == 0.0)


def test_scheme_csv_has_metadata(tmp_path):
    pat = PointPattern(np.array([[0.3, 0.3]]), W)
    s = build_scheme(pat, _intercept_model(), dummy_grid=(2, 2))
    path = tmp_path / "quad.csv"
    write_scheme_csv(s, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# domain=")
    assert lines[1].split(",")[:5] == ["x", "y", "w", "y_i", "is_data"]
    assert len(lines) == 2 + s.n_nodes
