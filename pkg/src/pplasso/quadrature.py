"""Berman-Turner discretization of the likelihood integrals.

The Poisson likelihood and the pseudo-likelihood both have the form
sum_{u in x} log lambda(u) - int lambda(u) du. Discretizing the integral on
data plus dummy nodes with counting weights turns either objective into a
weighted Poisson-GLM log-likelihood

    l~(theta) = sum_i w_i { y_i eta_i - exp(eta_i) },   eta_i = theta . z_i,

with y_i = 1/w_i at data nodes and 0 at dummy nodes, so the data-node terms
reproduce the log sum exactly while the dummy terms approximate the integral.
For Strauss models the integration domain is the window eroded by R, and the
Strauss design column at a data node u is computed on x minus u.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError
from .geometry import PointPattern, Window
from .model import ModelSpec

__all__ = ["QuadratureScheme", "build_scheme", "approx_loglik",
           "gradient_and_hessian", "write_scheme_csv"]

#: relative tolerance on the sum-of-weights identity sum(w) = |domain|
WEIGHT_SUM_RTOL = 1e-10


@dataclass(frozen=True)
class QuadratureScheme:
    """Immutable Berman-Turner scheme.

    Nodes are the N data points inside the fitting domain followed by the M
    dummy points; `design` holds one design-vector row per node.
    """

    nodes: np.ndarray          # (N + M, 2)
    weights: np.ndarray        # (N + M,)
    responses: np.ndarray      # (N + M,), 1/w at data nodes, 0 at dummy nodes
    is_data: np.ndarray        # (N + M,) bool
    design: np.ndarray         # (N + M, q)
    domain: Window             # D, or D eroded by R for Strauss models
    column_names: tuple        # q design column names
    n_observed: int            # points of the pattern in the full window

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_data(self) -> int:
        return int(np.count_nonzero(self.is_data))

    @property
    def q(self) -> int:
        return self.design.shape[1]

    def weight_sum_error(self) -> float:
        """Relative error of sum(w) against the domain area."""
        return abs(float(np.sum(self.weights)) - self.domain.area) / self.domain.area


def build_scheme(pattern: PointPattern, model: ModelSpec,
                 dummy_grid=(32, 32)) -> QuadratureScheme:
    """Assemble the quadrature scheme for a pattern under a model.

    Dummy points sit at the centers of an nx-by-ny tiling of the fitting
    domain. Weights follow the counting rule: a node in a tile holding k
    nodes in total receives tile_area / k, so the weights sum to the domain
    area by construction and every tile is nonempty (it contains its own
    dummy center). Data points outside the fitting domain contribute no
    node, but they do contribute to the Strauss neighbour counts.
    """
    nx, ny = int(dummy_grid[0]), int(dummy_grid[1])
    if nx < 1 or ny < 1:
        raise ValueError("dummy grid must be at least 1x1")

    window = model.window
    if model.interaction.is_strauss:
        domain = window.erode(model.interaction.R)
    else:
        domain = window

    pts = pattern.points
    in_dom = domain.contains(pts[:, 0], pts[:, 1])
    data = pts[in_dom]
    n_data = data.shape[0]

    dx = domain.width / nx
    dy = domain.height / ny
    cx = domain.xmin + dx * (np.arange(nx) + 0.5)
    cy = domain.ymin + dy * (np.arange(ny) + 0.5)
    gx, gy = np.meshgrid(cx, cy)
    dummies = np.column_stack([gx.ravel(), gy.ravel()])

    nodes = np.vstack([data, dummies])
    is_data = np.zeros(nodes.shape[0], dtype=bool)
    is_data[:n_data] = True

    # tile membership; right/top boundary nodes fall into the last tile
    ix = np.clip(np.floor((nodes[:, 0] - domain.xmin) / dx).astype(int), 0, nx - 1)
    iy = np.clip(np.floor((nodes[:, 1] - domain.ymin) / dy).astype(int), 0, ny - 1)
    tile = iy * nx + ix
    counts = np.bincount(tile, minlength=nx * ny)
    weights = (dx * dy) / counts[tile]

    responses = np.zeros(nodes.shape[0])
    responses[:n_data] = 1.0 / weights[:n_data]

    design = model.trend_matrix(nodes[:, 0], nodes[:, 1])
    if model.interaction.is_strauss:
        s1 = np.zeros(nodes.shape[0])
        if pattern.n > 0:
            R = model.interaction.R
            # data nodes are pattern points: drop the self-match (x \ u);
            # dummy nodes use the full pattern
            s1[:n_data] = pattern.neighbor_counts(data, R, leave_one_out=True)
            s1[n_data:] = pattern.neighbor_counts(dummies, R)
        design = np.column_stack([design, s1])

    for a in (nodes, weights, responses, is_data, design):
        a.setflags(write=False)

    return QuadratureScheme(
        nodes=nodes,
        weights=weights,
        responses=responses,
        is_data=is_data,
        design=design,
        domain=domain,
        column_names=tuple(model.coefficient_names),
        n_observed=pattern.n,
    )


def _linear_predictor(scheme: QuadratureScheme, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != scheme.q:
        raise ValueError(f"theta has length {theta.size}, expected {scheme.q}")
    return scheme.design @ theta


def approx_loglik(scheme: QuadratureScheme, theta) -> float:
    """The discretized log-(pseudo)likelihood sum_i w_i (y_i eta_i - exp(eta_i)).

    Overflow in exp saturates the objective to -inf rather than raising.
    """
    eta = _linear_predictor(scheme, theta)
    with np.errstate(over="ignore"):
        lam = np.exp(eta)
    vals = scheme.weights * (scheme.responses * eta - lam)
    total = float(np.sum(vals))
    if np.isnan(total):
        return -np.inf
    return total


def gradient_and_hessian(scheme: QuadratureScheme, theta):
    """Gradient of the objective and H = -(second derivative).

    H(theta) = sum_i w_i exp(eta_i) z_i z_i', the quadrature analog of the
    information matrices; it is symmetric positive semidefinite.
    """
    eta = _linear_predictor(scheme, theta)
    with np.errstate(over="ignore"):
        lam = np.exp(eta)
    if not np.all(np.isfinite(lam)):
        raise NonFiniteError("exp overflow in gradient/Hessian evaluation")
    Z = scheme.design
    w = scheme.weights
    grad = Z.T @ (w * (scheme.responses - lam))
    H = (Z * (w * lam)[:, None]).T @ Z
    # the matmul rounds H[i,j] and H[j,i] independently; symmetrize exactly
    H = 0.5 * (H + H.T)
    return grad, H


def write_scheme_csv(scheme: QuadratureScheme, path) -> None:
    """Dump the scheme for debugging: one node per row, with a metadata line."""
    d = scheme.domain
    with open(path, "w") as fh:
        fh.write(
            f"# domain={d.xmin:.17g},{d.xmax:.17g},{d.ymin:.17g},{d.ymax:.17g}"
            f" sum_w={float(np.sum(scheme.weights)):.17g}"
            f" n_data={scheme.n_data} n_dummy={scheme.n_nodes - scheme.n_data}\n"
        )
        cols = ",".join(scheme.column_names)
        fh.write(f"x,y,w,y_i,is_data,{cols}\n")
        for i in range(scheme.n_nodes):
            row = scheme.design[i]
            fh.write(
                f"{scheme.nodes[i, 0]:.17g},{scheme.nodes[i, 1]:.17g},"
                f"{scheme.weights[i]:.17g},{scheme.responses[i]:.17g},"
                f"{int(scheme.is_data[i])},"
                + ",".join(f"{v:.17g}" for v in row)
                + "\n"
            )
