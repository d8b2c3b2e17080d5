"""Tuning-parameter selection along a fitted path.

Two composite information criteria, both of the form
-2 * loglik + penalty_weight * dof:

    cbic  = -2 loglik + log(N) * d(tau)
    ceric = -2 loglik + log(N / (|D| tau)) * d(tau)      (tau > 0 only)

where N is the observed point count, |D| the area of the fitting domain and
d(tau) the model dimension at that path point. The dimension is either the
nonzero-coefficient count (mode 'count', exact for Poisson models) or the
sandwich trace trace(H_act^{-1} V_act) with an externally supplied
covariance estimate V of the composite score (mode 'sandwich').

The selected point minimizes the criterion over converged path points, with
ties resolved toward the larger tau (the sparser model). The exact tau = 0
entry is rankable under cbic but never under ceric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    NoConvergedPointError,
    SingularActiveHessianError,
    ZeroTauError,
)
from .quadrature import QuadratureScheme, gradient_and_hessian
from .solver import PathFit

__all__ = ["cbic", "ceric", "effective_dof", "CriterionTable",
           "criterion_table", "Selection", "select"]


def cbic(loglik: float, dof: float, n_observed: int) -> float:
    """-2 loglik + log(N) d, the BIC analogue for the composite likelihood."""
    if n_observed < 1:
        raise ValueError("criterion undefined for an empty pattern")
    return -2.0 * loglik + np.log(n_observed) * dof


def ceric(loglik: float, dof: float, n_observed: int, domain_area: float,
          tau: float) -> float:
    """-2 loglik + log(N / (|D| tau)) d; undefined at tau = 0."""
    if n_observed < 1:
        raise ValueError("criterion undefined for an empty pattern")
    if domain_area <= 0.0:
        raise ValueError("domain area must be positive")
    if tau <= 0.0:
        raise ZeroTauError("ceric is undefined at tau = 0")
    return -2.0 * loglik + np.log(n_observed / (domain_area * tau)) * dof


def _sandwich_dof(scheme: QuadratureScheme, beta, V) -> float:
    """trace(H_act^{-1} V_act) on the active (nonzero) coordinates."""
    active = np.flatnonzero(np.asarray(beta) != 0.0)
    if active.size == 0:
        return 0.0
    _, H = gradient_and_hessian(scheme, beta)
    H_act = H[np.ix_(active, active)]
    V_act = np.asarray(V, dtype=float)[np.ix_(active, active)]
    try:
        M = np.linalg.solve(H_act, V_act)
    except np.linalg.LinAlgError:
        raise SingularActiveHessianError(
            "active-set Hessian is singular; sandwich dof unavailable")
    return float(np.trace(M))


def effective_dof(path: PathFit, mode: str = "count",
                  scheme: QuadratureScheme | None = None, V=None) -> np.ndarray:
    """Model dimension d(tau) at every path point."""
    if mode == "count":
        return path.active_sizes.astype(float)
    if mode == "sandwich":
        if scheme is None or V is None:
            raise ValueError("sandwich dof needs the quadrature scheme and V")
        return np.array([_sandwich_dof(scheme, path.coefs[k], V)
                         for k in range(path.n_points)])
    raise ValueError(f"unknown dof mode {mode!r}")


@dataclass(frozen=True)
class CriterionTable:
    """Both criteria evaluated at every path point, with argmin indices.

    Values are NaN where a criterion is undefined (ceric at tau = 0) or the
    fit did not converge; argmin indices are -1 when nothing is rankable.
    Ties resolve to the smaller index, i.e. the larger tau.
    """

    taus: np.ndarray
    loglik: np.ndarray
    dof: np.ndarray
    cbic: np.ndarray
    ceric: np.ndarray
    converged: np.ndarray
    argmin_cbic: int
    argmin_ceric: int

    def values(self, criterion: str) -> np.ndarray:
        if criterion == "cbic":
            return self.cbic
        if criterion == "ceric":
            return self.ceric
        raise ValueError(f"unknown criterion {criterion!r}")

    def argmin(self, criterion: str) -> int:
        return self.argmin_cbic if criterion == "cbic" else self.argmin_ceric


def _first_argmin(values, eligible) -> int:
    best = -1
    for k in range(values.size):
        if not eligible[k]:
            continue
        if best < 0 or values[k] < values[best]:
            best = k
    return best


def criterion_table(path: PathFit, dof_mode: str = "count",
                    scheme: QuadratureScheme | None = None,
                    V=None) -> CriterionTable:
    """Evaluate cbic and ceric at every path point."""
    dof = effective_dof(path, mode=dof_mode, scheme=scheme, V=V)
    n = path.n_observed
    n_pts = path.n_points
    cbic_vals = np.full(n_pts, np.nan)
    ceric_vals = np.full(n_pts, np.nan)
    for k in range(n_pts):
        if not path.converged[k]:
            continue
        cbic_vals[k] = cbic(path.loglik[k], dof[k], n)
        tau = float(path.taus[k])
        if tau > 0.0:
            ceric_vals[k] = ceric(path.loglik[k], dof[k], n,
                                  path.domain_area, tau)
    return CriterionTable(
        taus=path.taus.copy(),
        loglik=path.loglik.copy(),
        dof=dof,
        cbic=cbic_vals,
        ceric=ceric_vals,
        converged=path.converged.copy(),
        argmin_cbic=_first_argmin(cbic_vals, np.isfinite(cbic_vals)),
        argmin_ceric=_first_argmin(ceric_vals, np.isfinite(ceric_vals)),
    )


@dataclass(frozen=True)
class Selection:
    """The winning path point under one criterion."""

    criterion: str
    index: int
    tau: float
    beta: np.ndarray           # original-scale coefficients at tau*
    value: float
    table: CriterionTable


def select(path: PathFit, criterion: str = "cbic", dof_mode: str = "count",
           scheme: QuadratureScheme | None = None, V=None,
           table: CriterionTable | None = None) -> Selection:
    """Pick the path point minimizing the criterion (ties to larger tau)."""
    if criterion not in ("cbic", "ceric"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if table is None:
        table = criterion_table(path, dof_mode=dof_mode, scheme=scheme, V=V)
    idx = table.argmin(criterion)
    if idx < 0:
        raise NoConvergedPointError(
            f"no converged path point is rankable under {criterion}")
    return Selection(
        criterion=criterion,
        index=idx,
        tau=float(path.taus[idx]),
        beta=path.coefs[idx].copy(),
        value=float(table.values(criterion)[idx]),
        table=table,
    )
