"""End-to-end fitting: scheme -> pilot -> penalty plan -> path -> selection.

This is the one place that wires the modules together, shared by the CLI,
the study harness and the tests so they cannot drift apart. The pilot for
adaptive weights is the unpenalized fit; if the design is rank deficient the
pilot falls back to a ridge-stabilized fit with ridge 1e-6 trace(H)/q and
the ridge value is reported in the diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import reporting
from .errors import SingularDesignError
from .geometry import PointPattern
from .model import ModelSpec
from .quadrature import QuadratureScheme, build_scheme, gradient_and_hessian
from .selection import CriterionTable, Selection, criterion_table, select
from .solver import (
    PathFit,
    PenaltyPlan,
    fit_path,
    fit_unpenalized,
    kkt_residual,
    make_penalty_plan,
    mu_hat_for,
)

__all__ = ["FitOutcome", "run_fit", "fit_document"]


@dataclass
class FitOutcome:
    """Everything produced by one fit; path/selection are None for penalty='none'."""

    scheme: QuadratureScheme
    penalty: str
    pilot: np.ndarray
    pilot_ridge: float
    plan: PenaltyPlan | None
    path: PathFit | None
    table: CriterionTable | None
    selection: Selection | None
    beta: np.ndarray            # the headline coefficient vector
    criterion: str


def _pilot_fit(scheme: QuadratureScheme):
    """Unpenalized pilot; ridge-stabilized when the design is rank deficient."""
    try:
        return fit_unpenalized(scheme), 0.0
    except SingularDesignError:
        _, H = gradient_and_hessian(scheme, np.zeros(scheme.q))
        ridge = 1e-6 * float(np.trace(H)) / scheme.q
        return fit_unpenalized(scheme, ridge=ridge), ridge


def run_fit(pattern: PointPattern, model: ModelSpec, penalty: str = "adaptive",
            gamma: float = 1.0, n_tau: int = 100, tau_min_ratio: float = 1e-4,
            dummy_grid=(32, 32), criterion: str = "cbic") -> FitOutcome:
    """Fit one model to one pattern and select a path point.

    penalty 'none' runs only the unpenalized fit; 'lasso' and 'adaptive'
    run the full path and pick the criterion minimizer.
    """
    scheme = build_scheme(pattern, model, dummy_grid=dummy_grid)
    pilot, ridge = _pilot_fit(scheme)
    if penalty == "none":
        return FitOutcome(scheme=scheme, penalty=penalty, pilot=pilot,
                          pilot_ridge=ridge, plan=None, path=None, table=None,
                          selection=None, beta=pilot, criterion=criterion)
    mask = model.penalty_mask
    if penalty == "lasso":
        plan = make_penalty_plan(mask, "lasso")
    elif penalty == "adaptive":
        plan = make_penalty_plan(mask, "adaptive", pilot=pilot, gamma=gamma,
                                 pilot_ridge=ridge)
    else:
        raise ValueError(f"unknown penalty {penalty!r}")
    path = fit_path(scheme, plan, n_tau=n_tau, tau_min_ratio=tau_min_ratio)
    table = criterion_table(path)
    sel = select(path, criterion=criterion, table=table)
    return FitOutcome(scheme=scheme, penalty=penalty, pilot=pilot,
                      pilot_ridge=ridge, plan=plan, path=path, table=table,
                      selection=sel, beta=sel.beta, criterion=criterion)


def _realized_tau_bounds(outcome: FitOutcome):
    """a_n / b_n diagnostics: extremes of the realized per-coefficient taus.

    a_n is the largest tau* v_j over selected penalized coefficients, b_n
    the smallest over penalized coefficients estimated as zero; None when
    the respective set is empty.
    """
    if outcome.selection is None:
        return None, None
    v = outcome.plan.v
    beta = outcome.selection.beta
    tau = outcome.selection.tau
    pen = v > 0
    sel = pen & (beta != 0.0)
    zer = pen & (beta == 0.0)
    a_n = float(np.max(tau * v[sel])) if np.any(sel) else None
    b_n = float(np.min(tau * v[zer])) if np.any(zer) else None
    return a_n, b_n


def fit_document(outcome: FitOutcome) -> dict:
    """The structured result document (schema pinned by format_version)."""
    scheme = outcome.scheme
    names = list(scheme.column_names)
    doc = {
        "format_version": reporting.FORMAT_VERSION,
        "penalty": outcome.penalty,
        "criterion": outcome.criterion,
        "coefficient_names": names,
        "coefficients": {n: float(b) for n, b in zip(names, outcome.beta)},
        "pilot": {n: float(b) for n, b in zip(names, outcome.pilot)},
        "n_observed": scheme.n_observed,
        "mu_hat": mu_hat_for(scheme),
        "domain": list(scheme.domain.as_tuple()),
        "domain_area": scheme.domain.area,
        "n_nodes": scheme.n_nodes,
        "n_data_nodes": scheme.n_data,
        "weight_sum_rel_error": scheme.weight_sum_error(),
        "diagnostics": {"pilot_ridge": outcome.pilot_ridge},
    }
    if outcome.path is not None:
        path, table, sel = outcome.path, outcome.table, outcome.selection
        a_n, b_n = _realized_tau_bounds(outcome)
        doc["selected"] = {
            "tau": sel.tau,
            "index": sel.index,
            "criterion_value": sel.value,
            "active_size": int(np.count_nonzero(sel.beta)),
            "kkt_residual": float(path.kkt[sel.index]),
        }
        doc["diagnostics"].update({
            "a_n": a_n,
            "b_n": b_n,
            "n_converged": int(np.count_nonzero(path.converged)),
            "kkt_max_converged": float(np.max(path.kkt[path.converged]))
            if np.any(path.converged) else None,
        })
        doc["path"] = {
            "taus": path.taus,
            "coefficients": path.coefs,
            "loglik": path.loglik,
            "kkt": path.kkt,
            "active_sizes": path.active_sizes,
            "converged": [bool(c) for c in path.converged],
            "penalty_v": path.plan.v,
        }
        doc["criteria"] = {
            "cbic": table.cbic,
            "ceric": table.ceric,
            "dof": table.dof,
            "argmin_cbic": table.argmin_cbic,
            "argmin_ceric": table.argmin_ceric,
        }
    else:
        # at tau = 0 the residual reduces to the scaled gradient norm,
        # independent of the penalty plan
        plan0 = make_penalty_plan(np.ones(scheme.q, dtype=bool), "lasso")
        kkt0 = kkt_residual(scheme, plan0, 0.0, outcome.beta)
        doc["selected"] = {
            "tau": 0.0,
            "index": 0,
            "criterion_value": None,
            "active_size": int(np.count_nonzero(outcome.beta)),
            "kkt_residual": kkt0,
        }
    return doc
