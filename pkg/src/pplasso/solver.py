"""Penalized maximization of the discretized (pseudo-)likelihood.

The penalized objective is

    Q(beta) = loglik(beta) / mu_hat - tau * sum_j v_j |beta_j|,

with mu_hat the observed point count (the natural estimate of the expected
count that normalizes the composite likelihood) and v_j per-coefficient
penalty multipliers: v_j = 0 leaves a coefficient unpenalized, v_j = 1 for
every penalized coefficient gives the plain lasso, and
v_j = 1 / |pilot_j|^gamma gives the adaptive lasso.

Maximization is iteratively reweighted least squares: at the current iterate
the smooth part is replaced by its quadratic expansion, the resulting
penalized weighted least-squares problem is solved by cyclic coordinate
descent with soft-thresholding, and a step-halving line search keeps Q
nondecreasing across outer iterations. Penalized design columns are
standardized (centered when an unpenalized constant column can absorb the
shift, and scaled to unit weighted standard deviation) inside the solver
only; reported coefficients are always on the original covariate scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DivergedError,
    NoPenalizedCoefficientsError,
    SingularDesignError,
)
from .quadrature import QuadratureScheme, approx_loglik

__all__ = ["PenaltyPlan", "PathFit", "soft_threshold", "fit_unpenalized",
           "make_penalty_plan", "tau_max", "fit_path", "kkt_residual"]

# solver defaults, fixed for reproducibility
MAX_NEWTON_ITER = 50
NEWTON_TOL = 1e-8           # contract: ||grad||_inf < NEWTON_TOL * max(1, |loglik|)
NEWTON_TARGET = 1e-11       # internal target, tighter than the contract
MAX_OUTER_ITER = 25         # IRLS iterations per path point
OUTER_Q_TOL = 1e-8          # on the change of Q, relative to max(1, |Q|)
MAX_CD_SWEEPS = 100
CD_TOL = 1e-9               # on the max coefficient change per sweep
KKT_TARGET_PATH = 1e-7      # converged path points certify < 1e-6
KKT_TARGET_FINAL = 1e-9     # the exact tau = 0 entry


def soft_threshold(z: float, t: float) -> float:
    """S(z, t) = sign(z) * max(|z| - t, 0)."""
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@dataclass(frozen=True)
class PenaltyPlan:
    """Per-coefficient penalty multipliers v_j >= 0 (0 = unpenalized).

    For the adaptive plan, v_j = 1 / |pilot_j|^gamma on penalized
    coefficients, built from an unpenalized pilot fit.
    """

    v: np.ndarray
    gamma: float = 1.0
    pilot: np.ndarray | None = None
    kind: str = "lasso"
    pilot_ridge: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).ravel()
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("penalty multipliers must be finite and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def penalized(self) -> np.ndarray:
        return self.v > 0

    def penalty_value(self, beta) -> float:
        return float(self.v @ np.abs(beta))


def make_penalty_plan(penalty_mask, kind: str = "lasso", pilot=None,
                      gamma: float = 1.0, pilot_ridge: float = 0.0) -> PenaltyPlan:
    """Build a plan from a boolean mask of penalized coefficients.

    kind 'lasso' sets v_j = 1 on the mask; kind 'adaptive' sets
    v_j = 1 / |pilot_j|^gamma and requires a pilot with no exact zero on
    a penalized coordinate.
    """
    mask = np.asarray(penalty_mask, dtype=bool).ravel()
    if kind == "lasso":
        v = mask.astype(float)
        return PenaltyPlan(v=v, gamma=gamma, kind="lasso")
    if kind == "adaptive":
        if pilot is None:
            raise ValueError("adaptive plan requires pilot coefficients")
        pilot = np.asarray(pilot, dtype=float).ravel()
        if pilot.size != mask.size:
            raise ValueError("pilot length does not match the penalty mask")
        if np.any(mask & (pilot == 0.0)):
            raise ValueError("adaptive weights undefined: pilot coefficient is exactly 0")
        v = np.zeros(mask.size)
        v[mask] = 1.0 / np.abs(pilot[mask]) ** gamma
        return PenaltyPlan(v=v, gamma=gamma, pilot=pilot, kind="adaptive",
                           pilot_ridge=pilot_ridge)
    raise ValueError(f"unknown penalty kind {kind!r}")


@dataclass(frozen=True)
class PathFit:
    """Solutions along a decreasing tau sequence (last entry exactly 0)."""

    taus: np.ndarray           # (n_pts,), decreasing
    coefs: np.ndarray          # (n_pts, q), original covariate scale
    loglik: np.ndarray         # discretized log-likelihood at each solution
    kkt: np.ndarray            # KKT residual at each solution
    active_sizes: np.ndarray   # nonzero-coefficient counts
    converged: np.ndarray      # bool per path point
    mu_hat: float              # normalization used in Q
    plan: PenaltyPlan
    column_names: tuple
    domain_area: float
    n_observed: int

    @property
    def n_points(self) -> int:
        return self.taus.size


# -- shared numerical kernels ------------------------------------------------


def _loglik_raw(Z, w, y, theta):
    eta = Z @ theta
    with np.errstate(over="ignore"):
        lam = np.exp(eta)
    val = float(np.sum(w * (y * eta - lam)))
    return -np.inf if np.isnan(val) else val


def _gradient_raw(Z, w, y, theta):
    eta = Z @ theta
    with np.errstate(over="ignore"):
        lam = np.exp(eta)
    return Z.T @ (w * (y - lam))


def _newton(Z, w, y, theta0, ridge: float = 0.0, max_iter: int = MAX_NEWTON_ITER):
    """Maximize sum w (y eta - exp(eta)) - ridge/2 ||theta||^2 by damped Newton."""
    theta = np.asarray(theta0, dtype=float).copy()
    ll = _loglik_raw(Z, w, y, theta) - 0.5 * ridge * float(theta @ theta)
    if not np.isfinite(ll):
        theta = np.zeros_like(theta)
        ll = _loglik_raw(Z, w, y, theta)
    for _ in range(max_iter):
        eta = Z @ theta
        lam = np.exp(np.minimum(eta, 700.0))
        g = Z.T @ (w * (y - lam)) - ridge * theta
        scale = max(1.0, abs(ll))
        if np.max(np.abs(g)) < NEWTON_TARGET * scale:
            return theta, ll
        H = (Z * (w * lam)[:, None]).T @ Z
        if ridge > 0:
            H = H + ridge * np.eye(H.shape[0])
        try:
            delta = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            raise SingularDesignError("Newton step failed: singular Hessian")
        if not np.all(np.isfinite(delta)):
            raise SingularDesignError("Newton step failed: non-finite direction")
        t = 1.0
        while t > 1e-14:
            cand = theta + t * delta
            ll_new = _loglik_raw(Z, w, y, cand) - 0.5 * ridge * float(cand @ cand)
            if ll_new >= ll:
                break
            t *= 0.5
        else:
            # no ascent possible: accept current iterate if it meets the contract
            if np.max(np.abs(g)) < NEWTON_TOL * scale:
                return theta, ll
            raise DivergedError("Newton line search stalled before tolerance")
        theta, ll = cand, ll_new
    g = _gradient_raw(Z, w, y, theta) - ridge * theta
    if np.max(np.abs(g)) < NEWTON_TOL * max(1.0, abs(ll)):
        return theta, ll
    raise DivergedError(f"no convergence in {max_iter} Newton iterations")


def _check_rank(Z, w):
    Zw = Z * np.sqrt(w)[:, None]
    if np.linalg.matrix_rank(Zw) < Z.shape[1]:
        raise SingularDesignError("design matrix is rank deficient on the scheme nodes")


def _initial_theta(Z, w, y):
    """Start Newton at the intercept-only estimate when a constant column exists."""
    theta = np.zeros(Z.shape[1])
    wsum = float(np.sum(w))
    means = (w @ Z) / wsum
    var = (w @ (Z - means) ** 2) / wsum
    const = (var <= 1e-12 * (1.0 + means**2)) & (np.abs(means) > 0)
    if np.any(const):
        j0 = int(np.argmax(const))
        n_data = float(np.sum(w * y))  # = number of data nodes
        theta[j0] = np.log(max(n_data, 0.5) / wsum) / means[j0]
    return theta


def fit_unpenalized(scheme: QuadratureScheme, ridge: float = 0.0):
    """Newton maximizer of the discretized log-likelihood.

    Requires a full-column-rank design (unless a ridge > 0 stabilizes it).
    On success the gradient satisfies ||g||_inf < 1e-8 * max(1, |loglik|).
    """
    Z, w, y = scheme.design, scheme.weights, scheme.responses
    if ridge == 0.0:
        _check_rank(Z, w)
    theta0 = _initial_theta(Z, w, y)
    theta, _ = _newton(Z, w, y, theta0, ridge=ridge)
    return theta


def mu_hat_for(scheme: QuadratureScheme) -> float:
    """Normalization constant: the observed point count (floored at 1)."""
    return float(max(1, scheme.n_observed))


def tau_max(scheme: QuadratureScheme, plan: PenaltyPlan) -> float:
    """Smallest tau at which every penalized coefficient is zero.

    With the unpenalized coefficients at their restricted optimum beta*, the
    KKT stationarity condition keeps a penalized coordinate at zero iff
    |grad_j / mu_hat| <= tau v_j, hence
    tau_max = max_j |grad_j(beta*) / mu_hat| / v_j.
    """
    beta_star = _restricted_optimum(scheme, plan)
    return _tau_max_from(scheme, plan, beta_star)


def _restricted_optimum(scheme: QuadratureScheme, plan: PenaltyPlan):
    pen = plan.penalized
    if not np.any(pen):
        raise NoPenalizedCoefficientsError("every penalty multiplier is zero")
    Z, w, y = scheme.design, scheme.weights, scheme.responses
    beta_star = np.zeros(scheme.q)
    free = ~pen
    if np.any(free):
        Zf = Z[:, free]
        _check_rank(Zf, w)
        theta0 = _initial_theta(Zf, w, y)
        sub, _ = _newton(Zf, w, y, theta0)
        beta_star[free] = sub
    return beta_star


def _tau_max_from(scheme: QuadratureScheme, plan: PenaltyPlan, beta_star) -> float:
    pen = plan.penalized
    g = _gradient_raw(scheme.design, scheme.weights, scheme.responses, beta_star)
    mu = mu_hat_for(scheme)
    return float(np.max(np.abs(g[pen]) / (mu * plan.v[pen])))


def kkt_residual(scheme: QuadratureScheme, plan: PenaltyPlan, tau: float, beta) -> float:
    """Maximum violation of the subgradient stationarity conditions of Q.

    For beta_j != 0 the stationarity equation is
    grad_j / mu_hat = tau v_j sign(beta_j); for beta_j = 0 it is the
    interval condition |grad_j / mu_hat| <= tau v_j.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    g = _gradient_raw(scheme.design, scheme.weights, scheme.responses, beta)
    gs = g / mu_hat_for(scheme)
    res = 0.0
    for j in range(beta.size):
        tv = tau * plan.v[j]
        if beta[j] != 0.0:
            res = max(res, abs(gs[j] - tv * np.sign(beta[j])))
        else:
            res = max(res, max(0.0, abs(gs[j]) - tv))
    return float(res)


# -- internal standardization ------------------------------------------------


class _Standardizer:
    """Maps between original and internally standardized coordinates.

    Penalized columns are scaled to unit weighted standard deviation and,
    when an unpenalized constant column is present to absorb the shift,
    centered to weighted mean zero. Unpenalized columns are untouched.
    """

    def __init__(self, Z, w, penalized):
        wsum = float(np.sum(w))
        means = (w @ Z) / wsum
        var = (w @ (Z - means) ** 2) / wsum
        sd = np.sqrt(np.maximum(var, 0.0))

        const_cols = (var <= 1e-12 * (1.0 + means**2)) & (np.abs(means) > 0)
        intercepts = const_cols & ~penalized
        self.intercept_idx = int(np.argmax(intercepts)) if np.any(intercepts) else -1
        self.center = self.intercept_idx >= 0

        self.scale = np.ones(Z.shape[1])
        self.shift = np.zeros(Z.shape[1])
        usable = penalized & (sd > 1e-300)
        self.scale[usable] = sd[usable]
        if self.center:
            self.shift[usable] = means[usable]

        Zs = Z.copy()
        Zs[:, usable] = (Z[:, usable] - self.shift[usable]) / self.scale[usable]
        self.Zs = Zs
        self.penalized = penalized

    def v_std(self, v):
        return v / self.scale

    def to_std(self, beta):
        b = np.asarray(beta, dtype=float) * self.scale
        if self.center:
            b[self.intercept_idx] += float(np.sum(beta * self.shift)) / self._c0
        return b

    def to_orig(self, b):
        beta = np.asarray(b, dtype=float) / self.scale
        if self.center:
            beta[self.intercept_idx] -= float(np.sum(b * self.shift / self.scale)) / self._c0
        return beta

    @property
    def _c0(self):
        # value of the constant intercept column
        col = self.Zs[:, self.intercept_idx]
        return float(col[0])


# -- coordinate descent for the quadratic surrogate ---------------------------


def _cd_quadratic(Zs, omega, r, tv, mu, b0, sweeps_budget):
    """Minimize (1/2mu) sum omega (r - Zs b)^2 + sum tv_j |b_j| by cyclic CD.

    One full sweep, then iteration on the active set until stable, then a
    full sweep to check the KKT conditions of excluded coordinates; repeats
    within the sweep budget.
    """
    q = Zs.shape[1]
    b = b0.copy()
    A = (omega @ (Zs * Zs)) / mu
    e = r - Zs @ b
    sweeps = 0

    def sweep(idx):
        nonlocal e
        max_change = 0.0
        for j in idx:
            if A[j] <= 0.0:
                continue
            zj = Zs[:, j]
            c = (omega * zj) @ e / mu + A[j] * b[j]
            new = soft_threshold(c, tv[j]) / A[j]
            if new != b[j]:
                e = e + zj * (b[j] - new)
                max_change = max(max_change, abs(new - b[j]))
                b[j] = new
        return max_change

    all_idx = np.arange(q)
    change = sweep(all_idx)
    sweeps += 1
    while sweeps < sweeps_budget:
        active = np.flatnonzero((b != 0.0) | (tv == 0.0))
        while sweeps < sweeps_budget:
            change = sweep(active)
            sweeps += 1
            if change < CD_TOL:
                break
        change = sweep(all_idx)
        sweeps += 1
        if change < CD_TOL:
            break
    return b


def _irls_penalized(Z, Zs, w, y, v_orig, tv, tau, mu, b_init, kkt_target,
                    std: _Standardizer):
    """Solve one path point. Returns (b_std, Q, loglik, kkt, converged)."""

    def q_value(b):
        ll = _loglik_raw(Zs, w, y, b)
        return ll / mu - float(tv @ np.abs(b)), ll

    def kkt_of(b):
        beta = std.to_orig(b)
        g = _gradient_raw(Z, w, y, beta) / mu
        res = 0.0
        for j in range(beta.size):
            tvj = tau * v_orig[j]
            if beta[j] != 0.0:
                res = max(res, abs(g[j] - tvj * np.sign(beta[j])))
            else:
                res = max(res, max(0.0, abs(g[j]) - tvj))
        return res

    b = b_init.copy()
    Q, ll = q_value(b)
    if not np.isfinite(Q):
        b = np.zeros_like(b)
        Q, ll = q_value(b)
    converged = False
    for _ in range(MAX_OUTER_ITER):
        eta = np.minimum(Zs @ b, 700.0)
        lam = np.exp(eta)
        lam_safe = np.maximum(lam, 1e-300)
        omega = w * lam
        r = eta + (y - lam) / lam_safe
        b_cd = _cd_quadratic(Zs, omega, r, tv, mu, b, MAX_CD_SWEEPS)

        step = b_cd - b
        if np.max(np.abs(step)) == 0.0:
            if kkt_of(b) < kkt_target:
                converged = True
                break
            continue
        t = 1.0
        accepted = False
        while t > 1e-12:
            cand = b + t * step
            Q_new, ll_new = q_value(cand)
            if Q_new >= Q:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            converged = kkt_of(b) < kkt_target
            break
        dQ = Q_new - Q
        b, Q, ll = cand, Q_new, ll_new
        if dQ <= OUTER_Q_TOL * max(1.0, abs(Q)) and kkt_of(b) < kkt_target:
            converged = True
            break
    return b, Q, ll, kkt_of(b), converged


def fit_path(scheme: QuadratureScheme, plan: PenaltyPlan, n_tau: int = 100,
             tau_min_ratio: float = 1e-4) -> PathFit:
    """Solve the penalized problem over a decreasing tau grid.

    The grid is geometric from tau_max down to tau_min_ratio * tau_max with
    a final exact tau = 0 entry (n_tau points in total), solved with warm
    starts. The solution at tau_max is the restricted optimum with all
    penalized coefficients exactly zero. Failures at individual path points
    are flagged as non-converged and the path continues.
    """
    if n_tau < 2:
        raise ValueError("n_tau must be at least 2")
    if not (0.0 < tau_min_ratio < 1.0):
        raise ValueError("tau_min_ratio must lie in (0, 1)")

    Z, w, y = scheme.design, scheme.weights, scheme.responses
    mu = mu_hat_for(scheme)
    beta_star = _restricted_optimum(scheme, plan)
    t_max = _tau_max_from(scheme, plan, beta_star)

    if t_max == 0.0:
        taus = np.array([0.0])
    else:
        taus = np.append(np.geomspace(t_max, t_max * tau_min_ratio, n_tau - 1), 0.0)

    std = _Standardizer(Z, w, plan.penalized)
    vs = std.v_std(plan.v)

    n_pts = taus.size
    q = scheme.q
    coefs = np.zeros((n_pts, q))
    loglik = np.zeros(n_pts)
    kkt = np.zeros(n_pts)
    converged = np.zeros(n_pts, dtype=bool)

    b = std.to_std(beta_star)
    for k, tau in enumerate(taus):
        if k == 0 and t_max > 0.0:
            # beta* is the exact solution at tau_max by construction
            coefs[0] = beta_star
            loglik[0] = approx_loglik(scheme, beta_star)
            kkt[0] = kkt_residual(scheme, plan, tau, beta_star)
            converged[0] = True
            continue
        target = KKT_TARGET_FINAL if tau == 0.0 else KKT_TARGET_PATH
        try:
            b, _, ll, res, ok = _irls_penalized(
                Z, std.Zs, w, y, plan.v, tau * vs, tau, mu, b, target, std)
        except (np.linalg.LinAlgError, FloatingPointError):
            ok, ll, res = False, -np.inf, np.inf
        beta = std.to_orig(b)
        # snap coordinates that are zero in the solver's coordinates
        beta[b == 0.0] = 0.0
        coefs[k] = beta
        loglik[k] = ll if np.isfinite(ll) else approx_loglik(scheme, beta)
        kkt[k] = res
        converged[k] = ok

    active_sizes = np.count_nonzero(coefs, axis=1)
    return PathFit(
        taus=taus,
        coefs=coefs,
        loglik=loglik,
        kkt=kkt,
        active_sizes=active_sizes,
        converged=converged,
        mu_hat=mu,
        plan=plan,
        column_names=scheme.column_names,
        domain_area=scheme.domain.area,
        n_observed=scheme.n_observed,
    )


def solve_at_tau(scheme: QuadratureScheme, plan: PenaltyPlan, tau: float,
                 beta_init=None):
    """Solve the penalized problem at a single tau (used for fixed-tau studies)."""
    Z, w, y = scheme.design, scheme.weights, scheme.responses
    mu = mu_hat_for(scheme)
    std = _Standardizer(Z, w, plan.penalized)
    vs = std.v_std(plan.v)
    if beta_init is None:
        beta_init = _restricted_optimum(scheme, plan)
    b0 = std.to_std(np.asarray(beta_init, dtype=float))
    target = KKT_TARGET_FINAL if tau == 0.0 else KKT_TARGET_PATH
    b, _, ll, res, ok = _irls_penalized(Z, std.Zs, w, y, plan.v, tau * vs, tau,
                                        mu, b0, target, std)
    beta = std.to_orig(b)
    beta[b == 0.0] = 0.0
    return beta, ll, res, ok
