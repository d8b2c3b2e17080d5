"""Samplers and Monte-Carlo identity checkers.

Inhomogeneous Poisson patterns are drawn by thinning: N* ~ Poisson(lam_bar
|W|) candidate points placed uniformly, each retained with probability
rho(u) / lam_bar, where lam_bar is the trend stability bound.

Strauss patterns are drawn by a birth-death Metropolis-Hastings chain with
free (empty) boundary: each step proposes with probability 1/2 a birth at a
uniform location u, accepted with probability min{1, lambda(u,x)|W|/(n+1)},
and otherwise the deletion of a uniformly chosen point v, accepted with
probability min{1, n/(lambda(v, x minus v)|W|)}. A death proposal on the
empty configuration is rejected without consuming further random draws. The
chain runs in a compiled kernel that evaluates the trend exactly through a
flattened factor program, so sampling and fitting share one definition of
the model.

campbell_check and gnz_check estimate both sides of the first-order Campbell
theorem and of the GNZ formula and report a z-score; they are the external
oracles that certify the samplers and the conditional-intensity evaluation
against exact integral identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from numba import njit

from .errors import OutOfExtentError, UnstableModelError
from .geometry import PointPattern, Window
from .model import ModelSpec, flatten_factors

__all__ = ["SimConfig", "sample_poisson", "sample_strauss", "replicate_rng",
           "CheckResult", "campbell_check", "gnz_check",
           "DEFAULT_BURN_IN", "DEFAULT_SWEEPS"]

DEFAULT_BURN_IN = 100_000
DEFAULT_SWEEPS = 10_000


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines a sample: model, window, seed, chain length.

    The seed fully determines the output. `window` defaults to the model's
    window; if given it must be contained in it so the trend is evaluable.
    """

    model: ModelSpec
    seed: int
    window: Window | None = None
    burn_in: int = DEFAULT_BURN_IN
    sweeps: int = DEFAULT_SWEEPS

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.burn_in < 0 or self.sweeps < 0:
            raise ValueError("burn_in and sweeps must be nonnegative")
        w = self.sim_window
        m = self.model.window
        if not (m.xmin <= w.xmin and w.xmax <= m.xmax
                and m.ymin <= w.ymin and w.ymax <= m.ymax):
            raise ValueError("simulation window must lie inside the model window")

    @property
    def sim_window(self) -> Window:
        return self.window if self.window is not None else self.model.window


def replicate_rng(seed: int, k: int) -> np.random.Generator:
    """The derived stream for replicate k: default_rng seeded with [seed, k]."""
    return np.random.default_rng([int(seed), int(k)])


def _check_bound(model: ModelSpec) -> float:
    bound = model.local_stability_bound()
    if not math.isfinite(bound):
        raise UnstableModelError("intensity is not locally stable (unbounded)")
    return bound


def _thin(model: ModelSpec, window: Window, bound: float,
          rng: np.random.Generator) -> np.ndarray:
    """One thinning draw from the Poisson process with the model's trend."""
    n_star = int(rng.poisson(bound * window.area))
    if n_star == 0:
        return np.empty((0, 2))
    xs = rng.uniform(window.xmin, window.xmax, n_star)
    ys = rng.uniform(window.ymin, window.ymax, n_star)
    u = rng.uniform(0.0, 1.0, n_star)
    rho = np.exp(model.trend_log_intensity(xs, ys))
    if np.any(rho > bound * (1.0 + 1e-9)):
        raise UnstableModelError(
            "trend exceeds its stability bound; the bound grid is too coarse")
    keep = u * bound < rho
    return np.column_stack([xs[keep], ys[keep]])


def sample_poisson(config: SimConfig, rng: np.random.Generator | None = None
                   ) -> PointPattern:
    """Inhomogeneous Poisson sample by thinning. Requires a trend-only model."""
    model = config.model
    if model.interaction is not None and model.interaction.is_strauss:
        raise ValueError("sample_poisson requires a model without interaction")
    bound = _check_bound(model)
    if rng is None:
        rng = np.random.default_rng(int(config.seed))
    window = config.sim_window
    pts = _thin(model, window, bound, rng)
    return PointPattern(pts, window)


# -- trend factor program for the compiled chain -------------------------------

_KIND_CONST = 0
_KIND_X = 1
_KIND_Y = 2
_KIND_RASTER = 3


def _trend_program(model: ModelSpec, window: Window):
    """Flatten the trend into factor arrays the kernel can evaluate exactly."""
    col_off = [0]
    kinds: list[int] = []
    rast_of_factor: list[int] = []
    rasters: list = []
    for cov in model.covariates:
        for prim in flatten_factors(cov):
            if prim.kind == "const":
                kinds.append(_KIND_CONST)
                rast_of_factor.append(-1)
            elif prim.kind == "coord-x":
                kinds.append(_KIND_X)
                rast_of_factor.append(-1)
            elif prim.kind == "coord-y":
                kinds.append(_KIND_Y)
                rast_of_factor.append(-1)
            elif prim.kind == "raster":
                for i, r in enumerate(rasters):
                    if r is prim:
                        idx = i
                        break
                else:
                    rasters.append(prim)
                    idx = len(rasters) - 1
                kinds.append(_KIND_RASTER)
                rast_of_factor.append(idx)
            else:
                raise TypeError(f"cannot compile covariate factor {prim.kind!r}")
        col_off.append(len(kinds))

    data = []
    roff, rnr, rnc = [], [], []
    rx0, rx1, ry0, ry1 = [], [], [], []
    pos = 0
    for r in rasters:
        e = r.extent
        x0, x1, y0, y1 = e.xmin, e.xmax, e.ymin, e.ymax
        if x0 > window.xmin or x1 < window.xmax or y0 > window.ymin or y1 < window.ymax:
            raise OutOfExtentError(
                f"raster {r.name!r} does not cover the simulation window")
        data.append(r.values.ravel())
        roff.append(pos)
        rnr.append(r.values.shape[0])
        rnc.append(r.values.shape[1])
        rx0.append(x0)
        rx1.append(x1)
        ry0.append(y0)
        ry1.append(y1)
        pos += r.values.size

    flat = np.concatenate(data) if data else np.zeros(0)
    return (
        np.asarray(model.beta, dtype=np.float64),
        np.asarray(col_off, dtype=np.int64),
        np.asarray(kinds, dtype=np.int64),
        np.asarray(rast_of_factor, dtype=np.int64),
        np.ascontiguousarray(flat, dtype=np.float64),
        np.asarray(roff, dtype=np.int64),
        np.asarray(rnr, dtype=np.int64),
        np.asarray(rnc, dtype=np.int64),
        np.asarray(rx0, dtype=np.float64),
        np.asarray(rx1, dtype=np.float64),
        np.asarray(ry0, dtype=np.float64),
        np.asarray(ry1, dtype=np.float64),
    )


@njit(cache=True)
def _eta_trend(x, y, beta, col_off, fac_kind, fac_rast,
               rd, roff, rnr, rnc, rx0, rx1, ry0, ry1):
    eta = 0.0
    for j in range(beta.size):
        prod = 1.0
        for t in range(col_off[j], col_off[j + 1]):
            kind = fac_kind[t]
            if kind == 0:
                v = 1.0
            elif kind == 1:
                v = x
            elif kind == 2:
                v = y
            else:
                ri = fac_rast[t]
                nr = rnr[ri]
                nc = rnc[ri]
                dx = (rx1[ri] - rx0[ri]) / nc
                dy = (ry1[ri] - ry0[ri]) / nr
                c = int(np.floor((x - rx0[ri]) / dx))
                if c < 0:
                    c = 0
                elif c >= nc:
                    c = nc - 1
                r = int(np.floor((ry1[ri] - y) / dy))
                if r < 0:
                    r = 0
                elif r >= nr:
                    r = nr - 1
                v = rd[roff[ri] + r * nc + c]
            prod *= v
        eta += beta[j] * prod
    return eta


@njit(cache=True)
def _bd_chain(rng, xs, ys, n0, steps, area, wx0, wx1, wy0, wy1, psi, r2,
              beta, col_off, fac_kind, fac_rast,
              rd, roff, rnr, rnc, rx0, rx1, ry0, ry1):
    """Birth-death MH chain; returns final size, or -1 on buffer overflow."""
    n = n0
    cap = xs.shape[0]
    for _ in range(steps):
        if rng.uniform(0.0, 1.0) < 0.5:
            # overflow check precedes the birth draws so a replay with a
            # larger buffer consumes the identical random stream
            if n >= cap:
                return -1
            ux = rng.uniform(wx0, wx1)
            uy = rng.uniform(wy0, wy1)
            s = 0
            for i in range(n):
                ddx = xs[i] - ux
                ddy = ys[i] - uy
                if ddx * ddx + ddy * ddy <= r2:
                    s += 1
            lam = np.exp(_eta_trend(ux, uy, beta, col_off, fac_kind, fac_rast,
                                    rd, roff, rnr, rnc, rx0, rx1, ry0, ry1)
                         + psi * s)
            if rng.uniform(0.0, 1.0) * (n + 1) < lam * area:
                xs[n] = ux
                ys[n] = uy
                n += 1
        else:
            if n == 0:
                continue
            i = int(rng.integers(0, n))
            s = 0
            for k in range(n):
                if k == i:
                    continue
                ddx = xs[k] - xs[i]
                ddy = ys[k] - ys[i]
                if ddx * ddx + ddy * ddy <= r2:
                    s += 1
            lam = np.exp(_eta_trend(xs[i], ys[i], beta, col_off, fac_kind,
                                    fac_rast, rd, roff, rnr, rnc,
                                    rx0, rx1, ry0, ry1)
                         + psi * s)
            if rng.uniform(0.0, 1.0) * lam * area < n:
                xs[i] = xs[n - 1]
                ys[i] = ys[n - 1]
                n -= 1
    return n


def _sample_strauss_seeded(model: ModelSpec, window: Window, burn_in: int,
                           sweeps: int, seed_key) -> PointPattern:
    """Restartable chain: overflow doubles the buffer and replays the stream."""
    psi = float(model.psi)
    if psi > 0.0:
        raise UnstableModelError("strauss sampling requires psi <= 0")
    bound = _check_bound(model)
    program = _trend_program(model, window)
    r2 = float(model.interaction.R) ** 2
    steps = int(burn_in) + int(sweeps)
    cap = max(256, 4 * int(math.ceil(bound * window.area)) + 64)
    for _ in range(40):
        rng = np.random.default_rng(seed_key)
        init = _thin(model, window, bound, rng)
        if init.shape[0] > cap:
            cap = 2 * init.shape[0]
        xs = np.zeros(cap)
        ys = np.zeros(cap)
        xs[:init.shape[0]] = init[:, 0]
        ys[:init.shape[0]] = init[:, 1]
        n = _bd_chain(rng, xs, ys, init.shape[0], steps, window.area,
                      window.xmin, window.xmax, window.ymin, window.ymax,
                      psi, r2, *program)
        if n >= 0:
            return PointPattern(np.column_stack([xs[:n], ys[:n]]), window)
        cap *= 2
    raise RuntimeError("birth-death chain exceeded every buffer size")


def sample_strauss(config: SimConfig) -> PointPattern:
    """Long-run birth-death MH sample from the Strauss model (psi <= 0)."""
    model = config.model
    if model.interaction is None or not model.interaction.is_strauss:
        raise ValueError("sample_strauss requires a strauss interaction")
    return _sample_strauss_seeded(model, config.sim_window, config.burn_in,
                                  config.sweeps, [int(config.seed)])


# -- identity checkers ---------------------------------------------------------


class CheckResult(NamedTuple):
    lhs: float
    rhs: float
    z: float


def _paired_z(diffs) -> float:
    m = len(diffs)
    mean = math.fsum(diffs) / m
    if m < 2:
        return 0.0 if mean == 0.0 else math.inf * np.sign(mean)
    var = math.fsum((d - mean) ** 2 for d in diffs) / (m - 1)
    se = math.sqrt(var / m)
    if se == 0.0:
        return 0.0 if mean == 0.0 else math.inf * np.sign(mean)
    return mean / se


def _grid_centers(window: Window, resolution: int):
    dx = window.width / resolution
    dy = window.height / resolution
    gx = window.xmin + (np.arange(resolution) + 0.5) * dx
    gy = window.ymin + (np.arange(resolution) + 0.5) * dy
    X, Y = np.meshgrid(gx, gy)
    return X.ravel(), Y.ravel(), dx * dy


def campbell_check(model: ModelSpec, h: Callable, replicates: int,
                   seed: int = 0, grid_resolution: int = 512) -> CheckResult:
    """First-order Campbell identity E sum h(u) = integral h rho.

    h is a vectorized function of coordinate arrays (x, y). The right side
    is deterministic cell-center quadrature on a grid_resolution^2 grid; the
    left side is the Monte-Carlo mean over independent replicate streams.
    """
    window = model.window
    gx, gy, cell = _grid_centers(window, grid_resolution)
    rho = np.exp(model.trend_log_intensity(gx, gy))
    rhs = math.fsum(np.asarray(h(gx, gy), dtype=float) * rho) * cell

    sums = []
    config = SimConfig(model=model, seed=seed)
    for k in range(replicates):
        pat = sample_poisson(config, rng=replicate_rng(seed, k))
        if pat.n == 0:
            sums.append(0.0)
        else:
            sums.append(math.fsum(np.asarray(h(pat.points[:, 0],
                                               pat.points[:, 1]), dtype=float)))
    m = len(sums)
    lhs = math.fsum(sums) / m
    diff = lhs - rhs
    if m < 2:
        z = 0.0 if diff == 0.0 else math.inf * np.sign(diff)
    else:
        var = math.fsum((s - lhs) ** 2 for s in sums) / (m - 1)
        se = math.sqrt(var / m)
        z = 0.0 if (se == 0.0 and diff == 0.0) else (
            math.inf * np.sign(diff) if se == 0.0 else diff / se)
    return CheckResult(lhs=lhs, rhs=rhs, z=float(z))


def gnz_check(model: ModelSpec, h_tilde: Callable, replicates: int,
              seed: int = 0, burn_in: int = DEFAULT_BURN_IN,
              sweeps: int = DEFAULT_SWEEPS,
              grid_resolution: int = 256) -> CheckResult:
    """GNZ identity E sum_{u in X} h(u, X-u) = E int h(u, X) lambda(u, X) du.

    h_tilde is a vectorized function (x, y, s1) where s1 carries the Strauss
    neighbor counts: on the left side s1(u, X minus u) at the points of X,
    on the right side s1(u, X) at the quadrature grid. Both sides restrict
    to the eroded window so the identity is exact under the free-boundary
    sampler. The z-score is for the paired per-replicate difference.
    """
    window = model.window
    strauss = model.interaction is not None and model.interaction.is_strauss
    R = float(model.interaction.R) if strauss else 0.0
    psi = float(model.psi) if strauss else 0.0
    domain = window.erode(R) if R > 0.0 else window

    gx, gy, cell = _grid_centers(domain, grid_resolution)
    eta_grid = model.trend_log_intensity(gx, gy)

    lhs_vals, rhs_vals, diffs = [], [], []
    for k in range(replicates):
        if strauss:
            pat = _sample_strauss_seeded(model, window, burn_in, sweeps,
                                         [int(seed), k])
        else:
            config = SimConfig(model=model, seed=seed)
            pat = sample_poisson(config, rng=replicate_rng(seed, k))

        inside = domain.contains(pat.points[:, 0], pat.points[:, 1])
        px, py = pat.points[inside, 0], pat.points[inside, 1]
        if px.size and strauss:
            s1_data = pat.neighbor_counts(np.column_stack([px, py]), R,
                                          leave_one_out=True)
        else:
            s1_data = np.zeros(px.size)
        lhs_k = math.fsum(np.asarray(h_tilde(px, py, s1_data), dtype=float)) \
            if px.size else 0.0

        if strauss and pat.n > 0:
            s1_grid = pat.neighbor_counts(np.column_stack([gx, gy]), R)
        else:
            s1_grid = np.zeros(gx.size)
        lam = np.exp(eta_grid + psi * s1_grid)
        rhs_k = math.fsum(np.asarray(h_tilde(gx, gy, s1_grid), dtype=float)
                          * lam) * cell

        lhs_vals.append(lhs_k)
        rhs_vals.append(rhs_k)
        diffs.append(lhs_k - rhs_k)

    m = len(diffs)
    return CheckResult(
        lhs=math.fsum(lhs_vals) / m,
        rhs=math.fsum(rhs_vals) / m,
        z=float(_paired_z(diffs)),
    )
