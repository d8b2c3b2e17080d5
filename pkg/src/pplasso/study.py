"""Replicated simulation studies over a growing domain ladder.

Each study simulates patterns from a known sparse model on a sequence of
increasing windows, fits the penalized path per replicate, selects a path
point by an information criterion, and reports per-rung recovery metrics:
median l2 estimation error on the trend coefficients, true/false positive
rates over the penalized coordinates, the exact-support-recovery rate, and
the stabilization diagnostic median error * sqrt(mu_hat / p) that should be
roughly flat along the ladder when the sqrt(p/mu) rate holds.

Covariates are synthetic smooth fields: a fixed small sum of seeded
sinusoids, rasterized on each rung's grid and standardized there to mean 0
and variance 1. The field parameters are drawn once per covariate from a
derived stream, so the same continuous surface underlies every rung.

Every replicate draws from its own derived stream keyed by (study seed,
rung index, replicate index) and results are merged by replicate index, so
the report is byte-identical across runs regardless of worker count.
"""

from __future__ import annotations

import configparser
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import PPLassoError
from .geometry import Window
from .model import ConstantField, InteractionSpec, ModelSpec, RasterField
from .pipeline import _pilot_fit
from .quadrature import build_scheme
from .reporting import format_float, write_csv
from .selection import criterion_table, select
from .simulate import (
    DEFAULT_BURN_IN,
    DEFAULT_SWEEPS,
    SimConfig,
    _sample_strauss_seeded,
    sample_poisson,
)
from .solver import fit_path, make_penalty_plan, solve_at_tau

__all__ = ["StudyConfig", "load_study_config", "StudyReport", "run_study",
           "write_study_report", "sinusoid_field", "REPORT_COLUMNS"]

REPORT_COLUMNS = ["method", "rung", "xmin", "xmax", "ymin", "ymax", "area",
                  "replicates", "failures", "mean_count", "median_l2_error",
                  "tpr", "fpr", "exact_support_rate", "median_scaled_error"]


@dataclass(frozen=True)
class StudyConfig:
    """Parsed study definition; see the repo docs for the INI grammar."""

    active: dict                      # covariate name -> true coefficient
    noise: int
    intercept: float | None          # None = tune to target_count on rung 0
    target_count: float
    psi: float | None
    interaction_range: float | None
    field_seed: int
    field_terms: int
    grid_per_unit: int
    windows: tuple
    replicates: int
    gamma: float
    n_tau: int
    tau_min_ratio: float
    criterion: str
    seed: int
    alphas: tuple
    methods: tuple
    dummy_per_unit: int
    burn_in: int
    sweeps: int
    workers: int

    def __post_init__(self):
        p = len(self.active) + self.noise
        if p < 1:
            raise ValueError("study needs at least one covariate")
        names = {f"z{j + 1}" for j in range(p)}
        unknown = set(self.active) - names
        if unknown:
            raise ValueError(f"active covariates {sorted(unknown)} are not "
                             f"among the generated names z1..z{p}")
        areas = [w.area for w in self.windows]
        if any(b <= a for a, b in zip(areas, areas[1:])):
            raise ValueError("domain ladder must be strictly increasing in area")
        if (self.psi is None) != (self.interaction_range is None):
            raise ValueError("psi and range must be given together")
        if self.criterion not in ("cbic", "ceric"):
            raise ValueError(f"unknown criterion {self.criterion!r}")
        for m in self.methods:
            if m not in ("adaptive", "lasso"):
                raise ValueError(f"unknown study method {m!r}")

    @property
    def p(self) -> int:
        return len(self.active) + self.noise

    @property
    def is_strauss(self) -> bool:
        return self.psi is not None


def _split_list(raw: str):
    return [s.strip() for s in raw.split(",") if s.strip()]


def load_study_config(path) -> StudyConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path) as fh:
        cp.read_file(fh)

    def get(section, key, default=None):
        if cp.has_option(section, key):
            val = cp.get(section, key).strip()
            return val if val else default
        return default

    active_raw = get("model", "active", "")
    active = {}
    for item in _split_list(active_raw or ""):
        name, _, coef = item.partition(":")
        active[name.strip()] = float(coef)
    intercept_raw = get("model", "intercept", "auto")
    intercept = None if intercept_raw == "auto" else float(intercept_raw)
    psi_raw = get("model", "psi")
    rng_raw = get("model", "range")

    windows_raw = get("domains", "windows")
    if not windows_raw:
        raise ValueError("config must list [domains] windows")
    windows = []
    for token in windows_raw.split("|"):
        parts = [float(v) for v in token.split(",")]
        if len(parts) != 4:
            raise ValueError(f"window {token.strip()!r} needs 4 numbers")
        windows.append(Window(*parts))

    alphas = tuple(float(a) for a in _split_list(get("study", "alphas", "") or ""))
    methods = tuple(_split_list(get("study", "methods", "adaptive, lasso")))

    return StudyConfig(
        active=active,
        noise=int(get("model", "noise", "0")),
        intercept=intercept,
        target_count=float(get("model", "target_count", "400")),
        psi=None if psi_raw is None else float(psi_raw),
        interaction_range=None if rng_raw is None else float(rng_raw),
        field_seed=int(get("covariates", "seed", "0")),
        field_terms=int(get("covariates", "terms", "3")),
        grid_per_unit=int(get("covariates", "grid_per_unit", "32")),
        windows=tuple(windows),
        replicates=int(get("domains", "replicates", "20")),
        gamma=float(get("penalty", "gamma", "1.0")),
        n_tau=int(get("penalty", "ntau", "100")),
        tau_min_ratio=float(get("penalty", "tau_min_ratio", "1e-4")),
        criterion=get("selection", "criterion", "cbic"),
        seed=int(get("study", "seed", "0")),
        alphas=alphas,
        methods=methods,
        dummy_per_unit=int(get("study", "dummy_per_unit", "32")),
        burn_in=int(get("study", "burn_in", str(DEFAULT_BURN_IN))),
        sweeps=int(get("study", "sweeps", str(DEFAULT_SWEEPS))),
        workers=int(get("study", "workers", "1")),
    )


def sinusoid_field(index: int, seed: int, terms: int, window: Window,
                   grid_per_unit: int, name: str) -> RasterField:
    """Smooth random field: seeded sinusoid sum, standardized on the grid.

    Parameters are drawn from the derived stream [seed, index] independently
    of the window, so rasterizing on a larger rung samples the same surface.
    """
    rng = np.random.default_rng([int(seed), int(index)])
    amps = rng.uniform(0.5, 1.5, terms)
    freqs = rng.uniform(0.25, 1.5, (terms, 2))
    phases = rng.uniform(0.0, 2.0 * np.pi, terms)

    nx = max(1, round(grid_per_unit * window.width))
    ny = max(1, round(grid_per_unit * window.height))
    dx = window.width / nx
    dy = window.height / ny
    xc = window.xmin + (np.arange(nx) + 0.5) * dx
    yc = window.ymax - (np.arange(ny) + 0.5) * dy    # row 0 at the top
    X, Y = np.meshgrid(xc, yc)
    raw = np.zeros_like(X)
    for t in range(terms):
        raw += amps[t] * np.sin(2.0 * np.pi * (freqs[t, 0] * X + freqs[t, 1] * Y)
                                + phases[t])
    values = (raw - raw.mean()) / raw.std()
    return RasterField(values, window, name=name)


def _rung_fields(cfg: StudyConfig, window: Window):
    return [sinusoid_field(j, cfg.field_seed, cfg.field_terms, window,
                           cfg.grid_per_unit, name=f"z{j + 1}")
            for j in range(cfg.p)]


def _field_coefs(cfg: StudyConfig):
    return np.array([cfg.active.get(f"z{j + 1}", 0.0) for j in range(cfg.p)])


def _tuned_intercept(cfg: StudyConfig) -> float:
    """Solve exp(b0) * sum cell_area exp(beta . z) = target on the first rung."""
    window = cfg.windows[0]
    fields = _rung_fields(cfg, window)
    coefs = _field_coefs(cfg)
    eta = np.zeros_like(fields[0].values)
    for c, f in zip(coefs, fields):
        eta += c * f.values
    nx = fields[0].values.shape[1]
    ny = fields[0].values.shape[0]
    cell = (window.width / nx) * (window.height / ny)
    total = cell * float(np.exp(eta).sum())
    return math.log(cfg.target_count / total)


def _rung_model(cfg: StudyConfig, window: Window, intercept: float) -> ModelSpec:
    fields = _rung_fields(cfg, window)
    beta = np.concatenate([[intercept], _field_coefs(cfg)])
    interaction = psi = None
    if cfg.is_strauss:
        interaction = InteractionSpec("strauss", cfg.interaction_range)
        psi = cfg.psi
    return ModelSpec([ConstantField()] + fields, window, beta=beta,
                     interaction=interaction, psi=psi)


@dataclass
class _RepResult:
    n: int = 0
    sim_failed: str | None = None
    estimates: dict = field(default_factory=dict)   # method -> beta or message


def _simulate_pattern(cfg: StudyConfig, model: ModelSpec, rung: int, rep: int):
    if cfg.is_strauss:
        return _sample_strauss_seeded(model, model.window, cfg.burn_in,
                                      cfg.sweeps, [cfg.seed, rung, rep])
    rng = np.random.default_rng([cfg.seed, rung, rep])
    return sample_poisson(SimConfig(model=model, seed=0), rng=rng)


def _one_replicate(cfg: StudyConfig, model: ModelSpec, dummy, rung: int,
                   rep: int, alpha_methods) -> _RepResult:
    out = _RepResult()
    try:
        pattern = _simulate_pattern(cfg, model, rung, rep)
    except (PPLassoError, np.linalg.LinAlgError, ValueError) as exc:
        out.sim_failed = f"{type(exc).__name__}: {exc}"
        return out
    out.n = pattern.n
    try:
        scheme = build_scheme(pattern, model, dummy_grid=dummy)
        pilot, _ = _pilot_fit(scheme)
    except (PPLassoError, np.linalg.LinAlgError, ValueError) as exc:
        out.sim_failed = f"{type(exc).__name__}: {exc}"
        return out
    mask = model.penalty_mask
    mu = float(max(1, scheme.n_observed))
    for method in cfg.methods:
        try:
            if method == "adaptive":
                plan = make_penalty_plan(mask, "adaptive", pilot=pilot,
                                         gamma=cfg.gamma)
            else:
                plan = make_penalty_plan(mask, "lasso")
            path = fit_path(scheme, plan, n_tau=cfg.n_tau,
                            tau_min_ratio=cfg.tau_min_ratio)
            sel = select(path, criterion=cfg.criterion,
                         table=criterion_table(path))
            out.estimates[method] = sel.beta
        except (PPLassoError, np.linalg.LinAlgError, ValueError) as exc:
            out.estimates[method] = f"{type(exc).__name__}: {exc}"
    for alpha, method in alpha_methods:
        try:
            plan = make_penalty_plan(mask, "adaptive", pilot=pilot,
                                     gamma=cfg.gamma)
            beta, _, _, ok = solve_at_tau(scheme, plan, mu ** (-alpha))
            out.estimates[method] = beta if ok else "solver did not converge"
        except (PPLassoError, np.linalg.LinAlgError, ValueError) as exc:
            out.estimates[method] = f"{type(exc).__name__}: {exc}"
    return out


def _aggregate(cfg: StudyConfig, method: str, rung: int, window: Window,
               results, true_trend, pen_idx):
    """One report row from the per-replicate estimates of one method."""
    p_trend = true_trend.size
    true_support = set(np.flatnonzero(true_trend[pen_idx] != 0.0))
    n_active = len(true_support)
    n_noise = len(pen_idx) - n_active

    errs, scaled, tprs, fprs, exact, counts = [], [], [], [], [], []
    failures = 0
    for res in results:
        est = res.estimates.get(method) if res.sim_failed is None else None
        if est is None or isinstance(est, str):
            failures += 1
            continue
        counts.append(res.n)
        trend_hat = np.asarray(est)[:p_trend]
        err = float(np.linalg.norm(trend_hat - true_trend))
        errs.append(err)
        mu = max(1, res.n)
        scaled.append(err * math.sqrt(mu / p_trend))
        est_support = set(np.flatnonzero(trend_hat[pen_idx] != 0.0))
        if n_active:
            tprs.append(len(est_support & true_support) / n_active)
        if n_noise:
            fprs.append(len(est_support - true_support) / n_noise)
        exact.append(1.0 if est_support == true_support else 0.0)

    def fmean(vals):
        return math.fsum(vals) / len(vals) if vals else None

    row = (
        method, rung,
        window.xmin, window.xmax, window.ymin, window.ymax, window.area,
        cfg.replicates, failures,
        fmean(counts) if counts else "NA",
        float(np.median(errs)) if errs else "NA",
        fmean(tprs) if tprs else "NA",
        fmean(fprs) if fprs else "NA",
        fmean(exact) if exact else "NA",
        float(np.median(scaled)) if scaled else "NA",
    )
    return tuple("NA" if v is None else v for v in row)


@dataclass(frozen=True)
class StudyReport:
    columns: tuple
    rows: tuple
    summary: str


def run_study(cfg: StudyConfig) -> StudyReport:
    intercept = cfg.intercept if cfg.intercept is not None else _tuned_intercept(cfg)
    alpha_methods = [(a, f"adaptive_alpha_{a:g}") for a in cfg.alphas]
    all_methods = list(cfg.methods) + [m for _, m in alpha_methods]

    rows = []
    summary = [
        "simulation study summary",
        f"covariates: p={cfg.p} active={len(cfg.active)} noise={cfg.noise}",
        "model: " + ("strauss psi=" + format_float(cfg.psi)
                     + " R=" + format_float(cfg.interaction_range)
                     if cfg.is_strauss else "poisson"),
        f"intercept: {format_float(intercept)}",
        f"penalty: gamma={format_float(cfg.gamma)} ntau={cfg.n_tau} "
        f"criterion={cfg.criterion}",
        f"seed: {cfg.seed} replicates per rung: {cfg.replicates}",
        "",
    ]
    total_failures = 0
    for rung, window in enumerate(cfg.windows):
        model = _rung_model(cfg, window, intercept)
        dummy = (max(1, round(cfg.dummy_per_unit * window.width)),
                 max(1, round(cfg.dummy_per_unit * window.height)))
        true_trend = np.asarray(model.beta)
        pen_idx = np.arange(1, 1 + cfg.p)   # intercept unpenalized

        def work(rep, _model=model, _dummy=dummy, _rung=rung):
            return _one_replicate(cfg, _model, _dummy, _rung, rep, alpha_methods)

        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(work, range(cfg.replicates)))
        else:
            results = [work(rep) for rep in range(cfg.replicates)]

        summary.append(f"rung {rung}: window "
                       f"[{format_float(window.xmin)},{format_float(window.xmax)}]x"
                       f"[{format_float(window.ymin)},{format_float(window.ymax)}]"
                       f" area {format_float(window.area)}")
        sim_fail = [r.sim_failed for r in results if r.sim_failed]
        if sim_fail:
            summary.append(f"  simulation failures: {len(sim_fail)} "
                           f"(first: {sim_fail[0]})")
        for method in all_methods:
            row = _aggregate(cfg, method, rung, window, results,
                             true_trend, pen_idx)
            rows.append(row)
            failures = row[8]
            total_failures += failures
            summary.append(
                f"  {method}: failures={failures}"
                f" median_l2={_fmt_cell(row[10])} tpr={_fmt_cell(row[11])}"
                f" fpr={_fmt_cell(row[12])} exact={_fmt_cell(row[13])}"
                f" scaled={_fmt_cell(row[14])}")
    summary.append("")
    summary.append(f"total fit failures: {total_failures}")
    return StudyReport(columns=tuple(REPORT_COLUMNS), rows=tuple(rows),
                       summary="\n".join(summary) + "\n")


def _fmt_cell(v) -> str:
    return v if isinstance(v, str) else format_float(v)


def write_study_report(report: StudyReport, prefix: str):
    """Writes <prefix>.csv and <prefix>.summary.txt; returns the two paths."""
    csv_path = f"{prefix}.csv"
    txt_path = f"{prefix}.summary.txt"
    write_csv(csv_path, list(report.columns), report.rows)
    with open(txt_path, "w") as fh:
        fh.write(report.summary)
    return csv_path, txt_path
