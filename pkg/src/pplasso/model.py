"""Log-linear intensity and conditional-intensity models.

A model is exp(beta' z(u)) for the intensity, or
exp(beta' z(u) + psi * s1(u, x)) for the Papangelou conditional intensity of
a Strauss-interaction process, where s1 counts R-close neighbours. Covariates
are spatial fields: the constant 1, a coordinate, a georeferenced raster, or
a product of two fields. Evaluation is deterministic and vectorized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MissingPatternError, OutOfExtentError, OutOfWindowError
from .geometry import PointPattern, Window

__all__ = [
    "CovariateField",
    "ConstantField",
    "CoordinateField",
    "RasterField",
    "ProductField",
    "InteractionSpec",
    "ModelSpec",
    "read_raster_csv",
    "write_raster_csv",
]


class CovariateField:
    """Base class for spatial covariate fields z_i(u)."""

    name: str
    kind: str

    def evaluate(self, x, y):
        """Evaluate the field at coordinate arrays x, y (broadcastable)."""
        raise NotImplementedError

    def __call__(self, x, y):
        return self.evaluate(x, y)


class ConstantField(CovariateField):
    """The constant field 1, the conventional intercept covariate."""

    kind = "const"

    def __init__(self, name: str = "intercept"):
        self.name = name

    def evaluate(self, x, y):
        return np.ones_like(np.asarray(x, dtype=float))

    def __repr__(self):
        return f"ConstantField({self.name!r})"


class CoordinateField(CovariateField):
    """The x- or y-coordinate of the location."""

    def __init__(self, axis: str, name: str | None = None):
        if axis not in ("x", "y"):
            raise ValueError("axis must be 'x' or 'y'")
        self.axis = axis
        self.kind = f"coord-{axis}"
        self.name = name if name is not None else axis

    def evaluate(self, x, y):
        v = x if self.axis == "x" else y
        return np.asarray(v, dtype=float) + 0.0

    def __repr__(self):
        return f"CoordinateField({self.axis!r}, name={self.name!r})"


class RasterField(CovariateField):
    """Piecewise-constant raster covariate with a georeferenced extent.

    The grid is row-major with row 0 at the top (maximum y). Lookup returns
    the value of the cell containing the query point; points exactly on an
    interior cell edge resolve to the cell with the larger index, and the
    closed extent boundary maps into the outermost cells.
    """

    kind = "raster"

    def __init__(self, values, extent: Window, name: str = "raster"):
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("raster values must be a 2-D matrix")
        if not np.all(np.isfinite(vals)):
            raise ValueError("raster contains non-finite values")
        vals = vals.copy()
        vals.setflags(write=False)
        self.values = vals
        self.extent = extent
        self.name = name

    @property
    def nrows(self) -> int:
        return self.values.shape[0]

    @property
    def ncols(self) -> int:
        return self.values.shape[1]

    def cell_indices(self, x, y):
        """(row, col) of the cells containing (x, y); raises OutOfExtentError."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        e = self.extent
        outside = ~e.contains(x, y)
        if np.any(outside):
            k = int(np.argmax(np.atleast_1d(outside)))
            bx = float(np.atleast_1d(x)[k])
            by = float(np.atleast_1d(y)[k])
            raise OutOfExtentError(
                f"({bx}, {by}) outside raster extent {e.as_tuple()}"
            )
        dx = e.width / self.ncols
        dy = e.height / self.nrows
        col = np.floor((x - e.xmin) / dx).astype(int)
        row = np.floor((e.ymax - y) / dy).astype(int)
        col = np.clip(col, 0, self.ncols - 1)
        row = np.clip(row, 0, self.nrows - 1)
        return row, col

    def evaluate(self, x, y):
        row, col = self.cell_indices(x, y)
        return self.values[row, col]

    def __repr__(self):
        return (
            f"RasterField({self.name!r}, {self.nrows}x{self.ncols}, "
            f"extent={self.extent.as_tuple()})"
        )


class ProductField(CovariateField):
    """Pointwise product of two parent fields, composed lazily."""

    kind = "product"

    def __init__(self, left: CovariateField, right: CovariateField, name: str | None = None):
        self.left = left
        self.right = right
        self.name = name if name is not None else f"{left.name}*{right.name}"

    def evaluate(self, x, y):
        return self.left.evaluate(x, y) * self.right.evaluate(x, y)

    def __repr__(self):
        return f"ProductField({self.left.name!r}, {self.right.name!r})"


def flatten_factors(f: CovariateField):
    """Flatten nested products into a list of primitive (non-product) fields."""
    if isinstance(f, ProductField):
        return flatten_factors(f.left) + flatten_factors(f.right)
    return [f]


@dataclass(frozen=True)
class InteractionSpec:
    """Point interaction: none, or Strauss with range R > 0."""

    kind: str = "none"
    R: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "strauss"):
            raise ValueError(f"unknown interaction kind {self.kind!r}")
        if self.kind == "strauss" and not self.R > 0:
            raise ValueError("strauss interaction requires R > 0")

    @property
    def is_strauss(self) -> bool:
        return self.kind == "strauss"


class ModelSpec:
    """A log-linear (conditional) intensity model on a rectangular window.

    Parameters
    ----------
    covariates : sequence of CovariateField
        Trend covariates; by convention the first entry is the constant
        intercept field.
    window : Window
        The model / observation window.
    beta : array-like
        Trend coefficients, one per covariate.
    interaction : InteractionSpec, optional
        Defaults to no interaction.
    psi : float, optional
        Interaction coefficient; required iff the interaction is Strauss.
    penalty_mask : array-like of bool, optional
        One entry per coefficient (trend first, then the interaction
        coefficient when present). True marks a penalized coefficient.
        Defaults to penalizing every trend covariate except constant fields,
        and leaving the interaction coefficient unpenalized.
    """

    def __init__(self, covariates, window: Window, beta, interaction=None,
                 psi=None, penalty_mask=None):
        covariates = list(covariates)
        if not covariates:
            raise ValueError("at least one covariate is required")
        beta = np.asarray(beta, dtype=float).ravel()
        if beta.size != len(covariates):
            raise ValueError(
                f"beta has length {beta.size}, expected {len(covariates)}"
            )
        interaction = interaction if interaction is not None else InteractionSpec()
        if interaction.is_strauss:
            if psi is None:
                raise ValueError("strauss interaction requires psi")
            psi = float(psi)
        elif psi is not None:
            raise ValueError("psi given but the model has no interaction")

        q = len(covariates) + (1 if interaction.is_strauss else 0)
        if penalty_mask is None:
            mask = np.array(
                [not isinstance(c, ConstantField) for c in covariates], dtype=bool
            )
            if interaction.is_strauss:
                mask = np.append(mask, False)
        else:
            mask = np.asarray(penalty_mask, dtype=bool).ravel()
            if mask.size != q:
                raise ValueError(f"penalty_mask has length {mask.size}, expected {q}")
        mask.setflags(write=False)
        beta.setflags(write=False)

        self.covariates = covariates
        self.window = window
        self.beta = beta
        self.interaction = interaction
        self.psi = psi
        self.penalty_mask = mask

    @property
    def p(self) -> int:
        """Number of trend covariates."""
        return len(self.covariates)

    @property
    def q(self) -> int:
        """Total number of coefficients (trend + interaction)."""
        return self.p + (1 if self.interaction.is_strauss else 0)

    @property
    def coefficient_names(self):
        names = [c.name for c in self.covariates]
        if self.interaction.is_strauss:
            names.append("strauss")
        return names

    @property
    def coefficients(self):
        """Full coefficient vector (beta, then psi when present)."""
        if self.interaction.is_strauss:
            return np.append(self.beta, self.psi)
        return self.beta.copy()

    def with_coefficients(self, theta) -> "ModelSpec":
        """Copy of the model with a new full coefficient vector."""
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.size != self.q:
            raise ValueError(f"expected {self.q} coefficients, got {theta.size}")
        psi = float(theta[-1]) if self.interaction.is_strauss else None
        beta = theta[: self.p]
        return ModelSpec(self.covariates, self.window, beta, self.interaction,
                         psi, self.penalty_mask)

    # -- evaluation ---------------------------------------------------------

    def trend_matrix(self, x, y):
        """Stack covariate evaluations into an (n, p) design block."""
        x = np.asarray(x, dtype=float)
        cols = [np.broadcast_to(c.evaluate(x, y), x.shape).ravel()
                for c in self.covariates]
        return np.column_stack(cols)

    def trend_log_intensity(self, x, y):
        """beta' z(u) at coordinate arrays."""
        return self.trend_matrix(x, y) @ self.beta

    def design_vector(self, u, x: PointPattern | None = None):
        """The design vector z(u), extended with s1(u, x) for Strauss models.

        When u coincides with a point of x, the Strauss count excludes u
        itself (the leave-one-out convention of the pseudo-likelihood sum).
        """
        ux, uy = float(u[0]), float(u[1])
        if not bool(self.window.contains(ux, uy)):
            raise OutOfWindowError(f"({ux}, {uy}) outside window {self.window.as_tuple()}")
        z = np.array([float(np.asarray(c.evaluate(ux, uy))) for c in self.covariates])
        if self.interaction.is_strauss:
            if x is None:
                raise MissingPatternError("strauss model requires a point pattern")
            s1 = x.neighbors_within((ux, uy), self.interaction.R, exclude=(ux, uy))
            z = np.append(z, float(s1))
        return z

    def intensity(self, u, x: PointPattern | None = None) -> float:
        """exp(coefficients . design_vector): the intensity, or for Strauss
        models the Papangelou conditional intensity at u given x."""
        z = self.design_vector(u, x)
        return float(np.exp(self.coefficients @ z))

    def local_stability_bound(self, grid_resolution: int = 256) -> float:
        """Uniform bound on the (conditional) intensity.

        For psi <= 0 (or no interaction) the interaction term never increases
        the intensity, so the trend maximum over an endpoint-inclusive
        grid_resolution x grid_resolution lattice dominates. For psi > 0 the
        Strauss statistic is unbounded and the model is not locally stable;
        returns math.inf.
        """
        if self.interaction.is_strauss and self.psi > 0:
            return math.inf
        gx = np.linspace(self.window.xmin, self.window.xmax, grid_resolution)
        gy = np.linspace(self.window.ymin, self.window.ymax, grid_resolution)
        xx, yy = np.meshgrid(gx, gy)
        eta = self.trend_log_intensity(xx.ravel(), yy.ravel())
        return float(np.exp(np.max(eta)))

    def __repr__(self):
        inter = f", strauss(R={self.interaction.R}, psi={self.psi})" \
            if self.interaction.is_strauss else ""
        return f"ModelSpec(p={self.p}{inter}, window={self.window.as_tuple()})"


# -- raster CSV I/O ---------------------------------------------------------
#
# Format: metadata lines `nrows=<int>`, `ncols=<int>`, `xmin=<float>`,
# `xmax=<float>`, `ymin=<float>`, `ymax=<float>`, then nrows lines of ncols
# comma-separated floats, row 0 = top (max y).

_RASTER_KEYS = ("nrows", "ncols", "xmin", "xmax", "ymin", "ymax")


def write_raster_csv(f: RasterField, path) -> None:
    e = f.extent
    with open(path, "w") as fh:
        fh.write(f"nrows={f.nrows}\n")
        fh.write(f"ncols={f.ncols}\n")
        fh.write(f"xmin={e.xmin:.17g}\n")
        fh.write(f"xmax={e.xmax:.17g}\n")
        fh.write(f"ymin={e.ymin:.17g}\n")
        fh.write(f"ymax={e.ymax:.17g}\n")
        for row in f.values:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_raster_csv(path, name: str = "raster") -> RasterField:
    meta = {}
    with open(path) as fh:
        for key in _RASTER_KEYS:
            line = fh.readline().strip()
            k, _, v = line.partition("=")
            if k.strip() != key:
                raise ValueError(f"expected metadata line '{key}=...', got {line!r}")
            meta[key] = v.strip()
        nrows, ncols = int(meta["nrows"]), int(meta["ncols"])
        rows = []
        for i in range(nrows):
            line = fh.readline()
            if not line:
                raise ValueError(f"raster truncated: expected {nrows} data rows")
            vals = [float(t) for t in line.strip().split(",")]
            if len(vals) != ncols:
                raise ValueError(f"row {i}: expected {ncols} values, got {len(vals)}")
            rows.append(vals)
    extent = Window(float(meta["xmin"]), float(meta["xmax"]),
                    float(meta["ymin"]), float(meta["ymax"]))
    return RasterField(np.asarray(rows), extent, name=name)
