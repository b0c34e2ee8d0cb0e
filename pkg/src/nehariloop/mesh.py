"""Grids, coefficient sampling, quadrature, and the Neumann Laplacian.

The domain is an interval [x0, x1] (default) or a tensor-product rectangle.
All integrals use trapezoidal quadrature, whose weights double as the diagonal
mass matrix W.  The Laplacian is stored in its weighted (stiffness) form
K = W * L, which is exactly symmetric with bitwise-zero row sums; the pointwise
second-order ghost-reflection operator L = W^-1 K is recovered on application.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError

__all__ = [
    "Grid",
    "ScalarField",
    "CoeffTerm",
    "CoeffSpec",
    "DiscreteOperator",
    "build_grid",
    "sample_coefficient",
    "integrate",
    "laplacian_neumann",
]


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid carrying spacing and trapezoidal quadrature weights."""

    dim: int
    n: tuple[int, ...]                      # nodes per axis
    endpoints: tuple[tuple[float, float], ...]
    h: tuple[float, ...]
    quad_weights: np.ndarray                # flat, one weight per node
    axes: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.n))

    @property
    def measure(self) -> float:
        out = 1.0
        for (a, b) in self.endpoints:
            out *= b - a
        return out

    def coords(self) -> np.ndarray:
        """Node coordinates, shape (node_count, dim); C-order flattening in 2D."""
        if self.dim == 1:
            return self.axes[0][:, None]
        X, Y = np.meshgrid(self.axes[0], self.axes[1], indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    def field(self, values: np.ndarray | float) -> "ScalarField":
        vals = np.asarray(values, dtype=float)
        if vals.ndim == 0:
            vals = np.full(self.node_count, float(vals))
        return ScalarField(self, vals)


@dataclass(frozen=True)
class ScalarField:
    """Nodal values of a function on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.node_count,):
            raise ConfigError(
                f"field has {vals.shape} values for a grid with "
                f"{self.grid.node_count} nodes"
            )
        object.__setattr__(self, "values", vals)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2_norm(self) -> float:
        """Discrete L2 norm (quadrature-weighted)."""
        return float(np.sqrt(self.grid.quad_weights @ self.values**2))


@dataclass(frozen=True)
class CoeffTerm:
    """One additive term of a coefficient.

    kinds:
      constant: value
      cosine:   amplitude * cos(2*pi*k*x_hat) on each axis (x_hat in [0,1])
      bump:     height * exp(-|x - center|^2 / width^2)
      step:     left for x < breakpoint, right otherwise (first axis)
    """

    kind: str
    value: float = 0.0
    k: int = 1
    amplitude: float = 1.0
    center: tuple[float, ...] | float = 0.0
    width: float = 1.0
    height: float = 1.0
    breakpoint: float = 0.0
    left: float = 0.0
    right: float = 0.0

    def evaluate(self, grid: Grid) -> np.ndarray:
        pts = grid.coords()
        if self.kind == "constant":
            return np.full(grid.node_count, float(self.value))
        if self.kind == "cosine":
            if self.k != int(self.k):
                raise ConfigError("cosine frequency k must be an integer")
            out = np.full(grid.node_count, float(self.amplitude))
            for d in range(grid.dim):
                a, b = grid.endpoints[d]
                xhat = (pts[:, d] - a) / (b - a)
                out = out * np.cos(2.0 * np.pi * int(self.k) * xhat)
            return out
        if self.kind == "bump":
            c = np.atleast_1d(np.asarray(self.center, dtype=float))
            if c.size != grid.dim:
                c = np.full(grid.dim, float(c.flat[0]))
            r2 = np.sum((pts - c[None, :]) ** 2, axis=1)
            return self.height * np.exp(-r2 / self.width**2)
        if self.kind == "step":
            return np.where(pts[:, 0] < self.breakpoint, self.left, self.right)
        raise ConfigError(f"unknown coefficient term kind {self.kind!r}")


@dataclass(frozen=True)
class CoeffSpec:
    """Pointwise sum of terms; the standard way to describe a and b."""

    terms: tuple[CoeffTerm, ...]

    @staticmethod
    def of(*terms: CoeffTerm) -> "CoeffSpec":
        return CoeffSpec(tuple(terms))

    @staticmethod
    def from_records(records: Sequence[dict]) -> "CoeffSpec":
        if not records:
            raise ConfigError("coefficient spec must have at least one term")
        terms = []
        for rec in records:
            rec = dict(rec)
            kind = rec.pop("kind", None)
            if kind is None:
                raise ConfigError(f"coefficient term missing 'kind': {rec}")
            known = {f for f in CoeffTerm.__dataclass_fields__ if f != "kind"}
            bad = set(rec) - known
            if bad:
                raise ConfigError(f"unknown keys {sorted(bad)} in {kind!r} term")
            if kind == "bump" and "center" in rec and isinstance(rec["center"], list):
                rec["center"] = tuple(rec["center"])
            terms.append(CoeffTerm(kind=kind, **rec))
        return CoeffSpec(tuple(terms))


@dataclass(frozen=True)
class DiscreteOperator:
    """-Laplacian with homogeneous Neumann conditions (ghost reflection).

    `weighted` is the symmetric positive-semidefinite matrix K = W*L whose
    rows sum to zero bitwise; `apply` evaluates the pointwise operator
    L u = W^-1 K u, second order up to and including the boundary nodes.
    """

    grid: Grid
    weighted: sp.csr_matrix

    def apply(self, u: np.ndarray) -> np.ndarray:
        return (self.weighted @ u) / self.grid.quad_weights

    def pointwise(self) -> sp.csr_matrix:
        w_inv = sp.diags(1.0 / self.grid.quad_weights)
        return (w_inv @ self.weighted).tocsr()

    def dirichlet_form(self, u: np.ndarray, v: np.ndarray | None = None) -> float:
        """u^T K v; for v=u this is the discrete energy of the gradient."""
        if v is None:
            v = u
        return float(u @ (self.weighted @ v))


def build_grid(dim: int,
               n: int | Sequence[int],
               endpoints: Sequence[float] | Sequence[Sequence[float]]) -> Grid:
    """Uniform grid with trapezoidal quadrature weights.

    1D: build_grid(1, 101, [0.0, 1.0]); 2D: build_grid(2, (nx, ny), [[...],[...]]).
    """
    if dim not in (1, 2):
        raise ConfigError(f"dim must be 1 or 2, got {dim}")
    ns = tuple(int(v) for v in (n if isinstance(n, (list, tuple)) else [n] * dim))
    if len(ns) != dim:
        raise ConfigError(f"need {dim} node counts, got {ns}")
    if any(v < 3 for v in ns):
        raise ConfigError(f"need at least 3 nodes per axis, got {ns}")
    if dim == 1 and np.ndim(endpoints[0]) == 0:
        eps = (tuple(float(v) for v in endpoints),)
    else:
        eps = tuple(tuple(float(v) for v in pair) for pair in endpoints)
    if len(eps) != dim:
        raise ConfigError(f"need {dim} endpoint pairs, got {eps}")
    for a, b in eps:
        if not b > a:
            raise ConfigError(f"degenerate interval [{a}, {b}]")

    axes = tuple(np.linspace(a, b, m) for (a, b), m in zip(eps, ns))
    hs = tuple((b - a) / (m - 1) for (a, b), m in zip(eps, ns))
    axis_weights = []
    for h, m in zip(hs, ns):
        w = np.full(m, h)
        w[0] = w[-1] = h / 2.0
        axis_weights.append(w)
    if dim == 1:
        weights = axis_weights[0]
    else:
        weights = np.outer(axis_weights[0], axis_weights[1]).ravel()
    return Grid(dim=dim, n=ns, endpoints=eps, h=hs, quad_weights=weights, axes=axes)


def sample_coefficient(spec: CoeffSpec, grid: Grid) -> tuple[ScalarField, float]:
    """Nodal values of the summed terms and their integral over the domain."""
    vals = np.zeros(grid.node_count)
    for term in spec.terms:
        vals += term.evaluate(grid)
    if not np.all(np.isfinite(vals)):
        raise ConfigError("coefficient evaluates to a non-finite value")
    f = ScalarField(grid, vals)
    return f, integrate(f)


def integrate(f: ScalarField) -> float:
    """Trapezoidal integral sum_i w_i f_i."""
    return float(f.grid.quad_weights @ f.values)


def _stiffness_1d(m: int, h: float) -> sp.csr_matrix:
    # K = sum over edges of (e_i - e_j)(e_i - e_j)^T / h: rows cancel bitwise.
    main = np.full(m, 2.0 / h)
    main[0] = main[-1] = 1.0 / h
    off = np.full(m - 1, -1.0 / h)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def laplacian_neumann(grid: Grid) -> DiscreteOperator:
    """Assemble K = W*L for the ghost-reflection Neumann Laplacian."""
    if grid.dim == 1:
        K = _stiffness_1d(grid.n[0], grid.h[0])
    else:
        Kx = _stiffness_1d(grid.n[0], grid.h[0])
        Ky = _stiffness_1d(grid.n[1], grid.h[1])
        wx = np.full(grid.n[0], grid.h[0])
        wx[0] = wx[-1] = grid.h[0] / 2.0
        wy = np.full(grid.n[1], grid.h[1])
        wy[0] = wy[-1] = grid.h[1] / 2.0
        K = sp.kron(Kx, sp.diags(wy)) + sp.kron(sp.diags(wx), Ky)
    return DiscreteOperator(grid=grid, weighted=K.tocsr())
