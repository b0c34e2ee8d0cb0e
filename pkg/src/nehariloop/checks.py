"""Closed-form bounds and integral identities used as cross-validation gates.

Every bound here is a pure function of its inputs.  Nonexistence is probed by
randomized multistart absence-of-solution, which is evidence rather than
proof; the corresponding verdicts are labeled "consistent".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError
from .functional import ProblemParams, p_term, q_term
from .mesh import ScalarField, integrate
from .solve import newton_solve, _start_stream, _residual_floor

__all__ = [
    "Verdict",
    "BoundsReport",
    "nonexistence_lambda_bar",
    "subsupersolution_window",
    "solvability_identity",
    "no_bifurcation_floor",
    "newton_sweep_finds_solution",
]


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    value: float | None = None
    note: str = ""


@dataclass(frozen=True)
class BoundsReport:
    lambda_bar: float | None = None
    lambda_bar_reason: str | None = None
    Lambda0: float | None = None
    Lambda0_reason: str | None = None
    identity_residuals: list[float] = field(default_factory=list)
    verdicts: list[Verdict] = field(default_factory=list)


def _nodes_in_ball(grid, ball: tuple[float, float]) -> np.ndarray:
    lo, hi = float(ball[0]), float(ball[1])
    if not hi > lo:
        raise DomainError(f"degenerate subinterval [{lo}, {hi}]")
    x = grid.coords()[:, 0]
    mask = (x >= lo - 1e-12) & (x <= hi + 1e-12)
    if not np.any(mask):
        raise DomainError("subinterval contains no grid nodes")
    return mask


def _dirichlet_lam1(grid, ball: tuple[float, float]) -> float:
    """Analytic principal Dirichlet eigenvalue of the subdomain."""
    lo, hi = float(ball[0]), float(ball[1])
    lam1 = (math.pi / (hi - lo)) ** 2
    if grid.dim == 2:
        (lo2, hi2) = grid.endpoints[1]
        lam1 += (math.pi / (hi2 - lo2)) ** 2
    return lam1


def nonexistence_lambda_bar(params: ProblemParams, ball: tuple[float, float],
                            epsilon0: float) -> float:
    """Threshold beyond which the regularized problem has no nontrivial
    non-negative solution: lam1 ||a|| (s0 + eps0)^(2-q) / min (b - eps0),
    with s0 = lam1^(1/(p-2)) and lam1 the Dirichlet eigenvalue of the ball.

    Hypotheses on the closed ball: a >= 0, a not identically 0, b - eps0 > 0.
    """
    if epsilon0 <= 0.0:
        raise DomainError("need epsilon0 > 0")
    mask = _nodes_in_ball(params.grid, ball)
    a_ball = params.a.values[mask]
    b_ball = params.b.values[mask]
    if np.any(a_ball < 0.0):
        raise DomainError("need a >= 0 on the closed subinterval")
    if not np.any(a_ball > 0.0):
        raise DomainError("need a not identically 0 on the subinterval")
    min_beps = float(np.min(b_ball)) - epsilon0
    if min_beps <= 0.0:
        raise DomainError("need b - epsilon0 > 0 on the closed subinterval")
    lam1 = _dirichlet_lam1(params.grid, ball)
    s0 = lam1 ** (1.0 / (params.p - 2.0))
    a_norm = float(np.max(a_ball))
    return lam1 * a_norm * (s0 + epsilon0) ** (2.0 - params.q) / min_beps


def subsupersolution_window(params: ProblemParams, delta: float,
                            n_starts: int = 12, rng_seed: int = 0
                            ) -> tuple[float | None, str | None, ScalarField | None]:
    """Existence window (0, Lambda0) from the sub-supersolution pair.

    Lambda0 = (delta / (||a+||_inf ||w_delta||_inf^(p-q)))^((2-q)/(p-2)),
    where w_delta is the ground state for the shifted weight b + delta.
    Returns (Lambda0, reason-if-absent, w_delta).
    """
    ib = integrate(params.b)
    if ib >= 0.0:
        raise DomainError(f"need int b < 0, got {ib:.3g}")
    if float(np.max(params.b.values)) <= 0.0:
        raise DomainError("need b > 0 somewhere")
    if delta <= 0.0:
        raise DomainError("need delta > 0")
    shifted = ScalarField(params.grid, params.b.values + delta)
    if integrate(shifted) >= 0.0:
        raise DomainError(f"need int (b + delta) < 0, got {integrate(shifted):.3g}")
    from .solve import ground_state

    rep = ground_state(replace(params, b=shifted), "pure_b",
                       n_starts=n_starts, rng_seed=rng_seed)
    w_delta = rep.u
    a_plus = float(np.max(np.maximum(params.a.values, 0.0)))
    if a_plus == 0.0:
        return None, "a+ vanishes: every lambda > 0 is admissible", w_delta
    lam0 = (delta / (a_plus * w_delta.sup_norm ** (params.p - params.q))) \
        ** ((2.0 - params.q) / (params.p - 2.0))
    return lam0, None, w_delta


def solvability_identity(u: ScalarField, params: ProblemParams) -> float:
    """|sum_i w_i (lam * sublinear_i + a_i |u_i|^(p-2) u_i)|.

    Zero row sums make this identically the weighted residual sum, so any
    converged solution satisfies it up to ||r||_1.
    """
    w = params.grid.quad_weights
    total = float(w @ (params.lam * q_term(u.values, params)
                       + p_term(u.values, params)))
    return abs(total)


def no_bifurcation_floor(params: ProblemParams, lambda_star: float,
                         D: tuple[float, float]) -> float:
    """Lower bound c for solutions in B+ on the closed subdomain D:
    c = min((lambda_star * b0 / (2 lam1))^(1/(2-q)), delta_bar), where
    delta_bar solves a0 * delta^(p-2) = lam1 exactly (least conservative
    choice satisfying the comparison chain) and b0 = inf_D b, a0 = sup_D a-.
    """
    if lambda_star <= 0.0:
        raise DomainError("need lambda_star > 0")
    mask = _nodes_in_ball(params.grid, D)
    b0 = float(np.min(params.b.values[mask]))
    if b0 <= 0.0:
        raise DomainError("need b > 0 on the closed subdomain D")
    a0 = float(np.max(np.maximum(-params.a.values[mask], 0.0)))
    lam1 = _dirichlet_lam1(params.grid, D)
    first = (lambda_star * b0 / (2.0 * lam1)) ** (1.0 / (2.0 - params.q))
    if a0 == 0.0:
        return first
    delta_bar = (lam1 / a0) ** (1.0 / (params.p - 2.0))
    return min(first, delta_bar)


def newton_sweep_finds_solution(params: ProblemParams, n_starts: int,
                                rng_seed: int, amplitude: float = 1.0,
                                tol: float = 1e-9,
                                max_iter: int = 80) -> ScalarField | None:
    """Multistart Newton probe: the first nontrivial non-negative solution
    found, or None.  Used to probe nonexistence regions (evidence only)."""
    rng = np.random.default_rng(rng_seed)
    stream = _start_stream(params, rng)
    for _ in range(n_starts):
        v0 = next(stream)
        sup = float(np.max(v0))
        if sup == 0.0:
            continue
        u0 = ScalarField(params.grid, amplitude * v0 / sup)
        rep = newton_solve(u0, params,
                           tol=max(tol, _residual_floor(u0.values, params)),
                           max_iter=max_iter, strict=False)
        if not rep.converged:
            continue
        u = rep.u
        if u.sup_norm <= 1e-8 * amplitude:
            continue                      # trivial solution
        if float(np.min(u.values)) < -1e-10 * u.sup_norm:
            continue                      # sign-violating candidate rejected
        return u
    return None
