"""Newton solves, Nehari-manifold minimizers, and pure-problem ground states.

The constrained minimizers are computed by reduction: minimize over unit
non-negative directions v, rescaling each candidate by the relevant fibering
root before evaluating the functional, then polish the full residual with
damped Newton.  Multistarts are seed-deterministic and merged by energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import scipy.sparse.linalg as spla

from .errors import (
    DivergedError,
    DomainError,
    NoAdmissibleDirectionError,
    NoRootError,
    NotConvergedError,
)
from .functional import (
    EnergyTriple,
    NehariClass,
    ProblemParams,
    classify,
    energies,
    fibering_analyze,
    jacobian,
    residual,
)
from .mesh import ScalarField, integrate

__all__ = ["SolveReport", "newton_solve", "nehari_minimize", "ground_state",
           "nehari_lambda_sweep"]


@dataclass(frozen=True)
class SolveReport:
    u: ScalarField
    iterations: int
    final_residual_norm: float
    converged: bool
    energies: EnergyTriple
    nehari_class: NehariClass


def _report(u: ScalarField, params: ProblemParams, iterations: int,
            rnorm: float, converged: bool) -> SolveReport:
    en = energies(u, params)
    cls = NehariClass.NOT_ON_NEHARI
    if u.sup_norm > 0.0:
        cls = classify(en.E, en.A, en.B, params.lam, params.p, params.q)
    return SolveReport(u=u, iterations=iterations, final_residual_norm=rnorm,
                       converged=converged, energies=en, nehari_class=cls)


def newton_solve(u0: ScalarField, params: ProblemParams,
                 tol: float = 1e-12, max_iter: int = 50,
                 strict: bool = True) -> SolveReport:
    """Damped Newton with Armijo backtracking on ||r||^2.

    Raises DivergedError after max_iter unless strict=False, in which case
    the non-converged report is returned for the caller to triage.
    """
    grid = params.grid
    w = grid.quad_weights
    u = u0.values.copy()
    r = residual(ScalarField(grid, u), params).values
    rnorm = float(np.linalg.norm(r))
    iterations = 0
    for it in range(max_iter):
        if rnorm <= tol:
            return _report(ScalarField(grid, u), params, iterations, rnorm, True)
        J = jacobian(ScalarField(grid, u), params)
        try:
            delta = spla.spsolve(J.weighted.tocsc(), -(w * r))
        except RuntimeError:
            break
        if not np.all(np.isfinite(delta)):
            break
        sigma, accepted = 1.0, False
        f0 = rnorm * rnorm
        while sigma >= 1e-10:
            cand = u + sigma * delta
            rc = residual(ScalarField(grid, cand), params).values
            fc = float(rc @ rc)
            if math.isfinite(fc) and fc <= (1.0 - 1e-4 * sigma) * f0:
                u, r, rnorm = cand, rc, math.sqrt(fc)
                accepted = True
                iterations = it + 1
                break
            sigma *= 0.5
        if not accepted:
            break
    converged = rnorm <= tol
    rep = _report(ScalarField(grid, u), params, iterations, rnorm, converged)
    if strict and not converged:
        raise DivergedError(
            f"Newton stalled at ||r|| = {rnorm:.3e} (tol {tol:.1e})"
        )
    return rep


def _residual_floor(u: np.ndarray, params: ProblemParams) -> float:
    """Rounding floor of ||r||_2: cancellation in K u / h^2 caps attainable
    residuals for solutions that are not exactly in the operator kernel."""
    h2 = min(params.grid.h) ** 2
    sup = float(np.max(np.abs(u)))
    return 8.0 * float(np.finfo(float).eps) * sup * math.sqrt(u.size) / h2


def _h1_normalize(v: np.ndarray, params: ProblemParams) -> np.ndarray:
    op = params.operator()
    w = params.grid.quad_weights
    nrm = math.sqrt(op.dirichlet_form(v) + float(w @ v**2))
    if nrm == 0.0:
        raise ZeroDivisionError("zero direction")
    return v / nrm


def _start_stream(params: ProblemParams, rng: np.random.Generator):
    """Non-negative trigonometric start fields, deterministic ones first.

    Yields the constant direction and single cosine lobes (edge and center
    layouts), then random trig fields clipped at zero, indefinitely; the
    caller filters by its cone condition.
    """
    from .functional import _random_trig_field

    grid = params.grid
    yield np.ones(grid.node_count)
    pts = grid.coords()
    for k in (1, 2):
        mode = np.ones(grid.node_count)
        for d in range(grid.dim):
            a_, b_ = grid.endpoints[d]
            xhat = (pts[:, d] - a_) / (b_ - a_)
            mode = mode * np.cos(2.0 * np.pi * k * xhat)
        yield np.maximum(mode, 0.0)
        yield np.maximum(-mode, 0.0)
    while True:
        v = np.maximum(_random_trig_field(grid, rng, n_modes=8), 0.0)
        if float(np.max(v)) > 0.0:
            yield v


def _reduced_minimize(
    params: ProblemParams,
    solve_params: ProblemParams,
    eval_dir: Callable[[np.ndarray], tuple[float, float] | None],
    rng: np.random.Generator,
    n_starts: int,
    pg_iters: int,
    newton_tol: float,
    newton_max_iter: int,
) -> list[SolveReport]:
    """Projected gradient over the non-negative unit H1 sphere, then Newton.

    Draws start fields until n_starts pass the caller's cone filter (bounded
    attempts).  eval_dir returns (fibering scale t, reduced value) for an
    admissible direction and None otherwise.  The reduced gradient is
    t * W r(t v) by the envelope identity at the fibering critical point.
    """
    w = params.grid.quad_weights
    reports: list[SolveReport] = []
    n_admissible = 0
    attempts = 0
    stream = _start_stream(params, rng)
    while n_admissible < n_starts and attempts < 50 * n_starts:
        attempts += 1
        v0 = next(stream)
        try:
            v = _h1_normalize(v0, params)
        except ZeroDivisionError:
            continue
        state = eval_dir(v)
        if state is None:
            continue
        n_admissible += 1
        t, val = state
        step = 0.5
        for _ in range(pg_iters):
            g = t * w * residual(ScalarField(params.grid, t * v),
                                 solve_params).values
            gn = float(np.linalg.norm(g))
            if gn <= 1e-14 * max(1.0, abs(val)):
                break
            moved = False
            while step > 1e-12:
                cand = np.maximum(v - step * g / gn, 0.0)
                if float(np.max(cand)) == 0.0:
                    step *= 0.5
                    continue
                cand = _h1_normalize(cand, params)
                st = eval_dir(cand)
                if st is not None and st[1] < val - 1e-14 * abs(val):
                    v, (t, val) = cand, st
                    step = min(step * 1.6, 2.0)
                    moved = True
                    break
                step *= 0.5
            if not moved:
                break
        tol_eff = max(newton_tol, _residual_floor(t * v, params))
        rep = newton_solve(ScalarField(params.grid, t * v), solve_params,
                           tol=tol_eff, max_iter=newton_max_iter,
                           strict=False)
        # non-negativity: a negative part triggers one re-solve from |u|;
        # candidates that remain sign-changing are discarded
        if rep.converged and float(np.min(rep.u.values)) < -1e-10 * max(rep.u.sup_norm, 1e-300):
            rep = newton_solve(ScalarField(params.grid, np.abs(rep.u.values)),
                               solve_params, tol=tol_eff,
                               max_iter=newton_max_iter, strict=False)
        if (rep.converged and rep.u.sup_norm > 0.0
                and float(np.min(rep.u.values)) >= -1e-10 * rep.u.sup_norm):
            reports.append(rep)
    if n_admissible == 0:
        raise NoAdmissibleDirectionError(
            "no multistart direction lies in the required cone"
        )
    return reports


def nehari_minimize(params: ProblemParams, sign: str, n_starts: int = 12,
                    rng_seed: int = 0, newton_tol: float = 1e-11,
                    pg_iters: int = 150,
                    newton_max_iter: int = 80) -> SolveReport:
    """Least-energy point of N+ (sign='plus') or N- (sign='minus').

    The plus branch rescales directions by the fibering minimum root t1, the
    minus branch by the maximum root t2; either root is unique per direction
    where it exists, which makes the reduction well posed.  The polished
    solution must classify into the requested half of the manifold and be
    non-negative up to round-off.
    """
    if sign not in ("plus", "minus"):
        raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")
    if params.lam <= 0.0:
        raise DomainError("nehari_minimize needs lambda > 0")
    rng = np.random.default_rng(rng_seed)
    want = NehariClass.NPLUS if sign == "plus" else NehariClass.NMINUS
    lam, p, q = params.lam, params.p, params.q

    def eval_dir(v: np.ndarray):
        f = ScalarField(params.grid, v)
        en = energies(f, params)
        if sign == "plus" and en.B <= 0.0:
            return None
        if sign == "minus" and en.A <= 0.0:
            return None
        try:
            fib = fibering_analyze(f, params)
        except NoRootError:
            return None
        t = fib.t1 if sign == "plus" else fib.t2
        if t is None:
            return None
        val = t * t * en.E / 2.0 - t**p * en.A / p - lam * t**q * en.B / q
        return t, val

    reports = _reduced_minimize(params, params, eval_dir, rng, n_starts,
                                pg_iters, newton_tol, newton_max_iter)
    good = [r for r in reports
            if r.nehari_class == want
            and float(np.min(r.u.values)) >= -1e-10 * max(r.u.sup_norm, 1e-300)]
    if not good:
        raise NotConvergedError(
            f"no converged {sign}-branch minimizer among {len(reports)} candidates"
        )
    return min(good, key=lambda r: r.energies.I)


def ground_state(params: ProblemParams, which: str, n_starts: int = 12,
                 rng_seed: int = 0, newton_tol: float = 1e-11,
                 pg_iters: int = 200,
                 newton_max_iter: int = 120) -> SolveReport:
    """Least-energy nontrivial non-negative solution of a pure problem.

    which='pure_a': -Lap u = a |u|^(p-2) u, admissible only when int a < 0.
    which='pure_b': -Lap w = b |w|^(q-2) w, admissible only when int b < 0
    and b is positive somewhere.
    """
    if which not in ("pure_a", "pure_b"):
        raise ValueError(f"which must be 'pure_a' or 'pure_b', got {which!r}")
    ia = integrate(params.a)
    ib = integrate(params.b)
    p, q = params.p, params.q
    rng = np.random.default_rng(rng_seed)

    if which == "pure_a":
        if ia >= 0.0:
            raise DomainError(f"pure_a needs int a < 0, got {ia:.3g}")
        solve_params = replace(params, lam=0.0, epsilon=0.0)

        def eval_dir(v: np.ndarray):
            en = energies(ScalarField(params.grid, v), solve_params)
            if not (en.E > 0.0 and en.A > 0.0):
                return None
            t = (en.E / en.A) ** (1.0 / (p - 2.0))
            return t, t * t * en.E / 2.0 - t**p * en.A / p

        def energy(r: SolveReport) -> float:
            return r.energies.E / 2.0 - r.energies.A / p
    else:
        if ib >= 0.0:
            raise DomainError(f"pure_b needs int b < 0, got {ib:.3g}")
        if float(np.max(params.b.values)) <= 0.0:
            raise DomainError("pure_b needs b > 0 somewhere")
        solve_params = replace(params, lam=1.0, epsilon=0.0,
                               a=params.grid.field(0.0))

        def eval_dir(v: np.ndarray):
            en = energies(ScalarField(params.grid, v), solve_params)
            if not (en.E > 0.0 and en.B > 0.0):
                return None
            t = (en.B / en.E) ** (1.0 / (2.0 - q))
            return t, t * t * en.E / 2.0 - t**q * en.B / q

        def energy(r: SolveReport) -> float:
            return r.energies.E / 2.0 - r.energies.B / q

    reports = _reduced_minimize(params, solve_params, eval_dir, rng, n_starts,
                                pg_iters, newton_tol, newton_max_iter)
    if not reports:
        raise NotConvergedError(f"no converged {which} ground state")
    return min(reports, key=energy)


def nehari_lambda_sweep(params: ProblemParams, lams: list[float], sign: str,
                        guess_exponent: float, n_starts: int = 12,
                        rng_seed: int = 0,
                        newton_tol: float = 1e-11) -> list[SolveReport]:
    """Minimizers along a decreasing lambda sweep, warm-started by rescaling.

    The first (largest) lambda uses the full multistart reduction; subsequent
    solves start Newton from the previous solution rescaled by
    (lam_new / lam_old)^guess_exponent and fall back to the multistart path
    if the warm start strays to a different class.
    """
    lams = sorted(lams, reverse=True)
    want = NehariClass.NPLUS if sign == "plus" else NehariClass.NMINUS
    out: list[SolveReport] = []
    prev: SolveReport | None = None
    prev_lam: float | None = None
    for lam in lams:
        pl = params.with_lambda(lam)
        rep = None
        if prev is not None and prev.converged:
            guess = prev.u.values * (lam / prev_lam) ** guess_exponent
            tol = max(newton_tol, _residual_floor(guess, params))
            cand = newton_solve(ScalarField(params.grid, guess), pl,
                                tol=tol, max_iter=80, strict=False)
            if (cand.converged and cand.nehari_class == want
                    and float(np.min(cand.u.values)) >= -1e-10 * max(cand.u.sup_norm, 1e-300)):
                rep = cand
        if rep is None:
            rep = nehari_minimize(pl, sign, n_starts=n_starts,
                                  rng_seed=rng_seed, newton_tol=newton_tol)
        out.append(rep)
        prev, prev_lam = rep, lam
    return out
