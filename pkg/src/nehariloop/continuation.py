"""Pseudo-arclength continuation of the regularized branches, the
epsilon-homotopy toward the loop continuum, and scaling-law diagnostics.

A branch point is a solution of the extended system {residual = 0,
arclength constraint = 0}.  Corrector solves use the bordered matrix

    [ K - W diag(c)   -W q(u) ]
    [ (W t_u)^T        t_lam  ]

with the secant tangent as the border, which stays regular across folds.
Continuation runs only on the regularized problem (epsilon > 0); the sharp
q-term is not smooth at u = 0, so epsilon = 0 is never traced through zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    DepartureFailedError,
    DomainError,
    InsufficientDataError,
    StepCollapseError,
)
from .functional import (
    NehariClass,
    ProblemParams,
    classify,
    energies,
    linearization_weight,
    q_term,
    residual,
)
from .mesh import ScalarField, integrate
from .solve import newton_solve, _residual_floor
from .spectral import EigenReport, gamma1, principal_eigs_weighted

__all__ = [
    "ContinuationSettings",
    "BranchPoint",
    "Branch",
    "LoopDiagnostics",
    "ScalingFit",
    "depart_from_zero",
    "depart_from_lambda_eps",
    "start_from_solution",
    "trace_branch",
    "epsilon_homotopy",
    "scaling_fit",
    "branch_csv_text",
    "write_branch_csv",
    "read_branch_csv",
]


@dataclass(frozen=True)
class ContinuationSettings:
    ds_init: float = 5e-3
    ds_min: float = 1e-7
    ds_max: float = 5e-2
    newton_tol: float = 1e-9
    max_steps: int = 2000
    direction: int = 1
    corrector_max_iter: int = 12
    lambda_bound: float | None = None      # |lambda| box from the checks module
    norm_bound: float | None = None        # sup-norm box
    record_gamma1: bool = True

    def __post_init__(self):
        if not (0.0 < self.ds_min <= self.ds_init <= self.ds_max):
            raise ValueError("need 0 < ds_min <= ds_init <= ds_max")
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")


@dataclass(frozen=True)
class BranchPoint:
    lam: float
    u: ScalarField
    sup_norm: float
    l2_norm: float
    gamma1: float | None
    nehari_class: NehariClass
    arclength: float
    event: str | None = None
    tangent: tuple[np.ndarray, float] | None = field(default=None, repr=False,
                                                     compare=False)


@dataclass(frozen=True)
class Branch:
    epsilon: float
    points: list[BranchPoint]
    origin: str                      # from_zero | from_lambda_eps
    closed_loop_gap: float | None = None


@dataclass(frozen=True)
class LoopDiagnostics:
    lambda_eps: list[float]
    hausdorff: list[float]
    crossing_norms: list[float | None]
    loop_gaps: list[float | None]


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    constant: float
    profile_errors: list[float]
    profile_error: float | None


def _classify_point(u: ScalarField, params: ProblemParams) -> NehariClass:
    """Nehari class with the epsilon-aware sublinear pairing.

    For a converged solution, E = A + lam * Beff holds by the discrete
    solvability identity, so the split sign is well defined along branches.
    """
    en = energies(u, params)
    w = params.grid.quad_weights
    beff = float(w @ (q_term(u.values, params) * u.values))
    return classify(en.E, en.A, beff, params.lam, params.p, params.q, rtol=1e-5)


def _make_point(u: np.ndarray, lam: float, params: ProblemParams,
                arclength: float, settings: ContinuationSettings,
                event: str | None = None,
                tangent: tuple[np.ndarray, float] | None = None) -> BranchPoint:
    fld = ScalarField(params.grid, u)
    g1 = None
    if settings.record_gamma1:
        try:
            g1 = gamma1(fld, params.with_lambda(lam)).eigenvalue
        except Exception:
            g1 = None
    return BranchPoint(lam=float(lam), u=fld, sup_norm=fld.sup_norm,
                       l2_norm=fld.l2_norm(),
                       gamma1=g1,
                       nehari_class=_classify_point(fld, params.with_lambda(lam)),
                       arclength=float(arclength), event=event, tangent=tangent)


def _bordered_solve(params: ProblemParams, u: np.ndarray, lam: float,
                    brow_u: np.ndarray, brow_lam: float,
                    rhs_top: np.ndarray, rhs_bot: float) -> tuple[np.ndarray, float]:
    """Solve [[K - W diag(c), -W q(u)], [brow_u^T, brow_lam]] x = rhs."""
    w = params.grid.quad_weights
    pl = params.with_lambda(lam)
    c = linearization_weight(u, pl, clamp=True)
    Jw = params.operator().weighted - sp.diags(w * c)
    col = -(w * q_term(u, pl))
    n = u.size
    M = sp.bmat([[Jw, col[:, None]],
                 [sp.csr_matrix(brow_u[None, :]), sp.csr_matrix([[brow_lam]])]],
                format="csc")
    sol = spla.spsolve(M, np.concatenate([rhs_top, [rhs_bot]]))
    return sol[:n], float(sol[n])


def _corrector(params: ProblemParams, u0: np.ndarray, lam0: float,
               brow_u: np.ndarray, brow_lam: float, constraint_rhs: float,
               tol: float, max_iter: int,
               tol_scale: float = 1.0) -> tuple[np.ndarray, float, float] | None:
    """Newton on {weighted residual = 0, brow . (u, lam) = constraint_rhs}.

    tol_scale < 1 tightens the tolerance near bifurcation points, where every
    residual term shrinks with the amplitude.  Returns (u, lam, ||r||_2) on
    success, None on failure.
    """
    w = params.grid.quad_weights
    u, lam = u0.copy(), lam0
    for it in range(max_iter + 1):
        r = residual(ScalarField(params.grid, u), params.with_lambda(lam)).values
        g = float(brow_u @ u) + brow_lam * lam - constraint_rhs
        rn = float(np.linalg.norm(r))
        tol_eff = max(tol * min(tol_scale, 1.0), _residual_floor(u, params))
        if rn <= tol_eff and abs(g) <= 1e-12 * max(1.0, abs(constraint_rhs)):
            return u, lam, rn, it
        try:
            du, dlam = _bordered_solve(params, u, lam, brow_u, brow_lam,
                                       -(w * r), -g)
        except RuntimeError:
            return None
        if not (np.all(np.isfinite(du)) and math.isfinite(dlam)):
            return None
        u = u + du
        lam = lam + dlam
    return None


def _product_norm(w: np.ndarray, du: np.ndarray, dlam: float) -> float:
    return math.sqrt(float(w @ du**2) + dlam * dlam)


def _check_cm(params: ProblemParams) -> tuple[float, float]:
    """Condition (c:m) for m = b - eps: int m < 0 and m positive somewhere."""
    if params.epsilon <= 0.0:
        raise DomainError("continuation departs only from the regularized problem")
    m = params.b_eps_values()
    im = float(params.grid.quad_weights @ m)
    if im >= 0.0:
        raise DomainError(f"need int (b - eps) < 0, got {im:.3g}")
    if float(np.max(m)) <= 0.0:
        raise DomainError("need b - eps > 0 somewhere")
    ia = integrate(params.a)
    return ia, im


def _departure_pair(params: ProblemParams, settings: ContinuationSettings,
                    predictor, constraint,
                    s0: float | None = None
                    ) -> tuple[np.ndarray, float, np.ndarray, float, float]:
    """Solve the corrector at amplitudes s and 1.2 s over a decade sweep.

    predictor(s) -> (u_guess, lam_guess); constraint(s) -> (brow_u, brow_lam,
    rhs).  Returns (u1, lam1, u2, lam2, s) for the secant tangent.
    """
    if s0 is None:
        s0 = 10.0 * math.sqrt(settings.newton_tol)
    sweep = [s0 * 2.0 ** (-k) for k in range(0, 8)] + [s0 * 2.0 ** k for k in (1, 2, 3)]
    for s in sweep:
        u_g, lam_g = predictor(s)
        bu, bl, rhs = constraint(s)
        got = _corrector(params, u_g, lam_g, bu, bl, rhs,
                         settings.newton_tol, settings.corrector_max_iter,
                         tol_scale=s)
        if got is None:
            continue
        u1, lam1, _, _ = got
        s2 = 1.2 * s
        u_g2, lam_g2 = predictor(s2)
        bu2, bl2, rhs2 = constraint(s2)
        got2 = _corrector(params, u_g2, lam_g2, bu2, bl2, rhs2,
                          settings.newton_tol, settings.corrector_max_iter,
                          tol_scale=s2)
        if got2 is None:
            continue
        u2, lam2, _, _ = got2
        return u1, lam1, u2, lam2, s
    raise DepartureFailedError("corrector failed for every amplitude in the sweep")


def depart_from_zero(params: ProblemParams,
                     settings: ContinuationSettings) -> BranchPoint:
    """First branch point near (0, 0).

    Locally u ~ s * 1 and lam ~ -eps^(2-q) (int a / int m) s^(p-2) with
    m = b - eps, so the predictor follows the constant direction and the
    corrector pins the mean of u to s.
    """
    ia, im = _check_cm(params)
    grid = params.grid
    w = grid.quad_weights
    omega = grid.measure
    slope = -params.epsilon ** (2.0 - params.q) * ia / im
    ones = np.ones(grid.node_count)

    def predictor(s):
        return s * ones, slope * s ** (params.p - 2.0)

    def constraint(s):
        return w / omega, 0.0, s       # mean(u) = s

    u1, lam1, u2, lam2, s = _departure_pair(params, settings, predictor, constraint)
    du = u2 - u1
    dlam = lam2 - lam1
    nrm = _product_norm(w, du, dlam)
    tangent = (du / nrm, dlam / nrm)
    return _make_point(u1, lam1, params, 0.0, settings, event="start",
                       tangent=tangent)


def depart_from_lambda_eps(params: ProblemParams,
                           settings: ContinuationSettings,
                           eig: EigenReport | None = None,
                           landing_tol: float = 1e-7) -> BranchPoint:
    """First branch point near (lam_eps, 0) along the principal eigenfunction.

    The local branch satisfies lam(s) - lam_eps = O(s); a probe solve
    estimates the slope and the amplitude is shrunk until the departure point
    sits within landing_tol of lam_eps.
    """
    _check_cm(params)
    grid = params.grid
    w = grid.quad_weights
    if eig is None:
        m = ScalarField(grid, params.b_eps_values())
        _, eig = principal_eigs_weighted(m, params.epsilon, params)
    lam_eps = eig.eigenvalue
    phi = eig.eigenfunction.values / eig.c0_norm      # sup-normalized direction
    wphi = w * phi
    proj = float(wphi @ phi)

    def predictor(s):
        return s * phi, lam_eps

    def constraint(s):
        return wphi, 0.0, s * proj     # <phi, u>_w = s <phi, phi>_w

    u1, lam1, u2, lam2, s = _departure_pair(params, settings, predictor, constraint)
    gamma_slope = abs(lam1 - lam_eps) / s
    if gamma_slope * s > landing_tol:
        s_small = 0.5 * landing_tol / gamma_slope
        u1, lam1, u2, lam2, s = _departure_pair(params, settings, predictor,
                                                constraint, s0=s_small)
    du = u2 - u1
    dlam = lam2 - lam1
    nrm = _product_norm(w, du, dlam)
    tangent = (du / nrm, dlam / nrm)
    return _make_point(u1, lam1, params, 0.0, settings, event="start",
                       tangent=tangent)


def start_from_solution(u: ScalarField, params: ProblemParams,
                        settings: ContinuationSettings) -> BranchPoint:
    """Branch point (with tangent) at an already-converged solution.

    The tangent is the bordered nullspace direction of [J, r_lam], oriented
    toward increasing lambda; flip with settings.direction when tracing.
    """
    w = params.grid.quad_weights
    n = params.grid.node_count
    du, dlam = _bordered_solve(params, u.values, params.lam,
                               np.zeros(n), 1.0,
                               np.zeros(n), 1.0)
    nrm = _product_norm(w, du, dlam)
    tangent = (du / nrm, dlam / nrm)
    if tangent[1] < 0.0:
        tangent = (-tangent[0], -tangent[1])
    return _make_point(u.values, params.lam, params, 0.0, settings,
                       event="start", tangent=tangent)


def trace_branch(start: BranchPoint, params: ProblemParams,
                 settings: ContinuationSettings,
                 lambda_eps: float | None = None,
                 origin: str = "from_zero") -> Branch:
    """Advance the extended system from a departure point until the branch
    returns to the trivial state, leaves the a-priori box, or exhausts steps.

    Folds (sign change of d lam/ds) and lambda = 0 crossings with nontrivial u
    are tagged; a crossing point is refined to lam = 0 exactly and inserted,
    which makes it a numerical solution of the pure convex problem.
    """
    if start.tangent is None:
        raise ValueError("start point carries no tangent; use a depart_* result")
    grid = params.grid
    w = grid.quad_weights
    u = start.u.values.copy()
    lam = start.lam
    t_u = start.tangent[0].copy() * settings.direction
    t_lam = start.tangent[1] * settings.direction
    points: list[BranchPoint] = [replace(start, tangent=None)]
    arclength = start.arclength
    ds = settings.ds_init
    start_sup = start.sup_norm
    grown = False
    gap = None
    targets = [(0.0, 0.0)]
    if lambda_eps is not None:
        targets.append((lambda_eps, 0.0))
    home = 1.5 * settings.ds_max

    step = 0
    while step < settings.max_steps:
        step += 1
        pred_u = u + ds * t_u
        pred_lam = lam + ds * t_lam
        rhs = float((w * t_u) @ pred_u) + t_lam * pred_lam
        got = _corrector(params, pred_u, pred_lam, w * t_u, t_lam, rhs,
                         settings.newton_tol, settings.corrector_max_iter)
        if got is None:
            if ds <= settings.ds_min:
                raise StepCollapseError(
                    f"corrector failing at ds = {ds:.3e} <= ds_min"
                )
            ds = max(ds / 2.0, settings.ds_min)
            continue
        u_new, lam_new, rn, n_corr = got
        # the positive-solution continuum keeps u + eps > 0; a corrector
        # result near or below -eps has jumped onto a spurious branch
        if float(np.min(u_new)) <= -0.5 * params.epsilon:
            if ds <= settings.ds_min:
                raise StepCollapseError(
                    "corrector leaves the positive continuum at ds_min"
                )
            ds = max(ds / 2.0, settings.ds_min)
            continue
        du = u_new - u
        dlam = lam_new - lam
        ds_used = _product_norm(w, du, dlam)
        if ds_used == 0.0:
            ds = max(ds / 2.0, settings.ds_min)
            continue
        t_u_new = du / ds_used
        t_lam_new = dlam / ds_used
        arclength += ds_used

        # lambda = 0 crossing with nontrivial u: refine and insert
        sup_new = float(np.max(np.abs(u_new)))
        if lam * lam_new < 0.0 and min(sup_new, float(np.max(np.abs(u)))) > start_sup:
            frac = lam / (lam - lam_new)
            u_guess = (1.0 - frac) * u + frac * u_new
            try:
                rep0 = newton_solve(ScalarField(grid, u_guess),
                                    params.with_lambda(0.0),
                                    tol=max(settings.newton_tol,
                                            _residual_floor(u_guess, params)),
                                    max_iter=settings.corrector_max_iter * 3,
                                    strict=False)
            except Exception:
                rep0 = None
            if rep0 is not None and rep0.converged and rep0.u.sup_norm > start_sup:
                points.append(_make_point(rep0.u.values, 0.0, params,
                                          arclength - ds_used * (1.0 - frac),
                                          settings, event="lambda_zero_crossing"))

        # fold: the lambda-component of the secant tangent changes sign
        if t_lam_new * t_lam < 0.0 and points[-1].event is None:
            points[-1] = replace(points[-1], event="fold")

        points.append(_make_point(u_new, lam_new, params, arclength, settings))
        u, lam, t_u, t_lam = u_new, lam_new, t_u_new, t_lam_new

        dist_home = min(math.hypot(lam - tl, sup_new) for tl, _ in targets)
        if sup_new > 10.0 * start_sup and dist_home > 3.0 * home:
            grown = True
        returned_home = grown and (sup_new < start_sup or dist_home <= home)
        if returned_home:
            points[-1] = replace(points[-1], event="end")
            break
        if settings.lambda_bound is not None and abs(lam) > settings.lambda_bound:
            points[-1] = replace(points[-1], event="end")
            break
        if settings.norm_bound is not None and sup_new > settings.norm_bound:
            points[-1] = replace(points[-1], event="end")
            break

        if n_corr <= 4:
            ds = min(ds * 1.4, settings.ds_max)
        elif n_corr > settings.corrector_max_iter // 2:
            ds = max(ds / 2.0, settings.ds_min)
    else:
        points[-1] = replace(points[-1], event="end")

    target = None
    if origin == "from_zero" and lambda_eps is not None:
        target = (lambda_eps, 0.0)
    elif origin == "from_lambda_eps":
        target = (0.0, 0.0)
    if target is not None:
        last = points[-1]
        gap = math.hypot(last.lam - target[0], last.sup_norm - target[1])
    return Branch(epsilon=params.epsilon, points=points, origin=origin,
                  closed_loop_gap=gap)


def _thread_cap(n_tasks: int) -> int:
    import os

    raw = os.environ.get("NEHARI_LOOP_THREADS")
    if raw is not None:
        try:
            cap = int(raw)
        except ValueError:
            cap = 1
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def hausdorff_distance(poly_a: np.ndarray, poly_b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point clouds in the plane."""
    from scipy.spatial.distance import cdist

    d = cdist(poly_a, poly_b)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def branch_polyline(branch: Branch) -> np.ndarray:
    return np.array([[p.lam, p.sup_norm] for p in branch.points])


def epsilon_homotopy(params: ProblemParams, eps_list: list[float],
                     settings: ContinuationSettings
                     ) -> tuple[list[Branch], LoopDiagnostics]:
    """Trace the bounded subcontinuum for each epsilon and compare them.

    Reports the lam_eps trend, Hausdorff distances between consecutive
    branches in the (lambda, sup-norm) plane, the norms of the lambda = 0
    crossings, and the closure gaps at (lam_eps, 0).
    """
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise DomainError("eps_list must be strictly decreasing")

    def trace_one(eps: float) -> tuple[Branch, float]:
        pe = params.with_epsilon(eps)
        m = ScalarField(pe.grid, pe.b_eps_values())
        _, eig = principal_eigs_weighted(m, eps, pe)
        start = depart_from_zero(pe, settings)
        branch = trace_branch(start, pe, settings, lambda_eps=eig.eigenvalue,
                              origin="from_zero")
        return branch, eig.eigenvalue

    # branches for distinct epsilon are independent; results are collected in
    # eps_list order so the outcome does not depend on the schedule
    workers = _thread_cap(len(eps_list))
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(trace_one, eps_list))
    else:
        results = [trace_one(eps) for eps in eps_list]
    branches = [br for br, _ in results]
    lam_eps_list = [le for _, le in results]

    hausdorff = [
        hausdorff_distance(branch_polyline(b1), branch_polyline(b2))
        for b1, b2 in zip(branches, branches[1:])
    ]
    crossing_norms: list[float | None] = []
    for b in branches:
        norms = [p.sup_norm for p in b.points if p.event == "lambda_zero_crossing"]
        crossing_norms.append(max(norms) if norms else None)
    diags = LoopDiagnostics(lambda_eps=lam_eps_list, hausdorff=hausdorff,
                            crossing_norms=crossing_norms,
                            loop_gaps=[b.closed_loop_gap for b in branches])
    return branches, diags


def scaling_fit(points: list[tuple[float, ScalarField]], law: str,
                p: float, q: float,
                reference: ScalarField | float | None = None) -> ScalingFit:
    """Least-squares exponent of ||u||_inf vs lambda and profile distances.

    law='concave_2mq' rescales by lambda^(-1/(2-q)) (sublinear limit, compare
    against the ground state w0); law='convex_pmq' rescales by
    lambda^(-1/(p-q)) (compare against the constant c*).  Profile distances
    are listed from the largest lambda down to the smallest.
    """
    if law not in ("concave_2mq", "convex_pmq"):
        raise ValueError(f"unknown law {law!r}")
    if len(points) < 4:
        raise InsufficientDataError("need at least 4 sweep points")
    lams = np.array([lam for lam, _ in points], dtype=float)
    if np.any(lams <= 0.0):
        raise InsufficientDataError("scaling laws need lambda > 0")
    if lams.max() / lams.min() < 99.0:
        raise InsufficientDataError("lambda sweep must span at least 2 decades")
    sups = np.array([u.sup_norm for _, u in points], dtype=float)
    if np.any(sups <= 0.0):
        raise InsufficientDataError("trivial solution in the sweep")
    coeff = np.polyfit(np.log(lams), np.log(sups), 1)
    exponent, constant = float(coeff[0]), float(math.exp(coeff[1]))

    rescale = 1.0 / (2.0 - q) if law == "concave_2mq" else 1.0 / (p - q)
    profile_errors: list[float] = []
    if reference is not None:
        for idx in np.argsort(-lams):
            lam, u = points[int(idx)]
            scaled = u.values / lam ** rescale
            if isinstance(reference, ScalarField):
                err = float(np.max(np.abs(scaled - reference.values)))
            else:
                err = float(np.max(np.abs(scaled - float(reference))))
            profile_errors.append(err)
    return ScalingFit(exponent=exponent, constant=constant,
                      profile_errors=profile_errors,
                      profile_error=profile_errors[-1] if profile_errors else None)


# CSV schema fixed by the external interface: one row per branch point.
BRANCH_CSV_COLUMNS = ("s", "lambda", "sup_norm", "l2_norm", "gamma1", "class",
                      "event")


def _fmt(x: float) -> str:
    return repr(float(x))


def branch_csv_text(branch: Branch) -> str:
    lines = [",".join(BRANCH_CSV_COLUMNS)]
    for pt in branch.points:
        lines.append(",".join([
            _fmt(pt.arclength),
            _fmt(pt.lam),
            _fmt(pt.sup_norm),
            _fmt(pt.l2_norm),
            "" if pt.gamma1 is None else _fmt(pt.gamma1),
            pt.nehari_class.value,
            pt.event or "",
        ]))
    return "\n".join(lines) + "\n"


def write_branch_csv(branch: Branch, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(branch_csv_text(branch))


def read_branch_csv(path) -> list[dict]:
    """Rows of a branch CSV with numeric fields parsed (gamma1 may be None)."""
    with open(path, "r") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    if tuple(header) != BRANCH_CSV_COLUMNS:
        raise ValueError(f"unexpected branch CSV header: {header}")
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        rows.append({
            "s": float(cells[0]),
            "lambda": float(cells[1]),
            "sup_norm": float(cells[2]),
            "l2_norm": float(cells[3]),
            "gamma1": None if cells[4] == "" else float(cells[4]),
            "class": cells[5],
            "event": cells[6] or None,
        })
    return rows
