"""Energies, residuals, Jacobians, fibering analysis, and Nehari classification.

Everything here works for both the sharp problem (epsilon = 0) and its
regularization (epsilon > 0), where the sublinear term becomes
lambda * (b - epsilon) * |u + epsilon|^(q-2) * u and is smooth at u = 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DomainError, NoRootError, SingularLinearizationError
from .mesh import DiscreteOperator, Grid, ScalarField, laplacian_neumann

__all__ = [
    "ProblemParams",
    "EnergyTriple",
    "FiberingReport",
    "NehariClass",
    "energies",
    "residual",
    "jacobian",
    "fibering_analyze",
    "cstar",
    "lambda0_estimate",
    "cpq_constant",
]

# Relative tolerance for E = A + lambda*B membership (matches achievable
# Newton residuals at n ~ 256).
NEHARI_MEMBERSHIP_RTOL = 1e-8


class NehariClass(enum.Enum):
    NPLUS = "Nplus"
    NMINUS = "Nminus"
    NZERO = "Nzero"
    NOT_ON_NEHARI = "NotOnNehari"


@dataclass(frozen=True)
class ProblemParams:
    """Exponents, parameter, regularization, and coefficient fields."""

    p: float
    q: float
    lam: float
    epsilon: float
    a: ScalarField
    b: ScalarField

    def __post_init__(self):
        if not (1.0 < self.q < 2.0 < self.p):
            raise ConfigError(f"need 1 < q < 2 < p, got q={self.q}, p={self.p}")
        if self.epsilon < 0.0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.a.grid is not self.b.grid and self.a.grid != self.b.grid:
            raise ConfigError("a and b must live on the same grid")

    @property
    def grid(self) -> Grid:
        return self.a.grid

    def with_lambda(self, lam: float) -> "ProblemParams":
        return replace(self, lam=float(lam))

    def with_epsilon(self, epsilon: float) -> "ProblemParams":
        return replace(self, epsilon=float(epsilon))

    def b_eps_values(self) -> np.ndarray:
        """b - epsilon, the regularized sublinear weight."""
        return self.b.values - self.epsilon

    def operator(self) -> DiscreteOperator:
        return _operator_cache(self.grid)


_OP_CACHE: dict[int, DiscreteOperator] = {}


def _operator_cache(grid: Grid) -> DiscreteOperator:
    key = id(grid)
    op = _OP_CACHE.get(key)
    if op is None or op.grid is not grid:
        op = laplacian_neumann(grid)
        _OP_CACHE[key] = op
    return op


@dataclass(frozen=True)
class EnergyTriple:
    E: float
    A: float
    B: float
    I: float


@dataclass(frozen=True)
class FiberingReport:
    Cpq: float
    tstar: float | None
    t1: float | None
    t2: float | None
    iu_at_tstar: float | None
    nehari_class: NehariClass


def cpq_constant(p: float, q: float) -> float:
    return (q * (p - 2.0) / (2.0 * (p - q))) * (
        p * (2.0 - q) / (2.0 * (p - q))
    ) ** ((2.0 - q) / (p - 2.0))


def _power(u: np.ndarray, expo: float) -> np.ndarray:
    """|u|^expo * sign(u) with the continuous extension 0 at u = 0."""
    out = np.zeros_like(u)
    nz = u != 0.0
    out[nz] = np.abs(u[nz]) ** expo * np.sign(u[nz])
    return out


def q_term(u: np.ndarray, params: ProblemParams) -> np.ndarray:
    """Pointwise sublinear term (without lambda): weight * nonlinearity."""
    if params.epsilon > 0.0:
        s = u + params.epsilon
        return params.b_eps_values() * np.abs(s) ** (params.q - 2.0) * u
    return params.b.values * _power(u, params.q - 1.0)


def p_term(u: np.ndarray, params: ProblemParams) -> np.ndarray:
    return params.a.values * _power(u, params.p - 1.0)


def energies(u: ScalarField, params: ProblemParams) -> EnergyTriple:
    """E = u^T K u, A = int a|u|^p, B = int b|u|^q, I = E/2 - A/p - lam*B/q."""
    op = params.operator()
    w = params.grid.quad_weights
    uu = u.values
    E = op.dirichlet_form(uu)
    A = float(w @ (params.a.values * np.abs(uu) ** params.p))
    B = float(w @ (params.b.values * np.abs(uu) ** params.q))
    I = E / 2.0 - A / params.p - params.lam * B / params.q
    return EnergyTriple(E=E, A=A, B=B, I=I)


def residual(u: ScalarField, params: ProblemParams) -> ScalarField:
    """Pointwise residual r = L u - a|u|^(p-2)u - lam * (sublinear term)."""
    op = params.operator()
    r = op.apply(u.values) - p_term(u.values, params) - params.lam * q_term(u.values, params)
    return ScalarField(u.grid, r)


def _q_term_derivative(u: np.ndarray, params: ProblemParams,
                       clamp: bool = True) -> np.ndarray:
    q = params.q
    if params.epsilon > 0.0:
        s = u + params.epsilon
        s_abs = np.maximum(np.abs(s), 1e-300)
        return params.b_eps_values() * (
            s_abs ** (q - 2.0) + (q - 2.0) * s_abs ** (q - 3.0) * np.sign(s) * u
        )
    eta = 1e-12 * max(1.0, float(np.max(np.abs(u))))
    small = np.abs(u) < eta
    if not clamp and np.any(small & (params.b.values != 0.0)):
        raise SingularLinearizationError(
            "q-term weight |u|^(q-2) blows up at a node with b != 0"
        )
    uc = np.where(small, eta, np.abs(u))
    return params.b.values * (q - 1.0) * uc ** (q - 2.0)


def linearization_weight(u: np.ndarray, params: ProblemParams,
                         clamp: bool = True) -> np.ndarray:
    """Diagonal c(u) with J = L - diag(c)."""
    dp = (params.p - 1.0) * params.a.values * np.abs(u) ** (params.p - 2.0)
    return dp + params.lam * _q_term_derivative(u, params, clamp=clamp)


def jacobian(u: ScalarField, params: ProblemParams,
             clamp: bool = True) -> DiscreteOperator:
    """dr/du as a DiscreteOperator: weighted form K - W diag(c) is symmetric."""
    op = params.operator()
    c = linearization_weight(u.values, params, clamp=clamp)
    W = sp.diags(params.grid.quad_weights)
    return DiscreteOperator(grid=params.grid,
                            weighted=(op.weighted - W @ sp.diags(c)).tocsr())


def _fibering_root(E: float, A: float, B: float, lam: float,
                   p: float, q: float, lo: float, hi: float) -> float:
    """Root of g(t) = t^(2-q)E - t^(p-q)A - lam*B, bracketed in (lo, hi)."""
    def g(t: float) -> float:
        return t ** (2.0 - q) * E - t ** (p - q) * A - lam * B

    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0.0:
        raise NoRootError(f"no sign change in bracket [{lo}, {hi}]")
    # bisect down to a short bracket, then polish with Newton
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if glo * gm < 0.0:
            hi = mid
        else:
            lo, glo = mid, gm
    t = 0.5 * (lo + hi)
    for _ in range(30):
        gp = (2.0 - q) * t ** (1.0 - q) * E - (p - q) * t ** (p - q - 1.0) * A
        if gp == 0.0:
            break
        step = g(t) / gp
        t_new = t - step
        if not (lo <= t_new <= hi):
            break
        t = t_new
        if abs(step) <= 1e-12 * t:
            break
    return t


def fibering_analyze(u: ScalarField, params: ProblemParams) -> FiberingReport:
    """Critical points of j_u(t) = I_lam(t u) and the Nehari class of u.

    t1 is the root with j'' > 0 (minimum side), t2 the root with j'' < 0
    (maximum side); either may be absent depending on the signs of A and B.
    """
    if float(np.max(np.abs(u.values))) == 0.0:
        raise ConfigError("fibering analysis needs u != 0")
    p, q, lam = params.p, params.q, params.lam
    en = energies(u, params)
    E, A, B = en.E, en.A, en.B
    Cpq = cpq_constant(p, q)

    tstar = None
    iu_at_tstar = None
    if E > 0.0 and A > 0.0:
        tstar = (p * (2.0 - q) * E / (2.0 * (p - q) * A)) ** (1.0 / (p - 2.0))
        iu_at_tstar = (
            (p - 2.0) / (2.0 * (p - q))
            * (p * (2.0 - q) / (2.0 * (p - q))) ** ((2.0 - q) / (p - 2.0))
            * E ** ((p - q) / (p - 2.0)) / A ** ((2.0 - q) / (p - 2.0))
            - lam * B / q
        )

    t1 = t2 = None
    lamB = lam * B
    if A > 0.0 and lamB <= 0.0:
        # g goes from -lam*B >= 0 down to -inf: single maximum-side root
        hi = _grow_until(E, A, B, lam, p, q, sign=-1.0)
        lo = 1e-300 if lamB < 0.0 else _shrink_until(E, A, B, lam, p, q)
        t2 = _fibering_root(E, A, B, lam, p, q, lo, hi)
    elif A <= 0.0 and lamB > 0.0 and (E > 0.0 or A < 0.0):
        # g increases from -lam*B < 0: single minimum-side root
        hi = _grow_until(E, A, B, lam, p, q, sign=+1.0)
        t1 = _fibering_root(E, A, B, lam, p, q, 1e-300, hi)
    elif A > 0.0 and lamB > 0.0:
        if E <= 0.0:
            # g = -t^(p-q) A - lam B < 0 throughout
            raise NoRootError("A > 0, lam*B > 0, E <= 0 admits no critical point")
        if iu_at_tstar is not None and iu_at_tstar > 0.0:
            t1 = _fibering_root(E, A, B, lam, p, q, 1e-300, tstar)
            t2 = _fibering_root(E, A, B, lam, p, q, tstar,
                                _grow_until(E, A, B, lam, p, q, sign=-1.0))
        else:
            tg = ((2.0 - q) * E / ((p - q) * A)) ** (1.0 / (p - 2.0))
            g_tg = tg ** (2.0 - q) * E - tg ** (p - q) * A - lamB
            if g_tg == 0.0:
                t1 = t2 = tg
            elif g_tg < 0.0:
                raise NoRootError("i_u(t*) < 0: fibering map has no critical point")
            else:
                t1 = _fibering_root(E, A, B, lam, p, q, 1e-300, tg)
                t2 = _fibering_root(E, A, B, lam, p, q, tg,
                                    _grow_until(E, A, B, lam, p, q, sign=-1.0))
    else:
        raise NoRootError("fibering case analysis admits no critical point")

    return FiberingReport(Cpq=Cpq, tstar=tstar, t1=t1, t2=t2,
                          iu_at_tstar=iu_at_tstar,
                          nehari_class=classify(E, A, B, lam, p, q))


def _grow_until(E, A, B, lam, p, q, sign: float) -> float:
    """Upper bracket endpoint where g has the requested sign."""
    t = 1.0
    for _ in range(2000):
        g = t ** (2.0 - q) * E - t ** (p - q) * A - lam * B
        if sign * g > 0.0:
            return t
        t *= 2.0
    raise NoRootError("failed to bracket a fibering root")


def _shrink_until(E, A, B, lam, p, q) -> float:
    # lam*B == 0 with A > 0: g(t) ~ t^(2-q) E > 0 for small t when E > 0
    if E <= 0.0:
        raise NoRootError("A > 0, B = 0, E <= 0 admits no critical point")
    t = 1.0
    for _ in range(2000):
        g = t ** (2.0 - q) * E - t ** (p - q) * A - lam * B
        if g > 0.0:
            return t
        t *= 0.5
    raise NoRootError("failed to bracket a fibering root")


def classify(E: float, A: float, B: float, lam: float,
             p: float, q: float,
             rtol: float = NEHARI_MEMBERSHIP_RTOL) -> NehariClass:
    """Nehari class from the membership E = A + lam*B and the sign split."""
    scale = abs(E) + abs(A) + abs(lam * B)
    if scale == 0.0:
        return NehariClass.NOT_ON_NEHARI
    if abs(E - A - lam * B) > rtol * scale:
        return NehariClass.NOT_ON_NEHARI
    split = E - lam * (p - q) / (p - 2.0) * B
    if abs(split) <= rtol * scale:
        return NehariClass.NZERO
    return NehariClass.NPLUS if split < 0.0 else NehariClass.NMINUS


def cstar(params: ProblemParams) -> float:
    """(-int b / int a)^(1/(p-q)); the constant asymptotic profile."""
    w = params.grid.quad_weights
    ia = float(w @ params.a.values)
    ib = float(w @ params.b.values)
    if not (ia < 0.0 <= ib or ia > 0.0 >= ib):
        raise DomainError(
            f"need int a < 0 <= int b or int a > 0 >= int b, got {ia:.3g}, {ib:.3g}"
        )
    return (-ib / ia) ** (1.0 / (params.p - params.q))


def lambda0_estimate(params: ProblemParams, n_starts: int = 16,
                     rng_seed: int = 0, max_iter: int = 400) -> float:
    """Upper estimate of the fibering threshold lambda_0.

    Multistart quasi-Newton minimization of log F for the 0-homogeneous ratio
    F(u) = Cpq * E^((p-q)/(p-2)) / (B * A^((2-q)/(p-2))) over the cone
    E > 0, A > 0, B > 0 (log F -> +inf at the cone boundary, so the cone acts
    as its own barrier); returns +inf when no admissible start is found.
    """
    import scipy.optimize

    p, q = params.p, params.q
    alpha = (p - q) / (p - 2.0)
    beta = (2.0 - q) / (p - 2.0)
    Cpq = cpq_constant(p, q)
    op = params.operator()
    w = params.grid.quad_weights
    a, b = params.a.values, params.b.values
    rng = np.random.default_rng(rng_seed)
    n = params.grid.node_count

    def parts(u):
        E = op.dirichlet_form(u)
        A = float(w @ (a * np.abs(u) ** p))
        B = float(w @ (b * np.abs(u) ** q))
        return E, A, B

    def fun(u):
        E, A, B = parts(u)
        if not (E > 0.0 and A > 0.0 and B > 0.0):
            return 1e30, np.zeros(n)
        val = math.log(Cpq) + alpha * math.log(E) - math.log(B) - beta * math.log(A)
        gE = 2.0 * (op.weighted @ u)
        gA = p * w * a * np.abs(u) ** (p - 1.0) * np.sign(u)
        gB = q * w * b * np.abs(u) ** (q - 1.0) * np.sign(u)
        return val, alpha * gE / E - gB / B - beta * gA / A

    best = math.inf
    found_start = 0
    attempts = 0
    while found_start < n_starts and attempts < 50 * n_starts:
        attempts += 1
        u0 = _random_trig_field(params.grid, rng)
        E, A, B = parts(u0)
        if not (E > 0.0 and A > 0.0 and B > 0.0):
            continue
        found_start += 1
        res = scipy.optimize.minimize(fun, u0, jac=True, method="L-BFGS-B",
                                      options={"maxiter": max_iter,
                                               "ftol": 1e-14, "gtol": 1e-12})
        E, A, B = parts(res.x)
        if E > 0.0 and A > 0.0 and B > 0.0:
            best = min(best, Cpq * E ** alpha / (B * A ** beta))
    return best


def _random_trig_field(grid: Grid, rng: np.random.Generator,
                       n_modes: int = 6) -> np.ndarray:
    """Random low-frequency field built from Neumann cosine modes."""
    pts = grid.coords()
    out = np.full(grid.node_count, rng.normal())
    for d in range(grid.dim):
        a_, b_ = grid.endpoints[d]
        xhat = (pts[:, d] - a_) / (b_ - a_)
        for k in range(1, n_modes + 1):
            out += rng.normal() / k * np.cos(np.pi * k * xhat)
    return out
