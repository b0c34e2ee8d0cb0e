"""Principal eigenvalues of the regularized linearization and stability.

All eigenproblems are symmetric pencils built from the weighted Laplacian K
and the diagonal mass W.  The weighted problem K phi = lam * M phi with an
indefinite diagonal M = W diag(m) eps^(q-2) has exactly two principal
eigenvalues when int m < 0 < max m: lam = 0 (constants) and lam = lam_eps > 0.
lam_eps is found as the positive root of lam -> mu1(lam), the smallest
eigenvalue of (K - lam M, W), which is the characterization the theory of the
regularized problem itself uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, SingularLinearizationError
from .functional import ProblemParams, linearization_weight
from .mesh import ScalarField, integrate

__all__ = [
    "EigenReport",
    "principal_eigs_weighted",
    "principal_eig_dense_oracle",
    "lambda_epsilon_curve",
    "gamma1",
    "stability_label",
]

DENSE_CUTOFF = 512


@dataclass(frozen=True)
class EigenReport:
    eigenvalue: float
    eigenfunction: ScalarField
    residual_norm: float
    positive_eigenfunction: bool
    c0_norm: float      # sup norm of the L2-normalized eigenfunction


def _weighted_l2_normalize(phi: np.ndarray, w: np.ndarray) -> np.ndarray:
    nrm = math.sqrt(float(w @ phi**2))
    phi = phi / nrm
    # sign convention: principal functions are reported non-negative
    if float(w @ phi) < 0.0:
        phi = -phi
    return phi


def _gershgorin_lower(A: sp.csr_matrix, wdiag: np.ndarray) -> float:
    A = A.tocsr()
    diag = A.diagonal()
    absrow = np.abs(A).sum(axis=1).A1 - np.abs(diag)
    return float(np.min((diag - absrow) / wdiag))


def smallest_eig(A: sp.spmatrix, wdiag: np.ndarray,
                 method: str = "auto") -> tuple[float, np.ndarray]:
    """Smallest eigenpair of the symmetric-definite pencil (A, diag(wdiag))."""
    n = A.shape[0]
    if method not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown method {method!r}")
    if method == "dense" or (method == "auto" and n <= DENSE_CUTOFF):
        vals, vecs = scipy.linalg.eigh(
            np.asarray(A.todense()), np.diag(wdiag), subset_by_index=(0, 0))
        return float(vals[0]), vecs[:, 0]
    sigma = _gershgorin_lower(A.tocsr(), wdiag) - 1.0
    W = sp.diags(wdiag)
    try:
        vals, vecs = spla.eigsh(A.tocsc(), k=1, M=W.tocsc(), sigma=sigma,
                                which="LM", tol=1e-12, maxiter=5000)
        return float(vals[0]), vecs[:, 0]
    except Exception:
        if n <= 4 * DENSE_CUTOFF:
            return smallest_eig(A, wdiag, method="dense")
        raise


def principal_eigs_weighted(m: ScalarField, epsilon: float,
                            params: ProblemParams,
                            method: str = "auto") -> tuple[EigenReport, EigenReport]:
    """Both principal eigenvalues of K phi = lam W diag(m eps^(q-2)) phi.

    Requires int m < 0 and m positive somewhere; otherwise two principal
    eigenvalues are not guaranteed and DomainError is raised.
    """
    grid = m.grid
    w = grid.quad_weights
    im = integrate(m)
    if im >= 0.0:
        raise DomainError(f"need int m < 0, got {im:.3g}")
    if float(np.max(m.values)) <= 0.0:
        raise DomainError("need m > 0 somewhere")
    if epsilon <= 0.0:
        raise DomainError("need epsilon > 0 for the regularized weight")

    K = params.operator().weighted
    weight = m.values * epsilon ** (params.q - 2.0)
    Mdiag = w * weight

    # zero eigenvalue: constants, exact
    phi0 = _weighted_l2_normalize(np.ones(grid.node_count), w)
    zero = EigenReport(eigenvalue=0.0, eigenfunction=ScalarField(grid, phi0),
                       residual_norm=0.0, positive_eigenfunction=True,
                       c0_norm=float(np.max(np.abs(phi0))))

    def mu1(lam: float) -> float:
        A = (K - sp.diags(lam * Mdiag)).tocsr()
        return smallest_eig(A, w, method=method)[0]

    # mu1(0) = 0 with mu1'(0) = -int(m) eps^(q-2)/|Omega| > 0; find the
    # positive root by bracketing the sign change of the concave curve
    scale = 1.0 / max(float(np.max(np.abs(weight))), 1e-300)
    lo = None
    t = scale
    for _ in range(200):
        if mu1(t) > 0.0:
            lo = t
            break
        t *= 0.5
    if lo is None:
        raise DomainError("could not locate the positive principal eigenvalue")
    hi = lo
    for _ in range(200):
        hi *= 2.0
        if mu1(hi) < 0.0:
            break
    else:
        raise DomainError("positive principal eigenvalue out of numeric range")
    lam_eps = float(scipy.optimize.brentq(mu1, lo, hi, xtol=1e-300, rtol=1e-14,
                                          maxiter=300))

    A = (K - sp.diags(lam_eps * Mdiag)).tocsr()
    _, phi = smallest_eig(A, w, method=method)
    phi = _weighted_l2_normalize(phi, w)
    res = float(np.linalg.norm(K @ phi - lam_eps * (Mdiag * phi)))
    positive = bool(np.min(phi) * np.max(phi) > 0.0)
    pos_rep = EigenReport(eigenvalue=lam_eps, eigenfunction=ScalarField(grid, phi),
                          residual_norm=res, positive_eigenfunction=positive,
                          c0_norm=float(np.max(np.abs(phi))))
    return zero, pos_rep


def principal_eig_dense_oracle(m: ScalarField, epsilon: float,
                               params: ProblemParams) -> float:
    """Dense generalized eigensolve on (K, M); the smallest positive real
    eigenvalue with a sign-definite eigenvector.  Test oracle for n <= 512."""
    grid = m.grid
    if grid.node_count > DENSE_CUTOFF + 1:
        raise DomainError("dense oracle limited to n <= 512")
    w = grid.quad_weights
    K = np.asarray(params.operator().weighted.todense())
    Mdiag = w * m.values * epsilon ** (params.q - 2.0)
    vals, vecs = scipy.linalg.eig(K, np.diag(Mdiag))
    # the exact zero eigenvalue (constants) shows up as numeric noise of size
    # ~ eps * |K| / |M|; exclude everything at that scale
    noise = 1e-9 * float(np.max(np.abs(K))) / float(np.max(np.abs(Mdiag)))
    best = math.inf
    for i, lam in enumerate(vals):
        if not np.isfinite(lam):
            continue
        if abs(lam.imag) > 1e-8 * max(1.0, abs(lam.real)):
            continue
        lr = float(lam.real)
        if lr <= noise:
            continue
        v = np.real(vecs[:, i])
        if np.min(v) * np.max(v) > 0.0 and lr < best:
            best = lr
    if not math.isfinite(best):
        raise DomainError("dense oracle found no positive principal eigenvalue")
    return best


def lambda_epsilon_curve(params: ProblemParams,
                         eps_list: list[float],
                         method: str = "auto") -> list[tuple[float, float]]:
    """lam_eps for each epsilon with m = b - epsilon, ordered as given."""
    ib = integrate(params.b)
    if ib > 0.0:
        raise DomainError(f"need int b <= 0, got {ib:.3g}")
    out = []
    for eps in eps_list:
        m_vals = params.b.values - eps
        if float(np.max(m_vals)) <= 0.0:
            raise DomainError(f"b - eps <= 0 everywhere for eps = {eps}")
        m = ScalarField(params.grid, m_vals)
        _, pos = principal_eigs_weighted(m, eps, params, method=method)
        out.append((float(eps), pos.eigenvalue))
    return out


DEAD_CORE_RTOL = 1e-8


def gamma1(u: ScalarField, params: ProblemParams,
           allow_clamp: bool = False, method: str = "auto") -> EigenReport:
    """Smallest eigenvalue of the linearization at u (Neumann conditions).

    For epsilon = 0 the weight u^(q-2) is singular on dead cores; inputs with
    u ~ 0 on nodes carrying b != 0 raise SingularLinearizationError unless
    allow_clamp=True accepts the clamped weight.
    """
    grid = params.grid
    w = grid.quad_weights
    if params.epsilon == 0.0 and not allow_clamp:
        floor = DEAD_CORE_RTOL * max(u.sup_norm, 1e-300)
        dead = (np.abs(u.values) < floor) & (params.b.values != 0.0)
        if bool(np.any(dead)):
            raise SingularLinearizationError(
                "dead-core input: |u| ~ 0 where b != 0; pass allow_clamp=True "
                "to accept the clamped weight"
            )
    c = linearization_weight(u.values, params, clamp=True)
    A = (params.operator().weighted - sp.diags(w * c)).tocsr()
    val, phi = smallest_eig(A, w, method=method)
    phi = _weighted_l2_normalize(phi, w)
    res = float(np.linalg.norm(A @ phi - val * (w * phi)))
    return EigenReport(eigenvalue=val, eigenfunction=ScalarField(grid, phi),
                       residual_norm=res,
                       positive_eigenfunction=bool(np.min(phi) * np.max(phi) > 0.0),
                       c0_norm=float(np.max(np.abs(phi))))


def stability_label(g1: float) -> str:
    if g1 > 0.0:
        return "asymptotically_stable"
    if g1 == 0.0:
        return "weakly_stable"
    return "unstable"
