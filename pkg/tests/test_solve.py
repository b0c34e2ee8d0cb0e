import math

import numpy as np
import pytest

from nehariloop import (
    NehariClass,
    ProblemParams,
    build_grid,
    energies,
    ground_state,
    nehari_lambda_sweep,
    nehari_minimize,
    newton_solve,
    residual,
    solvability_identity,
)
from nehariloop.errors import (
    DivergedError,
    DomainError,
    NoAdmissibleDirectionError,
    NotConvergedError,
)
from nehariloop.mesh import ScalarField
from tests.conftest import P, Q, make_bcos_coeffs, make_loop_coeffs


def test_newton_zero_start_regularized(const_params):
    pr = const_params(0.3, epsilon=0.1)
    rep = newton_solve(pr.grid.field(0.0), pr, tol=1e-12)
    assert rep.converged and rep.iterations <= 1
    assert rep.u.sup_norm == 0.0


def test_newton_constant_oracle(const_params):
    for lam in (0.01, 0.1):
        pr = const_params(lam)
        c = lam ** (1.0 / (P - Q))
        rep = newton_solve(pr.grid.field(0.9 * c), pr, tol=1e-12)
        assert rep.converged
        assert rep.final_residual_norm <= 1e-12
        assert rep.u.values == pytest.approx(c, rel=1e-12)
        assert rep.nehari_class is NehariClass.NPLUS


def test_newton_basin_from_perturbed_start(const_params):
    lam = 0.01
    pr = const_params(lam)
    c = lam ** (1.0 / (P - Q))
    x = pr.grid.axes[0]
    u0 = ScalarField(pr.grid, c * (1.0 + 0.1 * np.cos(2 * np.pi * x)))
    rep = newton_solve(u0, pr, tol=1e-12)
    assert rep.converged
    assert np.max(np.abs(rep.u.values - c)) <= 1e-10


def test_newton_diverged_raises(const_params):
    pr = const_params(0.01)
    with pytest.raises(DivergedError):
        newton_solve(pr.grid.field(50.0), pr, tol=1e-12, max_iter=2)


def test_nehari_plus_constant_coefficients(const_params):
    lam = 0.02
    pr = const_params(lam)
    rep = nehari_minimize(pr, "plus", rng_seed=0)
    c = lam ** (1.0 / (P - Q))
    assert rep.nehari_class is NehariClass.NPLUS
    assert rep.energies.I < 0.0
    assert rep.u.values == pytest.approx(c, rel=1e-9)


def test_nehari_minus_positive_energy(loop_params):
    rep = nehari_minimize(loop_params(0.02), "minus", rng_seed=0)
    assert rep.nehari_class is NehariClass.NMINUS
    assert rep.energies.I > 0.0
    assert float(np.min(rep.u.values)) >= -1e-10 * rep.u.sup_norm


def test_nehari_minus_energy_identity(loop_params):
    # on the manifold: (1/2 - 1/p) E - lam (1/q - 1/p) B = I
    pr = loop_params(0.02)
    rep = nehari_minimize(pr, "minus", rng_seed=0)
    en = rep.energies
    lhs = (0.5 - 1.0 / P) * en.E - pr.lam * (1.0 / Q - 1.0 / P) * en.B
    assert lhs == pytest.approx(en.I, rel=1e-10)


def test_nehari_solutions_distinct(loop_params):
    pr = loop_params(0.02)
    u1 = nehari_minimize(pr, "plus", rng_seed=0)
    u2 = nehari_minimize(pr, "minus", rng_seed=0)
    assert np.max(np.abs(u1.u.values - u2.u.values)) > 0.1


def test_nehari_membership(loop_params):
    pr = loop_params(0.02)
    for sign in ("plus", "minus"):
        rep = nehari_minimize(pr, sign, rng_seed=0)
        en = rep.energies
        scale = abs(en.E) + abs(en.A) + abs(pr.lam * en.B)
        assert abs(en.E - en.A - pr.lam * en.B) <= 1e-8 * scale
        # Lemma-style cone containment: N+ in B+, N- in A+
        if sign == "plus":
            assert en.B > 0.0
        else:
            assert en.A > 0.0


def test_nehari_no_admissible_direction(grid201):
    pr = ProblemParams(p=P, q=Q, lam=0.1, epsilon=0.0,
                       a=grid201.field(-1.0), b=grid201.field(-1.0))
    with pytest.raises(NoAdmissibleDirectionError):
        nehari_minimize(pr, "plus", n_starts=6, rng_seed=0)


def test_nehari_requires_positive_lambda(const_params):
    with pytest.raises(DomainError):
        nehari_minimize(const_params(0.0).with_lambda(-0.5), "plus")


def test_solvability_identity_bound(loop_params):
    pr = loop_params(0.02)
    for sign in ("plus", "minus"):
        rep = nehari_minimize(pr, sign, rng_seed=0)
        r1 = float(np.sum(np.abs(residual(rep.u, pr).values)))
        assert solvability_identity(rep.u, pr) <= r1 + 1e-12


def test_ground_state_pure_a_domain(const_params):
    pr = const_params(0.1)
    bad = ProblemParams(p=P, q=Q, lam=0.1, epsilon=0.0,
                        a=pr.grid.field(1.0), b=pr.grid.field(1.0))
    with pytest.raises(DomainError):
        ground_state(bad, "pure_a")


def test_ground_state_pure_b_domain(grid201):
    pr = ProblemParams(p=P, q=Q, lam=0.1, epsilon=0.0,
                       a=grid201.field(-1.0), b=grid201.field(1.0))
    with pytest.raises(DomainError):
        ground_state(pr, "pure_b")        # int b > 0


def test_ground_state_pure_b_nehari_identity(bcos_params):
    rep = ground_state(bcos_params(1.0), "pure_b", rng_seed=0)
    en = rep.energies
    assert rep.u.sup_norm > 0.0
    assert float(np.min(rep.u.values)) >= -1e-10 * rep.u.sup_norm
    assert abs(en.E - en.B) <= 1e-8 * abs(en.E)


def test_ground_state_pure_a_nehari_identity(loop_params):
    rep = ground_state(loop_params(0.1), "pure_a", rng_seed=0)
    en = rep.energies
    assert abs(en.E - en.A) <= 1e-8 * abs(en.E)
    assert float(np.min(rep.u.values)) > 0.0


def test_ground_state_refinement_consistency():
    # solutions at n and 2n-1 nodes agree to O(h^2); the loop-style b has a
    # single boundary-touching positive region, so the minimizer is unambiguous
    reps = {}
    for n in (101, 201):
        g = build_grid(1, n, [0.0, 1.0])
        a, b = make_loop_coeffs(g)
        pr = ProblemParams(p=P, q=Q, lam=1.0, epsilon=0.0, a=a, b=b)
        reps[n] = ground_state(pr, "pure_b", rng_seed=0)
    coarse = reps[101].u.values
    fine = reps[201].u.values[::2]
    h = 1.0 / 100.0
    sup = np.max(np.abs(coarse))
    assert np.max(np.abs(coarse - fine)) <= 20.0 * h**2 * sup


def test_energy_upper_bound_exponent(bcos_params):
    # I(u_1) < 0 scaling like -D0 lam^(2/(2-q)) when int b < 0
    lams = list(np.geomspace(1e-1, 1e-3, 5))
    reps = nehari_lambda_sweep(bcos_params(lams[0]), lams, "plus",
                               1.0 / (2.0 - Q), rng_seed=0)
    vals = np.array([r.energies.I for r in reps])
    assert np.all(vals < 0.0)
    slope = np.polyfit(np.log(lams), np.log(-vals), 1)[0]
    expected = 2.0 / (2.0 - Q)
    assert abs(slope - expected) <= 0.1 * expected


def test_nehari_fails_above_nonexistence_bound(grid201):
    # above the nonexistence threshold every candidate is rejected: the
    # minimizer either finds no admissible direction or no converged point
    from nehariloop import nonexistence_lambda_bar
    from nehariloop.mesh import CoeffSpec, CoeffTerm, sample_coefficient

    aspec = CoeffSpec.of(CoeffTerm(kind="bump", center=0.5, width=0.2, height=1.0))
    a, _ = sample_coefficient(aspec, grid201)
    pr = ProblemParams(p=P, q=Q, lam=1.0, epsilon=0.1, a=a, b=grid201.field(1.0))
    lam_bar = nonexistence_lambda_bar(pr, (0.1, 0.9), 0.5)
    hot = pr.with_lambda(1.1 * lam_bar)
    with pytest.raises((NotConvergedError, NoAdmissibleDirectionError)):
        nehari_minimize(hot, "plus", n_starts=6, rng_seed=0)
