import math

import numpy as np
import pytest

from nehariloop import (
    ProblemParams,
    build_grid,
    energies,
    gamma1,
    ground_state,
    lambda_epsilon_curve,
    nehari_minimize,
    principal_eig_dense_oracle,
    principal_eigs_weighted,
    stability_label,
)
from nehariloop.errors import DomainError, SingularLinearizationError
from nehariloop.mesh import CoeffSpec, CoeffTerm, ScalarField, sample_coefficient
from tests.conftest import P, Q, make_bcos_coeffs


@pytest.fixture(scope="module")
def mfield(grid201):
    spec = CoeffSpec.of(CoeffTerm(kind="cosine", k=1, amplitude=1.0),
                        CoeffTerm(kind="constant", value=-0.25))
    m, _ = sample_coefficient(spec, grid201)
    return m


def test_zero_eigenvalue_exact(mfield, const_params):
    zero, _ = principal_eigs_weighted(mfield, 0.1, const_params(0.1))
    assert zero.eigenvalue == 0.0
    assert np.ptp(zero.eigenfunction.values) == 0.0
    assert zero.residual_norm == 0.0
    assert zero.positive_eigenfunction


def test_positive_principal_matches_dense_oracle(mfield, const_params):
    pr = const_params(0.1)
    _, pos = principal_eigs_weighted(mfield, 0.1, pr)
    oracle = principal_eig_dense_oracle(mfield, 0.1, pr)
    assert pos.eigenvalue == pytest.approx(oracle, rel=1e-8)
    assert pos.positive_eigenfunction
    # weighted L2 normalization
    w = pr.grid.quad_weights
    assert w @ pos.eigenfunction.values**2 == pytest.approx(1.0, rel=1e-12)


def test_weight_doubling_halves_eigenvalue(mfield, const_params):
    pr = const_params(0.1)
    _, pos = principal_eigs_weighted(mfield, 0.1, pr)
    m2 = ScalarField(mfield.grid, 2.0 * mfield.values)
    _, pos2 = principal_eigs_weighted(m2, 0.1, pr)
    assert 2.0 * pos2.eigenvalue == pytest.approx(pos.eigenvalue, rel=1e-12)


def test_eigen_residual_invariant(mfield, const_params):
    pr = const_params(0.1)
    _, pos = principal_eigs_weighted(mfield, 0.1, pr)
    K = pr.operator().weighted
    phi = pos.eigenfunction.values
    ref = float(np.linalg.norm(K @ phi))
    assert pos.residual_norm <= 1e-8 * ref


def test_domain_error_on_bad_weight(const_params):
    pr = const_params(0.1)
    with pytest.raises(DomainError):
        principal_eigs_weighted(pr.grid.field(-1.0), 0.1, pr)   # m < 0
    with pytest.raises(DomainError):
        principal_eigs_weighted(pr.grid.field(1.0), 0.1, pr)    # int m > 0


def test_lambda_epsilon_curve_decreasing(grid201):
    bspec = CoeffSpec.of(CoeffTerm(kind="cosine", k=1, amplitude=1.0))
    b, ib = sample_coefficient(bspec, grid201)
    assert abs(ib) <= 1e-12
    pr = ProblemParams(p=P, q=Q, lam=1.0, epsilon=0.0,
                       a=grid201.field(-1.0), b=b)
    curve = lambda_epsilon_curve(pr, [0.4, 0.2, 0.1, 0.05])
    vals = [v for _, v in curve]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    for eps, lam_eps in curve:
        oracle = principal_eig_dense_oracle(
            ScalarField(grid201, b.values - eps), eps, pr)
        assert lam_eps == pytest.approx(oracle, rel=1e-8)


def test_lambda_epsilon_curve_domain_error(grid201):
    bspec = CoeffSpec.of(CoeffTerm(kind="cosine", k=1, amplitude=1.0))
    b, _ = sample_coefficient(bspec, grid201)
    pr = ProblemParams(p=P, q=Q, lam=1.0, epsilon=0.0,
                       a=grid201.field(-1.0), b=b)
    with pytest.raises(DomainError):
        lambda_epsilon_curve(pr, [1.5])     # b - eps <= 0 everywhere


def test_lambda_epsilon_refinement_consistency():
    vals = []
    for n in (101, 201):
        g = build_grid(1, n, [0.0, 1.0])
        a, b = make_bcos_coeffs(g)
        pr = ProblemParams(p=P, q=Q, lam=1.0, epsilon=0.0, a=a, b=b)
        vals.append(lambda_epsilon_curve(pr, [0.1])[0][1])
    # richardson: error at n=101 is about 4x the error at n=201
    assert abs(vals[0] - vals[1]) <= 0.01 * vals[1]


def test_gamma1_constant_closed_form(const_params):
    lam = 0.01
    pr = const_params(lam)
    c = lam ** (1.0 / (P - Q))
    rep = gamma1(pr.grid.field(c), pr)
    exact = (P - Q) * lam ** ((P - 2.0) / (P - Q))
    assert rep.eigenvalue == pytest.approx(exact, rel=1e-8)
    assert exact == pytest.approx(2.5 * 0.01**0.8, rel=1e-12)
    assert rep.positive_eigenfunction
    assert stability_label(rep.eigenvalue) == "asymptotically_stable"


def test_gamma1_nminus_unstable(loop_params):
    pr = loop_params(0.02)
    rep = nehari_minimize(pr, "minus", rng_seed=0)
    g1 = gamma1(rep.u, pr)
    assert g1.eigenvalue < 0.0
    # quadratic-form cross-check on the solution itself:
    # (2-q) E - (p-q) A < 0 on the minus half of the manifold
    en = rep.energies
    assert (2.0 - Q) * en.E - (P - Q) * en.A < 0.0


def test_gamma1_u1_stable_for_inta_neg_intb_pos(grid201):
    # int a < 0 < int b: the small plus-branch solution is asymptotically stable
    aspec = CoeffSpec.of(CoeffTerm(kind="bump", center=0.5, width=0.15, height=1.0),
                         CoeffTerm(kind="constant", value=-0.5))
    bspec = CoeffSpec.of(CoeffTerm(kind="cosine", k=1, amplitude=1.0),
                         CoeffTerm(kind="constant", value=0.25))
    a, ia = sample_coefficient(aspec, grid201)
    b, ib = sample_coefficient(bspec, grid201)
    assert ia < 0.0 < ib
    pr = ProblemParams(p=P, q=Q, lam=1e-3, epsilon=0.0, a=a, b=b)
    rep = nehari_minimize(pr, "plus", rng_seed=0)
    g1 = gamma1(rep.u, pr)
    assert g1.eigenvalue > 0.0


def test_gamma1_rayleigh_consistency(const_params):
    lam = 0.05
    pr = const_params(lam)
    c = lam ** (1.0 / (P - Q))
    rep = gamma1(pr.grid.field(c), pr)
    from nehariloop.functional import linearization_weight

    w = pr.grid.quad_weights
    cdiag = linearization_weight(pr.grid.field(c).values, pr)
    K = pr.operator().weighted
    rng = np.random.default_rng(0)
    n = pr.grid.node_count
    rayleighs = []
    for _ in range(100):
        phi = rng.standard_normal(n)
        num = phi @ (K @ phi) - w * cdiag @ phi**2
        rayleighs.append(num / (w @ phi**2))
    assert min(rayleighs) >= rep.eigenvalue - 1e-8


def test_gamma1_dead_core_raises(bcos_params):
    # a field vanishing identically on nodes carrying b != 0 is rejected
    pr = bcos_params(1.0)
    x = pr.grid.axes[0]
    core = np.maximum(np.cos(2 * np.pi * x) - 0.25, 0.0)
    with pytest.raises(SingularLinearizationError):
        gamma1(ScalarField(pr.grid, core), pr)
    rep = gamma1(ScalarField(pr.grid, core), pr, allow_clamp=True)
    assert math.isfinite(rep.eigenvalue)
