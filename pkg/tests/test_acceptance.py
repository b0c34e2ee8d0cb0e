"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  Everything is 1D at n <= 257 and desk scale.
"""

import json
import math

import numpy as np
import pytest
import scipy.linalg

from nehariloop import (
    ProblemParams,
    build_grid,
    cstar,
    gamma1,
    ground_state,
    integrate,
    laplacian_neumann,
    nehari_lambda_sweep,
    nehari_minimize,
    newton_solve,
    newton_sweep_finds_solution,
    nonexistence_lambda_bar,
    principal_eig_dense_oracle,
    principal_eigs_weighted,
    scaling_fit,
    solvability_identity,
    depart_from_lambda_eps,
)
from nehariloop.cli import main
from nehariloop.continuation import _corrector
from nehariloop.mesh import CoeffSpec, CoeffTerm, ScalarField, sample_coefficient
from nehariloop.solve import _start_stream
from tests.conftest import LOOP_EPS_LIST, LOOP_SETTINGS, P, Q


def _report(num: int, text: str) -> None:
    print(f"\nACCEPTANCE {num} PASS: {text}")


def test_acceptance_1_operator_suite():
    max_row = 0.0
    errs = []
    for n in (65, 129, 257):
        g = build_grid(1, n, [0.0, 1.0])
        K = laplacian_neumann(g).weighted
        row = float(np.max(np.abs(np.asarray(K.sum(axis=1)).ravel())))
        assert row <= 1e-14 * float(np.max(np.abs(K.data)))
        max_row = max(max_row, row)
        vals = scipy.linalg.eigh(np.asarray(K.todense()),
                                 np.diag(g.quad_weights), eigvals_only=True)
        errs.append(abs(np.sort(vals)[1] - math.pi**2))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    for order in orders:
        assert abs(order - 2.0) <= 0.2
    _report(1, f"row sums <= 1e-14*max|K| (max {max_row:.1e}); "
               f"second Neumann eigenvalue orders {orders[0]:.3f}, {orders[1]:.3f}")


def test_acceptance_2_constant_coefficient_oracle(const_params):
    for lam in (0.01, 0.1):
        pr = const_params(lam)
        c = lam ** (1.0 / (P - Q))
        rep = newton_solve(pr.grid.field(0.9 * c), pr, tol=1e-12)
        assert rep.converged and rep.final_residual_norm <= 1e-12
        assert np.max(np.abs(rep.u.values - c)) <= 1e-12
        g1 = gamma1(rep.u, pr).eigenvalue
        exact = (P - Q) * lam ** ((P - 2.0) / (P - Q))
        assert abs(g1 - exact) <= 1e-8 * exact
        assert rep.nehari_class.value == "Nplus"
        assert solvability_identity(rep.u, pr) <= 1e-12
    _report(2, "u = lam^0.4 recovered at residual <= 1e-12; gamma1 = 2.5 lam^0.8 "
               "within 1e-8; class N+; identity <= 1e-12 (lam in {0.01, 0.1})")


def test_acceptance_3_scaling_laws(grid201):
    # route 1: int a < 0 <= int b, exponent 1/(p-q), profile -> c*
    aspec = CoeffSpec.of(CoeffTerm(kind="bump", center=0.5, width=0.15, height=1.0),
                         CoeffTerm(kind="constant", value=-0.5))
    bspec = CoeffSpec.of(CoeffTerm(kind="cosine", k=1, amplitude=1.0),
                         CoeffTerm(kind="constant", value=0.25))
    a, ia = sample_coefficient(aspec, grid201)
    b, ib = sample_coefficient(bspec, grid201)
    assert ia < 0.0 <= ib
    pr = ProblemParams(p=P, q=Q, lam=1e-2, epsilon=0.0, a=a, b=b)
    cs = cstar(pr)
    lams = list(np.geomspace(1e-2, 1e-4, 9))
    reps = nehari_lambda_sweep(pr, lams, "plus", 1.0 / (P - Q), rng_seed=0)
    fit = scaling_fit([(l, r.u) for l, r in zip(lams, reps)],
                      "convex_pmq", P, Q, reference=cs)
    expo1 = 1.0 / (P - Q)
    assert abs(fit.exponent - expo1) <= 0.05 * expo1
    assert fit.profile_error <= 0.02 * cs

    # route 2: int b < 0, exponent 1/(2-q), profile -> ground state w0
    bspec2 = CoeffSpec.of(CoeffTerm(kind="cosine", k=1, amplitude=50.0),
                          CoeffTerm(kind="constant", value=-12.5))
    b2, ib2 = sample_coefficient(bspec2, grid201)
    assert ib2 < 0.0
    pr2 = ProblemParams(p=P, q=Q, lam=0.2, epsilon=0.0,
                        a=grid201.field(-1.0), b=b2)
    w0 = ground_state(pr2, "pure_b", rng_seed=0).u
    lams2 = list(np.geomspace(0.2, 2e-3, 9))
    reps2 = nehari_lambda_sweep(pr2, lams2, "plus", 1.0 / (2.0 - Q),
                                rng_seed=0, newton_tol=1e-13)
    fit2 = scaling_fit([(l, r.u) for l, r in zip(lams2, reps2)],
                       "concave_2mq", P, Q, reference=w0)
    expo2 = 1.0 / (2.0 - Q)
    assert abs(fit2.exponent - expo2) <= 0.05 * expo2
    assert all(x > y for x, y in zip(fit2.profile_errors, fit2.profile_errors[1:]))
    _report(3, f"exponents {fit.exponent:.5f} -> 1/(p-q) and {fit2.exponent:.5f} "
               f"-> 1/(2-q); c* profile error {fit.profile_error / cs:.2e} <= 2%; "
               f"w0 profile distances strictly decreasing")


def test_acceptance_4_two_solution_multiplicity(loop_params):
    lam = 0.02
    pr = loop_params(lam)
    assert integrate(pr.a) < 0.0 and integrate(pr.b) <= 0.0
    u1 = nehari_minimize(pr, "plus", rng_seed=0)
    u2 = nehari_minimize(pr, "minus", rng_seed=0)
    assert u1.energies.I < 0.0 and u1.nehari_class.value == "Nplus"
    assert u2.energies.I > 0.0 and u2.nehari_class.value == "Nminus"
    assert np.max(np.abs(u1.u.values - u2.u.values)) > 0.1
    g2 = gamma1(u2.u, pr).eigenvalue
    assert g2 < 0.0
    _report(4, f"distinct u1 (I={u1.energies.I:.2e} < 0, N+) and "
               f"u2 (I={u2.energies.I:.2e} > 0, N-, gamma1={g2:.3f} < 0)")


def test_acceptance_5_regularized_bifurcation(loop_params):
    eps = 0.2
    pr = loop_params(0.0, epsilon=eps)
    m = ScalarField(pr.grid, pr.b_eps_values())
    _, eig = principal_eigs_weighted(m, eps, pr)
    oracle = principal_eig_dense_oracle(m, eps, pr)
    assert abs(eig.eigenvalue - oracle) <= 1e-8 * oracle

    # slope law by Richardson extrapolation of corrector solves
    ia = integrate(pr.a)
    im = integrate(m)
    slope_exact = -eps ** (2.0 - Q) * ia / im
    w = pr.grid.quad_weights
    ones = np.ones(pr.grid.node_count)
    slopes = []
    for s in (0.2, 0.1, 0.05):
        got = _corrector(pr, s * ones, slope_exact * s ** (P - 2.0),
                         w / pr.grid.measure, 0.0, s, 1e-11, 30)
        assert got is not None
        u_, lam_, _, _ = got
        s_meas = float(w @ u_) / pr.grid.measure
        slopes.append(lam_ / s_meas ** (P - 2.0))
    extrap = slopes[-1] + (slopes[-1] - slopes[-2])
    assert abs(extrap - slope_exact) <= 0.05 * abs(slope_exact)

    start = depart_from_lambda_eps(pr, LOOP_SETTINGS, eig=eig)
    assert abs(start.lam - eig.eigenvalue) <= 1e-6
    _report(5, f"lam_eps = {eig.eigenvalue:.8f} matches dense oracle to "
               f"{abs(eig.eigenvalue - oracle) / oracle:.1e}; slope law within "
               f"{abs(extrap - slope_exact) / abs(slope_exact):.1%}; departure "
               f"lands {abs(start.lam - eig.eigenvalue):.1e} from lam_eps")


def test_acceptance_6_loop_continuum(loop_run):
    branches, diags = loop_run
    assert [b.epsilon for b in branches] == LOOP_EPS_LIST
    for branch in branches:
        first, last = branch.points[0], branch.points[-1]
        assert first.event == "start" and abs(first.lam) <= 1e-6
        assert first.sup_norm <= 1e-3
        assert last.event == "end"
        assert branch.closed_loop_gap is not None
        assert branch.closed_loop_gap <= 2.0 * LOOP_SETTINGS.ds_max
    lam_eps = diags.lambda_eps
    assert all(x > y for x, y in zip(lam_eps, lam_eps[1:]))
    crossings = diags.crossing_norms
    assert all(c is not None for c in crossings)
    delta = 0.5       # fixed positive floor for the lam = 0 crossing norms
    assert min(crossings) >= delta
    assert all(x > y for x, y in zip(diags.hausdorff, diags.hausdorff[1:]))
    _report(6, f"loops close with gaps {[f'{b.closed_loop_gap:.3f}' for b in branches]} "
               f"<= 2*ds_max; lam_eps {[f'{v:.3f}' for v in lam_eps]} decreasing; "
               f"crossing norms >= {delta}; Hausdorff "
               f"{[f'{h:.2f}' for h in diags.hausdorff]} decreasing")


def test_acceptance_7_nonexistence_consistency(grid201):
    # Part 1: lam = 1.1 * lam_bar, 50-start sweep finds nothing
    aspec = CoeffSpec.of(CoeffTerm(kind="bump", center=0.5, width=0.2, height=1.0))
    a, _ = sample_coefficient(aspec, grid201)
    pr = ProblemParams(p=P, q=Q, lam=1.0, epsilon=0.1, a=a, b=grid201.field(1.0))
    lam_bar = nonexistence_lambda_bar(pr, (0.1, 0.9), 0.5)
    probe = pr.with_lambda(1.1 * lam_bar)
    found = newton_sweep_finds_solution(probe, 50, rng_seed=0)
    assert found is None

    # Part 2: b >= 0, int a >= 0, lam > 0: every nontrivial non-negative
    # candidate violates the solvability identity with a positive value
    pr2 = ProblemParams(p=P, q=Q, lam=0.5, epsilon=0.0, a=a, b=grid201.field(1.0))
    assert integrate(pr2.a) >= 0.0
    rng = np.random.default_rng(1)
    stream = _start_stream(pr2, rng)
    candidates = []
    for _ in range(50):
        v = next(stream)
        if np.max(v) > 0.0:
            candidates.append(ScalarField(grid201, v / np.max(v)))
        rep = newton_solve(ScalarField(grid201, v), pr2, tol=1e-9,
                           max_iter=30, strict=False)
        u = ScalarField(grid201, np.abs(rep.u.values))
        if u.sup_norm > 1e-8:
            candidates.append(u)
    assert len(candidates) >= 50
    values = [solvability_identity(c, pr2) for c in candidates]
    assert min(values) > 0.0
    _report(7, f"50-start sweep at lam = 1.1*lam_bar = {1.1 * lam_bar:.1f} found "
               f"no solution; {len(candidates)} candidates all violate the "
               f"identity (min value {min(values):.2e} > 0)")


LOOP_TOML = """
[grid]
dim = 1
n = 101
endpoints = [0.0, 1.0]

[coefficients]
a = [{kind = "bump", center = 0.3, width = 0.1, height = 2.0}, {kind = "constant", value = -0.4}]
b = [{kind = "bump", center = 0.0, width = 0.25, height = 1.0}, {kind = "constant", value = -0.25}]

[exponents]
p = 4.0
q = 1.5

[loop]
eps_list = [0.2, 0.1]
ds_init = 5e-3
ds_min = 1e-9
ds_max = 0.2
newton_tol = 1e-9
max_steps = 2500

[output]
seed = 99
"""


def test_acceptance_8_determinism(tmp_path):
    cfg = tmp_path / "loop.toml"
    cfg.write_text(LOOP_TOML)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["loop", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["loop", "--config", str(cfg), "--out", str(out2)]) == 0
    csvs = sorted(p.name for p in out1.glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    _report(8, f"cmd_loop rerun produced byte-identical CSVs: {csvs}")
