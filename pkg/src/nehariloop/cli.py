"""Command-line interface: solve | branch | loop | eigs | verify.

Exit codes are fixed for scripting: 0 ok, 2 configuration error, 3 solver
failure, 4 verification failure.  All file writes happen once, at the end of
a command; identical config + seed produces byte-identical CSVs (timestamps
live only in the JSON `generated_at` metadata field).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import checks
from .config import RunConfig, hypothesis_audit, load_config
from .continuation import (
    Branch,
    ContinuationSettings,
    branch_csv_text,
    depart_from_lambda_eps,
    depart_from_zero,
    epsilon_homotopy,
    scaling_fit,
    trace_branch,
)
from .errors import (
    ConfigError,
    DepartureFailedError,
    DomainError,
    NehariLoopError,
    NoAdmissibleDirectionError,
    NotConvergedError,
    SingularLinearizationError,
    StepCollapseError,
)
from .functional import ProblemParams, cstar, residual
from .mesh import CoeffSpec, ScalarField, integrate, sample_coefficient
from .solve import nehari_lambda_sweep, nehari_minimize, newton_solve
from .spectral import gamma1, lambda_epsilon_curve, principal_eigs_weighted

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4


def _metadata(cfg: RunConfig, seed: int) -> dict:
    return {
        "generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "seed": seed,
        "p": cfg.p,
        "q": cfg.q,
    }


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_all(outdir: Path, files: dict[str, str]) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (outdir / name).write_text(content)


def _field_csv(field: ScalarField) -> str:
    grid = field.grid
    pts = grid.coords()
    lines = ["x,u" if grid.dim == 1 else "x,y,u"]
    for row, val in zip(pts, field.values):
        coords = ",".join(repr(float(c)) for c in row)
        lines.append(f"{coords},{repr(float(val))}")
    return "\n".join(lines) + "\n"


def _problem(cfg: RunConfig, lam: float, eps: float) -> tuple[ProblemParams, dict]:
    grid, a, b = cfg.materialize()
    params = ProblemParams(p=cfg.p, q=cfg.q, lam=lam, epsilon=eps, a=a, b=b)
    return params, hypothesis_audit(grid, a, b)


def _solution_entry(name: str, rep, params: ProblemParams, csv_name: str | None) -> dict:
    g1 = None
    g1_reason = None
    try:
        g1 = gamma1(rep.u, params).eigenvalue
    except SingularLinearizationError as exc:
        g1_reason = str(exc)
    except NehariLoopError as exc:
        g1_reason = str(exc)
    return {
        "name": name,
        "converged": rep.converged,
        "iterations": rep.iterations,
        "final_residual_norm": rep.final_residual_norm,
        "energies": {"E": rep.energies.E, "A": rep.energies.A,
                     "B": rep.energies.B, "I": rep.energies.I},
        "nehari_class": rep.nehari_class.value,
        "gamma1": g1,
        "gamma1_reason": g1_reason,
        "sup_norm": rep.u.sup_norm,
        "l2_norm": rep.u.l2_norm(),
        "min_value": float(np.min(rep.u.values)),
        "solvability_identity": checks.solvability_identity(rep.u, params),
        "field_csv": csv_name,
    }


def _settings_from(block: dict) -> ContinuationSettings:
    kw = {}
    for key in ("ds_init", "ds_min", "ds_max", "newton_tol", "max_steps",
                "direction", "corrector_max_iter", "lambda_bound",
                "norm_bound", "record_gamma1"):
        if key in block:
            kw[key] = block[key]
    return ContinuationSettings(**kw)


def _settings_dict(st: ContinuationSettings) -> dict:
    return {
        "ds_init": st.ds_init, "ds_min": st.ds_min, "ds_max": st.ds_max,
        "newton_tol": st.newton_tol, "max_steps": st.max_steps,
        "direction": st.direction,
    }


def _grid_dict(cfg: RunConfig) -> dict:
    return {"dim": cfg.dim, "n": cfg.n, "endpoints": cfg.endpoints}


def cmd_solve(cfg: RunConfig, outdir: Path, seed: int) -> int:
    block = cfg.solve
    lam = float(block.get("lambda", 0.0))
    eps = float(block.get("epsilon", 0.0))
    tol = float(block.get("newton_tol", 1e-11))
    n_starts = int(block.get("n_starts", 12))
    params, audit = _problem(cfg, lam, eps)

    files: dict[str, str] = {}
    solutions = []
    failures = []
    k = 0

    requested = block.get("branches", "auto")
    signs = []
    if requested == "auto":
        if lam > 0.0 and audit["omega_b_plus_nonempty"]:
            signs.append("plus")
        if lam > 0.0 and audit["omega_a_plus_nonempty"]:
            signs.append("minus")
    else:
        signs = list(requested)
    for sign in signs:
        try:
            rep = nehari_minimize(params, sign, n_starts=n_starts,
                                  rng_seed=seed, newton_tol=tol)
        except (NotConvergedError, NoAdmissibleDirectionError, DomainError) as exc:
            failures.append({"name": f"nehari_{sign}", "error": str(exc)})
            continue
        csv_name = f"u_{k}.csv"
        files[csv_name] = _field_csv(rep.u)
        solutions.append(_solution_entry(f"nehari_{sign}", rep, params, csv_name))
        k += 1

    for idx, start_terms in enumerate(block.get("starts", [])):
        u0, _ = sample_coefficient(CoeffSpec.from_records(start_terms), params.grid)
        rep = newton_solve(u0, params, tol=tol,
                           max_iter=int(block.get("max_iter", 80)), strict=False)
        if rep.converged and rep.u.sup_norm > 1e-8:
            csv_name = f"u_{k}.csv"
            files[csv_name] = _field_csv(rep.u)
            solutions.append(_solution_entry(f"newton_{idx}", rep, params, csv_name))
            k += 1
        else:
            failures.append({"name": f"newton_{idx}",
                             "error": "not converged or trivial",
                             "final_residual_norm": rep.final_residual_norm})

    report = {
        "metadata": _metadata(cfg, seed),
        "lambda": lam,
        "epsilon": eps,
        "audit": audit,
        "solutions": solutions,
        "failures": failures,
    }
    files["solutions.json"] = _json_dump(report)
    _write_all(outdir, files)
    if signs and not solutions and failures:
        return EXIT_SOLVER
    return EXIT_OK


def _branch_csv_name(i: int, eps: float) -> str:
    return f"branch_{i:02d}_eps_{eps:g}.csv"


def _branch_summary(branch: Branch, csv_name: str) -> dict:
    lams = [p.lam for p in branch.points]
    return {
        "epsilon": branch.epsilon,
        "csv": csv_name,
        "n_points": len(branch.points),
        "origin": branch.origin,
        "closed_loop_gap": branch.closed_loop_gap,
        "lambda_min": min(lams),
        "lambda_max": max(lams),
        "events": [
            {"index": i, "event": p.event, "lambda": p.lam, "sup_norm": p.sup_norm}
            for i, p in enumerate(branch.points) if p.event
        ],
    }


def cmd_branch(cfg: RunConfig, outdir: Path, seed: int) -> int:
    block = cfg.branch
    if "epsilon" not in block:
        raise ConfigError("missing [branch] key 'epsilon'")
    eps = float(block["epsilon"])
    origin = block.get("origin", "zero")
    settings = _settings_from(block)
    params, audit = _problem(cfg, 0.0, eps)

    m = ScalarField(params.grid, params.b_eps_values())
    _, eig = principal_eigs_weighted(m, eps, params)
    try:
        if origin == "zero":
            start = depart_from_zero(params, settings)
            branch = trace_branch(start, params, settings,
                                  lambda_eps=eig.eigenvalue, origin="from_zero")
        elif origin == "lambda_eps":
            start = depart_from_lambda_eps(params, settings, eig=eig)
            branch = trace_branch(start, params, settings,
                                  lambda_eps=eig.eigenvalue,
                                  origin="from_lambda_eps")
        else:
            raise ConfigError(f"unknown branch origin {origin!r}")
    except (DepartureFailedError, StepCollapseError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    csv_name = _branch_csv_name(0, eps)
    files = {csv_name: branch_csv_text(branch)}
    sidecar = {
        "metadata": _metadata(cfg, seed),
        "epsilon": eps,
        "lambda_eps": eig.eigenvalue,
        "settings": _settings_dict(settings),
        "grid": _grid_dict(cfg),
        "audit": audit,
        "branch": _branch_summary(branch, csv_name),
    }
    files[csv_name.replace(".csv", ".json")] = _json_dump(sidecar)
    _write_all(outdir, files)
    return EXIT_OK


def cmd_loop(cfg: RunConfig, outdir: Path, seed: int) -> int:
    block = cfg.loop
    if "eps_list" not in block:
        raise ConfigError("missing [loop] key 'eps_list'")
    eps_list = [float(v) for v in block["eps_list"]]
    settings = _settings_from(block)
    params, audit = _problem(cfg, 0.0, 1.0)

    try:
        branches, diags = epsilon_homotopy(params, eps_list, settings)
    except DepartureFailedError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    files: dict[str, str] = {}
    summaries = []
    for i, branch in enumerate(branches):
        csv_name = _branch_csv_name(i, branch.epsilon)
        files[csv_name] = branch_csv_text(branch)
        summaries.append(_branch_summary(branch, csv_name))

    verdicts = []
    lam_eps = diags.lambda_eps
    verdicts.append({
        "name": "lambda_eps_decreasing",
        "passed": all(x > y for x, y in zip(lam_eps, lam_eps[1:])),
        "values": lam_eps,
    })
    crossings = [c for c in diags.crossing_norms if c is not None]
    verdicts.append({
        "name": "lambda_zero_crossing_norms_bounded_below",
        "passed": len(crossings) == len(diags.crossing_norms)
        and (min(crossings) > 0.0 if crossings else False),
        "values": diags.crossing_norms,
    })
    verdicts.append({
        "name": "hausdorff_decreasing",
        "passed": all(x > y for x, y in zip(diags.hausdorff, diags.hausdorff[1:]))
        if len(diags.hausdorff) > 1 else True,
        "values": diags.hausdorff,
    })
    gaps = [g for g in diags.loop_gaps if g is not None]
    verdicts.append({
        "name": "closed_loop_gap_within_2_ds_max",
        "passed": bool(gaps) and max(gaps) <= 2.0 * settings.ds_max,
        "values": diags.loop_gaps,
    })

    report = {
        "metadata": _metadata(cfg, seed),
        "eps_list": eps_list,
        "settings": _settings_dict(settings),
        "grid": _grid_dict(cfg),
        "audit": audit,
        "lambda_eps": diags.lambda_eps,
        "hausdorff": diags.hausdorff,
        "crossing_norms": diags.crossing_norms,
        "loop_gaps": diags.loop_gaps,
        "branches": summaries,
        "verdicts": verdicts,
    }
    files["loop_report.json"] = _json_dump(report)
    _write_all(outdir, files)
    return EXIT_OK


def cmd_eigs(cfg: RunConfig, outdir: Path, seed: int) -> int:
    block = cfg.eigs
    if "eps_list" not in block:
        raise ConfigError("missing [eigs] key 'eps_list'")
    eps_list = [float(v) for v in block["eps_list"]]
    params, audit = _problem(cfg, 0.0, 1.0)
    curve = lambda_epsilon_curve(params, eps_list)
    report = {
        "metadata": _metadata(cfg, seed),
        "audit": audit,
        "curve": [{"epsilon": e, "lambda_eps": l} for e, l in curve],
    }
    _write_all(outdir, {"eigs.json": _json_dump(report)})
    return EXIT_OK


def _gate(name: str, passed: bool, value=None, detail: str = "") -> dict:
    return {"name": name, "passed": bool(passed), "value": value,
            "detail": detail}


def cmd_verify(cfg: RunConfig, outdir: Path, seed: int) -> int:
    from .mesh import build_grid, laplacian_neumann
    from .spectral import smallest_eig

    block = cfg.verify
    lam = float(block.get("lambda", cfg.solve.get("lambda", 0.1)))
    eps = float(block.get("epsilon", 0.0))
    params, audit = _problem(cfg, lam, eps)
    grid = params.grid
    gates = []

    # operator invariants (with the fault-injection hook for the row-sum gate)
    K = params.operator().weighted.copy()
    if block.get("inject_row_sum_fault", False):
        K = K.tolil()
        K[0, 1] += 1e-3 * abs(K[0, 0])
        K = K.tocsr()
    max_entry = float(np.max(np.abs(K.data)))
    row_sums = float(np.max(np.abs(np.asarray(K.sum(axis=1)).ravel())))
    gates.append(_gate("operator_row_sums", row_sums <= 1e-14 * max_entry,
                       row_sums, f"max |row sum| vs 1e-14 * {max_entry:g}"))
    asym = (K - K.T).tocoo()
    asym_max = float(np.max(np.abs(asym.data))) if asym.nnz else 0.0
    gates.append(_gate("operator_symmetry", asym_max == 0.0, asym_max))
    mu0 = smallest_eig(params.operator().weighted, grid.quad_weights)[0]
    gates.append(_gate("operator_psd", mu0 >= -1e-10, mu0))

    xs = grid.coords()[:, 0]
    lin = ScalarField(grid, 2.0 * xs + 1.0)
    exact = (grid.endpoints[0][1] ** 2 - grid.endpoints[0][0] ** 2) + grid.measure
    if grid.dim == 2:
        ylen = grid.endpoints[1][1] - grid.endpoints[1][0]
        exact = ((grid.endpoints[0][1] ** 2 - grid.endpoints[0][0] ** 2) * ylen
                 + grid.measure)
    quad_err = abs(integrate(lin) - exact)
    gates.append(_gate("quadrature_linear_exact", quad_err <= 1e-12 * abs(exact),
                       quad_err))

    # Neumann eigenvalue convergence order on the unit interval
    import scipy.linalg

    errs = []
    for n in (65, 129, 257):
        g = build_grid(1, n, [0.0, 1.0])
        op = laplacian_neumann(g)
        vals = scipy.linalg.eigh(np.asarray(op.weighted.todense()),
                                 np.diag(g.quad_weights), eigvals_only=True)
        errs.append(abs(np.sort(vals)[1] - math.pi ** 2))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    order_ok = all(abs(o - 2.0) <= 0.2 for o in orders)
    gates.append(_gate("neumann_eigenvalue_order", order_ok, orders))

    # solution screening at the configured lambda
    solutions = []
    if lam > 0.0:
        for sign, admissible in (("plus", audit["omega_b_plus_nonempty"]),
                                 ("minus", audit["omega_a_plus_nonempty"])):
            if not admissible:
                continue
            try:
                rep = nehari_minimize(params, sign, rng_seed=seed)
            except NehariLoopError:
                continue
            solutions.append((sign, rep))
    for sign, rep in solutions:
        if params.epsilon != 0.0:
            continue
        ident = checks.solvability_identity(rep.u, params)
        bound = float(np.sum(np.abs(residual(rep.u, params).values))) + 1e-12
        gates.append(_gate(f"solvability_identity_{sign}", ident <= bound,
                           ident, f"bound {bound:g}"))

    # closed-form bounds
    if "ball" in block and "epsilon0" in block:
        try:
            lam_bar = checks.nonexistence_lambda_bar(
                params, tuple(block["ball"]), float(block["epsilon0"]))
            probe = replace(params, lam=1.1 * lam_bar,
                            epsilon=min(float(block["epsilon0"]), 0.1))
            found = checks.newton_sweep_finds_solution(
                probe, int(block.get("sweep_starts", 50)), seed)
            gates.append(_gate("nonexistence_above_lambda_bar_consistent",
                               found is None, lam_bar,
                               "randomized multistart evidence, not proof"))
        except DomainError as exc:
            gates.append(_gate("nonexistence_above_lambda_bar_consistent",
                               False, None, f"hypotheses fail: {exc}"))

    if "delta" in block and audit["int_b"] < 0.0 and audit["omega_b_plus_nonempty"]:
        lam0, reason, w_delta = checks.subsupersolution_window(
            params, float(block["delta"]), rng_seed=seed)
        if lam0 is None:
            gates.append(_gate("subsupersolution_window", True, None, reason))
        else:
            try:
                rep = nehari_minimize(params.with_lambda(lam0 / 2.0), "plus",
                                      rng_seed=seed)
                cap = (lam0 / 2.0) ** (1.0 / (2.0 - cfg.q)) * w_delta.values
                below = bool(np.all(rep.u.values <= cap + 1e-8))
                gates.append(_gate("subsupersolution_window", below, lam0,
                                   "minimizer below lambda^(1/(2-q)) w_delta"))
            except NehariLoopError as exc:
                gates.append(_gate("subsupersolution_window", False, lam0,
                                   str(exc)))

    # scaling law over a configured lambda sweep
    if "lambda_sweep" in block:
        lo, hi = (float(v) for v in block["lambda_sweep"])
        npts = int(block.get("sweep_points", 7))
        lams = list(np.geomspace(hi, lo, npts))
        ia, ib = audit["int_a"], audit["int_b"]
        route = None
        if ia > 0.0 > ib:
            route = ("minus", "convex_pmq", 1.0 / (cfg.p - cfg.q))
        elif ia < 0.0 <= ib:
            route = ("plus", "convex_pmq", 1.0 / (cfg.p - cfg.q))
        elif ib < 0.0 and audit["omega_b_plus_nonempty"]:
            route = ("plus", "concave_2mq", 1.0 / (2.0 - cfg.q))
        if route is None:
            gates.append(_gate("scaling_exponent", False, None,
                               "no scaling route for these integral signs"))
        else:
            sign, law, expected = route
            try:
                reps = nehari_lambda_sweep(params, lams, sign, expected,
                                           rng_seed=seed)
                pts = [(l, r.u) for l, r in zip(sorted(lams, reverse=True), reps)]
                reference = None
                if law == "convex_pmq":
                    reference = cstar(params)
                fit = scaling_fit(pts, law, cfg.p, cfg.q, reference=reference)
                ok = abs(fit.exponent - expected) <= 0.05 * expected
                gates.append(_gate("scaling_exponent", ok, fit.exponent,
                                   f"expected {expected:g} (law {law})"))
            except NehariLoopError as exc:
                gates.append(_gate("scaling_exponent", False, None, str(exc)))

    passed = all(g["passed"] for g in gates)
    report = {
        "metadata": _metadata(cfg, seed),
        "audit": audit,
        "gates": gates,
        "passed": passed,
    }
    _write_all(outdir, {"verify_report.json": _json_dump(report)})
    return EXIT_OK if passed else EXIT_VERIFY


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="nehariloop")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "branch", "loop", "eigs", "verify"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", required=True)
        sp.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = cfg.seed if args.seed is None else args.seed
    outdir = Path(args.out)

    dispatch = {
        "solve": cmd_solve,
        "branch": cmd_branch,
        "loop": cmd_loop,
        "eigs": cmd_eigs,
        "verify": cmd_verify,
    }
    try:
        return dispatch[args.command](cfg, outdir, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NehariLoopError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
