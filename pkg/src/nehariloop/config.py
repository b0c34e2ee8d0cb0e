"""Run configuration: TOML loading, validation, and the hypothesis audit.

A run is described by one TOML file with [grid], [coefficients], [exponents],
and per-command blocks ([solve], [branch], [loop], [eigs], [verify]); every
quantity is a dimensionless real.  The audit reports the sign structure of
the coefficients so a run's standing hypotheses are visible in every output.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .mesh import CoeffSpec, Grid, ScalarField, build_grid, integrate, sample_coefficient

__all__ = ["RunConfig", "load_config", "hypothesis_audit"]


@dataclass(frozen=True)
class RunConfig:
    dim: int
    n: int | list[int]
    endpoints: list
    a_terms: list[dict]
    b_terms: list[dict]
    p: float
    q: float
    seed: int
    solve: dict = field(default_factory=dict)
    branch: dict = field(default_factory=dict)
    loop: dict = field(default_factory=dict)
    eigs: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)

    def materialize(self) -> tuple[Grid, ScalarField, ScalarField]:
        grid = build_grid(self.dim, self.n, self.endpoints)
        a, _ = sample_coefficient(CoeffSpec.from_records(self.a_terms), grid)
        b, _ = sample_coefficient(CoeffSpec.from_records(self.b_terms), grid)
        return grid, a, b


def _require(table: dict, key: str, section: str):
    if key not in table:
        raise ConfigError(f"missing [{section}] key {key!r}")
    return table[key]


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)

    grid_tbl = raw.get("grid")
    if grid_tbl is None:
        raise ConfigError("missing [grid] section")
    dim = int(_require(grid_tbl, "dim", "grid"))
    n = _require(grid_tbl, "n", "grid")
    endpoints = _require(grid_tbl, "endpoints", "grid")

    coeff_tbl = raw.get("coefficients")
    if coeff_tbl is None:
        raise ConfigError("missing [coefficients] section")
    a_terms = _require(coeff_tbl, "a", "coefficients")
    b_terms = _require(coeff_tbl, "b", "coefficients")
    if not a_terms or not b_terms:
        raise ConfigError("coefficient specs must not be empty")

    exp_tbl = raw.get("exponents")
    if exp_tbl is None:
        raise ConfigError("missing [exponents] section")
    p = float(_require(exp_tbl, "p", "exponents"))
    q = float(_require(exp_tbl, "q", "exponents"))
    if not p > 2.0:
        raise ConfigError(f"exponent bound violated: p = {p} must satisfy p > 2")
    if not 1.0 < q < 2.0:
        raise ConfigError(f"exponent bound violated: q = {q} must satisfy 1 < q < 2")

    ns = n if isinstance(n, list) else [n]
    if any(int(v) < 3 for v in ns):
        raise ConfigError(f"grid bound violated: n = {n} must be >= 3 per axis")

    cfg = RunConfig(
        dim=dim, n=n, endpoints=endpoints,
        a_terms=list(a_terms), b_terms=list(b_terms),
        p=p, q=q,
        seed=int(raw.get("output", {}).get("seed", 0)),
        solve=dict(raw.get("solve", {})),
        branch=dict(raw.get("branch", {})),
        loop=dict(raw.get("loop", {})),
        eigs=dict(raw.get("eigs", {})),
        verify=dict(raw.get("verify", {})),
    )
    cfg.materialize()      # surface grid/coefficient errors at load time
    return cfg


def _sign_runs(values: np.ndarray, sign: int) -> int:
    """Number of maximal runs of nodes with the requested strict sign (1D)."""
    mask = values > 0.0 if sign > 0 else values < 0.0
    if not np.any(mask):
        return 0
    changes = np.diff(mask.astype(int))
    return int(np.sum(changes == 1) + (1 if mask[0] else 0))


def hypothesis_audit(grid: Grid, a: ScalarField, b: ScalarField) -> dict:
    """Sign-structure audit of (a, b): integrals, region node counts, and
    the standing-hypothesis flags used by the existence and loop theory."""
    ia, ib = integrate(a), integrate(b)
    av, bv = a.values, b.values
    audit = {
        "int_a": ia,
        "int_b": ib,
        "a_pos_nodes": int(np.sum(av > 0.0)),
        "a_neg_nodes": int(np.sum(av < 0.0)),
        "b_pos_nodes": int(np.sum(bv > 0.0)),
        "b_neg_nodes": int(np.sum(bv < 0.0)),
        "omega_a_plus_nonempty": bool(np.any(av > 0.0)),
        "omega_b_plus_nonempty": bool(np.any(bv > 0.0)),
        "cond_indefinite": bool(ia < 0.0 or ib < 0.0),
        "cond_loop": bool(np.any(av > 0.0) and np.any(bv > 0.0)
                          and ib <= 0.0 and ia < 0.0),
    }
    if grid.dim == 1:
        audit["a_sign_segments"] = [_sign_runs(av, +1), _sign_runs(av, -1)]
        audit["b_sign_segments"] = [_sign_runs(bv, +1), _sign_runs(bv, -1)]
        audit["H0_observed"] = bool(np.any((av > 0.0) & (bv > 0.0))
                                    and np.any((av > 0.0) & (bv < 0.0)))
        # interior positivity region for a: flag only, violations permitted
        audit["H1_interior"] = bool(av[0] <= 0.0 and av[-1] <= 0.0)
        audit["H3_connected"] = bool(_sign_runs(bv, +1) == 1
                                     and _sign_runs(bv, -1) == 1)
    return audit
