import numpy as np
import pytest

from nehariloop import (
    ContinuationSettings,
    ProblemParams,
    build_grid,
    epsilon_homotopy,
)
from nehariloop.mesh import CoeffSpec, CoeffTerm, sample_coefficient

P, Q = 4.0, 1.5


def make_loop_coeffs(grid):
    """Figure-1-style pair: a > 0 on an interior bump straddling the sign
    change of b, b > 0 on one boundary-touching interval, int a < 0, int b < 0."""
    aspec = CoeffSpec.of(CoeffTerm(kind="bump", center=0.3, width=0.1, height=2.0),
                         CoeffTerm(kind="constant", value=-0.4))
    bspec = CoeffSpec.of(CoeffTerm(kind="bump", center=0.0, width=0.25, height=1.0),
                         CoeffTerm(kind="constant", value=-0.25))
    a, _ = sample_coefficient(aspec, grid)
    b, _ = sample_coefficient(bspec, grid)
    return a, b


def make_bcos_coeffs(grid):
    """a = -1 and sign-changing b = cos(2 pi x) - 1/4 with int b < 0."""
    bspec = CoeffSpec.of(CoeffTerm(kind="cosine", k=1, amplitude=1.0),
                         CoeffTerm(kind="constant", value=-0.25))
    b, _ = sample_coefficient(bspec, grid)
    return grid.field(-1.0), b


@pytest.fixture(scope="session")
def grid201():
    return build_grid(1, 201, [0.0, 1.0])


@pytest.fixture(scope="session")
def grid101():
    return build_grid(1, 101, [0.0, 1.0])


@pytest.fixture(scope="session")
def const_params(grid201):
    def make(lam: float, epsilon: float = 0.0) -> ProblemParams:
        return ProblemParams(p=P, q=Q, lam=lam, epsilon=epsilon,
                             a=grid201.field(-1.0), b=grid201.field(1.0))
    return make


@pytest.fixture(scope="session")
def loop_params(grid101):
    a, b = make_loop_coeffs(grid101)

    def make(lam: float, epsilon: float = 0.0) -> ProblemParams:
        return ProblemParams(p=P, q=Q, lam=lam, epsilon=epsilon, a=a, b=b)
    return make


@pytest.fixture(scope="session")
def loop_params_fine(grid201):
    a, b = make_loop_coeffs(grid201)

    def make(lam: float, epsilon: float = 0.0) -> ProblemParams:
        return ProblemParams(p=P, q=Q, lam=lam, epsilon=epsilon, a=a, b=b)
    return make


@pytest.fixture(scope="session")
def bcos_params(grid201):
    a, b = make_bcos_coeffs(grid201)

    def make(lam: float, epsilon: float = 0.0) -> ProblemParams:
        return ProblemParams(p=P, q=Q, lam=lam, epsilon=epsilon, a=a, b=b)
    return make


LOOP_EPS_LIST = [0.2, 0.1, 0.05, 0.025]
LOOP_SETTINGS = ContinuationSettings(ds_init=5e-3, ds_min=1e-9, ds_max=0.2,
                                     newton_tol=1e-9, max_steps=2500)


@pytest.fixture(scope="session")
def loop_run(loop_params):
    """One epsilon-homotopy over the standard list, shared by several tests."""
    params = loop_params(0.0, epsilon=1.0)
    branches, diags = epsilon_homotopy(params, LOOP_EPS_LIST, LOOP_SETTINGS)
    return branches, diags
