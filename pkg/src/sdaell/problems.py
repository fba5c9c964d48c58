"""Built-in test problems.

``paper3x3``         nonlinear 3x3 index-1 SDAE with a constant rank-2
                     leading matrix and multiplicative noise.
``gbm_constrained``  geometric Brownian motion x1 tied to x2 by the
                     algebraic equation 0 = x1 - x2; exact path known.
``linear_const``     scalar x' = b x, for deterministic checks.
"""
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import UnknownProblem
from .model import SdaeProblem, check_index1, check_monotone, grid_samples, initial_consistency
from .pencil import projector_bundle

PAPER_A = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
PAPER_A_PINV = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, -1.0], [0.0, 0.0, 0.0]])
PAPER_P = np.diag([1.0, 1.0, 0.0])
PAPER_R = np.diag([0.0, 1.0, 0.0])


@dataclass(frozen=True)
class ProblemEntry:
    name: str
    problem: SdaeProblem
    exact: Optional[Callable] = None  # (t, W(t)) -> state
    notes: str = ""

    def with_horizon(self, horizon):
        return replace(self, problem=replace(self.problem, horizon_T=float(horizon)))


def _const(m):
    m = np.array(m, dtype=float)
    m.flags.writeable = False
    return lambda t: m


def paper3x3(horizon=1.0):
    def f(t, x):
        x1, x2, x3 = x
        return np.array([x1 - x1**3 + x2 - x2**3, x1**2 + x3, x1 + x2**3])

    def jac(t, x):
        x1, x2, _ = x
        return np.array([
            [1.0 - 3.0 * x1**2, 1.0 - 3.0 * x2**2, 0.0],
            [2.0 * x1, 0.0, 1.0],
            [1.0, 3.0 * x2**2, 0.0],
        ])

    def g(t, x):
        x1, x2, x3 = x
        return np.array([
            [x1**2 + x2, 0.0, x3],
            [0.0, 0.0, 0.0],
            [0.0, x2**2, 0.0],
        ])

    problem = SdaeProblem(
        dim_d=3, dim_noise=3, horizon_T=horizon, a_fn=_const(PAPER_A),
        drift_f=f, diffusion_g=g, initial=np.array([1.0, 1.0, -1.0]),
        jac_f=jac, dfdt=lambda t, x: np.zeros(3), name="paper3x3", a_constant=True,
    )
    notes = (
        "constraint x3 = -x1^2 (so v1 = v2 = 0, v3 = -u1^2 - u3); "
        "monotone with k = 2; T defaults to 1"
    )
    return ProblemEntry("paper3x3", problem, None, notes)


def gbm_constrained(a=0.5, sigma=0.3, horizon=1.0):
    def exact(t, w):
        x1 = np.exp((a - 0.5 * sigma**2) * t + sigma * w[0])
        return np.array([x1, x1])

    problem = SdaeProblem(
        dim_d=2, dim_noise=1, horizon_T=horizon, a_fn=_const([[1.0, 0.0], [0.0, 0.0]]),
        drift_f=lambda t, x: np.array([a * x[0], x[0] - x[1]]),
        diffusion_g=lambda t, x: np.array([[sigma * x[0]], [0.0]]),
        initial=np.array([1.0, 1.0]),
        jac_f=lambda t, x: np.array([[a, 0.0], [1.0, -1.0]]),
        dfdt=lambda t, x: np.zeros(2),
        name="gbm_constrained", a_constant=True,
    )
    notes = f"dx1 = a x1 dt + sigma x1 dW, 0 = x1 - x2; a={a:g}, sigma={sigma:g}"
    return ProblemEntry("gbm_constrained", problem, exact, notes)


def linear_const(b=1.0, x0=1.0, horizon=1.0):
    problem = SdaeProblem(
        dim_d=1, dim_noise=1, horizon_T=horizon, a_fn=_const([[1.0]]),
        drift_f=lambda t, x: b * x,
        diffusion_g=lambda t, x: np.zeros((1, 1)),
        initial=np.array([x0]),
        jac_f=lambda t, x: np.array([[b]]),
        dfdt=lambda t, x: np.zeros(1),
        name="linear_const", a_constant=True,
    )
    return ProblemEntry(
        "linear_const", problem,
        lambda t, w: np.array([x0 * np.exp(b * t)]),
        f"x' = b x with b={b:g}, x(0)={x0:g}",
    )


def _validate_paper3x3(entry):
    p = entry.problem
    b = projector_bundle(p.a(0.0))
    for got, want, label in ((b.a_pinv, PAPER_A_PINV, "A⁻"), (b.p, PAPER_P, "P"),
                             (b.r, PAPER_R, "R")):
        if np.max(np.abs(got - want)) > 1e-12:
            raise AssertionError(f"paper3x3: {label} does not match the reference matrix")
    xs = grid_samples(3, 3.0, 3)
    ts = [0.0, p.horizon_T]
    idx = check_index1(p, t_samples=ts, x_samples=xs)
    mono = check_monotone(p, [(t, x) for t in ts for x in xs], 2.0)
    cons = initial_consistency(p)
    if not (idx.index1_ok and idx.noise_in_range_ok and mono.monotone_ok and cons.consistent):
        raise AssertionError("paper3x3 failed its registration checks")


def _validate_index1(entry):
    p = entry.problem
    xs = grid_samples(p.dim_d, 2.0, 3)
    idx = check_index1(p, t_samples=[0.0, p.horizon_T], x_samples=xs)
    if not (idx.index1_ok and idx.noise_in_range_ok and initial_consistency(p).consistent):
        raise AssertionError(f"{entry.name} failed its registration checks")


class Registry:
    """Name -> problem factory. Every factory is built and validated once
    when registered."""

    def __init__(self):
        self._factories = {}

    def register(self, name, factory, validate=None):
        if name in self._factories:
            raise ValueError(f"problem {name!r} already registered")
        entry = factory()
        if entry.name != name:
            raise ValueError(f"factory for {name!r} produced {entry.name!r}")
        if validate is not None:
            validate(entry)
        self._factories[name] = factory

    def get(self, name, horizon=None):
        try:
            factory = self._factories[name]
        except KeyError:
            raise UnknownProblem(f"unknown problem {name!r}; known: {', '.join(self.names())}") from None
        entry = factory()
        if horizon is not None:
            entry = entry.with_horizon(horizon)
        return entry

    def names(self):
        return sorted(self._factories)


REGISTRY = Registry()
REGISTRY.register("paper3x3", paper3x3, _validate_paper3x3)
REGISTRY.register("gbm_constrained", gbm_constrained, _validate_index1)
REGISTRY.register("linear_const", linear_const, _validate_index1)


def get(name, horizon=None):
    return REGISTRY.get(name, horizon)


def names():
    return REGISTRY.names()
