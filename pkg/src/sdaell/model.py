"""SDAE problem definition and sampled checks of the structural hypotheses.

A problem is ``A(t) dZ = f(t, Z) dt + g(t, Z) dW`` on ``[0, T]`` with a
possibly singular leading matrix ``A(t)``. None of the checks below prove
anything: each one evaluates its condition on the sample points it is
given and reports what it saw.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EmptySampleSet, NonFiniteDerivative, NonFiniteInput
from .pencil import DEFAULT_TOL, projector_bundle

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SdaeProblem:
    dim_d: int
    dim_noise: int
    horizon_T: float
    a_fn: Callable
    drift_f: Callable
    diffusion_g: Callable
    initial: np.ndarray
    jac_f: Optional[Callable] = None
    dfdt: Optional[Callable] = None
    name: str = "unnamed"
    a_constant: bool = False

    def __post_init__(self):
        if self.dim_d < 1 or self.dim_noise < 1:
            raise ValueError("dimensions must be positive")
        if not self.horizon_T > 0:
            raise ValueError("horizon_T must be positive")
        x0 = np.array(self.initial, dtype=float).reshape(-1)
        if x0.shape != (self.dim_d,):
            raise ValueError(f"initial value must have length {self.dim_d}")
        if not np.all(np.isfinite(x0)):
            raise NonFiniteInput("initial value is not finite")
        x0.flags.writeable = False
        object.__setattr__(self, "initial", x0)
        self._probe()

    def _probe(self):
        d, m = self.dim_d, self.dim_noise
        x0 = self.initial
        shapes = [
            ("A(0)", self.a(0.0), (d, d)),
            ("f(0, x0)", self.f(0.0, x0), (d,)),
            ("g(0, x0)", self.g(0.0, x0), (d, m)),
        ]
        if self.jac_f is not None:
            shapes.append(("J(0, x0)", np.asarray(self.jac_f(0.0, x0), float), (d, d)))
        if self.dfdt is not None:
            shapes.append(("df/dt(0, x0)", np.asarray(self.dfdt(0.0, x0), float), (d,)))
        for label, value, shape in shapes:
            if value.shape != shape:
                raise ValueError(f"{label} has shape {value.shape}, expected {shape}")
            if not np.all(np.isfinite(value)):
                raise NonFiniteInput(f"{label} is not finite")

    def a(self, t):
        return np.asarray(self.a_fn(t), dtype=float)

    def f(self, t, x):
        return np.asarray(self.drift_f(t, x), dtype=float).reshape(self.dim_d)

    def g(self, t, x):
        return np.asarray(self.diffusion_g(t, x), dtype=float).reshape(
            self.dim_d, self.dim_noise
        )


@dataclass(frozen=True)
class DerivativeConfig:
    """How J = df/dx and df/dt are obtained.

    ``mode="analytic"`` uses the problem's callables when present and falls
    back to finite differences otherwise; ``"finite-difference"`` always
    differentiates numerically.
    """

    mode: str = "analytic"
    fd_step_x: float = _EPS ** (1.0 / 3.0)
    fd_step_t: float = _EPS ** (1.0 / 3.0)

    def __post_init__(self):
        if self.mode not in ("analytic", "finite-difference"):
            raise ValueError(f"unknown derivative mode {self.mode!r}")
        if self.fd_step_x <= 0 or self.fd_step_t <= 0:
            raise ValueError("finite-difference steps must be positive")


DEFAULT_DERIV = DerivativeConfig()


def _finite_vector(x, d):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (d,):
        raise ValueError(f"state must have length {d}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("state has NaN or Inf entries")
    return x


def jacobian(p, cfg=DEFAULT_DERIV, t=0.0, x=None):
    """Jacobian of the drift with respect to the state at ``(t, x)``."""
    x = _finite_vector(p.initial if x is None else x, p.dim_d)
    if cfg.mode == "analytic" and p.jac_f is not None:
        jac = np.asarray(p.jac_f(t, x), dtype=float)
        if not np.all(np.isfinite(jac)):
            raise NonFiniteDerivative("analytic Jacobian is not finite", t=t)
        return jac
    d = p.dim_d
    jac = np.empty((d, d))
    for i in range(d):
        step = cfg.fd_step_x * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        jac[:, i] = (p.f(t, xp) - p.f(t, xm)) / (xp[i] - xm[i])
    if not np.all(np.isfinite(jac)):
        raise NonFiniteDerivative("finite-difference Jacobian is not finite", t=t)
    return jac


def dfdt(p, cfg=DEFAULT_DERIV, t=0.0, x=None):
    """Partial time derivative of the drift at ``(t, x)``.

    Central differences inside ``[0, T]``; within one step of either end a
    second-order one-sided stencil is used so ``f`` is never evaluated
    outside the horizon.
    """
    x = _finite_vector(p.initial if x is None else x, p.dim_d)
    if cfg.mode == "analytic" and p.dfdt is not None:
        val = np.asarray(p.dfdt(t, x), dtype=float).reshape(p.dim_d)
        if not np.all(np.isfinite(val)):
            raise NonFiniteDerivative("analytic df/dt is not finite", t=t)
        return val
    T = p.horizon_T
    step = cfg.fd_step_t * max(1.0, abs(t))
    if t - step >= 0.0 and t + step <= T:
        val = (p.f(t + step, x) - p.f(t - step, x)) / (2.0 * step)
    elif t + 2.0 * step <= T:
        val = (-3.0 * p.f(t, x) + 4.0 * p.f(t + step, x) - p.f(t + 2 * step, x)) / (2.0 * step)
    else:
        val = (3.0 * p.f(t, x) - 4.0 * p.f(t - step, x) + p.f(t - 2 * step, x)) / (2.0 * step)
    if not np.all(np.isfinite(val)):
        raise NonFiniteDerivative("finite-difference df/dt is not finite", t=t)
    return val


@dataclass(frozen=True)
class Index1Result:
    index1_ok: bool
    noise_in_range_ok: bool
    constraint_jacobian_min_sv: float
    max_noise_residual: float
    n_samples: int


@dataclass(frozen=True)
class MonotoneResult:
    monotone_ok: bool
    k_const: float
    worst_excess: float
    worst_sample: tuple
    n_samples: int


@dataclass(frozen=True)
class ConsistencyResult:
    consistent: bool
    residual: float
    threshold: float


@dataclass(frozen=True)
class AssumptionReport:
    index1_ok: bool
    noise_in_range_ok: bool
    constraint_jacobian_min_sv: float
    monotone_ok: bool
    monotone_constant_used: float
    initial_consistent_ok: bool
    projector_constant_ok: bool = True
    details: str = field(default="", compare=False)

    @property
    def all_ok(self):
        return (
            self.index1_ok
            and self.noise_in_range_ok
            and self.monotone_ok
            and self.initial_consistent_ok
            and self.projector_constant_ok
        )


def check_index1(p, cfg=DEFAULT_DERIV, t_samples=(), x_samples=(), tol=DEFAULT_TOL):
    """Sampled index-1 test.

    At every ``(t, x)`` pair, forms ``J_AE = A + R J`` and records its
    smallest singular value, and measures ``||R g||_F`` (zero exactly when
    the noise stays in the range of ``A``).
    """
    t_samples = list(t_samples)
    x_samples = [_finite_vector(x, p.dim_d) for x in x_samples]
    if not t_samples or not x_samples:
        raise EmptySampleSet("check_index1 needs at least one time and one state")
    min_sv = np.inf
    noise_ok = True
    worst_noise = 0.0
    for t in t_samples:
        a = p.a(t)
        bundle = projector_bundle(a, tol)
        for x in x_samples:
            j_ae = a + bundle.r @ jacobian(p, cfg, t, x)
            sv = np.linalg.svd(j_ae, compute_uv=False)[-1]
            min_sv = min(min_sv, float(sv))
            g = p.g(t, x)
            res = float(np.linalg.norm(bundle.r @ g))
            worst_noise = max(worst_noise, res)
            if res > tol.identity_tol * (1.0 + np.linalg.norm(g)):
                noise_ok = False
    return Index1Result(
        index1_ok=bool(min_sv > tol.identity_tol),
        noise_in_range_ok=noise_ok,
        constraint_jacobian_min_sv=min_sv,
        max_noise_residual=worst_noise,
        n_samples=len(t_samples) * len(x_samples),
    )


def check_monotone(p, samples, k_const, tol=DEFAULT_TOL):
    """Sampled monotone (non-explosion) bound

        <P x, A⁻ f> + |A⁻ g|_F^2 / 2  <=  k_const (1 + |x|^2)

    ``samples`` is an iterable of ``(t, x)`` pairs.
    """
    samples = [(float(t), _finite_vector(x, p.dim_d)) for t, x in samples]
    if not samples:
        raise EmptySampleSet("check_monotone needs at least one sample")
    if not k_const > 0:
        raise ValueError("k_const must be positive")
    bundles = {}
    worst, worst_sample = -np.inf, samples[0]
    for t, x in samples:
        if t not in bundles:
            bundles[t] = projector_bundle(p.a(t), tol)
        b = bundles[t]
        lhs = float(b.p @ x @ (b.a_pinv @ p.f(t, x)))
        lhs += 0.5 * float(np.sum((b.a_pinv @ p.g(t, x)) ** 2))
        excess = lhs - k_const * (1.0 + float(x @ x))
        if excess > worst:
            worst, worst_sample = excess, (t, x)
    return MonotoneResult(
        monotone_ok=bool(worst <= tol.identity_tol),
        k_const=float(k_const),
        worst_excess=float(worst),
        worst_sample=(worst_sample[0], tuple(float(v) for v in worst_sample[1])),
        n_samples=len(samples),
    )


def initial_consistency(p, tol=DEFAULT_TOL):
    """Residual of the continuous constraint ``A Q zeta + R f(0, zeta)`` at t = 0."""
    zeta = p.initial
    a = p.a(0.0)
    b = projector_bundle(a, tol)
    f0 = p.f(0.0, zeta)
    residual = float(np.linalg.norm(a @ (b.q @ zeta) + b.r @ f0))
    if not np.isfinite(residual):
        raise NonFiniteInput("constraint residual is not finite")
    threshold = tol.identity_tol * (1.0 + float(np.linalg.norm(f0)))
    return ConsistencyResult(residual <= threshold, residual, threshold)


def check_initial_consistency(p, tol=DEFAULT_TOL):
    res = initial_consistency(p, tol)
    return res.consistent, res.residual


def grid_samples(dim, half_width, points):
    """Cartesian grid of ``points`` values per axis in [-half_width, half_width]^dim."""
    axis = np.linspace(-half_width, half_width, points)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def assess(p, cfg=DEFAULT_DERIV, tol=DEFAULT_TOL, *, t_samples=None,
           x_samples=None, k_const=2.0):
    """Run every runtime check and merge the results into one report."""
    from .pencil import verify_constant_projector

    T = p.horizon_T
    if t_samples is None:
        t_samples = [0.0, 0.5 * T, T]
    if x_samples is None:
        x_samples = grid_samples(p.dim_d, 3.0, 5)
    idx = check_index1(p, cfg, t_samples, x_samples, tol)
    mono = check_monotone(p, [(t, x) for t in t_samples for x in x_samples], k_const, tol)
    cons = initial_consistency(p, tol)
    proj = verify_constant_projector(p.a, t_samples, T, tol)
    lines = [
        f"problem: {p.name} (d={p.dim_d}, noise dim={p.dim_noise}, T={T:g})",
        f"sampled domain: {len(t_samples)} times x {len(x_samples)} states",
        f"index-1 (J_AE = A + R J nonsingular): {_flag(idx.index1_ok)}"
        f"  min singular value {idx.constraint_jacobian_min_sv:.6g}",
        f"noise in range of A (R g = 0): {_flag(idx.noise_in_range_ok)}"
        f"  max |R g|_F {idx.max_noise_residual:.3g}",
        f"monotone bound with k = {k_const:g}: {_flag(mono.monotone_ok)}"
        f"  worst excess {mono.worst_excess:.6g}",
        f"initial value consistent: {_flag(cons.consistent)}"
        f"  residual {cons.residual:.3g} (threshold {cons.threshold:.3g})",
        f"projector P = A⁻A constant in t: {_flag(proj.passed)}"
        f"  max |dP/dt|_F {proj.max_derivative_norm:.3g}",
    ]
    return AssumptionReport(
        index1_ok=idx.index1_ok,
        noise_in_range_ok=idx.noise_in_range_ok,
        constraint_jacobian_min_sv=idx.constraint_jacobian_min_sv,
        monotone_ok=mono.monotone_ok,
        monotone_constant_used=float(k_const),
        initial_consistent_ok=cons.consistent,
        projector_constant_ok=proj.passed,
        details="\n".join(lines),
    )


def _flag(ok):
    return "ok" if ok else "FAILED"
