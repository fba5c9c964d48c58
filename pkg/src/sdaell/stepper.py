"""Time steppers for index-1 SDAEs.

``ll``          semi-implicit local linearization: the drift is split at
                (t_n, X_n) into J_n x + F_n + (df/dt) (t - t_n) and the linear
                part is taken at the new time level, giving
                (A - h J_n) X_{n+1} = A X_n + F_n h + f_t h^2 + g dW.
``decomposed``  the same scheme written for u = P X and v = Q X, with v
                eliminated through the linearized constraint.
``em``          Euler-Maruyama, A X_{n+1} = A X_n + f h + g dW, which needs a
                nonsingular A and exists to show why singular A breaks it.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AssumptionViolated,
    NearSingularOperator,
    NonFiniteInput,
    NonFiniteState,
    SdaeError,
    SingularMatrix,
)
from .model import DEFAULT_DERIV, DerivativeConfig, dfdt, jacobian
from .pencil import DEFAULT_TOL, ToleranceConfig, projector_bundle, verify_constant_projector

SCHEMES = ("ll", "decomposed", "em")


@dataclass(frozen=True)
class SolveOptions:
    min_sv_tol: float = 1e-12
    cache_constant_A: bool = True
    derivative_cfg: DerivativeConfig = field(default_factory=lambda: DEFAULT_DERIV)
    tol: ToleranceConfig = field(default_factory=lambda: DEFAULT_TOL)

    def __post_init__(self):
        if not self.min_sv_tol > 0:
            raise ValueError("min_sv_tol must be positive")


DEFAULT_OPTS = SolveOptions()


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    scheme: str

    @property
    def n_steps(self):
        return len(self.times) - 1

    @property
    def h(self):
        return (self.times[-1] - self.times[0]) / self.n_steps

    def to_csv(self, path):
        d = self.states.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t"] + [f"x_{k + 1}" for k in range(d)])
            for t, x in zip(self.times, self.states):
                writer.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in x])


def _check_vec(v, n, what):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (n,):
        raise ValueError(f"{what} must have length {n}, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput(f"{what} is not finite")
    return v


def _near_singular(m, rel_tol):
    s = np.linalg.svd(m, compute_uv=False)
    return s[0] == 0.0 or s[-1] < rel_tol * s[0], s


class _Context:
    """Per-trajectory cache of A(t) and its projectors for constant-A problems."""

    def __init__(self, p, opts):
        self.p = p
        self.opts = opts
        self.reuse = opts.cache_constant_A and p.a_constant
        self._a = None
        self._bundle = None

    def a(self, t):
        if not self.reuse:
            return self.p.a(t)
        if self._a is None:
            self._a = self.p.a(t)
        return self._a

    def bundle(self, t):
        if not self.reuse:
            return projector_bundle(self.p.a(t), self.opts.tol)
        if self._bundle is None:
            self._bundle = projector_bundle(self.a(t), self.opts.tol)
        return self._bundle

    def linearize(self, t, x):
        cfg = self.opts.derivative_cfg
        jac = jacobian(self.p, cfg, t, x)
        fx = self.p.f(t, x)
        return jac, fx - jac @ x, dfdt(self.p, cfg, t, x)


def _ll(ctx, t, h, x, dw):
    a = ctx.a(t)
    jac, F, ft = ctx.linearize(t, x)
    D = a - h * jac
    singular, s = _near_singular(D, ctx.opts.min_sv_tol)
    if singular:
        raise NearSingularOperator(
            f"A - hJ is numerically singular (sigma_min={s[-1]:.3g}, sigma_max={s[0]:.3g})",
            t=t,
        )
    rhs = a @ x + h * F + (h * h) * ft + ctx.p.g(t, x) @ dw
    x_new = np.linalg.solve(D, rhs)
    if not np.all(np.isfinite(x_new)):
        raise NonFiniteState("non-finite state produced by ll step", t=t)
    return x_new


def step_ll(p, opts=DEFAULT_OPTS, t_n=0.0, h=None, x_n=None, dW=None):
    """One step of the local-linearization scheme; returns X_{n+1}."""
    if h is None or not h > 0:
        raise ValueError("step size h must be positive")
    x = _check_vec(p.initial if x_n is None else x_n, p.dim_d, "x_n")
    dw = _check_vec(np.zeros(p.dim_noise) if dW is None else dW, p.dim_noise, "dW")
    return _ll(_Context(p, opts), t_n, h, x, dw)


def _decomposed(ctx, t, h, u, v, dw):
    a = ctx.a(t)
    b = ctx.bundle(t)
    x = u + v
    jac, F, ft = ctx.linearize(t, x)
    rj = b.r @ jac
    k_ae = a + rj
    singular, s = _near_singular(k_ae, ctx.opts.min_sv_tol)
    if singular:
        raise NearSingularOperator(
            f"constraint Jacobian A + RJ is numerically singular (sigma_min={s[-1]:.3g})",
            t=t,
        )
    # v_{n+1} = M u_{n+1} + c solves the linearized constraint
    sol = np.linalg.solve(k_ae, np.column_stack([rj, b.r @ (F + h * ft)]))
    M = -sol[:, :-1]
    c = -sol[:, -1]
    pj = b.a_pinv @ jac
    d = ctx.p.dim_d
    G = np.eye(d) - h * pj @ (np.eye(d) + M)
    singular, s = _near_singular(G, ctx.opts.min_sv_tol)
    if singular:
        raise NearSingularOperator(
            f"differential-part system is numerically singular (sigma_min={s[-1]:.3g})",
            t=t,
        )
    rhs = u + h * (pj @ c) + b.a_pinv @ (h * F + (h * h) * ft + ctx.p.g(t, x) @ dw)
    u_new = np.linalg.solve(G, rhs)
    v_new = M @ u_new + c
    x_new = u_new + v_new
    if not np.all(np.isfinite(x_new)):
        raise NonFiniteState("non-finite state produced by decomposed step", t=t)
    return u_new, v_new, x_new


def require_constant_projector(p, tol=DEFAULT_TOL, n_times=9):
    times = np.linspace(0.0, p.horizon_T, n_times)
    report = verify_constant_projector(p.a, times, p.horizon_T, tol)
    if not report.passed:
        raise AssumptionViolated(
            "P(t) = A⁻(t)A(t) is not constant (max |dP/dt|_F = "
            f"{report.max_derivative_norm:.3g} at t={report.worst_time:g}); "
            "the decomposed scheme drops dP/dt and cannot be used"
        )
    return report


def step_decomposed(p, opts=DEFAULT_OPTS, t_n=0.0, h=None, u_n=None, v_n=None,
                    dW=None, *, verified=False):
    """One step of the projected scheme.

    Returns ``(u_{n+1}, v_{n+1}, x_{n+1})``. Requires a time-constant
    projector P; pass ``verified=True`` to skip re-checking it.
    """
    if h is None or not h > 0:
        raise ValueError("step size h must be positive")
    if not verified:
        require_constant_projector(p, opts.tol)
    u = _check_vec(u_n, p.dim_d, "u_n")
    v = _check_vec(v_n, p.dim_d, "v_n")
    dw = _check_vec(np.zeros(p.dim_noise) if dW is None else dW, p.dim_noise, "dW")
    return _decomposed(_Context(p, opts), t_n, h, u, v, dw)


def _em(ctx, t, h, x, dw):
    a = ctx.a(t)
    singular, s = _near_singular(a, ctx.opts.min_sv_tol)
    if singular:
        raise SingularMatrix(
            f"leading matrix A(t) is a singular matrix (rank-deficient, "
            f"sigma_min={s[-1]:.3g}, sigma_max={s[0]:.3g}); Euler-Maruyama cannot "
            "solve A X_(n+1) = A X_n + f h + g dW without eliminating the constraints",
            t=t,
        )
    rhs = a @ x + h * ctx.p.f(t, x) + ctx.p.g(t, x) @ dw
    x_new = np.linalg.solve(a, rhs)
    if not np.all(np.isfinite(x_new)):
        raise NonFiniteState("non-finite state produced by em step", t=t)
    return x_new


def step_em(p, opts=DEFAULT_OPTS, t_n=0.0, h=None, x_n=None, dW=None):
    if h is None or not h > 0:
        raise ValueError("step size h must be positive")
    x = _check_vec(p.initial if x_n is None else x_n, p.dim_d, "x_n")
    dw = _check_vec(np.zeros(p.dim_noise) if dW is None else dW, p.dim_noise, "dW")
    return _em(_Context(p, opts), t_n, h, x, dw)


def constraint_residual(p, opts=DEFAULT_OPTS, t_n=0.0, h=None, x_n=None, x_next=None):
    """``|R(t_n) [J_n x_{n+1} + F_n + f_t h]|``: the part of an ll step that the
    scheme forces to vanish when R g = 0."""
    x = _check_vec(x_n, p.dim_d, "x_n")
    xn1 = _check_vec(x_next, p.dim_d, "x_next")
    ctx = _Context(p, opts)
    jac, F, ft = ctx.linearize(t_n, x)
    r = ctx.bundle(t_n).r
    return float(np.linalg.norm(r @ (jac @ xn1 + F + h * ft)))


def _grid(p, n):
    return np.arange(n + 1) * (p.horizon_T / n)


def _check_lattice(p, lattice):
    if lattice.dim_noise != p.dim_noise:
        raise ValueError(
            f"lattice noise dimension {lattice.dim_noise} != problem {p.dim_noise}"
        )
    if not np.isclose(lattice.horizon_T, p.horizon_T, rtol=1e-14, atol=0.0):
        raise ValueError("lattice and problem horizons differ")


def integrate(p, opts, lattice, scheme="ll"):
    """Run ``scheme`` over every increment of ``lattice`` starting from the
    problem's initial value. Any failing step aborts the whole run."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    _check_lattice(p, lattice)
    n = lattice.n_fine
    times = _grid(p, n)
    h = p.horizon_T / n
    states = np.empty((n + 1, p.dim_d))
    states[0] = p.initial
    ctx = _Context(p, opts)
    dws = lattice.increments
    if scheme == "decomposed":
        require_constant_projector(p, opts.tol)
        b = ctx.bundle(0.0)
        u, v = b.p @ p.initial, b.q @ p.initial
    x = p.initial.copy()
    for i in range(n):
        try:
            if scheme == "ll":
                x = _ll(ctx, times[i], h, x, dws[i])
            elif scheme == "em":
                x = _em(ctx, times[i], h, x, dws[i])
            else:
                u, v, x = _decomposed(ctx, times[i], h, u, v, dws[i])
        except SdaeError as err:
            raise err.add_context(step=i)
        except np.linalg.LinAlgError as err:
            raise NearSingularOperator(str(err), step=i, t=times[i]) from err
        states[i + 1] = x
    return Trajectory(times, states, scheme)


def integrate_ll(p, opts, lattice):
    return integrate(p, opts, lattice, "ll")


def integrate_decomposed(p, opts, lattice):
    return integrate(p, opts, lattice, "decomposed")


def integrate_em(p, opts, lattice):
    return integrate(p, opts, lattice, "em")
