"""Moore-Penrose pseudo-inverse and the projectors attached to a singular
leading matrix.

For a square matrix ``A`` with pseudo-inverse ``A⁻``::

    P = A⁻ A      projector onto the differential components
    Q = I - P     projector onto Ker A (algebraic components)
    R = I - A A⁻  left annihilator of A (extracts the constraints)
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySampleSet, NonFiniteInput

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances.

    ``rank_rel_tol=None`` means ``16 * d * eps`` for a d x d matrix.
    """

    rank_rel_tol: float | None = None
    identity_tol: float = 1e-10
    fd_step: float = _EPS ** (1.0 / 3.0)

    def __post_init__(self):
        if self.rank_rel_tol is not None and not 0.0 < self.rank_rel_tol < 1.0:
            raise ValueError("rank_rel_tol must lie in (0, 1)")
        if self.identity_tol <= 0.0 or self.fd_step <= 0.0:
            raise ValueError("tolerances must be strictly positive")

    def rank_cutoff(self, d):
        if self.rank_rel_tol is None:
            return 16.0 * max(d, 1) * _EPS
        return self.rank_rel_tol


DEFAULT_TOL = ToleranceConfig()


@dataclass(frozen=True)
class ProjectorBundle:
    a_pinv: np.ndarray
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    rank: int
    sigma_min_pos: float
    singular_values: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.p.shape[0]


def _as_square(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteInput("matrix has NaN or Inf entries")
    return m


def _svd_pinv(m, tol):
    u, s, vt = np.linalg.svd(m)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros_like(m.T), s, 0
    keep = s > tol.rank_cutoff(m.shape[0]) * s[0]
    rank = int(np.count_nonzero(keep))
    pinv = (vt[:rank].T / s[:rank]) @ u[:, :rank].T
    return pinv, s, rank


def pseudo_inverse(m, tol=DEFAULT_TOL):
    """Moore-Penrose pseudo-inverse of a square matrix via the SVD.

    Singular values at or below ``rank_rel_tol * sigma_max`` are treated
    as zero.
    """
    m = _as_square(m)
    pinv, _, _ = _svd_pinv(m, tol)
    return pinv


def penrose_residuals(a, a_pinv):
    """Frobenius norms of the four Penrose condition residuals."""
    a = np.asarray(a, dtype=float)
    g = np.asarray(a_pinv, dtype=float)
    ag = a @ g
    ga = g @ a
    return (
        np.linalg.norm(ag @ a - a),
        np.linalg.norm(ga @ g - g),
        np.linalg.norm(ag.T - ag),
        np.linalg.norm(ga.T - ga),
    )


def projector_bundle(a, tol=DEFAULT_TOL):
    a = _as_square(a)
    d = a.shape[0]
    pinv, s, rank = _svd_pinv(a, tol)
    eye = np.eye(d)
    p = pinv @ a
    r = eye - a @ pinv
    sigma_min_pos = float(s[rank - 1]) if rank > 0 else 0.0
    return ProjectorBundle(
        a_pinv=pinv,
        p=p,
        q=eye - p,
        r=r,
        rank=rank,
        sigma_min_pos=sigma_min_pos,
        singular_values=s,
    )


@dataclass(frozen=True)
class ProjectorDerivativeReport:
    max_derivative_norm: float
    threshold: float
    passed: bool
    worst_time: float


def verify_constant_projector(a_fn, times, horizon, tol=DEFAULT_TOL):
    """Check that P(t) = A⁻(t)A(t) does not move with t.

    Central differences of step ``tol.fd_step`` are taken at every sample
    time; samples closer than one step to 0 or ``horizon`` fall back to a
    one-sided difference. The check passes when the largest Frobenius norm
    of the difference quotient is at most ``identity_tol / fd_step``.
    """
    times = [float(t) for t in times]
    if not times:
        raise EmptySampleSet("no sample times given")
    if not all(np.isfinite(times)):
        raise NonFiniteInput("sample times must be finite")
    delta = tol.fd_step
    cache = {}

    def proj(t):
        if t not in cache:
            cache[t] = projector_bundle(a_fn(t), tol).p
        return cache[t]

    worst, worst_t = 0.0, times[0]
    for t in times:
        lo = max(t - delta, 0.0)
        hi = min(t + delta, horizon)
        if hi <= lo:
            continue
        norm = float(np.linalg.norm((proj(hi) - proj(lo)) / (hi - lo)))
        if norm > worst:
            worst, worst_t = norm, t
    threshold = tol.identity_tol / delta
    return ProjectorDerivativeReport(worst, threshold, worst <= threshold, worst_t)
