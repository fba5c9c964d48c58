"""Pathwise convergence studies.

For each sample, one Brownian lattice is drawn at the reference resolution
``n_ref``; every coarser level is integrated on the exactly coarsened
increments of that same lattice and compared against the reference
trajectory (or an exact solution) at the coarse grid points. The rate for
the sample is the negated least-squares slope of log(error) on log(N).
"""
import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import brownian
from .errors import DegenerateRegression, GridMismatch, SdaeError
from .stepper import Trajectory, integrate


def _is_pow2(n):
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ConvergenceConfig:
    n_ref: int = 2**16
    levels: tuple = tuple(2**k for k in range(6, 13))
    n_samples: int = 3
    base_seed: int = 42
    scheme: str = "ll"

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(int(n) for n in self.levels))
        if not _is_pow2(self.n_ref):
            raise ValueError(f"n_ref={self.n_ref} is not a power of two")
        if not self.levels:
            raise ValueError("at least one level is required")
        if list(self.levels) != sorted(set(self.levels)):
            raise ValueError("levels must be strictly increasing")
        for n in self.levels:
            if not _is_pow2(n) or n >= self.n_ref or self.n_ref % n:
                raise ValueError(
                    f"level {n} must be a power of two below and dividing n_ref={self.n_ref}"
                )
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.scheme not in ("ll", "decomposed"):
            raise ValueError(f"scheme must be 'll' or 'decomposed', not {self.scheme!r}")


@dataclass(frozen=True)
class SampleResult:
    sample: int
    seed: int
    errors: tuple  # ((N, sup_error), ...)
    rate: Optional[float]
    note: str = ""


@dataclass(frozen=True)
class ConvergenceReport:
    per_sample: tuple

    @property
    def rates(self):
        return [s.rate for s in self.per_sample]

    @property
    def mean_rate(self):
        defined = [r for r in self.rates if r is not None]
        return float(np.mean(defined)) if defined else None

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample", "seed", "N", "sup_error"])
            for s in self.per_sample:
                for n, err in s.errors:
                    w.writerow([s.sample, s.seed, n, f"{err:.17g}"])

    def rates_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample", "rate"])
            for s in self.per_sample:
                w.writerow([s.sample, "" if s.rate is None else f"{s.rate:.17g}"])

    def plot_data_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["log2N", "log10_error", "sample"])
            for s in self.per_sample:
                for n, err in s.errors:
                    log_err = math.log10(err) if err > 0 else float("-inf")
                    w.writerow([int(math.log2(n)), f"{log_err:.17g}", s.sample])


def pathwise_error(coarse, reference):
    """Largest Euclidean distance between the two trajectories over the
    coarse grid points."""
    nc, nr = coarse.n_steps, reference.n_steps
    if nr % nc:
        raise GridMismatch(f"coarse grid ({nc} steps) is not nested in reference ({nr} steps)")
    stride = nr // nc
    ref_times = reference.times[::stride]
    scale = max(1.0, abs(reference.times[-1]))
    if ref_times.shape != coarse.times.shape or np.max(
        np.abs(ref_times - coarse.times)
    ) > 1e-12 * scale:
        raise GridMismatch("coarse and reference grids do not coincide")
    if coarse.states.shape[1] != reference.states.shape[1]:
        raise GridMismatch("state dimensions differ")
    diff = coarse.states - reference.states[::stride]
    return float(np.max(np.linalg.norm(diff, axis=1)))


def fit_rate(errors):
    """Convergence rate from ``[(N, e_N), ...]``: minus the least-squares
    slope of log e_N against log N."""
    errors = list(errors)
    if len(errors) < 2:
        raise DegenerateRegression("need at least two resolutions to fit a rate")
    n = np.array([e[0] for e in errors], dtype=float)
    e = np.array([e[1] for e in errors], dtype=float)
    if np.any(e <= 0) or not np.all(np.isfinite(e)):
        raise DegenerateRegression("errors must be positive and finite")
    if np.unique(n).size < 2:
        raise DegenerateRegression("need at least two distinct resolutions")
    x = np.log(n)
    y = np.log(e)
    xc = x - x.mean()
    return float(-(xc @ (y - y.mean())) / (xc @ xc))


def exact_trajectory(exact, lattice, horizon=None):
    """Evaluate an exact-path function on the grid of ``lattice`` using its
    Brownian partial sums."""
    times = lattice.times
    w = lattice.path()
    states = np.array([exact(t, wt) for t, wt in zip(times, w)], dtype=float)
    return Trajectory(times, states, "exact")


def _rate_or_flag(errors):
    try:
        return fit_rate(errors), ""
    except DegenerateRegression as err:
        return None, f"rate omitted: {err}"


def _one_sample(p, cfg, opts, i, exact):
    seed = cfg.base_seed + i
    lattice = brownian.generate(seed, cfg.n_ref, p.dim_noise, p.horizon_T)
    ref = None
    if exact is None:
        try:
            ref = integrate(p, opts, lattice, cfg.scheme)
        except SdaeError as err:
            raise err.add_context(sample=i, level=cfg.n_ref)
    errors = []
    for n in cfg.levels:
        coarse_lattice = brownian.at_resolution(lattice, n)
        try:
            coarse = integrate(p, opts, coarse_lattice, cfg.scheme)
        except SdaeError as err:
            raise err.add_context(sample=i, level=n)
        target = ref if exact is None else exact_trajectory(exact, coarse_lattice)
        errors.append((n, pathwise_error(coarse, target)))
    rate, note = _rate_or_flag(errors)
    return SampleResult(i, seed, tuple(errors), rate, note)


def _run(p, cfg, opts, exact, workers):
    indices = range(cfg.n_samples)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda i: _one_sample(p, cfg, opts, i, exact), indices))
    else:
        results = [_one_sample(p, cfg, opts, i, exact) for i in indices]
    return ConvergenceReport(tuple(results))


def run_study(p, cfg, opts, workers=1):
    """Same-scheme reference at ``cfg.n_ref`` against every level."""
    return _run(p, cfg, opts, None, workers)


def compare_exact(p, exact, cfg, opts, workers=1):
    """Like ``run_study``, but errors are measured against ``exact(t, W(t))``
    on each coarse grid instead of a fine numerical reference."""
    return _run(p, cfg, opts, exact, workers)
