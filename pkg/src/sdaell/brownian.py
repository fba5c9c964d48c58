"""Seeded Wiener increments on a dyadic grid, with exact coarsening.

Increments come from a Philox counter stream keyed by the seed: the normal
draw for (step ``n``, coordinate ``k``) is a function of the counter
position ``n * dim_noise + k`` only, so any slice of the lattice can be
regenerated on its own.

Every increment is rounded to an integer multiple of ``QUANTUM``. Sums of
such values are exact in double precision while the running totals stay
below ``2**13`` in magnitude, which makes coarse increments and Brownian
partial sums independent of the summation order; coarse and fine grids
therefore share one path to the last bit.
"""
import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import InvalidResolution, NonFiniteInput

QUANTUM = 2.0 ** -40
_EXACT_LIMIT = 2.0 ** 13
_SEED_MASK = (1 << 64) - 1
_WORDS_PER_BLOCK = 4  # Philox4x64 emits four 64-bit words per counter value


def _is_pow2(n):
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


def uniform_stream(seed, start, count):
    """Uniforms in (0, 1) at counter positions ``start .. start+count-1``."""
    bitgen = np.random.Philox(key=int(seed) & _SEED_MASK)
    block, offset = divmod(int(start), _WORDS_PER_BLOCK)
    if block:
        bitgen.advance(block)
    raw = bitgen.random_raw(offset + count)[offset:]
    return ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0 ** -53


def normal_stream(seed, start, count):
    return ndtri(uniform_stream(seed, start, count))


@dataclass(frozen=True)
class BrownianLattice:
    seed: int
    dim_noise: int
    horizon_T: float
    n_fine: int
    increments: np.ndarray

    @property
    def h(self):
        return self.horizon_T / self.n_fine

    @property
    def times(self):
        return np.arange(self.n_fine + 1) * self.h

    def path(self):
        """W at every grid point, starting from W(0) = 0; shape (n+1, d1)."""
        w = np.zeros((self.n_fine + 1, self.dim_noise))
        np.cumsum(self.increments, axis=0, out=w[1:])
        return w

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["index"] + [f"dW_{k + 1}" for k in range(self.dim_noise)])
            for i, row in enumerate(self.increments):
                writer.writerow([i] + [f"{v:.17g}" for v in row])


def _freeze(a):
    a.flags.writeable = False
    return a


def generate(seed, n_fine, dim_noise, horizon_T):
    if not _is_pow2(n_fine):
        raise InvalidResolution(f"n_fine={n_fine} is not a power of two")
    if dim_noise < 1:
        raise ValueError("dim_noise must be positive")
    if not horizon_T > 0:
        raise ValueError("horizon_T must be positive")
    h = horizon_T / n_fine
    z = normal_stream(seed, 0, n_fine * dim_noise).reshape(n_fine, dim_noise)
    dw = np.round(np.sqrt(h) * z / QUANTUM) * QUANTUM
    if not np.all(np.isfinite(dw)):
        raise NonFiniteInput("non-finite Brownian increment")
    w = np.cumsum(np.abs(dw), axis=0)
    if w.size and w[-1].max() >= _EXACT_LIMIT:
        raise InvalidResolution(
            "Brownian path too large for exact coarsening; reduce horizon_T"
        )
    return BrownianLattice(int(seed), int(dim_noise), float(horizon_T), int(n_fine), _freeze(dw))


def coarsen(lattice, factor):
    """Sum consecutive blocks of ``factor`` fine increments."""
    if not _is_pow2(factor) or lattice.n_fine % factor:
        raise InvalidResolution(
            f"factor {factor} must be a power of two dividing n_fine={lattice.n_fine}"
        )
    n = lattice.n_fine // factor
    dw = lattice.increments.reshape(n, factor, lattice.dim_noise).sum(axis=1)
    return BrownianLattice(lattice.seed, lattice.dim_noise, lattice.horizon_T, n, _freeze(dw))


def at_resolution(lattice, n):
    """Coarsened view of ``lattice`` with ``n`` steps."""
    if not _is_pow2(n) or lattice.n_fine % n:
        raise InvalidResolution(f"N={n} must be a power of two dividing {lattice.n_fine}")
    return coarsen(lattice, lattice.n_fine // n)
