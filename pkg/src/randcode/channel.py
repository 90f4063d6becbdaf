"""Channel parameters, operating points and Gaussian sampling of quadratures.

All variances are in shot-noise units.  Only the quadrature Bob actually
measured is simulated: Alice's matched displacement ``x`` and Bob's outcome
``y = sqrt(T) x + noise`` with noise variance ``1/2 + T xi / 2``.

Random streams
--------------
Every sampler takes an ``rng_seed`` that may be an ``int``, a
:class:`numpy.random.SeedSequence` or a :class:`numpy.random.Generator`.
Generators are always PCG64 and normals use NumPy's ziggurat
``standard_normal``; this is fixed project-wide so golden values are stable.
Per-block streams are derived with :func:`block_seed`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ChannelError(ValueError):
    """Raised for channel or operating-point parameters outside their domain."""


def make_rng(rng_seed) -> np.random.Generator:
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    if isinstance(rng_seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(rng_seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(rng_seed)))


def block_seed(master_seed: int, block: int, stream: int = 0) -> np.random.SeedSequence:
    """Seed for one block of a session.

    The derived sequence is ``SeedSequence(master_seed, spawn_key=(block, stream))``.
    Distinct ``(block, stream)`` pairs give distinct spawn keys, so streams never
    collide and any block can be regenerated without replaying the others.
    """
    return np.random.SeedSequence(master_seed, spawn_key=(int(block), int(stream)))


@dataclass(frozen=True)
class ChannelParams:
    """Physical channel and modulation, with derived variances and SNR."""

    T: float
    xi: float
    sigma_x2: float
    sigma_ygx2: float = field(init=False)
    sigma_y2: float = field(init=False)
    eps: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.T <= 1.0):
            raise ChannelError(f"transmittance T must lie in (0, 1], got {self.T!r}")
        if not self.xi >= 0.0:
            raise ChannelError(f"excess noise xi must be >= 0, got {self.xi!r}")
        if not self.sigma_x2 > 0.0:
            raise ChannelError(f"modulation variance must be > 0, got {self.sigma_x2!r}")
        sigma_ygx2 = 0.5 + 0.5 * self.T * self.xi
        object.__setattr__(self, "sigma_ygx2", sigma_ygx2)
        object.__setattr__(self, "sigma_y2", self.T * self.sigma_x2 + sigma_ygx2)
        object.__setattr__(self, "eps", self.T * self.sigma_x2 / sigma_ygx2)

    @property
    def sigma_x(self) -> float:
        return math.sqrt(self.sigma_x2)

    @property
    def sigma_y(self) -> float:
        return math.sqrt(self.sigma_y2)

    @property
    def sigma_ygx(self) -> float:
        return math.sqrt(self.sigma_ygx2)


def derive_channel(T: float, xi: float, sigma_x2: float) -> ChannelParams:
    return ChannelParams(float(T), float(xi), float(sigma_x2))


def is_power_of_two(q: int) -> bool:
    return isinstance(q, (int, np.integer)) and q >= 1 and (q & (q - 1)) == 0


@dataclass(frozen=True)
class OperatingPoint:
    """Codebook size, capacity offset and threshold offset, with derived n and theta.

    ``n_real`` is the unrounded block length used by the analytic formulas;
    ``n`` is the integer block length used by the simulator.
    """

    q: int
    gamma: float
    delta: float
    n_real: float
    n: int
    theta: float

    @property
    def log2q(self) -> int:
        return int(self.q).bit_length() - 1


def threshold(q: int, gamma: float, delta: float) -> float:
    """Score threshold: mean true score in the Gaussian model plus ``delta``."""
    if not 1.0 + gamma > 0.0:
        raise ChannelError(f"need 1 + gamma > 0, got gamma={gamma!r}")
    return math.sqrt(2.0 * math.log(q) / (1.0 + gamma)) + delta


def derive_operating_point(params: ChannelParams, q: int, gamma: float, delta: float) -> OperatingPoint:
    if not is_power_of_two(q) or q < 2:
        raise ChannelError(f"q must be a power of two >= 2, got {q!r}")
    theta = threshold(q, gamma, delta)
    n_real = 2.0 * math.log(q) / ((1.0 + gamma) * math.log1p(params.eps))
    n = int(round(n_real))
    if n < 1:
        raise ChannelError(f"block length rounds to {n}; the operating point carries less than one pulse")
    return OperatingPoint(int(q), float(gamma), float(delta), n_real, n, theta)


@dataclass(frozen=True, eq=False)
class BlockSample:
    x: np.ndarray
    y: np.ndarray

    @property
    def n(self) -> int:
        return self.x.shape[0]


def sample_block(params: ChannelParams, n: int, rng_seed) -> BlockSample:
    """Draw Alice's matched quadratures and Bob's homodyne outcomes for one block.

    ``x`` is drawn first, then the noise, both from the same generator.
    """
    if n < 1:
        raise ChannelError(f"block length must be >= 1, got {n}")
    rng = make_rng(rng_seed)
    x = rng.standard_normal(n) * params.sigma_x
    noise = rng.standard_normal(n) * params.sigma_ygx
    y = math.sqrt(params.T) * x + noise
    x.flags.writeable = False
    y.flags.writeable = False
    return BlockSample(x, y)
