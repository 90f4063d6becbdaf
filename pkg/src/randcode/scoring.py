"""Row scores, the likelihood-ratio oracle and discretized (LUT) scoring.

The score of a candidate row ``m`` against Alice's ``x`` is

    J = [ (m/sy).(x/sx)/sqrt(n) + c0 (1 - m.m/(n sy^2)) ] / den
    c0  = sqrt(n eps / (1 + eps)) / 2
    den = sqrt(x.x/(n sx^2) + eps / (2 (1 + eps)))

which has zero mean and unit variance over rows independent of ``x`` and is
a positive affine function of the log-likelihood ratio
``log f(m | x) - log f(m)``.

Sums over a row use NumPy's pairwise reduction along contiguous rows, so a
row's score does not depend on which batch it was computed in.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams
from .codebook import QuantizedVector, cell_midpoints


@dataclass(frozen=True, eq=False)
class ScoreContext:
    x: np.ndarray
    x_norm2: float
    params: ChannelParams
    inner_scale: float
    c0: float
    den: float

    @property
    def n(self) -> int:
        return self.x.shape[0]


def make_context(x, params: ChannelParams) -> ScoreContext:
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 1:
        raise ValueError("x must have at least one component")
    eps = params.eps
    x_norm2 = float(np.dot(x, x))
    den2 = x_norm2 / (n * params.sigma_x2) + 0.5 * eps / (1.0 + eps)
    if not den2 > 0.0:
        raise ValueError("degenerate score: x = 0 and eps = 0")
    return ScoreContext(
        x=x,
        x_norm2=x_norm2,
        params=params,
        inner_scale=1.0 / (params.sigma_y * params.sigma_x * math.sqrt(n)),
        c0=0.5 * math.sqrt(n * eps / (1.0 + eps)),
        den=math.sqrt(den2),
    )


def row_sums(ctx: ScoreContext, rows: np.ndarray):
    """Per-row ``(x.m, m.m)``."""
    return (rows * ctx.x).sum(axis=1), (rows * rows).sum(axis=1)


def score_from_sums(ctx: ScoreContext, inner, m_norm2):
    corr = ctx.c0 * (1.0 - m_norm2 / (ctx.n * ctx.params.sigma_y2))
    return (ctx.inner_scale * inner + corr) / ctx.den


def score_rows(ctx: ScoreContext, rows) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[1] != ctx.n:
        raise ValueError(f"row length {rows.shape[1]} does not match n = {ctx.n}")
    return score_from_sums(ctx, *row_sums(ctx, rows))


def score(ctx: ScoreContext, m) -> float:
    return float(score_rows(ctx, m)[0])


# -- likelihood-ratio oracle ---------------------------------------------------


def log_likelihood_ratio(ctx: ScoreContext, m) -> np.ndarray:
    """``log f_{Y|X}(m | x) - log f_Y(m)`` from the Gaussian densities, per row."""
    p = ctx.params
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    resid = m - math.sqrt(p.T) * ctx.x
    n = ctx.n
    log_cond = -0.5 * (resid * resid).sum(axis=1) / p.sigma_ygx2 - 0.5 * n * math.log(2 * math.pi * p.sigma_ygx2)
    log_marg = -0.5 * (m * m).sum(axis=1) / p.sigma_y2 - 0.5 * n * math.log(2 * math.pi * p.sigma_y2)
    return log_cond - log_marg


def likelihood_ratio_order(ctx: ScoreContext, m1, m2, tol: float = 0.0) -> int:
    """Sign of ``LLR(m1) - LLR(m2)``: 1, 0 (within ``tol``) or -1."""
    d = float(np.diff(log_likelihood_ratio(ctx, np.stack([m2, m1])))[0])
    if abs(d) <= tol:
        return 0
    return 1 if d > 0 else -1


# -- analytic moments ----------------------------------------------------------


@dataclass(frozen=True)
class ScoreStats:
    mean_true: float
    var_true: float
    mean_fake: float = 0.0
    var_fake: float = 1.0


def analytic_score_stats(ctx: ScoreContext) -> ScoreStats:
    """Exact mean and variance of the true-row score given ``x``."""
    eps = ctx.params.eps
    r = ctx.x_norm2 / (ctx.n * ctx.params.sigma_x2)
    den2 = r + 0.5 * eps / (1.0 + eps)
    mean = math.sqrt(ctx.n * eps) / (1.0 + eps) ** 1.5 * (r * (1.0 + eps / 2) + eps / 2) / math.sqrt(den2)
    var = (r + eps / 2) / ((1.0 + eps) ** 3 * den2)
    return ScoreStats(mean, var)


# -- lookup-table scoring ------------------------------------------------------

LUT_MAGIC = b"RLUT"
LUT_VERSION = 1
_LUT_HEADER = struct.Struct("<4sHBB")


@dataclass(frozen=True, eq=False)
class ScoreLUT:
    """Products of cell midpoints stored on a ``2**-scale_bits`` fixed-point grid.

    Sums of integer entries are exact, so any summation order (per-component
    lookups or tallies) yields the same score bit for bit.
    """

    b: int
    scale_bits: int
    fixed: np.ndarray
    sq_fixed: np.ndarray

    @property
    def table(self) -> np.ndarray:
        return self.fixed / float(1 << self.scale_bits)


def score_lut_build(b: int = 8, scale_bits: int = 24) -> ScoreLUT:
    if not 1 <= b <= 12:
        raise ValueError(f"LUT bit depth must be in [1, 12], got {b}")
    mid = cell_midpoints(b)
    scale = float(1 << scale_bits)
    fixed = np.rint(np.outer(mid, mid) * scale).astype(np.int64)
    sq_fixed = np.rint(mid * mid * scale).astype(np.int64)
    return ScoreLUT(b, scale_bits, fixed, sq_fixed)


def _lut_score(ctx: ScoreContext, inner_fixed, sq_fixed, lut: ScoreLUT):
    scale = float(1 << lut.scale_bits)
    inner = np.asarray(inner_fixed, dtype=np.float64) / scale
    m2 = np.asarray(sq_fixed, dtype=np.float64) / scale
    n = ctx.n
    return (inner / math.sqrt(n) + ctx.c0 * (1.0 - m2 / n)) / ctx.den


def _check_quantized(ctx, qx: QuantizedVector, qm: QuantizedVector, lut: ScoreLUT):
    if qx.b != lut.b or qm.b != lut.b:
        raise ValueError("bit depth of inputs and LUT differ")
    if qx.n != ctx.n or qm.n != ctx.n:
        raise ValueError("quantized vectors must have length n")


def score_lut_direct(ctx: ScoreContext, qx: QuantizedVector, qm: QuantizedVector, lut: ScoreLUT) -> float:
    """One lookup per component."""
    _check_quantized(ctx, qx, qm, lut)
    inner = int(lut.fixed[qx.symbols, qm.symbols].sum())
    sq = int(lut.sq_fixed[qm.symbols].sum())
    return float(_lut_score(ctx, inner, sq, lut))


def score_tally(ctx: ScoreContext, qx: QuantizedVector, qm: QuantizedVector, lut: ScoreLUT) -> float:
    """Tally the ``(j, k)`` symbol pairs first, then weight each LUT entry by its count."""
    _check_quantized(ctx, qx, qm, lut)
    levels = 1 << lut.b
    tally = np.bincount(qx.symbols.astype(np.int64) * levels + qm.symbols, minlength=levels * levels)
    inner = int((tally * lut.fixed.ravel()).sum())
    sq = int((np.bincount(qm.symbols, minlength=levels) * lut.sq_fixed).sum())
    return float(_lut_score(ctx, inner, sq, lut))


def score_lut_rows(ctx: ScoreContext, qx: QuantizedVector, symbols: np.ndarray, lut: ScoreLUT) -> np.ndarray:
    """LUT scores for a ``(rows, n)`` array of symbols."""
    symbols = np.atleast_2d(symbols)
    inner = lut.fixed[qx.symbols[None, :], symbols].sum(axis=1)
    sq = lut.sq_fixed[symbols].sum(axis=1)
    return _lut_score(ctx, inner, sq, lut)


def dump_lut(lut: ScoreLUT) -> bytes:
    """Header ``<4sHBB`` (magic ``RLUT``, version, b, scale_bits) then int64 LE table and squares."""
    head = _LUT_HEADER.pack(LUT_MAGIC, LUT_VERSION, lut.b, lut.scale_bits)
    return head + lut.fixed.astype("<i8").tobytes() + lut.sq_fixed.astype("<i8").tobytes()


def load_lut(data: bytes) -> ScoreLUT:
    magic, version, b, scale_bits = _LUT_HEADER.unpack_from(data, 0)
    if magic != LUT_MAGIC or version != LUT_VERSION:
        raise ValueError("not a version-1 LUT blob")
    levels = 1 << b
    off = _LUT_HEADER.size
    fixed = np.frombuffer(data, dtype="<i8", count=levels * levels, offset=off).reshape(levels, levels)
    sq = np.frombuffer(data, dtype="<i8", count=levels, offset=off + 8 * levels * levels)
    return ScoreLUT(b, scale_bits, fixed.astype(np.int64), sq.astype(np.int64))
