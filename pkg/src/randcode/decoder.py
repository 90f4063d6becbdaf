"""Alice's per-block decision: accept iff exactly one row scores above threshold.

Two entry points share the decision rule:

* :func:`decode_block_reference` scores every row exactly, in one pass.
* :func:`decode_block` adds the fast paths: row batches with early abort on a
  second above-threshold row, the deferred ``m.m`` correction (a row whose
  score is provably at most ``theta`` without it is never finished) and
  optional checkpoint pruning.

With pruning disabled both return the same decision; the per-row score
expressions and summation order are identical.  Pruning may cull a row that
would have crossed the threshold (it is a recall loss), but any winner is
always scored exactly before it is accepted.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .codebook import QuantizedVector, RealTableProvider
from .scoring import ScoreContext, ScoreLUT, row_sums, score_from_sums, score_lut_rows


class DecodeError(RuntimeError):
    """The row provider failed; the block has no decision (distinct from rejection)."""


class Reason(str, enum.Enum):
    UNIQUE = "unique-winner"
    NONE = "zero-above-threshold"
    MULTIPLE = "multiple-above-threshold"


@dataclass(frozen=True)
class DecodeOutcome:
    accepted: bool
    winner: int | None
    reason: Reason
    max_score: float = -math.inf
    runner_up: float = -math.inf
    rows_scored: int = 0
    rows_pruned: int = 0
    rows_resolved: int = 0
    mac_count: int = 0

    def as_dict(self) -> dict:
        d = self.__dict__.copy()
        d["reason"] = self.reason.value
        return d


@dataclass(frozen=True)
class PruneSchedule:
    """Culling checkpoints as ``(fraction of n, z)`` pairs.

    At a checkpoint a row is culled when even an optimistic completion of
    its partial sums stays at or below ``theta``: the remaining inner product
    is taken at the true-row mean plus ``z`` standard deviations and the
    remaining ``m.m`` mass at its expectation minus ``z`` standard deviations.
    """

    checkpoints: tuple = ((0.25, 3.0), (0.5, 3.0))
    enabled: bool = True

    def __post_init__(self):
        fracs = [f for f, _ in self.checkpoints]
        if any(not 0.0 < f < 1.0 for f in fracs) or any(b <= a for a, b in zip(fracs, fracs[1:])):
            raise ValueError("checkpoint fractions must be strictly increasing in (0, 1)")
        if any(z <= 0 for _, z in self.checkpoints):
            raise ValueError("cull parameters z must be positive")


NO_PRUNING = PruneSchedule(enabled=False)
_GUARD = 1e-9


def as_provider(table):
    if isinstance(table, np.ndarray):
        return RealTableProvider(table)
    if hasattr(table, "public") and hasattr(table, "u"):
        return table.public()
    return table


def _fetch(provider, start, stop):
    try:
        rows = provider.rows(start, stop)
    except Exception as exc:  # noqa: BLE001 - any provider fault is a block error
        raise DecodeError(f"row provider failed on rows [{start}, {stop})") from exc
    return np.ascontiguousarray(rows, dtype=np.float64)


class _Decision:
    """Running count of above-threshold rows, tracking the winner and top two scores."""

    def __init__(self, theta):
        self.theta = theta
        self.count = 0
        self.winner = None
        self.best = -math.inf
        self.second = -math.inf

    def add(self, start, scores):
        if scores.size:
            top = np.sort(scores)[-2:]
            for s in top:
                if s > self.best:
                    self.best, self.second = float(s), self.best
                elif s > self.second:
                    self.second = float(s)
        above = np.flatnonzero(scores > self.theta)
        if above.size and self.count == 0:
            self.winner = start + int(above[0])
        self.count += int(above.size)

    def outcome(self, **diag):
        if self.count == 1:
            return DecodeOutcome(True, self.winner, Reason.UNIQUE, self.best, self.second, **diag)
        reason = Reason.NONE if self.count == 0 else Reason.MULTIPLE
        return DecodeOutcome(False, None, reason, self.best, self.second, **diag)


def decode_block_reference(ctx: ScoreContext, table, theta: float) -> DecodeOutcome:
    provider = as_provider(table)
    q, n = provider.q, ctx.n
    rows = _fetch(provider, 0, q)
    scores = score_from_sums(ctx, *row_sums(ctx, rows))
    decision = _Decision(theta)
    decision.add(0, scores)
    return decision.outcome(rows_scored=q, mac_count=2 * q * n)


def deferred_correction(ctx: ScoreContext, inner: float, m_norm2_partial: float, stage: float,
                        tail_max_abs: float = math.inf):
    """Interval containing the final score while the ``m.m`` sum is unfinished.

    ``inner`` is the complete ``x.m``; ``m_norm2_partial`` covers the first
    ``round(stage * n)`` components.  The remaining mass ``R`` lies in
    ``[0, (n - k) * tail_max_abs**2]``, which brackets the correction term.
    With the default unbounded components the lower end is ``-inf``; at
    ``stage == 1`` the interval collapses to the exact score.
    """
    if not 0.0 <= stage <= 1.0:
        raise ValueError("stage must lie in [0, 1]")
    n = ctx.n
    remaining = n - int(round(stage * n))
    upper = float(score_from_sums(ctx, inner, m_norm2_partial))
    if remaining == 0:
        return upper, upper
    r_max = remaining * tail_max_abs * tail_max_abs
    lower = -math.inf if math.isinf(r_max) else float(score_from_sums(ctx, inner, m_norm2_partial + r_max))
    return lower, upper


def _cull_bound(ctx: ScoreContext, inner_k, m2_k, k, x_tail_norm2, z):
    """Optimistic final score from partial sums over the first ``k`` components."""
    p = ctx.params
    tail = ctx.n - k
    inner_hi = inner_k + math.sqrt(p.T) * x_tail_norm2 + z * p.sigma_y * math.sqrt(x_tail_norm2)
    expect_r = min(tail * p.sigma_y2, p.T * x_tail_norm2 + tail * p.sigma_ygx2)
    r_lo = max(0.0, expect_r - z * p.sigma_y2 * math.sqrt(2.0 * tail))
    return score_from_sums(ctx, inner_hi, m2_k + r_lo)


def decode_block(ctx: ScoreContext, table, theta: float, schedule: PruneSchedule = NO_PRUNING,
                 batch_rows: int = 16) -> DecodeOutcome:
    provider = as_provider(table)
    q, n = provider.q, ctx.n
    x = ctx.x
    prune = schedule.enabled and bool(schedule.checkpoints)
    stages = []
    if prune:
        for frac, z in schedule.checkpoints:
            k = int(round(frac * n))
            if 0 < k < n:
                stages.append((k, float(np.dot(x[k:], x[k:])), z))

    decision = _Decision(theta)
    scored = pruned = resolved = macs = 0
    for start in range(0, q, batch_rows):
        stop = min(start + batch_rows, q)
        rows = _fetch(provider, start, stop)
        if rows.shape[1] != n:
            raise DecodeError(f"provider returned rows of length {rows.shape[1]}, expected {n}")
        live = np.arange(stop - start)
        done = 0
        inner = np.zeros(live.size)
        m2 = np.zeros(live.size)
        for k, xt2, z in stages:
            part = rows[live, done:k]
            inner += (part * x[done:k]).sum(axis=1)
            m2 += (part * part).sum(axis=1)
            macs += 2 * (k - done) * live.size
            done = k
            keep = _cull_bound(ctx, inner, m2, k, xt2, z) > theta
            pruned += int(live.size - keep.sum())
            live, inner, m2 = live[keep], inner[keep], m2[keep]
            if not live.size:
                break
        if not live.size:
            continue
        tail = rows[live, done:]
        inner = inner + (tail * x[done:]).sum(axis=1) if done else (tail * x).sum(axis=1)
        macs += (n - done) * live.size
        # correction term deferred: m.m >= 0 bounds the score from above
        open_ = score_from_sums(ctx, inner, 0.0) > theta
        resolved += int(live.size - open_.sum())
        if not open_.any():
            continue
        live, inner = live[open_], inner[open_]
        tail = rows[live, done:]
        m2 = m2[open_] + (tail * tail).sum(axis=1) if done else (tail * tail).sum(axis=1)
        macs += (n - done) * live.size
        batch = score_from_sums(ctx, inner, m2)
        if done:
            # staged sums differ from a single pass in the last bits; settle near-threshold rows exactly
            near = batch > theta - _GUARD
            if near.any():
                batch[near] = score_from_sums(ctx, *row_sums(ctx, rows[live[near]]))
                macs += 2 * n * int(near.sum())
        scores = np.full(stop - start, -math.inf)
        scores[live] = batch
        scored += live.size
        decision.add(start, scores)
        if decision.count >= 2:
            break
    return decision.outcome(rows_scored=scored, rows_pruned=pruned, rows_resolved=resolved, mac_count=macs)


def decode_block_lut(ctx: ScoreContext, qx: QuantizedVector, symbol_rows, theta: float, lut: ScoreLUT,
                     batch_rows: int = 64) -> DecodeOutcome:
    """Exhaustive decision with discretized inputs scored through a LUT.

    ``symbol_rows`` needs ``q`` and ``symbols(start, stop)``.
    """
    decision = _Decision(theta)
    q = symbol_rows.q
    for start in range(0, q, batch_rows):
        stop = min(start + batch_rows, q)
        try:
            sym = symbol_rows.symbols(start, stop)
        except Exception as exc:  # noqa: BLE001
            raise DecodeError(f"row provider failed on rows [{start}, {stop})") from exc
        decision.add(start, score_lut_rows(ctx, qx, sym, lut))
    return decision.outcome(rows_scored=q, mac_count=2 * q * ctx.n)
