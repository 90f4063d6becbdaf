"""Monte-Carlo reconciliation sessions with an exact key-budget ledger.

Each block ``r`` draws its randomness from ``block_seed(seed, r, stream)``:

* stream 0: Alice's ``x`` and the channel noise,
* stream 1: Bob's secret index ``u`` (first draw) and, for the true-random
  table, the fake rows,
* stream 2: the public seed ``tau`` of the pseudorandom table.

Both table variants therefore see the same ``(x, y, u)`` for a given block
(common random numbers), and results do not depend on how blocks are split
across worker processes.

Two simulation levels exist.  ``model="vector"`` builds the codebook and runs
the decoder on real vectors (ground truth).  ``model="gaussian"`` skips the
vectors and draws scores from the Gaussian score model (fakes ``N(0, 1)``,
true row ``N(mu, 1)``); it is a model-level shortcut for large ``q``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln, ndtr

from .analytics import binary_entropy, error_probs, leakage_ey
from .channel import ChannelParams, OperatingPoint, block_seed, make_rng, sample_block
from .codebook import PseudorandomRowProvider, build_random_table, pr_encode, quantize
from .decoder import NO_PRUNING, PruneSchedule, decode_block
from .scoring import make_context, score_rows

VARIANTS = ("true-random", "pseudorandom")
MODELS = ("vector", "gaussian")
DEFAULT_COMPUTE_BUDGET = 1e10
_EXACT_FAKES_MAX_Q = 1 << 12
_FAKE_STATS_ROWS = 64


class ComputeBudgetError(RuntimeError):
    """The requested session exceeds the configured ``n * q * N`` budget."""


def exact_log_binomial(N: int, k: int) -> float:
    """``log2 C(N, k)`` through log-gamma."""
    if not 0 <= k <= N:
        raise ValueError(f"need 0 <= k <= N, got N={N}, k={k}")
    if k == 0 or k == N:
        return 0.0
    return float((gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1)) / math.log(2.0))


@dataclass(frozen=True)
class SessionConfig:
    params: ChannelParams
    op: OperatingPoint
    N: int
    seed: int = 0
    variant: str = "true-random"
    b: int = 8
    expander: str = "philox"
    model: str = "vector"
    schedule: PruneSchedule = NO_PRUNING
    compute_budget: float = DEFAULT_COMPUTE_BUDGET
    zero_noise: bool = False
    workers: int = 1
    record_blocks: bool = False

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def work(self) -> float:
        if self.model == "gaussian":
            return float(min(self.op.q, _EXACT_FAKES_MAX_Q)) * self.N
        return float(self.op.n) * self.op.q * self.N


@dataclass(frozen=True)
class KeyBudgetLedger:
    """Bit accounting of one session; every deduction is a length, never a payload.

    The public seed of the pseudorandom table is not deducted.
    """

    N: int
    n: int
    n_acc: int
    raw: float
    otp_nacc: float
    otp_alpha: float
    otp_syndrome: float
    otp_final_bit: float
    leakage: float

    @property
    def deductions(self) -> float:
        return self.otp_nacc + self.otp_alpha + self.otp_syndrome + self.otp_final_bit + self.leakage

    @property
    def net_key(self) -> float:
        return self.raw - self.deductions

    @property
    def skr_finite(self) -> float:
        return self.net_key / (self.N * self.n)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(net_key=self.net_key, skr_finite=self.skr_finite)
        return d


def key_budget(params: ChannelParams, op: OperatingPoint, N: int, n_acc: int) -> KeyBudgetLedger:
    log2q = op.log2q
    ber = error_probs(op.q, op.gamma, op.delta).ber
    return KeyBudgetLedger(
        N=N,
        n=op.n,
        n_acc=n_acc,
        raw=float(n_acc * log2q),
        otp_nacc=math.log2(N),
        otp_alpha=exact_log_binomial(N, n_acc),
        otp_syndrome=float(binary_entropy(ber)) * n_acc * log2q,
        otp_final_bit=1.0,
        leakage=n_acc * op.n * leakage_ey(params),
    )


@dataclass(frozen=True)
class BlockRecord:
    block: int
    u: int
    accepted: bool
    winner: int | None
    reason: str
    true_score: float
    max_score: float
    rows_scored: int
    rows_pruned: int
    mac_count: int
    fake_sum: float
    fake_sumsq: float
    fake_count: int

    @property
    def symbol_error(self) -> bool:
        return self.accepted and self.winner != self.u


@dataclass
class SessionResult:
    n_blocks: int
    n_acc: int
    alpha: str
    symbol_errors: int
    p_acc: float
    ser: float
    true_score_mean: float
    fake_score_mean: float
    fake_score_var: float
    mac_count: int
    rows_pruned: int
    ledger: KeyBudgetLedger
    records: list = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k not in ("ledger", "records")}
        d["ledger"] = self.ledger.as_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def records_jsonl(self) -> str:
        return "".join(json.dumps(asdict(r)) + "\n" for r in self.records)


def _vector_block(cfg: SessionConfig, r: int) -> BlockRecord:
    params, op = cfg.params, cfg.op
    q, n = op.q, op.n
    s = sample_block(params, n, block_seed(cfg.seed, r, 0))
    y = math.sqrt(params.T) * s.x if cfg.zero_noise else s.y
    table_seed = block_seed(cfg.seed, r, 1)
    ctx = make_context(s.x, params)
    if cfg.variant == "true-random":
        table = build_random_table(y, q, params.sigma_y2, table_seed)
        u, provider = table.u, table.public()
    else:
        u = int(make_rng(table_seed).integers(q))
        tau = make_rng(block_seed(cfg.seed, r, 2)).bytes(32)
        cb = pr_encode(quantize(y, params.sigma_y, cfg.b), u, q, tau, cfg.expander)
        provider = PseudorandomRowProvider(cb, params.sigma_y)
    out = decode_block(ctx, provider, op.theta, cfg.schedule)

    # harness-side statistics: the true row and a fixed slice of fakes
    true_score = float(score_rows(ctx, provider.rows(u, u + 1))[0])
    k = min(q - 1, _FAKE_STATS_ROWS)
    head = min(q, u + 1 + k)
    parts = [provider.rows(u + 1, head), provider.rows(0, k - (head - u - 1))]
    fs = score_rows(ctx, np.vstack(parts)) if k else np.empty(0)
    return BlockRecord(r, u, out.accepted, out.winner, out.reason.value, true_score, out.max_score,
                       out.rows_scored, out.rows_pruned, out.mac_count,
                       float(fs.sum()), float((fs * fs).sum()), int(k))


def _gaussian_block(cfg: SessionConfig, r: int) -> BlockRecord:
    op = cfg.op
    q, theta = op.q, op.theta
    mu = math.sqrt(2.0 * math.log(q) / (1.0 + op.gamma))
    rng = make_rng(block_seed(cfg.seed, r, 0))
    u = int(rng.integers(q))
    true_score = mu + float(rng.standard_normal())
    if q <= _EXACT_FAKES_MAX_Q:
        fakes = rng.standard_normal(q - 1)
        n_above = int((fakes > theta).sum())
        best = float(fakes.max())
        fake_sum, fake_sumsq, k = float(fakes.sum()), float((fakes * fakes).sum()), q - 1
    else:
        n_above = int(rng.binomial(q - 1, float(ndtr(-theta))))
        best, fake_sum, fake_sumsq, k = math.nan, 0.0, 0.0, 0
    true_above = true_score > theta
    total = n_above + int(true_above)
    accepted = total == 1
    winner = None
    if accepted:
        # a lone fake winner sits at a uniformly random position other than u
        winner = u if true_above else int((u + 1 + rng.integers(q - 1)) % q)
    reason = "unique-winner" if accepted else ("zero-above-threshold" if total == 0 else "multiple-above-threshold")
    return BlockRecord(r, u, accepted, winner, reason, true_score, max(best, true_score), q, 0, 0,
                       fake_sum, fake_sumsq, k)


def _run_range(cfg: SessionConfig, start: int, stop: int) -> list:
    block = _gaussian_block if cfg.model == "gaussian" else _vector_block
    return [block(cfg, r) for r in range(start, stop)]


def run_session(cfg: SessionConfig) -> SessionResult:
    if cfg.work > cfg.compute_budget:
        raise ComputeBudgetError(f"session needs {cfg.work:.3g} row-component operations, "
                                 f"budget is {cfg.compute_budget:.3g}")
    if cfg.workers == 1:
        records = _run_range(cfg, 0, cfg.N)
    else:
        bounds = np.linspace(0, cfg.N, min(cfg.workers * 4, cfg.N) + 1).astype(int)
        with ProcessPoolExecutor(cfg.workers) as pool:
            parts = pool.map(_run_range, [cfg] * (len(bounds) - 1), bounds[:-1], bounds[1:])
            records = [rec for part in parts for rec in part]  # ordered reduction

    alpha = "".join("1" if rec.accepted else "0" for rec in records)
    n_acc = alpha.count("1")
    errors = sum(rec.symbol_error for rec in records)
    fake_n = sum(rec.fake_count for rec in records)
    fake_mean = sum(rec.fake_sum for rec in records) / fake_n if fake_n else math.nan
    fake_var = sum(rec.fake_sumsq for rec in records) / fake_n - fake_mean ** 2 if fake_n else math.nan
    return SessionResult(
        n_blocks=cfg.N,
        n_acc=n_acc,
        alpha=alpha,
        symbol_errors=errors,
        p_acc=n_acc / cfg.N,
        ser=errors / n_acc if n_acc else 0.0,
        true_score_mean=float(np.mean([rec.true_score for rec in records])),
        fake_score_mean=fake_mean,
        fake_score_var=fake_var,
        mac_count=sum(rec.mac_count for rec in records),
        rows_pruned=sum(rec.rows_pruned for rec in records),
        ledger=key_budget(cfg.params, cfg.op, cfg.N, n_acc),
        records=records if cfg.record_blocks else [],
    )


def score_samples(params: ChannelParams, op: OperatingPoint, N: int, seed: int = 0, fakes_per_block: int = 64):
    """True-row and fake-row scores from ``N`` vector-level blocks.

    Fake rows are fresh ``N(0, sigma_y2)`` vectors; their number per block
    does not need to match ``q`` because fakes are i.i.d. and independent of ``x``.
    """
    true_scores = np.empty(N)
    fake_scores = np.empty((N, fakes_per_block))
    for r in range(N):
        s = sample_block(params, op.n, block_seed(seed, r, 0))
        ctx = make_context(s.x, params)
        fakes = make_rng(block_seed(seed, r, 1)).standard_normal((fakes_per_block, op.n)) * params.sigma_y
        true_scores[r] = score_rows(ctx, s.y)[0]
        fake_scores[r] = score_rows(ctx, fakes)
    return true_scores, fake_scores.ravel()
