"""Random-codebook reconciliation for long-distance CV-QKD.

Alice scores every row of Bob's random codebook against her modulation
vector and accepts a block when exactly one row clears the threshold.
The package covers the channel model, codebook construction (truly random,
quantized and seed-expanded), scoring, the decoder, closed-form key-rate
analytics, the operating-point optimizer and an end-to-end session simulator.
"""

from .analytics import error_probs, holevo_leakage, omega, skr_infinity
from .channel import ChannelParams, OperatingPoint, derive_channel, derive_operating_point, sample_block
from .decoder import DecodeOutcome, PruneSchedule, decode_block, decode_block_reference
from .optimizer import optimize_skr, table2
from .protocol import SessionConfig, run_session
from .scoring import make_context, score

__version__ = "0.1.0"

__all__ = [
    "ChannelParams", "OperatingPoint", "derive_channel", "derive_operating_point", "sample_block",
    "make_context", "score", "decode_block", "decode_block_reference", "DecodeOutcome", "PruneSchedule",
    "error_probs", "holevo_leakage", "omega", "skr_infinity", "optimize_skr", "table2",
    "SessionConfig", "run_session",
]
