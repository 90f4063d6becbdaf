"""Maximize the asymptotic key ratio over ``(sigma_x2, gamma, delta)`` at fixed ``(q, T, xi)``.

A vectorized coarse grid locates the basin; Nelder-Mead rounds (in
``log sigma_x2``, ``gamma``, ``delta``) then polish it until a round improves
the objective by less than ``rel_tol``.  Everything is deterministic: the grid
is fixed and the simplex starts from the grid cell spacing.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .analytics import (
    devetak_winter,
    error_probs,
    holevo_leakage,
    log_error_probs,
    skr_formula,
)
from .channel import derive_channel, is_power_of_two

TABLE2_T = 1e-6
TABLE2_XI = 1e-5
TABLE2_LOG2Q = (5, 10, 15, 20, 30)
TABLE2_COLUMNS = ("q", "sigma_x2", "gamma", "delta", "skr_over_dw", "p_acc", "sigma", "skr_over_delta_i")


@dataclass(frozen=True)
class SearchConfig:
    sigma_x2_bounds: tuple = (0.01, 5.0)
    gamma_bounds: tuple = (-0.9, 0.5)
    delta_bounds: tuple = (-3.0, 1.0)
    grid: int = 20
    rel_tol: float = 1e-4
    max_rounds: int = 20


@dataclass
class OptimizationResult:
    q: int
    T: float
    xi: float
    sigma_x2: float
    gamma: float
    delta: float
    skr: float
    skr_over_dw: float
    p_acc: float
    ser: float
    skr_over_delta_i: float
    rounds: int
    boundary_hits: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    @property
    def best(self):
        return self.sigma_x2, self.gamma, self.delta

    def to_json(self, with_trace: bool = True) -> str:
        d = asdict(self)
        if not with_trace:
            d.pop("trace")
        return json.dumps(d, indent=2)


def skr_grid(T, xi, q, sigma_x2, gamma, delta):
    """Asymptotic key ratio (bits per pulse) on broadcastable arrays."""
    sx2 = np.asarray(sigma_x2, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    eps = T * sx2 / (0.5 + 0.5 * T * xi)
    i_xy = 0.5 * np.log1p(eps) / math.log(2.0)
    i_ey = holevo_leakage(T, xi, sx2)
    log_ta, log_fa = log_error_probs(q, gamma, delta)
    p_acc = np.exp(log_ta) + np.exp(log_fa)
    with np.errstate(over="ignore"):
        ser = 1.0 / (1.0 + np.exp(log_ta - log_fa))
    ber = ser * q / (2.0 * (q - 1))
    return skr_formula((1.0 + gamma) * i_xy, p_acc, ber, math.log2(q), i_ey)


def _interior(lo, hi, k):
    return np.linspace(lo, hi, k + 2)[1:-1]


def _grid_axes(cfg: SearchConfig):
    s = np.geomspace(*cfg.sigma_x2_bounds, cfg.grid)
    g = _interior(*cfg.gamma_bounds, cfg.grid)
    d = _interior(*cfg.delta_bounds, cfg.grid)
    return s, g, d


def _check(T, xi, q):
    derive_channel(T, xi, 1.0)
    if not (is_power_of_two(q) and q >= 2):
        raise ValueError(f"q must be a power of two >= 2, got {q!r}")


def optimize_skr(T: float, xi: float, q: int, config: SearchConfig | None = None) -> OptimizationResult:
    cfg = config or SearchConfig()
    _check(T, xi, q)
    dw = devetak_winter(T)
    s_ax, g_ax, d_ax = _grid_axes(cfg)
    S, G, D = np.meshgrid(s_ax, g_ax, d_ax, indexing="ij")
    vals = skr_grid(T, xi, q, S, G, D) / dw
    # C-order argmax over a sigma-major grid returns the smallest sigma_x2 on ties
    i, j, k = np.unravel_index(int(np.argmax(vals)), vals.shape)
    trace = [(float(s_ax[i]), float(g_ax[j]), float(d_ax[k]), float(vals[i, j, k]))]

    lo = np.array([math.log(cfg.sigma_x2_bounds[0]), cfg.gamma_bounds[0], cfg.delta_bounds[0]])
    hi = np.array([math.log(cfg.sigma_x2_bounds[1]), cfg.gamma_bounds[1], cfg.delta_bounds[1]])

    def objective(p):
        if np.any(p < lo) or np.any(p > hi):
            return math.inf
        v = float(skr_grid(T, xi, q, math.exp(p[0]), p[1], p[2])) / dw
        trace.append((math.exp(p[0]), float(p[1]), float(p[2]), v))
        return -v

    step = np.array([math.log(s_ax[1] / s_ax[0]), g_ax[1] - g_ax[0], d_ax[1] - d_ax[0]])
    x = np.array([math.log(s_ax[i]), g_ax[j], d_ax[k]])
    best = -objective(x)
    rounds = 0
    for rounds in range(1, cfg.max_rounds + 1):
        simplex = np.vstack([x, x + np.diag(step)])
        res = optimize.minimize(objective, x, method="Nelder-Mead",
                                options={"initial_simplex": simplex, "xatol": 1e-10, "fatol": 1e-14,
                                         "maxiter": 20000, "maxfev": 40000})
        gain = float(-res.fun) - best
        if gain > 0:
            x, best = res.x, float(-res.fun)
        step = step / 4.0
        if gain <= cfg.rel_tol * abs(best):
            break

    sx2, gamma, delta = math.exp(x[0]), float(x[1]), float(x[2])
    hits = []
    for name, v, (a, b) in (("sigma_x2", x[0], (lo[0], hi[0])), ("gamma", gamma, cfg.gamma_bounds),
                            ("delta", delta, cfg.delta_bounds)):
        if min(v - a, b - v) <= 1e-6 * max(1.0, abs(b - a)):
            hits.append(name)
    probs = error_probs(q, gamma, delta)
    skr = best * dw
    params = derive_channel(T, xi, sx2)
    delta_i = 0.5 * math.log2(1.0 + params.eps) - float(holevo_leakage(T, xi, sx2))
    return OptimizationResult(
        q=q, T=T, xi=xi, sigma_x2=sx2, gamma=gamma, delta=delta, skr=skr, skr_over_dw=best,
        p_acc=probs.p_acc, ser=probs.ser, skr_over_delta_i=float(skr / delta_i), rounds=rounds,
        boundary_hits=hits, trace=trace,
    )


def table2(log2q_list=TABLE2_LOG2Q, T: float = TABLE2_T, xi: float = TABLE2_XI, config=None) -> list[dict]:
    rows = []
    for k in log2q_list:
        r = optimize_skr(T, xi, 2 ** int(k), config)
        rows.append({"q": r.q, "sigma_x2": r.sigma_x2, "gamma": r.gamma, "delta": r.delta,
                     "skr_over_dw": r.skr_over_dw, "p_acc": r.p_acc, "sigma": r.ser,
                     "skr_over_delta_i": r.skr_over_delta_i})
    return rows


@dataclass(frozen=True)
class Landscape:
    """SKR/DW on a ``gamma`` x ``delta`` grid; ``values[i, j]`` is at ``(gammas[i], deltas[j])``."""

    q: int
    sigma_x2: float
    gammas: np.ndarray
    deltas: np.ndarray
    values: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gamma\\delta"] + [repr(float(d)) for d in self.deltas])
        for g, row in zip(self.gammas, self.values):
            w.writerow([repr(float(g))] + [repr(float(v)) for v in row])
        return buf.getvalue()

    def as_dict(self) -> dict:
        return {"q": self.q, "sigma_x2": self.sigma_x2, "gamma": self.gammas.tolist(),
                "delta": self.deltas.tolist(), "skr_over_dw": self.values.tolist()}


def landscape_slice(T, xi, q, sigma_x2, gamma_range=(-0.5, -0.1), delta_range=(-1.0, 0.0),
                    resolution=101) -> Landscape:
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    ng, nd = resolution
    if ng < 1 or nd < 1:
        raise ValueError("resolution must be positive")
    _check(T, xi, q)
    gammas = np.linspace(*gamma_range, ng)
    deltas = np.linspace(*delta_range, nd)
    G, D = np.meshgrid(gammas, deltas, indexing="ij")
    vals = skr_grid(T, xi, q, sigma_x2, G, D) / devetak_winter(T)
    return Landscape(q, float(sigma_x2), gammas, deltas, np.asarray(vals))


__all__ = [
    "SearchConfig", "OptimizationResult", "optimize_skr", "table2", "skr_grid",
    "landscape_slice", "Landscape", "TABLE2_COLUMNS"
]
