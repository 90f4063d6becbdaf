"""Closed-form error probabilities, information quantities and key ratios.

Scores are modeled as Gaussian: fakes ``N(0, 1)``, the true row
``N(mu, 1)`` with ``mu = sqrt(2 ln q / (1 + gamma))``; the threshold is
``theta = mu + delta``.  All rates are in bits per pulse.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize
from scipy.special import log_ndtr

from .channel import ChannelParams, OperatingPoint, is_power_of_two, threshold

LN2 = math.log(2.0)


class NonPhysicalError(ValueError):
    """Symplectic eigenvalue below 1: the covariance matrix is not a quantum state."""


def binary_entropy(p):
    """``h(p)`` in bits with ``h(0) = h(1) = 0``; accepts scalars or arrays."""
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -(p * np.log2(p) + (1.0 - p) * np.log2(1.0 - p))
    out = np.where((p <= 0.0) | (p >= 1.0), 0.0, out)
    return out[()] if out.ndim == 0 else out


def thermal_entropy(x):
    """``g(x) = (x + 1) log2(x + 1) - x log2(x)``, ``g(0) = 0``."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = ((x + 1.0) * np.log1p(x) - x * np.log(x)) / LN2
    out = np.where(x <= 0.0, 0.0, out)
    return out[()] if out.ndim == 0 else out


# -- error probabilities ---------------------------------------------------------


@dataclass(frozen=True)
class ErrorProbabilities:
    p_ta: float
    p_fa: float
    p_acc: float
    ser: float
    ber: float


def log_error_probs(q, gamma, delta):
    """Natural logs of the true- and false-accept probabilities (array-friendly)."""
    q = np.asarray(q, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    theta = np.sqrt(2.0 * np.log(q) / (1.0 + gamma)) + delta
    log_below = log_ndtr(theta)
    log_ta = (q - 1.0) * log_below + log_ndtr(-delta)
    log_fa = np.log(q - 1.0) + (q - 2.0) * log_below + log_ndtr(-theta) + log_ndtr(delta)
    return log_ta, log_fa


def ber_from_ser(ser, q: int):
    """Bit error rate of the binary labels given the symbol error rate.

    Exact for rational ``ser`` (e.g. :class:`fractions.Fraction`).
    """
    if not is_power_of_two(q) or q < 2:
        raise ValueError(f"q must be a power of two >= 2, got {q!r}")
    return ser * q / (2 * (q - 1))


def error_probs(q: int, gamma: float, delta: float) -> ErrorProbabilities:
    threshold(q, gamma, delta)  # domain check
    log_ta, log_fa = log_error_probs(q, gamma, delta)
    p_ta, p_fa = float(np.exp(log_ta)), float(np.exp(log_fa))
    p_acc = p_ta + p_fa
    if p_acc > 0.0:
        # ser = 1 / (1 + P_TA / P_FA), evaluated from the log ratio
        ser = float(1.0 / (1.0 + np.exp(log_ta - log_fa)))
    else:
        ser = 0.0
    return ErrorProbabilities(p_ta, p_fa, p_acc, ser, ber_from_ser(ser, q))


# -- information quantities ------------------------------------------------------


def mutual_info_xy(params: ChannelParams) -> float:
    return 0.5 * math.log1p(params.eps) / LN2


def devetak_winter(T: float) -> float:
    """Low-transmittance Devetak-Winter key ratio ``T / (2 ln 2)``."""
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T!r}")
    return T / (2.0 * LN2)


@dataclass(frozen=True)
class LeakageInputs:
    V: float
    Delta: float
    D: float
    nu1: float
    nu2: float
    nu3: float


def _excesses(T, xi, sigma_x2):
    """``nu_i^2 - 1`` for the three eigenvalues, each from positive terms only.

    With ``s = sigma_X^2``, ``A = V = 1 + 2s``, ``B = 2 sigma_Y^2`` and
    ``C = T (V^2 - 1)``:

    * ``nu3^2 - 1 = 4 s (s + 1)(1 - T + T xi) / B``
    * ``nu1^2 - nu3^2 = C (A - B)(S + A - B) / (B (S + A + B))`` for
      ``A >= B`` and ``(B - A)((A + B + S)/2 - C/B)`` otherwise, where
      ``S = sqrt((A + B)^2 - 4C)``
    * ``(nu1^2 - 1)(nu2^2 - 1) = 4 T xi s (s + 1)(2 - 2T + T xi)``.

    At low transmittance all three differences are tiny compared with the
    eigenvalues themselves, so forming them directly avoids the cancellation
    of the textbook expressions.
    """
    T = np.asarray(T, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    sx2 = np.asarray(sigma_x2, dtype=np.float64)
    V = 1.0 + 2.0 * sx2
    A, B = V, 2.0 * T * sx2 + 1.0 + T * xi
    C = T * (V * V - 1.0)
    amb = 2.0 * sx2 * (1.0 - T) - T * xi
    S = np.sqrt((A + B) ** 2 - 4.0 * C)
    ss1 = 4.0 * sx2 * (sx2 + 1.0)
    e3 = ss1 * (1.0 - T + T * xi) / B
    gap13 = np.where(amb >= 0.0, C * amb * (S + amb) / (B * (S + A + B)), -amb * (0.5 * (A + B + S) - C / B))
    e1 = e3 + gap13
    prod = T * xi * ss1 * (2.0 - 2.0 * T + T * xi)
    with np.errstate(divide="ignore", invalid="ignore"):
        e2 = np.where(prod != 0.0, prod / e1, 0.0)
    return e1, e2, e3, gap13, A, B, C


def symplectic_eigenvalues(T, xi, sigma_x2):
    """``(V, Delta, D, nu1, nu2, nu3)``: Eve's two eigenvalues and the conditional one.

    ``Delta = A^2 + B^2 - 2C`` and ``D = (AB - C)^2`` are the symplectic
    invariants (``nu1^2 + nu2^2`` and ``nu1^2 nu2^2``); the eigenvalues
    themselves come from :func:`_excesses`.  Array-friendly.
    """
    e1, e2, e3, _, A, B, C = _excesses(T, xi, sigma_x2)
    Delta = A * A + B * B - 2.0 * C
    D = (A * B - C) ** 2
    return A, Delta, D, np.sqrt(1.0 + e1), np.sqrt(1.0 + e2), np.sqrt(1.0 + e3)


def leakage_inputs(params: ChannelParams) -> LeakageInputs:
    vals = symplectic_eigenvalues(params.T, params.xi, params.sigma_x2)
    return LeakageInputs(*(float(v) for v in vals))


def _half_excess(e):
    """``(nu - 1)/2`` from ``e = nu^2 - 1``."""
    return e / (2.0 * (np.sqrt(1.0 + e) + 1.0))


def _thermal_entropy_diff(a1, a3, d):
    """``g(a1) - g(a3)`` given ``d = a1 - a3`` computed without cancellation."""
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = (d * (np.log1p(a1) - np.log(a1)) + (a3 + 1.0) * np.log1p(d / (a3 + 1.0))
                  - a3 * np.log1p(d / a3)) / LN2
    ok = (a3 > 0.0) & (d > 0.0)
    return np.where(ok, stable, thermal_entropy(a1) - thermal_entropy(a3))


def holevo_leakage(T, xi, sigma_x2, tol: float = 1e-9):
    """Eve's information about one homodyne outcome (array-friendly).

    ``g(a1) - g(a3)`` nearly cancels at low transmittance, so it is evaluated
    from ``a1 - a3`` directly rather than as a difference of two entropies.
    """
    e1, e2, e3, gap13, *_ = _excesses(T, xi, sigma_x2)
    lowest = np.minimum(np.minimum(e1, e2), e3)
    if np.any(~(lowest >= -tol)):
        raise NonPhysicalError(f"symplectic eigenvalue below 1 (nu^2 - 1 = {float(np.min(lowest))!r})")
    a1, a2, a3 = _half_excess(e1), _half_excess(e2), _half_excess(e3)
    d = gap13 / (2.0 * (np.sqrt(1.0 + e1) + np.sqrt(1.0 + e3)))
    out = thermal_entropy(a2) + _thermal_entropy_diff(a1, a3, d)
    return out[()] if np.ndim(out) == 0 else out


def leakage_ey(params: ChannelParams) -> float:
    return float(holevo_leakage(params.T, params.xi, params.sigma_x2))


def leakage_ey_small_snr(params: ChannelParams) -> float:
    """Leading low-SNR term: ``eps/(2 ln 2) * sx2 * ln((1 + sx2)/sx2)``."""
    s = params.sigma_x2
    return params.eps / (2.0 * LN2) * s * math.log1p(1.0 / s)


# -- key ratios --------------------------------------------------------------------


@dataclass(frozen=True)
class RateReport:
    i_xy: float
    i_ey: float
    delta_i: float
    dw: float
    skr: float
    skr_over_dw: float
    skr_over_delta_i: float
    finite_n_term: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def skr_formula(code_rate, p_acc, ber, log2q, i_ey):
    """Asymptotic key ratio from its ingredients (array-friendly).

    ``code_rate`` is ``(1 + gamma) I(X;Y) = log2(q) / n``.  Written without
    dividing by ``p_acc`` so that ``p_acc = 0`` gives exactly 0.
    """
    return p_acc * (code_rate * (1.0 - binary_entropy(ber)) - i_ey) - code_rate * binary_entropy(p_acc) / log2q


def skr_infinity(params: ChannelParams, op: OperatingPoint, probs: ErrorProbabilities, N: int | None = None) -> RateReport:
    """Asymptotic key ratio; the ``log2(2N)/(N n)`` term is reported separately when ``N`` is given."""
    i_xy = mutual_info_xy(params)
    i_ey = leakage_ey(params)
    code_rate = (1.0 + op.gamma) * i_xy
    skr = float(skr_formula(code_rate, probs.p_acc, probs.ber, op.log2q, i_ey))
    finite = math.log2(2 * N) / (N * op.n_real) if N else 0.0
    dw = devetak_winter(params.T)
    delta_i = i_xy - i_ey
    return RateReport(i_xy, i_ey, delta_i, dw, skr, skr / dw, skr / delta_i, finite)


# -- scheme without threshold ------------------------------------------------------

_GH_START = 32
_GH_MAX = 512


def _log_max_density(t, q):
    """Log-density of the largest of ``q - 1`` standard normals."""
    return math.log(q - 1) - 0.5 * t * t - 0.5 * math.log(2 * math.pi) + (q - 2) * log_ndtr(t)


def _max_mode_and_scale(q):
    if q == 2:
        return 0.0, 1.0

    def slope(t):
        return -t + (q - 2) * math.exp(-0.5 * t * t - 0.5 * math.log(2 * math.pi) - float(log_ndtr(t)))

    t0 = optimize.brentq(slope, 0.0, 40.0, xtol=1e-14)
    r = math.exp(-0.5 * t0 * t0 - 0.5 * math.log(2 * math.pi) - float(log_ndtr(t0)))
    curvature = -1.0 + (q - 2) * (-t0 * r - r * r)
    return t0, 1.0 / math.sqrt(-curvature)


def omega(q: int, gamma: float, rtol: float = 1e-10) -> float:
    """Symbol error rate of the always-accept variant.

    ``1 - omega`` is the chance that the true score beats every fake, i.e.
    ``E[1 - Phi(t - mu)]`` with ``t`` the largest of ``q - 1`` fake scores.
    That expectation is taken with adaptive Gauss-Hermite quadrature: the
    probabilists' rule is centred on the mode of the density of ``t`` and
    scaled by its curvature there, starting at 32 nodes and doubling (up to
    512) until two successive estimates agree to ``rtol``.
    """
    mu = math.sqrt(2.0 * math.log(q) / (1.0 + gamma))
    t0, scale = _max_mode_and_scale(q)

    def estimate(nodes):
        z, w = np.polynomial.hermite_e.hermegauss(nodes)
        t = t0 + scale * z
        logf = _log_max_density(t, q) + log_ndtr(mu - t) + 0.5 * z * z
        return scale * float(np.dot(w, np.exp(logf)))

    nodes = _GH_START
    prev = estimate(nodes)
    while nodes < _GH_MAX:
        nodes *= 2
        cur = estimate(nodes)
        if abs(cur - prev) <= rtol * max(abs(1.0 - cur), 1e-300):
            return 1.0 - cur
        prev = cur
    return 1.0 - prev


def no_threshold_variant(params: ChannelParams, q: int, gamma: float) -> dict:
    w = omega(q, gamma)
    ber = ber_from_ser(w, q)
    skr = (1.0 + gamma) * mutual_info_xy(params) * (1.0 - binary_entropy(ber)) - leakage_ey(params)
    return {"omega": w, "ber": ber, "skr": float(skr), "skr_over_dw": float(skr) / devetak_winter(params.T)}
