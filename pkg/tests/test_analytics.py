import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from randcode.analytics import (
    NonPhysicalError,
    ber_from_ser,
    binary_entropy,
    devetak_winter,
    error_probs,
    holevo_leakage,
    leakage_ey_small_snr,
    log_error_probs,
    mutual_info_xy,
    no_threshold_variant,
    omega,
    skr_formula,
    skr_infinity,
    symplectic_eigenvalues,
    thermal_entropy,
)
from randcode.channel import derive_channel, derive_operating_point

# 60-digit evaluations of the covariance-matrix expressions (no stabilizing rewrites)
HOLEVO = [
    ((1e-6, 1e-5, 0.3), 1.9058769006736455034e-7),
    ((0.5, 0.01, 2.0), 0.47934975190491184638),
    ((1e-2, 0.0, 0.095), 0.00031577935307289698289),
    ((1e-6, 1e-5, 9.37), 0.000012844310260992688248),
    ((0.9, 0.05, 0.5), 0.23161086838357796949),
]
# (q, gamma, delta) -> (P_TA, P_FA), same precision
ERRORS = [
    ((32, -0.45, -0.78), 0.71711879915064411235, 0.017386271229053305568),
    ((1024, -0.28, -0.5), 0.65661466481729722106, 0.01515124420470732134),
    ((2 ** 15, -0.21, -0.40), 0.63180792089402950214, 0.012188247936240764304),
    ((2 ** 30, -0.13, -0.24), 0.58693783942374867114, 0.0053431105949110656538),
    ((2, 0.0, 0.0), 0.44024202713762201979, 0.059757972862377980215),
]
OMEGA = [((2, 0.0), 0.20254798321651241075), ((32, -0.45), 0.0909949510046812142),
         ((1024, -0.28), 0.14094446445591856262)]


def test_binary_entropy():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == binary_entropy(1.0) == 0.0
    np.testing.assert_allclose(binary_entropy([0.11, 0.89]), 0.4999162, rtol=1e-6)


def test_thermal_entropy():
    assert thermal_entropy(0.0) == 0.0
    assert thermal_entropy(1.0) == pytest.approx(2.0)


@pytest.mark.parametrize("args,want", HOLEVO)
def test_holevo_oracle(args, want):
    assert holevo_leakage(*args) == pytest.approx(want, rel=1e-12)


@settings(max_examples=200)
@given(T=st.floats(1e-9, 1.0), xi=st.floats(0.0, 0.1), sx2=st.floats(1e-3, 100.0))
def test_holevo_nonnegative_and_increasing_in_variance(T, xi, sx2):
    iey = holevo_leakage(T, xi, sx2)
    assert np.isfinite(iey) and 0.0 <= iey
    # near T = 1 the noise-cloner term can dominate and the curve is not monotone
    if T <= 0.5:
        assert holevo_leakage(T, xi, 1.5 * sx2) >= iey * (1 - 1e-12)


def test_eigenvalue_invariants():
    V, Delta, D, nu1, nu2, nu3 = symplectic_eigenvalues(0.3, 0.02, 1.5)
    assert nu1 ** 2 + nu2 ** 2 == pytest.approx(Delta, rel=1e-13)
    assert (nu1 * nu2) ** 2 == pytest.approx(D, rel=1e-13)
    assert min(nu1, nu2, nu3) >= 1.0


def test_pure_loss_eve_second_mode_is_vacuum():
    _, _, _, nu1, nu2, nu3 = symplectic_eigenvalues(1e-3, 0.0, 2.0)
    assert nu2 == 1.0


def test_holevo_vectorized_matches_scalar():
    s = np.geomspace(0.01, 100, 7)
    np.testing.assert_array_equal(holevo_leakage(1e-6, 1e-5, s), [holevo_leakage(1e-6, 1e-5, v) for v in s])


def test_nonphysical_input():
    with pytest.raises(NonPhysicalError):
        holevo_leakage(1.5, 0.0, 1.0)


def test_small_snr_approximation_converges_at_higher_sigma():
    rel = []
    for s in (0.05, 0.5, 5.0):
        p = derive_channel(1e-6, 1e-5, s)
        rel.append(abs(leakage_ey_small_snr(p) / holevo_leakage(1e-6, 1e-5, s) - 1))
    assert rel[0] > rel[1] > rel[2]
    assert rel[2] < 1e-3


def test_high_sigma_leakage_ratio():
    p = derive_channel(1e-6, 1e-5, 9.37)
    assert holevo_leakage(1e-6, 1e-5, 9.37) / mutual_info_xy(p) == pytest.approx(0.95, abs=0.005)


def test_devetak_winter():
    assert devetak_winter(2 * math.log(2)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        devetak_winter(0.0)


@pytest.mark.parametrize("args,ta,fa", ERRORS)
def test_error_probs_oracle(args, ta, fa):
    e = error_probs(*args)
    assert e.p_ta == pytest.approx(ta, rel=1e-13)
    assert e.p_fa == pytest.approx(fa, rel=1e-13)
    assert e.ser == pytest.approx(fa / (ta + fa), rel=1e-13)
    assert e.ber == pytest.approx(e.ser * args[0] / (2 * (args[0] - 1)), rel=1e-15)


def test_error_probs_by_quadrature():
    # P_TA directly as an integral over the true score
    q, gamma, delta = 32, -0.45, -0.78
    mu = math.sqrt(2 * math.log(q) / (1 + gamma))
    theta = mu + delta
    ta = stats.norm.cdf(theta) ** (q - 1) * stats.norm.sf(delta)
    fa = integrate.quad(lambda t: (q - 1) * stats.norm.pdf(t) * stats.norm.cdf(theta) ** (q - 2), theta, 40)[0]
    fa *= stats.norm.cdf(delta)
    e = error_probs(q, gamma, delta)
    assert e.p_ta == pytest.approx(ta, rel=1e-12)
    assert e.p_fa == pytest.approx(fa, rel=1e-9)


@given(st.integers(1, 40), st.floats(-0.9, 1.0), st.floats(-3, 3))
def test_error_probs_are_probabilities(k, gamma, delta):
    e = error_probs(2 ** k, gamma, delta)
    assert 0.0 <= e.p_ta <= 1.0 and 0.0 <= e.p_fa <= 1.0
    assert e.p_acc <= 1.0 + 1e-12
    assert 0.0 <= e.ser <= 1.0


def test_log_error_probs_survive_underflow():
    log_ta, log_fa = log_error_probs(2 ** 30, -0.5, 6.0)
    assert np.isfinite(log_ta) and np.isfinite(log_fa)


def test_ber_from_ser_exact():
    assert ber_from_ser(Fraction(1, 3), 4) == Fraction(2, 9)
    with pytest.raises(ValueError):
        ber_from_ser(0.1, 3)


def test_skr_zero_acceptance_is_zero():
    assert skr_formula(0.1, 0.0, 0.0, 5, 0.01) == 0.0


def test_skr_table_point():
    p = derive_channel(1e-6, 1e-5, 0.31)
    op = derive_operating_point(p, 2 ** 15, -0.21, -0.40)
    rep = skr_infinity(p, op, error_probs(2 ** 15, -0.21, -0.40), N=10 ** 4)
    assert rep.skr_over_dw == pytest.approx(0.0818, abs=5e-4)
    assert rep.skr_over_delta_i == pytest.approx(0.24, abs=0.005)
    assert 0.0 < rep.finite_n_term < 1e-9
    assert set(rep.as_dict()) >= {"skr", "dw", "delta_i"}


@pytest.mark.parametrize("args,want", OMEGA)
def test_omega_oracle(args, want):
    assert omega(*args) == pytest.approx(want, rel=1e-12)


def test_omega_large_q_matches_quadrature():
    q, gamma = 2 ** 20, -0.17
    mu = math.sqrt(2 * math.log(q) / (1 + gamma))

    def f(t):
        return (q - 1) * math.exp(stats.norm.logpdf(t) + (q - 2) * stats.norm.logcdf(t)) * stats.norm.sf(t - mu)

    ref = integrate.quad(f, 0, 12, points=[4, 5, 6], epsabs=0, epsrel=1e-13, limit=400)[0]
    assert omega(q, gamma) == pytest.approx(1 - ref, rel=1e-11)


def test_no_threshold_variant_is_worse_than_threshold():
    p = derive_channel(1e-6, 1e-5, 0.21)
    out = no_threshold_variant(p, 1024, -0.28)
    assert 0 < out["omega"] < 1
    assert out["ber"] == pytest.approx(out["omega"] * 1024 / 2046)
    assert out["skr_over_dw"] < 0.053
