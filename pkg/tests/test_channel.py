import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randcode.channel import (
    ChannelError,
    block_seed,
    derive_channel,
    derive_operating_point,
    is_power_of_two,
    make_rng,
    sample_block,
    threshold,
)

transmittance = st.floats(1e-9, 1.0)
excess = st.floats(0.0, 0.5)
variance = st.floats(1e-3, 100.0)


@given(transmittance, excess, variance)
def test_derived_variances(T, xi, sx2):
    p = derive_channel(T, xi, sx2)
    assert p.sigma_ygx2 == pytest.approx(0.5 + 0.5 * T * xi)
    assert p.sigma_y2 == pytest.approx(T * sx2 + p.sigma_ygx2)
    assert p.eps == pytest.approx(T * sx2 / p.sigma_ygx2)
    assert p.sigma_y == pytest.approx(math.sqrt(p.sigma_y2))


@pytest.mark.parametrize("T,xi,sx2", [(0.0, 0.0, 1.0), (1.5, 0.0, 1.0), (0.5, -0.1, 1.0), (0.5, 0.0, 0.0),
                                      (math.nan, 0.0, 1.0)])
def test_channel_domain(T, xi, sx2):
    with pytest.raises(ChannelError):
        derive_channel(T, xi, sx2)


def test_desk_operating_point():
    p = derive_channel(1e-2, 0.0, 0.095)
    op = derive_operating_point(p, 32, -0.45, -0.78)
    assert p.eps == pytest.approx(0.0019, rel=1e-12)
    assert op.n == 6639
    assert op.n_real == pytest.approx(6639.286718254144, rel=1e-12)
    assert op.theta == pytest.approx(math.sqrt(2 * math.log(32) / 0.55) - 0.78, rel=1e-14)
    assert op.log2q == 5


@pytest.mark.parametrize("q", [0, 1, 3, 48, 2.0])
def test_operating_point_rejects_bad_q(q):
    with pytest.raises(ChannelError):
        derive_operating_point(derive_channel(0.5, 0.0, 1.0), q, 0.0, 0.0)


def test_operating_point_rejects_gamma_le_minus_one():
    with pytest.raises(ChannelError):
        threshold(32, -1.0, 0.0)


def test_operating_point_minimum_length():
    # very high SNR: a single pulse carries the whole label
    p = derive_channel(1.0, 0.0, 1.5)  # eps = 3, so n_real = 1 at q = 2
    assert derive_operating_point(p, 2, 0.0, 0.0).n == 1
    with pytest.raises(ChannelError):
        derive_operating_point(p, 2, 10.0, 0.0)


@given(st.integers(1, 2 ** 40))
def test_power_of_two(k):
    assert is_power_of_two(k) == (bin(k).count("1") == 1)


def test_seed_derivation_frozen():
    got = make_rng(block_seed(1, 2, 3)).standard_normal(2)
    assert got.tolist() == [1.6362307440656754, -1.7115846285201477]


def test_sample_block_frozen_and_readonly():
    s = sample_block(derive_channel(0.5, 0.1, 1.0), 3, 11)
    assert s.y.tolist() == [-0.34557466770657586, 0.7455872842388322, 0.48388242816859234]
    with pytest.raises(ValueError):
        s.x[0] = 0.0


def test_sample_block_tiny_transmittance_is_noise_only():
    p = derive_channel(1e-12, 0.0, 1.0)
    s = sample_block(p, 20_000, 3)
    assert abs(np.corrcoef(s.x, s.y)[0, 1]) < 0.03
    assert s.y.var() == pytest.approx(0.5, rel=0.03)


@settings(max_examples=20, deadline=None)
@given(transmittance, variance, st.integers(0, 2 ** 32))
def test_sample_block_moments(T, sx2, seed):
    p = derive_channel(T, 0.01, sx2)
    s = sample_block(p, 4000, seed)
    assert s.x.var() == pytest.approx(sx2, rel=0.15)
    assert (s.y - math.sqrt(T) * s.x).var() == pytest.approx(p.sigma_ygx2, rel=0.15)


def test_sample_block_rejects_empty():
    with pytest.raises(ChannelError):
        sample_block(derive_channel(0.5, 0.0, 1.0), 0, 1)
