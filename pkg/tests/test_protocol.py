import json
import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from randcode.analytics import binary_entropy, error_probs, skr_infinity
from randcode.channel import derive_channel, derive_operating_point
from randcode.protocol import (
    ComputeBudgetError,
    SessionConfig,
    exact_log_binomial,
    key_budget,
    run_session,
)

DESK = derive_channel(1e-2, 0.0, 0.095)
DESK_OP = derive_operating_point(DESK, 32, -0.45, -0.78)


def test_exact_log_binomial_values():
    assert exact_log_binomial(4, 2) == pytest.approx(math.log2(6), rel=1e-14)
    assert exact_log_binomial(10, 0) == exact_log_binomial(10, 10) == 0.0
    assert exact_log_binomial(10 ** 6, 640_000) <= 10 ** 6 * binary_entropy(0.64)
    with pytest.raises(ValueError):
        exact_log_binomial(3, 4)


@given(N=st.integers(1, 10 ** 6), data=st.data())
def test_alpha_cost_below_entropy_bound(N, data):
    k = data.draw(st.integers(0, N))
    assert exact_log_binomial(N, k) <= N * binary_entropy(k / N) + 1e-9


def test_ledger_identity():
    led = key_budget(DESK, DESK_OP, 1000, 700)
    parts = led.otp_nacc + led.otp_alpha + led.otp_syndrome + led.otp_final_bit + led.leakage
    assert led.net_key == pytest.approx(led.raw - parts, rel=1e-15)
    assert led.raw == 700 * 5
    assert led.otp_final_bit == 1.0
    assert led.skr_finite == pytest.approx(led.net_key / (1000 * DESK_OP.n))
    assert json.loads(json.dumps(led.as_dict()))["net_key"] == pytest.approx(led.net_key)


def test_single_block_zero_noise():
    p = derive_channel(1.0, 0.0, 0.5)
    op = derive_operating_point(p, 32, -0.975, -8.0)
    res = run_session(SessionConfig(p, op, 1, zero_noise=True))
    assert res.n_acc == 1 and res.alpha == "1" and res.symbol_errors == 0
    assert res.ledger.otp_nacc == 0.0 and res.ledger.otp_alpha == 0.0


def test_compute_budget_guard():
    with pytest.raises(ComputeBudgetError):
        run_session(SessionConfig(DESK, DESK_OP, 10, compute_budget=1e3))


@pytest.mark.parametrize("kw", [dict(N=0), dict(variant="quantum"), dict(model="tensor"), dict(workers=0)])
def test_config_validation(kw):
    base = dict(params=DESK, op=DESK_OP, N=1)
    base.update(kw)
    with pytest.raises(ValueError):
        SessionConfig(**base)


def test_deterministic_and_worker_independent():
    cfg = SessionConfig(DESK, DESK_OP, 12, seed=3, record_blocks=True)
    a, b = run_session(cfg), run_session(cfg)
    assert a.to_json() == b.to_json() and a.records_jsonl() == b.records_jsonl()
    c = run_session(replace(cfg, workers=2))
    assert c.records_jsonl() == a.records_jsonl()
    assert len(a.records_jsonl().splitlines()) == 12


def test_common_random_numbers_across_variants():
    cfg = SessionConfig(DESK, DESK_OP, 6, seed=1, record_blocks=True)
    tr = run_session(cfg)
    pr = run_session(replace(cfg, variant="pseudorandom"))
    assert [r.u for r in tr.records] == [r.u for r in pr.records]


def test_gaussian_model_tracks_analytics():
    p = derive_channel(1e-6, 1e-5, 0.21)
    op = derive_operating_point(p, 1024, -0.28, -0.5)
    res = run_session(SessionConfig(p, op, 20_000, model="gaussian"))
    e = error_probs(1024, -0.28, -0.5)
    assert res.p_acc == pytest.approx(e.p_acc, abs=4 * math.sqrt(e.p_acc * (1 - e.p_acc) / 20_000))
    assert res.ser == pytest.approx(e.ser, abs=4 * math.sqrt(e.ser / res.n_acc))
    assert res.fake_score_mean == pytest.approx(0.0, abs=0.01)


def test_gaussian_model_large_q_uses_counts():
    p = derive_channel(1e-6, 1e-5, 0.31)
    op = derive_operating_point(p, 2 ** 20, -0.17, -0.33)
    res = run_session(SessionConfig(p, op, 2000, model="gaussian"))
    e = error_probs(2 ** 20, -0.17, -0.33)
    assert res.p_acc == pytest.approx(e.p_acc, abs=0.05)
    assert math.isnan(res.fake_score_mean)


def test_finite_key_rate_approaches_asymptotic():
    p = derive_channel(1e-6, 1e-5, 0.21)
    op = derive_operating_point(p, 1024, -0.28, -0.5)
    res = run_session(SessionConfig(p, op, 10_000, model="gaussian"))
    asym = skr_infinity(p, op, error_probs(1024, -0.28, -0.5)).skr
    assert res.ledger.skr_finite == pytest.approx(asym, rel=0.05)


def test_desk_session_summary():
    res = run_session(SessionConfig(DESK, DESK_OP, 40, seed=2))
    assert len(res.alpha) == 40 and res.n_acc == res.alpha.count("1")
    assert res.mac_count > 0 and res.records == []
    assert 0.4 <= res.p_acc <= 1.0
    assert set(res.as_dict()) >= {"p_acc", "ser", "ledger", "alpha"}
