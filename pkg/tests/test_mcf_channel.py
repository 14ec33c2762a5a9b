import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcf_cvqkd.alice_tx import build_frame, gen_gmcs_symbols
from mcf_cvqkd.errors import DomainError, ShapeError
from mcf_cvqkd.mcf_channel import (
    DEFAULT_CORE_LOSS_DB,
    ChannelState,
    CoreChannelParams,
    apply_attenuation,
    apply_crosstalk,
    apply_phase_noise,
    crosstalk_matrix,
    db_to_power,
    inject_excess_noise,
)


def _frame(n=1000, seed=0, v_mod=1.764):
    return build_frame(gen_gmcs_symbols(n, v_mod, seed=seed), rho=300)


def test_attenuation_identity_and_half():
    f = _frame()
    np.testing.assert_array_equal(apply_attenuation(f, 0.0).field, f.field)
    np.testing.assert_allclose(apply_attenuation(f, 3.0103).field, f.field * math.sqrt(0.5), rtol=1e-5)


def test_average_core_loss():
    assert db_to_power(6.3) == pytest.approx(0.2344, abs=1e-4)


def test_attenuation_rejects_gain():
    with pytest.raises(DomainError):
        apply_attenuation(_frame(), -1.0)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0, 30), b=st.floats(0, 30))
def test_attenuation_db_additive(a, b):
    f = _frame(50)
    twice = apply_attenuation(apply_attenuation(f, a), b).field
    once = apply_attenuation(f, a + b).field
    np.testing.assert_allclose(twice, once, rtol=1e-12, atol=1e-12 * np.abs(f.field).max())


def test_default_loss_table():
    assert DEFAULT_CORE_LOSS_DB[1] == 7.4
    assert len(DEFAULT_CORE_LOSS_DB) == 7


def test_crosstalk_none_is_identity():
    frames = [_frame(seed=s) for s in range(3)]
    xt = np.full((3, 3), np.inf)
    out = apply_crosstalk(frames, xt)
    for a, b in zip(frames, out):
        np.testing.assert_array_equal(a.field, b.field)


def test_crosstalk_50db_leak_factor():
    victim = _frame(seed=1)
    victim = victim.with_field(np.zeros_like(victim.field))
    source = _frame(seed=2)
    xt = np.array([[np.inf, 50.0], [50.0, np.inf]])
    out = apply_crosstalk([victim, source], xt)
    np.testing.assert_allclose(out[0].field, source.field * 3.1623e-3, rtol=1e-4)


def test_crosstalk_zero_db_doubles_identical_frames():
    f = _frame(seed=4)
    xt = np.array([[np.inf, 0.0], [0.0, np.inf]])
    out = apply_crosstalk([f, f], xt)
    np.testing.assert_allclose(out[0].field, 2 * f.field)


def test_crosstalk_shape_errors():
    with pytest.raises(ShapeError):
        apply_crosstalk([_frame(10), _frame(11)], np.full((2, 2), np.inf))
    with pytest.raises(ShapeError):
        apply_crosstalk([_frame(10), _frame(10)], np.array([[np.inf, 40.0], [50.0, np.inf]]))
    with pytest.raises(ShapeError):
        apply_crosstalk([_frame(10), _frame(10)], np.array([[0.0, 40.0], [40.0, 0.0]]))


def test_crosstalk_matrix_symmetric_worst_case():
    cores = [CoreChannelParams(2, crosstalk_db=50), CoreChannelParams(3, crosstalk_db=60)]
    xt = crosstalk_matrix(cores)
    assert xt[0, 1] == xt[1, 0] == 50
    assert np.isinf(xt[0, 0])


def test_phase_noise_identity():
    f = _frame()
    p = CoreChannelParams(2, linewidth_hz=0, freq_offset_hz=0)
    out = apply_phase_noise(f, p, ChannelState(rng=np.random.default_rng(0)))
    np.testing.assert_array_equal(out.field, f.field)


def test_phase_step_variance_value():
    p = CoreChannelParams(2, linewidth_hz=20e3)
    assert p.phase_step_variance(32e-9) == pytest.approx(4.02e-3, rel=1e-3)


def test_phase_noise_increment_statistics():
    n = 200_000
    f = build_frame(gen_gmcs_symbols(n // 2, 0.0, seed=0), rho=1.0)
    f = f.with_field(np.ones(n, complex))
    p = CoreChannelParams(2, linewidth_hz=20e3)
    out = apply_phase_noise(f, p, ChannelState(rng=np.random.default_rng(1)))
    steps = np.angle(out.field[1:] / out.field[:-1])
    expected = 2 * np.pi * 20e3 * f.symbol_period
    assert np.var(steps) == pytest.approx(expected, rel=3 * math.sqrt(2 / n))
    assert abs(np.mean(steps)) < 3 * math.sqrt(expected / n)


def test_frequency_offset_is_pure_rotation():
    f = _frame(100)
    tau = f.symbol_period
    p = CoreChannelParams(2, linewidth_hz=0, freq_offset_hz=1e3)
    out = apply_phase_noise(f, p, ChannelState(rng=np.random.default_rng(0)))
    k = np.arange(1, len(f) + 1)
    np.testing.assert_allclose(out.field, f.field * np.exp(1j * 2 * np.pi * 1e3 * tau * k))


def test_phase_noise_preserves_framing():
    f = _frame(200)
    out = apply_phase_noise(f, CoreChannelParams(2), ChannelState(rng=np.random.default_rng(3)))
    assert len(out) == len(f)
    assert out.kinds == f.kinds
    np.testing.assert_allclose(np.abs(out.field), np.abs(f.field))


def test_excess_noise_zero_is_identity():
    f = _frame()
    out = inject_excess_noise(f, 0.0, 0.18, np.random.default_rng(0))
    np.testing.assert_array_equal(out.field, f.field)


def test_excess_noise_variance():
    n = 400_000
    f = build_frame(gen_gmcs_symbols(n // 2, 0.0, seed=0), rho=1.0)
    f = f.with_field(np.zeros(n, complex))
    out = inject_excess_noise(f, 0.012, 0.18, np.random.default_rng(5)).field
    expected = 0.012 / 0.18
    assert expected == pytest.approx(0.0667, abs=1e-4)
    pooled = np.concatenate([out.real, out.imag])
    assert np.var(pooled) == pytest.approx(expected, rel=3 * math.sqrt(2 / pooled.size))


def test_excess_noise_rejects_bad_args():
    with pytest.raises(DomainError):
        inject_excess_noise(_frame(), -0.01, 0.18, np.random.default_rng(0))
    with pytest.raises(DomainError):
        inject_excess_noise(_frame(), 0.01, 0.0, np.random.default_rng(0))


def test_core_params_validation():
    with pytest.raises(DomainError):
        CoreChannelParams(8)
    with pytest.raises(DomainError):
        CoreChannelParams(2, loss_db=-1)
    assert CoreChannelParams.from_transmittance(2, 0.673).transmittance == pytest.approx(0.673)
