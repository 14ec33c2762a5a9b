import math

import numpy as np
import pytest

from mcf_cvqkd.alice_tx import build_frame, gen_gmcs_symbols
from mcf_cvqkd.bob_rx import SHOT_CAL, ReceiverModel, acquire, calibrate, heterodyne_measure
from mcf_cvqkd.errors import DomainError
from mcf_cvqkd.mcf_channel import apply_attenuation, inject_excess_noise, power_to_db
from mcf_cvqkd.model import snu_normalize


def _pooled_var(z):
    return np.var(np.concatenate([z.real, z.imag]), ddof=1)


@pytest.mark.parametrize("v_elec", [0.0, 0.021])
def test_vacuum_variance(v_elec):
    n = 500_000
    rx = ReceiverModel(eta=0.18, v_elec=v_elec, seed=1)
    out = heterodyne_measure(np.zeros(n), rx)
    expected = 1.0 + v_elec
    assert _pooled_var(out) == pytest.approx(expected, rel=3 * math.sqrt(2 / (2 * n)))


def test_coherent_input_mean():
    n = 200_000
    rx = ReceiverModel(eta=0.18, v_elec=0.021, seed=2)
    out = heterodyne_measure(np.full(n, 2.0 + 0j), rx)
    # sqrt(0.18 / 2) * 2 = 0.6
    se = math.sqrt(1.021 / n)
    assert abs(out.real.mean() - 0.6) < 4 * se
    assert abs(out.imag.mean()) < 4 * se


def test_measure_requires_measure_mode():
    rx = ReceiverModel(mode=SHOT_CAL)
    with pytest.raises(DomainError):
        heterodyne_measure(np.zeros(3), rx)


def test_calibration_recovers_electronic_noise():
    rx = ReceiverModel(eta=0.18, v_elec=0.021, seed=3, raw_scale=0.37)
    cal = calibrate(rx, 200_000)
    assert 0.019 <= cal.v_elec_snu <= 0.023
    assert cal.clearance_db == pytest.approx(16.8, abs=0.3)
    assert cal.snu_scale == pytest.approx(0.37, rel=0.01)
    assert rx.mode == "measure"


def test_calibration_zero_electronic_noise_flags_infinite_clearance():
    cal = calibrate(ReceiverModel(v_elec=0.0, seed=4), 10_000)
    assert cal.infinite_clearance
    assert cal.clearance_db == math.inf


def test_calibration_deterministic():
    a = calibrate(ReceiverModel(seed=5), 20_000)
    b = calibrate(ReceiverModel(seed=5), 20_000)
    assert a == b


def test_elec_cal_mode_variance():
    rx = ReceiverModel(v_elec=0.021, seed=6, mode="elec_cal", raw_scale=2.0)
    out = acquire(np.zeros(300_000), rx)
    assert _pooled_var(out) == pytest.approx(4 * 0.021, rel=0.01)


def test_calibration_closure_on_vacuum():
    rx = ReceiverModel(eta=0.18, v_elec=0.021, seed=7, raw_scale=12.5)
    cal = calibrate(rx, 200_000)
    snu = snu_normalize(heterodyne_measure(np.zeros(200_000), rx), cal)
    assert _pooled_var(snu) - cal.v_elec_snu == pytest.approx(1.0, rel=0.01)


def test_bob_variance_composition():
    # per-quadrature variance eta*T*V/2 + 1 + v_elec + eps/2
    n = 1_000_000
    eta, t, v_mod, eps, v_elec = 0.18, 0.673, 1.764, 0.0118, 0.021
    seq = gen_gmcs_symbols(n, v_mod, seed=8)
    frame = apply_attenuation(build_frame(seq, rho=300), power_to_db(t))
    frame = inject_excess_noise(frame, eps, eta, np.random.default_rng(9))
    out = heterodyne_measure(frame.quantum, ReceiverModel(eta=eta, v_elec=v_elec, seed=10))
    expected = (eta * t * v_mod + eps) / 2 + v_elec + 1
    assert expected == pytest.approx(1.1337, abs=1e-4)
    se = expected * math.sqrt(2 / (2 * n))
    assert abs(_pooled_var(out) - expected) < 3 * se
