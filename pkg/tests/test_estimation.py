import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcf_cvqkd.errors import DomainError, ShapeError
from mcf_cvqkd.estimation import (
    bob_variance_check,
    conditional_variance,
    estimate_block,
    estimate_excess_noise,
    estimate_transmittance,
    mutual_information,
    predicted_bob_variance,
)


def _link(rng, n, params, t, eps):
    """Direct Gaussian model of Alice's and Bob's per-quadrature data."""
    a = math.sqrt(params.v_mod) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    noise_var = 1.0 + params.v_elec + eps / 2
    noise = math.sqrt(noise_var) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return a, math.sqrt(params.eta * t / 2) * a + noise


def test_conditional_variance_noise_only():
    a = np.zeros(20_000)
    b = np.tile([1.0, -1.0], 10_000)
    assert conditional_variance(a, b, 0.18, 0.5) == pytest.approx(1.0, rel=1e-3)


def test_conditional_variance_perfect_prediction(rng):
    a = rng.standard_normal(20_000)
    b = math.sqrt(0.18 * 0.673 / 2) * a
    assert conditional_variance(a, b, 0.18, 0.673) == pytest.approx(0.0, abs=1e-20)


def test_transmittance_from_exact_covariance():
    # a*b has mean sqrt(eta*T/2) * V_mod by construction
    n = 20_000
    a = np.tile([1.0, -1.0], n // 2) * math.sqrt(1.764)
    b = math.sqrt(0.18 * 0.673 / 2) * a
    assert estimate_transmittance(a, b, 0.18, 1.764) == pytest.approx(0.673, rel=1e-12)


def test_transmittance_rejects_short_or_mismatched():
    with pytest.raises(ShapeError):
        estimate_transmittance(np.ones(100), np.ones(100), 0.18, 1.764)
    with pytest.raises(ShapeError):
        estimate_transmittance(np.ones(20_000), np.ones(20_001), 0.18, 1.764)


@pytest.mark.parametrize(
    "v_ba,expected", [(1.021, 0.0), (1.0269, 0.0118), (1.0435, 0.045)]
)
def test_excess_noise_examples(v_ba, expected):
    assert estimate_excess_noise(v_ba, 0.021) == pytest.approx(expected, abs=1e-9)


def test_mutual_information_core2(nominal):
    assert mutual_information(nominal, 0.673, 0.0118) == pytest.approx(0.1428, abs=5e-4)


def test_mutual_information_limits(nominal):
    assert mutual_information(nominal, 0.0, 0.01) == 0.0
    assert mutual_information(nominal, 0.673, math.inf) == 0.0
    assert mutual_information(nominal, 0.673, 1e6) < 1e-5
    with pytest.raises(DomainError):
        mutual_information(nominal, 1.2, 0.01)
    with pytest.raises(DomainError):
        mutual_information(nominal, 0.5, -0.01)


def test_predicted_bob_variance(nominal):
    assert predicted_bob_variance(nominal, 0.673, 0.0118) == pytest.approx(1.1337, abs=1e-4)


def test_bob_variance_check_positive_and_negative(rng, nominal):
    n = 1_000_000
    _, b = _link(rng, n, nominal, 0.673, 0.0118)
    assert bob_variance_check(b, nominal, 0.673, 0.0118).passed
    # same data, wrong transmittance hypothesis
    assert not bob_variance_check(b, nominal, 0.9, 0.0118).passed


@pytest.mark.parametrize("t", [0.3, 0.673, 0.9])
@pytest.mark.parametrize("eps", [0.0, 0.012, 0.045])
def test_estimators_recover_truth(rng, nominal, t, eps):
    n = 1_000_000
    a, b = _link(rng, n, nominal, t, eps)
    est = estimate_block(a, b, nominal)
    # T-hat relative sd at 1e6 symbols is about 0.5%, so 2% is a 4-sigma bound
    assert est.t_hat == pytest.approx(t, rel=0.02)
    assert abs(est.eps - eps) < 0.012
    assert est.n_symbols == n


@settings(max_examples=30, deadline=None)
@given(
    v_ba=st.floats(1.0, 2.0),
    v_elec=st.floats(0.0, 0.1),
)
def test_excess_noise_algebraic_closure(v_ba, v_elec):
    eps = estimate_excess_noise(v_ba, v_elec)
    assert 1.0 + v_elec + eps / 2 == pytest.approx(v_ba, rel=1e-12)


def test_estimate_block_uses_calibrated_noise(rng, nominal):
    a, b = _link(rng, 100_000, nominal, 0.673, 0.0)
    base = estimate_block(a, b, nominal)
    shifted = estimate_block(a, b, nominal, v_elec=nominal.v_elec + 0.01)
    assert base.eps - shifted.eps == pytest.approx(0.02)
    assert isinstance(base.t_hat, float)


def test_transmittance_spread_matches_sampling_theory(rng, nominal):
    # rel sd of T-hat is twice that of the pooled mean of a*b:
    # var(a*b) = V_mod * V_B + cov^2 per pooled sample, 2N samples per block
    n, blocks, t, eps = 100_000, 120, 0.673, 0.012
    t_hats = [estimate_transmittance(*_link(rng, n, nominal, t, eps), nominal.eta, nominal.v_mod) for _ in range(blocks)]
    cov = math.sqrt(nominal.eta * t / 2) * nominal.v_mod
    v_b = predicted_bob_variance(nominal, t, eps)
    predicted = 2 * math.sqrt((nominal.v_mod * v_b + cov**2) / (2 * n)) / cov
    assert predicted == pytest.approx(0.0152, abs=2e-4)
    measured = np.std(t_hats, ddof=1) / np.mean(t_hats)
    # sample sd over 120 blocks is known to about 6.5%; allow 3 sigma
    assert measured == pytest.approx(predicted, rel=0.2)
