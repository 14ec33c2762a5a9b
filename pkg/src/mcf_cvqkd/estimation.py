"""Per-block parameter estimation from Alice's and Bob's quadrature data.

All estimators pool X and P into one population.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, ShapeError
from .model import SystemParams, as_complex, pooled_quadratures

MIN_SAMPLES = 10_000


def _pool(q) -> np.ndarray:
    arr = np.asarray(q)
    if np.iscomplexobj(arr):
        return pooled_quadratures(arr)
    return arr.astype(np.float64, copy=False).ravel()


def _paired(q_a, q_b, min_samples: int) -> tuple[np.ndarray, np.ndarray]:
    a = _pool(q_a)
    b = _pool(q_b)
    if a.shape != b.shape:
        raise ShapeError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < min_samples:
        raise ShapeError(f"need at least {min_samples} samples, got {a.size}")
    return a, b


def conditional_variance(q_a, q_b, eta: float, t: float, min_samples: int = MIN_SAMPLES) -> float:
    """Variance of Bob's data once the part predicted from Alice's is removed."""
    a, b = _paired(q_a, q_b, min_samples)
    residual = np.sqrt(eta * t / 2.0) * a - b
    return float(np.var(residual, ddof=1))


def estimate_transmittance(
    q_a, q_b, eta: float, v_mod: float, min_samples: int = MIN_SAMPLES
) -> float:
    """Channel transmittance from the Alice-Bob covariance.

    Uses the accounted modulation variance, not one re-estimated from data.
    """
    if not v_mod > 0:
        raise DomainError(f"v_mod must be > 0, got {v_mod}")
    a, b = _paired(q_a, q_b, min_samples)
    cov = float(np.mean(a * b))
    return (2.0 / eta) * (cov / v_mod) ** 2


def estimate_excess_noise(v_b_given_a: float, v_elec: float) -> float:
    """Excess noise at Bob, in SNU. Can come out slightly negative."""
    return 2.0 * (v_b_given_a - 1.0 - v_elec)


def mutual_information(params: SystemParams, t: float, eps: float) -> float:
    """Alice-Bob mutual information for heterodyne detection, bits per symbol."""
    if not 0 <= t <= 1:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    if eps < 0:
        raise DomainError(f"eps must be >= 0, got {eps}")
    if np.isinf(eps):
        return 0.0
    snr = params.eta * t * params.v_mod / (2.0 + eps + 2.0 * params.v_elec)
    return float(np.log2(1.0 + snr))


def predicted_bob_variance(params: SystemParams, t: float, eps: float) -> float:
    """Per-quadrature variance of Bob's data implied by the channel model."""
    return (params.eta * t * params.v_mod + eps) / 2.0 + params.v_elec + 1.0


@dataclass
class VarianceCheck:
    passed: bool
    measured: float
    predicted: float
    std_error: float


def bob_variance_check(q_b, params: SystemParams, t: float, eps: float, n_sigma: float = 3.0) -> VarianceCheck:
    """Compare Bob's sample variance against the model value within ``n_sigma``."""
    b = _pool(q_b)
    measured = float(np.var(b, ddof=1))
    predicted = predicted_bob_variance(params, t, eps)
    std_error = predicted * np.sqrt(2.0 / max(b.size - 1, 1))
    passed = abs(measured - predicted) <= n_sigma * std_error
    return VarianceCheck(passed=bool(passed), measured=measured, predicted=predicted, std_error=float(std_error))


@dataclass
class BlockEstimate:
    """Estimated security parameters of one block."""

    n_symbols: int
    eps: float
    t_hat: float
    v_b_given_a: float
    i_ab: float
    v_b: float
    core_id: int = 0
    block_index: int = 0


def estimate_block(
    alice,
    bob,
    params: SystemParams,
    v_elec: float | None = None,
    core_id: int = 0,
    block_index: int = 0,
    min_samples: int = MIN_SAMPLES,
) -> BlockEstimate:
    """Run the full estimation chain on one synchronized, phase-recovered block.

    ``v_elec`` is the calibrated electronic noise; it defaults to the
    nominal value in ``params``.
    """
    a = as_complex(alice)
    b = as_complex(bob)
    if a.size != b.size:
        raise ShapeError(f"length mismatch: {a.size} vs {b.size}")
    v_elec = params.v_elec if v_elec is None else v_elec
    t_hat = estimate_transmittance(a, b, params.eta, params.v_mod, min_samples)
    v_ba = conditional_variance(a, b, params.eta, t_hat, min_samples)
    eps = estimate_excess_noise(v_ba, v_elec)
    i_ab = mutual_information(replace(params, v_elec=v_elec), min(t_hat, 1.0), max(eps, 0.0))
    v_b = float(np.var(pooled_quadratures(b), ddof=1))
    return BlockEstimate(
        n_symbols=int(a.size), eps=eps, t_hat=t_hat, v_b_given_a=v_ba,
        i_ab=i_ab, v_b=v_b, core_id=core_id, block_index=block_index,
    )
