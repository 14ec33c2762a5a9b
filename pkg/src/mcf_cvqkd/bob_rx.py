"""Bob's phase-diverse (heterodyne) receiver and its two-switch calibration."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alice_tx import PulseFrame
from .errors import CalibrationError, DomainError
from .model import CalibrationRecord, as_complex

MEASURE = "measure"
SHOT_CAL = "shot_cal"
ELEC_CAL = "elec_cal"
_MODES = (MEASURE, SHOT_CAL, ELEC_CAL)


@dataclass
class ReceiverModel:
    """Heterodyne receiver with trusted efficiency and electronic noise.

    ``raw_scale`` is the amplitude gain from SNU to the digitizer's raw
    units; only ratios of raw variances carry physics.
    """

    eta: float = 0.18
    v_elec: float = 0.021
    seed: int | np.random.SeedSequence | None = None
    mode: str = MEASURE
    raw_scale: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.eta <= 1:
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")
        if not self.v_elec >= 0:
            raise DomainError(f"v_elec must be >= 0, got {self.v_elec}")
        if self.mode not in _MODES:
            raise DomainError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if not self.raw_scale > 0:
            raise DomainError(f"raw_scale must be > 0, got {self.raw_scale}")
        self._rng = np.random.default_rng(self.seed)

    @property
    def rng(self) -> np.random.Generator:
        return self._rng

    def reseed(self, seed) -> None:
        self.seed = seed
        self._rng = np.random.default_rng(seed)


def _complex_normal(rng: np.random.Generator, n: int, var: float) -> np.ndarray:
    if var == 0:
        return np.zeros(n, dtype=np.complex128)
    return np.sqrt(var) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def acquire(field, rx: ReceiverModel) -> np.ndarray:
    """Digitize ``field`` in the receiver's current mode, in raw units.

    ``shot_cal`` blocks the signal (vacuum in, LO on); ``elec_cal``
    additionally switches the LO off so only electronic noise remains.
    """
    amps = as_complex(field.field if isinstance(field, PulseFrame) else field)
    n = amps.size
    rng = rx.rng
    if rx.mode == MEASURE:
        signal = np.sqrt(rx.eta / 2.0) * amps
        shot = _complex_normal(rng, n, 1.0)
    elif rx.mode == SHOT_CAL:
        signal = 0.0
        shot = _complex_normal(rng, n, 1.0)
    else:
        signal = 0.0
        shot = 0.0
    elec = _complex_normal(rng, n, rx.v_elec)
    return rx.raw_scale * (signal + shot + elec)


def heterodyne_measure(field, rx: ReceiverModel) -> np.ndarray:
    """Measure X and P simultaneously on every pulse (or waveform sample).

    Returns ``raw_scale * (sqrt(eta/2) * a + n_shot + n_elec)`` with unit
    shot-noise variance and ``v_elec`` electronic variance per quadrature.
    """
    if rx.mode != MEASURE:
        raise DomainError(f"receiver must be in {MEASURE!r} mode, not {rx.mode!r}")
    return acquire(field, rx)


def calibrate(rx: ReceiverModel, n_samples: int = 100_000) -> CalibrationRecord:
    """Run shot-noise then electronic-noise acquisitions.

    Both quadratures are pooled, so each variance uses ``2 * n_samples``
    values. The receiver is returned to measurement mode afterwards.
    """
    if n_samples < 2:
        raise DomainError(f"n_samples must be >= 2, got {n_samples}")
    saved = rx.mode
    try:
        rx.mode = SHOT_CAL
        shot = acquire(np.zeros(n_samples), rx)
        rx.mode = ELEC_CAL
        dark = acquire(np.zeros(n_samples), rx)
    finally:
        rx.mode = saved
    shot_var = _pooled_var(shot)
    elec_var = _pooled_var(dark)
    if shot_var == 0:
        raise CalibrationError("shot-noise acquisition has zero variance")
    return CalibrationRecord(shot_var_raw=shot_var, elec_var_raw=elec_var)


def _pooled_var(z: np.ndarray) -> float:
    pooled = np.concatenate([z.real, z.imag])
    return float(np.var(pooled, ddof=1))
