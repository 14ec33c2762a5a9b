"""Shared domain types and shot-noise-unit (SNU) conventions.

Quadrature series are stored as complex arrays ``x + 1j * p``. Vacuum has
variance 1 per quadrature, so the mean photon number of a zero-mean
ensemble is ``(Var X + Var P) / 4`` and a modulation variance ``V_mod``
corresponds to ``<n> = V_mod / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CalibrationError, DomainError, InfiniteClearanceError


class QuadratureSymbol(NamedTuple):
    """A single complex amplitude as an (X, P) pair in SNU."""

    x: float
    p: float

    @property
    def mean_photon_number(self) -> float:
        return (self.x**2 + self.p**2) / 4.0

    def to_complex(self) -> complex:
        return complex(self.x, self.p)

    @classmethod
    def from_complex(cls, z: complex) -> "QuadratureSymbol":
        return cls(float(np.real(z)), float(np.imag(z)))


def as_complex(symbols) -> np.ndarray:
    """Coerce a symbol series to a 1-D complex128 array.

    Accepts complex arrays, sequences of :class:`QuadratureSymbol`, or an
    ``(N, 2)`` real array of ``(x, p)`` rows.
    """
    arr = np.asarray(symbols)
    if np.iscomplexobj(arr):
        return arr.astype(np.complex128, copy=False).ravel()
    arr = arr.astype(np.float64, copy=False)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return arr[:, 0] + 1j * arr[:, 1]
    if arr.ndim == 1 and arr.size == 0:
        return np.zeros(0, dtype=np.complex128)
    if arr.ndim == 1:
        return arr.astype(np.complex128)
    raise ValueError(f"cannot interpret array of shape {arr.shape} as quadratures")


def mean_photon_number(symbols) -> float:
    """Mean photon number ``<|x|^2 + |p|^2> / 4`` of a symbol population."""
    z = as_complex(symbols)
    return float(np.mean(np.abs(z) ** 2) / 4.0)


def pooled_quadratures(symbols) -> np.ndarray:
    """Concatenate X then P into one real population."""
    z = as_complex(symbols)
    return np.concatenate([z.real, z.imag])


@dataclass(frozen=True)
class SystemParams:
    """Transmission parameters of one CV-QKD link.

    Attributes:
        v_mod: per-quadrature modulation variance of Alice's data (SNU).
        eta: trusted detection efficiency.
        v_elec: electronic noise variance per measured quadrature (SNU).
        beta: reconciliation efficiency.
        rho: reference-to-quantum intensity ratio.
        pulse_rate: total pulse rate R (Hz), references included.
        trusted_receiver: if False, eta and v_elec are attributed to Eve.
    """

    v_mod: float = 1.764
    eta: float = 0.18
    v_elec: float = 0.021
    beta: float = 0.95
    rho: float = 300.0
    pulse_rate: float = 31.25e6
    trusted_receiver: bool = True

    def __post_init__(self) -> None:
        if not self.v_mod >= 0:
            raise DomainError(f"v_mod must be >= 0, got {self.v_mod}")
        if not 0 < self.eta <= 1:
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")
        if not self.v_elec >= 0:
            raise DomainError(f"v_elec must be >= 0, got {self.v_elec}")
        if not 0 <= self.beta <= 1:
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")
        if not self.rho > 0:
            raise DomainError(f"rho must be > 0, got {self.rho}")
        if not self.pulse_rate > 0:
            raise DomainError(f"pulse_rate must be > 0, got {self.pulse_rate}")

    @property
    def r_eff(self) -> float:
        """Quantum pulse rate: every other pulse is a reference."""
        return self.pulse_rate / 2.0

    @property
    def mean_photon_number(self) -> float:
        return self.v_mod / 2.0

    @property
    def symbol_period(self) -> float:
        return 1.0 / self.pulse_rate

    @classmethod
    def from_mean_photon_number(cls, n_mean: float, **kwargs) -> "SystemParams":
        return cls(v_mod=2.0 * n_mean, **kwargs)


@dataclass(frozen=True)
class CalibrationRecord:
    """Result of the two-switch receiver calibration.

    ``shot_var_raw`` is the variance measured with only the LO on (shot
    plus electronic noise); ``elec_var_raw`` is measured with the LO off.
    """

    shot_var_raw: float
    elec_var_raw: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.shot_var_raw) and np.isfinite(self.elec_var_raw)):
            raise CalibrationError("calibration variances must be finite")
        if self.elec_var_raw < 0:
            raise CalibrationError(f"negative electronic variance {self.elec_var_raw}")
        if not self.shot_var_raw - self.elec_var_raw > 0:
            raise CalibrationError(
                "shot-noise variance must exceed electronic variance "
                f"({self.shot_var_raw} <= {self.elec_var_raw})"
            )

    @property
    def snu_scale(self) -> float:
        """Divisor mapping raw amplitudes to SNU."""
        return math.sqrt(self.shot_var_raw - self.elec_var_raw)

    @property
    def v_elec_snu(self) -> float:
        return self.elec_var_raw / (self.shot_var_raw - self.elec_var_raw)

    @property
    def infinite_clearance(self) -> bool:
        return self.elec_var_raw == 0

    @property
    def clearance_db(self) -> float:
        if self.infinite_clearance:
            return math.inf
        return clearance_db(self.shot_var_raw - self.elec_var_raw, self.elec_var_raw)


def clearance_db(shot_power: float, elec_power: float) -> float:
    """Ratio of pure shot-noise power to electronic-noise power, in dB."""
    if elec_power <= 0:
        raise InfiniteClearanceError("electronic noise power is zero")
    if shot_power <= 0:
        raise CalibrationError(f"shot-noise power must be positive, got {shot_power}")
    return 10.0 * math.log10(shot_power / elec_power)


def clearance(cal: CalibrationRecord) -> float:
    """Clearance of a calibration record in dB.

    Raises:
        InfiniteClearanceError: if the record has no electronic noise.
    """
    return clearance_db(cal.shot_var_raw - cal.elec_var_raw, cal.elec_var_raw)


def snu_normalize(samples, cal: CalibrationRecord) -> np.ndarray:
    """Convert raw quadrature samples into SNU.

    After normalization, LO-only data has variance ``1 + v_elec_snu``.
    """
    z = as_complex(samples)
    if not np.all(np.isfinite(z)):
        raise DomainError("samples contain NaN or Inf")
    return z / cal.snu_scale
