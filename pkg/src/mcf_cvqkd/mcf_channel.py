"""Seven-core fiber channel: loss, crosstalk, carrier phase and excess noise."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .alice_tx import PulseFrame
from .errors import DomainError, ShapeError

#: Insertion loss per core including fan-in/fan-out (dB). Core 1 is the
#: lossiest core and carries the LO locking signal; the others are
#: placeholders scattered around the 6.3 dB average.
DEFAULT_CORE_LOSS_DB = {1: 7.4, 2: 6.1, 3: 6.3, 4: 6.0, 5: 5.9, 6: 6.2, 7: 6.4}
#: Forward crosstalk upper bound (dB below signal).
DEFAULT_CROSSTALK_DB = 50.0


def db_to_power(db: float) -> float:
    return float(10.0 ** (-db / 10.0))


def power_to_db(t: float) -> float:
    if not 0 < t <= 1:
        raise DomainError(f"transmittance must lie in (0, 1], got {t}")
    return float(-10.0 * np.log10(t))


@dataclass(frozen=True)
class CoreChannelParams:
    """Physical parameters of one fiber core.

    ``excess_noise`` is the excess-noise budget referred to Bob's detector
    output, in the same convention as the estimated excess noise.
    """

    core_id: int
    loss_db: float = 6.3
    crosstalk_db: float = np.inf
    linewidth_hz: float = 20e3
    freq_offset_hz: float = 0.0
    excess_noise: float = 0.0

    def __post_init__(self) -> None:
        if not 1 <= self.core_id <= 7:
            raise DomainError(f"core_id must be in 1..7, got {self.core_id}")
        if not self.loss_db >= 0:
            raise DomainError(f"loss_db must be >= 0, got {self.loss_db}")
        if not self.crosstalk_db >= 0:
            raise DomainError(f"crosstalk_db must be >= 0 (coupling <= 1), got {self.crosstalk_db}")
        if not self.linewidth_hz >= 0:
            raise DomainError(f"linewidth_hz must be >= 0, got {self.linewidth_hz}")
        if not np.isfinite(self.freq_offset_hz):
            raise DomainError("freq_offset_hz must be finite")
        if not self.excess_noise >= 0:
            raise DomainError(f"excess_noise must be >= 0, got {self.excess_noise}")

    @classmethod
    def from_transmittance(cls, core_id: int, t: float, **kwargs) -> "CoreChannelParams":
        return cls(core_id=core_id, loss_db=power_to_db(t), **kwargs)

    @property
    def transmittance(self) -> float:
        return db_to_power(self.loss_db)

    def phase_step_variance(self, symbol_period: float) -> float:
        return 2.0 * np.pi * self.linewidth_hz * symbol_period


@dataclass
class ChannelState:
    """Carrier phase between Alice's laser and Bob's LO (a Wiener process)."""

    phase: float = 0.0
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    steps: int = 0


def apply_attenuation(frame: PulseFrame, loss_db: float) -> PulseFrame:
    """Scale every pulse amplitude by ``sqrt(10**(-loss_db/10))``."""
    if not loss_db >= 0:
        raise DomainError(f"loss must be >= 0 dB, got {loss_db}")
    return frame.with_field(frame.field * np.sqrt(db_to_power(loss_db)))


def crosstalk_matrix(cores: Sequence[CoreChannelParams]) -> np.ndarray:
    """Symmetric coupling matrix in dB; each pair takes the stronger coupling."""
    k = len(cores)
    xt = np.full((k, k), np.inf)
    for i in range(k):
        for j in range(k):
            if i != j:
                xt[i, j] = min(cores[i].crosstalk_db, cores[j].crosstalk_db)
    return xt


def apply_crosstalk(frames: Sequence[PulseFrame], xt_db) -> list[PulseFrame]:
    """Add each neighbour's field to every core, scaled by its coupling.

    ``xt_db[i, j]`` is the power coupling from core j into core i in dB
    (``inf`` for none). Fields add coherently; nothing is removed from the
    source core, which makes this a worst-case envelope.
    """
    xt_db = np.asarray(xt_db, dtype=float)
    k = len(frames)
    if xt_db.shape != (k, k):
        raise ShapeError(f"coupling matrix shape {xt_db.shape} does not match {k} frames")
    if not np.array_equal(xt_db, xt_db.T):
        raise ShapeError("coupling matrix must be symmetric")
    if np.any(xt_db < 0):
        raise DomainError("crosstalk in dB must be >= 0")
    coupling = np.sqrt(10.0 ** (-xt_db / 10.0))
    if np.any(np.diag(coupling) != 0):
        raise ShapeError("coupling matrix must have no self-coupling (inf dB diagonal)")
    lengths = {len(f) for f in frames}
    if len(lengths) > 1:
        raise ShapeError(f"frames have mismatched lengths {sorted(lengths)}")
    if k == 0:
        return []
    fields = np.stack([f.field for f in frames])
    mixed = fields + coupling @ fields
    return [f.with_field(mixed[i]) for i, f in enumerate(frames)]


def phase_trajectory(
    n: int, params: CoreChannelParams, symbol_period: float, state: ChannelState
) -> np.ndarray:
    """Advance the carrier phase by ``n`` pulse slots; returns the per-pulse phase."""
    step_var = params.phase_step_variance(symbol_period)
    drift = 2.0 * np.pi * params.freq_offset_hz * symbol_period
    increments = np.full(n, drift)
    if step_var > 0:
        increments = increments + state.rng.normal(0.0, np.sqrt(step_var), n)
    theta = state.phase + np.cumsum(increments)
    if n:
        state.phase = float(theta[-1])
        state.steps += n
    return theta


def apply_phase_noise(
    frame: PulseFrame, params: CoreChannelParams, state: ChannelState
) -> PulseFrame:
    """Rotate each pulse by the laser/LO phase at its time slot.

    References and quantum pulses share the same process, which is what
    makes reference-based recovery work.
    """
    theta = phase_trajectory(len(frame), params, frame.symbol_period, state)
    return frame.with_field(frame.field * np.exp(1j * theta))


def inject_excess_noise(
    frame: PulseFrame, eps_target: float, eta: float, rng: np.random.Generator
) -> PulseFrame:
    """Add Gaussian noise that shows up at Bob as ``eps_target`` excess noise.

    Per-quadrature variance ``eps_target / eta`` at the channel output
    becomes ``eps_target / 2`` after the heterodyne ``sqrt(eta/2)`` gain,
    i.e. ``eps_target`` under the factor-two excess-noise definition.
    """
    if not eps_target >= 0:
        raise DomainError(f"eps_target must be >= 0, got {eps_target}")
    if not eta > 0:
        raise DomainError(f"eta must be > 0, got {eta}")
    if eps_target == 0:
        return frame.with_field(frame.field.copy())
    var = eps_target / eta
    n = len(frame)
    noise = np.sqrt(var) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return frame.with_field(frame.field + noise)
