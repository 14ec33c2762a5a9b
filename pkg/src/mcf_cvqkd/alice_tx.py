"""Alice's transmitter: GMCS symbol generation and reference interleaving."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .model import as_complex

#: 4 ns pulses in a 32 ns slot at 1 GS/s.
SAMPLES_PER_PULSE = 32
PULSE_WIDTH_SAMPLES = 4

REFERENCE = "reference"
QUANTUM = "quantum"


@dataclass
class GmcsSequence:
    """Alice's quantum symbols (complex SNU amplitudes)."""

    symbols: np.ndarray
    v_mod: float
    seed: int | None = None

    def __len__(self) -> int:
        return self.symbols.size


def gen_gmcs_symbols(
    n: int,
    v_mod: float,
    seed: int | np.random.SeedSequence | None = None,
    *,
    method: str = "polar",
    repeat_period: int | None = None,
) -> GmcsSequence:
    """Draw ``n`` Gaussian-modulated coherent-state amplitudes.

    X and P are i.i.d. ``Normal(0, v_mod)``. The default ``"polar"`` method
    builds them the way the modulators do, from a Rayleigh amplitude with
    scale ``sqrt(v_mod)`` and a uniform phase; ``"cartesian"`` draws the two
    quadratures directly. ``repeat_period`` tiles a shorter pseudo-random
    pattern, as an FPGA with a fixed-length lookup table would.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not v_mod >= 0:
        raise DomainError(f"v_mod must be >= 0, got {v_mod}")
    rng = np.random.default_rng(seed)
    m = n if repeat_period is None else min(n, int(repeat_period))
    if m < 1:
        raise DomainError(f"repeat_period must be >= 1, got {repeat_period}")

    sigma = np.sqrt(v_mod)
    if method == "polar":
        amp = rng.rayleigh(scale=1.0, size=m) * sigma
        phase = rng.uniform(0.0, 2.0 * np.pi, size=m)
        symbols = amp * np.exp(1j * phase)
    elif method == "cartesian":
        symbols = sigma * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
    else:
        raise ValueError(f"unknown method {method!r}")
    if v_mod == 0:
        symbols = np.zeros(m, dtype=np.complex128)
    if m < n:
        symbols = np.resize(symbols, n)
    seed_value = seed if isinstance(seed, int) else None
    return GmcsSequence(symbols=symbols.astype(np.complex128), v_mod=float(v_mod), seed=seed_value)


@dataclass
class PulseFrame:
    """Interleaved pulse train ``R Q R Q ...`` starting with a reference.

    ``field`` holds one complex amplitude per pulse. Even indices are
    references, odd indices quantum symbols.
    """

    field: np.ndarray
    rho: float
    ref_phase: float = 0.0
    symbol_period: float = 1.0 / 31.25e6
    v_mod: float = 0.0
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.field.size

    @property
    def kinds(self) -> list[str]:
        return [REFERENCE if i % 2 == 0 else QUANTUM for i in range(self.field.size)]

    @property
    def references(self) -> np.ndarray:
        return self.field[0::2]

    @property
    def quantum(self) -> np.ndarray:
        return self.field[1::2]

    @property
    def quantum_rate(self) -> float:
        return 0.5 / self.symbol_period

    def with_field(self, new_field: np.ndarray) -> "PulseFrame":
        if new_field.shape != self.field.shape:
            raise ValueError("replacement field must keep the frame shape")
        return PulseFrame(
            field=new_field,
            rho=self.rho,
            ref_phase=self.ref_phase,
            symbol_period=self.symbol_period,
            v_mod=self.v_mod,
            meta=dict(self.meta),
        )


def reference_amplitude(rho: float, v_mod: float) -> float:
    """Amplitude whose photon number ``|A|^2 / 4`` is ``rho * v_mod / 2``."""
    return float(np.sqrt(2.0 * rho * v_mod))


def build_frame(
    seq: GmcsSequence,
    rho: float,
    ref_phase: float = 0.0,
    symbol_period: float = 1.0 / 31.25e6,
) -> PulseFrame:
    """Interleave constant reference pulses ahead of every quantum symbol."""
    if not rho > 0:
        raise DomainError(f"rho must be > 0, got {rho}")
    symbols = as_complex(seq.symbols)
    if symbols.size == 0:
        raise DomainError("cannot build a frame from an empty sequence")
    field_ = np.empty(2 * symbols.size, dtype=np.complex128)
    field_[0::2] = reference_amplitude(rho, seq.v_mod) * np.exp(1j * ref_phase)
    field_[1::2] = symbols
    return PulseFrame(
        field=field_,
        rho=float(rho),
        ref_phase=float(ref_phase),
        symbol_period=float(symbol_period),
        v_mod=float(seq.v_mod),
    )


def render_waveform(
    pulses,
    samples_per_pulse: int = SAMPLES_PER_PULSE,
    pulse_width: int = PULSE_WIDTH_SAMPLES,
    lead_samples: int = 0,
) -> np.ndarray:
    """Render rectangular pulses onto a sampled complex waveform.

    Each pulse occupies ``pulse_width`` samples at the start of its
    ``samples_per_pulse`` slot; the rest of the slot is dark.
    """
    amps = as_complex(pulses.field if isinstance(pulses, PulseFrame) else pulses)
    if not 1 <= pulse_width <= samples_per_pulse:
        raise DomainError("pulse width must fit inside the pulse slot")
    slots = np.zeros((amps.size, samples_per_pulse), dtype=np.complex128)
    slots[:, :pulse_width] = amps[:, None]
    wave = slots.ravel()
    if lead_samples:
        wave = np.concatenate([np.zeros(lead_samples, dtype=np.complex128), wave])
    return wave
