"""Offline receiver DSP: down-sampling, de-interleaving, phase recovery, sync."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import signal
from scipy.ndimage import uniform_filter1d

from .errors import DegenerateReferenceError, ShapeError, SyncError
from .model import QuadratureSymbol, as_complex

logger = logging.getLogger(__name__)

#: Minimum peak-to-median ratio of |cross-correlation| for a valid sync.
SYNC_PEAK_RATIO = 5.0


@dataclass
class PeakDetection:
    symbols: np.ndarray
    sample_offset: int
    low_power: bool


def detect_peaks(waveform, period_samples: int, low_power_threshold: float = 0.0) -> PeakDetection:
    """Down-sample a waveform to one complex value per pulse period.

    The power ``X^2 + P^2`` is folded over the pulse period and averaged;
    its maximum gives the sampling instant, which is then used in every
    period. Averaging over periods lets the strong references set the
    timing for the weak quantum pulses.
    """
    wave = as_complex(waveform)
    if period_samples < 2:
        raise ValueError(f"period_samples must be >= 2, got {period_samples}")
    n_periods = wave.size // period_samples
    if n_periods == 0:
        raise ShapeError("waveform is shorter than one pulse period")
    usable = wave[: n_periods * period_samples]
    profile = np.mean(np.abs(usable.reshape(n_periods, period_samples)) ** 2, axis=0)
    offset = int(np.argmax(profile))
    symbols = wave[offset::period_samples]
    low_power = bool(profile[offset] <= low_power_threshold)
    if low_power:
        logger.warning("peak detection found no power above %g", low_power_threshold)
    return PeakDetection(symbols=symbols, sample_offset=offset, low_power=low_power)


def split_pulses(pulses) -> tuple[np.ndarray, np.ndarray, int]:
    """Separate references from quantum pulses by their power.

    Returns ``(refs, quantum, parity)`` where ``parity`` is the index of
    the first reference. ``quantum[j]`` sits between ``refs[j]`` and
    ``refs[j + 1]``.
    """
    z = as_complex(pulses)
    even = np.mean(np.abs(z[0::2]) ** 2) if z.size else 0.0
    odd = np.mean(np.abs(z[1::2]) ** 2) if z.size > 1 else 0.0
    parity = 0 if even >= odd else 1
    return z[parity::2], z[parity + 1 :: 2], parity


def ref_phase(ref) -> float:
    """Four-quadrant phase ``angle(X + iP)`` of a reference symbol."""
    if isinstance(ref, QuadratureSymbol):
        z = ref.to_complex()
    else:
        z = complex(ref)
    if z == 0:
        raise DegenerateReferenceError("reference has zero amplitude")
    return float(np.angle(z))


def circular_midpoint(phi_a, phi_b):
    """Shorter-arc mean of two angles via unit-phasor averaging."""
    s = np.exp(1j * np.asarray(phi_a)) + np.exp(1j * np.asarray(phi_b))
    return np.angle(s)


@dataclass
class RecoveredBlock:
    """Phase-corrected quantum symbols and the corrections applied."""

    quantum_rx: np.ndarray
    refs_rx: np.ndarray
    phase_track: np.ndarray
    sync_offset: int = 0
    dropped: int = 0

    def __len__(self) -> int:
        return self.quantum_rx.size


def recover_phase(quantum, refs, smoothing: int = 1) -> RecoveredBlock:
    """Rotate each quantum symbol by the midpoint of its two bracketing references.

    Quantum symbol ``j`` uses references ``j`` and ``j + 1``. Symbols with
    no trailing reference are dropped and counted. ``smoothing > 1``
    applies a moving average to the reference phasors first.
    """
    q = as_complex(quantum)
    r = as_complex(refs)
    n = min(q.size, max(r.size - 1, 0))
    dropped = q.size - n
    if dropped:
        logger.debug("dropping %d quantum symbols without bracketing references", dropped)
    if np.any(r[: n + 1] == 0):
        raise DegenerateReferenceError("reference with zero amplitude in block")
    phasors = r / np.abs(r) if r.size else r
    if smoothing > 1 and r.size:
        phasors = uniform_filter1d(phasors.real, smoothing, mode="nearest") + 1j * uniform_filter1d(
            phasors.imag, smoothing, mode="nearest"
        )
    phi = np.angle(phasors[: n + 1])
    track = circular_midpoint(phi[:n], phi[1 : n + 1]) if n else np.zeros(0)
    corrected = q[:n] * np.exp(-1j * track)
    return RecoveredBlock(quantum_rx=corrected, refs_rx=r, phase_track=track, dropped=dropped)


def sync_offset(tx, rx, min_peak_ratio: float = SYNC_PEAK_RATIO) -> int:
    """Delay of ``tx`` inside ``rx`` from the X-quadrature cross-correlation.

    Returns ``d`` such that ``rx[d + k]`` matches ``tx[k]``.
    """
    x_tx = as_complex(tx).real
    x_rx = as_complex(rx).real
    if x_tx.size == 0 or x_rx.size == 0:
        raise ShapeError("empty sequence passed to sync")
    if x_rx.size < x_tx.size / 2:
        raise ShapeError("received sequence is shorter than half the transmitted one")
    corr = signal.correlate(x_rx, x_tx, mode="full", method="fft")
    lags = signal.correlation_lags(x_rx.size, x_tx.size, mode="full")
    peak = int(np.argmax(corr))
    median = float(np.median(np.abs(corr)))
    if corr[peak] <= 0 or (median > 0 and corr[peak] / median < min_peak_ratio):
        raise SyncError(
            f"no significant correlation peak (peak/median = {corr[peak] / max(median, 1e-300):.2f})"
        )
    return int(lags[peak])


def align(tx, rx, offset: int) -> tuple[np.ndarray, np.ndarray]:
    """Cut the overlapping, aligned portions of ``tx`` and ``rx``."""
    a = as_complex(tx)
    b = as_complex(rx)
    start_a = max(0, -offset)
    start_b = max(0, offset)
    m = min(a.size - start_a, b.size - start_b)
    if m <= 0:
        raise SyncError(f"offset {offset} leaves no overlap")
    return a[start_a : start_a + m], b[start_b : start_b + m]
