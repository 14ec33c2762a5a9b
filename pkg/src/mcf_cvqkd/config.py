"""Scenario configuration: loading, validation and echo.

Files are TOML (or JSON, which is what run reports echo back). Unknown
keys are rejected so a misspelled physics parameter cannot silently fall
back to its default.

Example::

    mode = "simulate"
    seed = 7
    block_size = 100000
    n_blocks = 30

    [system]
    v_mod = 1.764
    eta = 0.18
    v_elec = 0.021

    [[cores]]
    core_id = 2
    transmittance = 0.673
    excess_noise = 0.012
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .errors import ConfigError, CvqkdError
from .mcf_channel import CoreChannelParams, power_to_db
from .model import SystemParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MODES = ("simulate", "keyrate_only", "calibrate")
FIDELITIES = ("symbol", "waveform")
MIN_BLOCK_SIZE = 10_000

_SYSTEM_KEYS = {f.name for f in fields(SystemParams)}
_CORE_KEYS = {f.name for f in fields(CoreChannelParams)} | {"transmittance"}
_RECEIVER_KEYS = {"raw_scale", "calibration_samples"}
_TOP_KEYS = {
    "mode", "seed", "block_size", "n_blocks", "fidelity", "output_dir",
    "max_delay_pulses", "workers", "system", "receiver", "cores",
}


@dataclass(frozen=True)
class ReceiverSettings:
    raw_scale: float = 1.0
    calibration_samples: int = 1_000_000


@dataclass
class ScenarioConfig:
    """Everything needed to reproduce a run."""

    cores: list[CoreChannelParams]
    system: SystemParams = field(default_factory=SystemParams)
    mode: str = "simulate"
    block_size: int = 1_000_000
    n_blocks: int = 30
    seed: int = 0
    fidelity: str = "symbol"
    output_dir: str = "out"
    max_delay_pulses: int = 1000
    workers: int = 1
    receiver: ReceiverSettings = field(default_factory=ReceiverSettings)

    def __post_init__(self) -> None:
        _check(self.mode in MODES, "mode", f"must be one of {MODES}, got {self.mode!r}")
        _check(self.fidelity in FIDELITIES, "fidelity", f"must be one of {FIDELITIES}, got {self.fidelity!r}")
        _check(_is_int(self.block_size) and self.block_size >= MIN_BLOCK_SIZE,
               "block_size", f"must be an integer >= {MIN_BLOCK_SIZE}, got {self.block_size!r}")
        _check(_is_int(self.n_blocks) and self.n_blocks >= 0, "n_blocks", f"must be an integer >= 0, got {self.n_blocks!r}")
        _check(_is_int(self.seed) and self.seed >= 0, "seed", f"must be a non-negative integer, got {self.seed!r}")
        _check(_is_int(self.max_delay_pulses) and self.max_delay_pulses >= 0,
               "max_delay_pulses", f"must be an integer >= 0, got {self.max_delay_pulses!r}")
        _check(_is_int(self.workers) and self.workers >= 1, "workers", f"must be an integer >= 1, got {self.workers!r}")
        _check(1 <= len(self.cores) <= 7, "cores", f"need between 1 and 7 cores, got {len(self.cores)}")
        ids = [c.core_id for c in self.cores]
        _check(len(set(ids)) == len(ids), "cores", f"core_id values must be unique, got {ids}")
        _check(_is_int(self.receiver.calibration_samples) and self.receiver.calibration_samples >= 2,
               "receiver.calibration_samples", "must be an integer >= 2")
        _check(self.receiver.raw_scale > 0, "receiver.raw_scale", "must be > 0")

    def to_dict(self) -> dict[str, Any]:
        """Plain-data echo that :func:`config_from_dict` accepts."""
        cores = []
        for c in self.cores:
            d = asdict(c)
            if math.isinf(d["crosstalk_db"]):
                del d["crosstalk_db"]
            cores.append(d)
        return {
            "mode": self.mode,
            "seed": self.seed,
            "block_size": self.block_size,
            "n_blocks": self.n_blocks,
            "fidelity": self.fidelity,
            "output_dir": self.output_dir,
            "max_delay_pulses": self.max_delay_pulses,
            "workers": self.workers,
            "system": asdict(self.system),
            "receiver": asdict(self.receiver),
            "cores": cores,
        }


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _check(ok: bool, where: str, msg: str) -> None:
    if not ok:
        raise ConfigError(f"{where}: {msg}")


def _reject_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _core_from_dict(raw: dict, where: str) -> CoreChannelParams:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a table")
    _reject_unknown(raw, _CORE_KEYS, where)
    data = dict(raw)
    if "core_id" not in data:
        raise ConfigError(f"{where}: core_id is required")
    if "transmittance" in data:
        if "loss_db" in data:
            raise ConfigError(f"{where}: give either transmittance or loss_db, not both")
        try:
            data["loss_db"] = power_to_db(float(data.pop("transmittance")))
        except CvqkdError as exc:
            raise ConfigError(f"{where}.transmittance: {exc}") from exc
    try:
        return CoreChannelParams(**data)
    except (CvqkdError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(raw: dict[str, Any]) -> ScenarioConfig:
    """Validate a parsed config mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a table")
    _reject_unknown(raw, _TOP_KEYS, "top level")
    data = dict(raw)

    system_raw = data.pop("system", {})
    _reject_unknown(system_raw, _SYSTEM_KEYS, "system")
    try:
        system = SystemParams(**system_raw)
    except CvqkdError as exc:
        raise ConfigError(f"system: {exc}") from exc

    receiver_raw = data.pop("receiver", {})
    _reject_unknown(receiver_raw, _RECEIVER_KEYS, "receiver")
    receiver = ReceiverSettings(**receiver_raw)

    cores_raw = data.pop("cores", None)
    if not cores_raw:
        raise ConfigError("cores: at least one [[cores]] entry is required")
    cores = [_core_from_dict(c, f"cores[{i}]") for i, c in enumerate(cores_raw)]
    return ScenarioConfig(cores=cores, system=system, receiver=receiver, **data)


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            raw = json.loads(text)
        else:
            raw = tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    return config_from_dict(raw)


def reference_cores(
    linewidth_hz: float = 20e3, crosstalk_db: float = math.inf
) -> list[CoreChannelParams]:
    """Per-core (T, eps) operating points of the six measured cores."""
    rows = {2: (0.673, 0.0118), 3: (0.650, 0.0102), 4: (0.678, 0.0116),
            5: (0.692, 0.0124), 6: (0.667, 0.0147), 7: (0.645, 0.0123)}
    return [
        CoreChannelParams(
            core_id=cid, loss_db=power_to_db(t), excess_noise=eps,
            linewidth_hz=linewidth_hz, crosstalk_db=crosstalk_db,
        )
        for cid, (t, eps) in rows.items()
    ]

