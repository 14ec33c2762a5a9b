"""End-to-end scenario runner and report writers."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .alice_tx import SAMPLES_PER_PULSE, build_frame, gen_gmcs_symbols, render_waveform
from .bob_rx import ReceiverModel, calibrate, heterodyne_measure
from .config import ScenarioConfig
from .dsp_recovery import align, detect_peaks, recover_phase, split_pulses, sync_offset
from .errors import CalibrationError, DegenerateReferenceError, DomainError, ModeError, SyncError
from .estimation import BlockEstimate, estimate_block
from .keyrate import KeyRateResult, aggregate_skr, secret_key_rate
from .mcf_channel import (
    ChannelState,
    CoreChannelParams,
    apply_attenuation,
    apply_crosstalk,
    apply_phase_noise,
    crosstalk_matrix,
    inject_excess_noise,
)
from .model import CalibrationRecord, snu_normalize

logger = logging.getLogger(__name__)

BLOCK_CSV_HEADER = ["core_id", "block_index", "eps_snu", "t_hat", "i_ab_bits", "chi_be_bits", "skr_bps"]
FIGURES = ("fig3", "fig4", "fig5")
#: Symbols kept per core for figure data.
FIGURE_POINTS = 20_000
HIST_BINS = 60

_ALICE, _CHANNEL, _RECEIVER, _ACQUISITION = range(4)


@dataclass
class BlockRow:
    estimate: BlockEstimate
    key: KeyRateResult


@dataclass
class BlockFailure:
    core_id: int
    block_index: int
    reason: str


@dataclass
class FigureSample:
    """Symbols from one block, kept for phase-space and histogram data."""

    core_id: int
    pre_refs: np.ndarray
    pre_quantum: np.ndarray
    post_refs: np.ndarray
    post_quantum: np.ndarray
    alice: np.ndarray
    bob: np.ndarray
    t_hat: float


@dataclass
class CoreSummary:
    core_id: int
    n_blocks: int
    failed_blocks: int
    eps: float | None = None
    t_hat: float | None = None
    t_rel_std: float | None = None
    i_ab: float | None = None
    chi_be: float | None = None
    skr: float | None = None
    skr_min: float | None = None
    skr_max: float | None = None


@dataclass
class RunReport:
    mode: str
    per_block: list[BlockRow]
    per_core_summary: list[CoreSummary]
    aggregate_skr: float
    config_echo: dict
    version: str = __version__
    failures: list[BlockFailure] = field(default_factory=list)
    calibrations: dict[int, CalibrationRecord] = field(default_factory=dict)
    figure_samples: dict[int, FigureSample] = field(default_factory=dict)

    def blocks_for(self, core_id: int) -> list[BlockRow]:
        return [r for r in self.per_block if r.estimate.core_id == core_id]


def _seed(config: ScenarioConfig, core_id: int, block: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(config.seed, spawn_key=(core_id, block, stream))


def _alice_frame(config: ScenarioConfig, core_id: int, block: int):
    seq = gen_gmcs_symbols(config.block_size + 1, config.system.v_mod, _seed(config, core_id, block, _ALICE))
    frame = build_frame(seq, config.system.rho, 0.0, config.system.symbol_period)
    return seq, frame


def simulate_block(
    config: ScenarioConfig, core: CoreChannelParams, block: int, keep_figure: bool = False
) -> tuple[BlockRow, FigureSample | None]:
    """Generate, transmit, detect, recover and estimate one block on one core."""
    system = config.system
    seq, frame = _alice_frame(config, core.core_id, block)

    xt = crosstalk_matrix(config.cores)
    if np.any(np.isfinite(xt)):
        frames = [frame if c.core_id == core.core_id else _alice_frame(config, c.core_id, block)[1]
                  for c in config.cores]
        idx = [c.core_id for c in config.cores].index(core.core_id)
        frame = apply_crosstalk(frames, xt)[idx]

    chan_rng = np.random.default_rng(_seed(config, core.core_id, block, _CHANNEL))
    frame = apply_attenuation(frame, core.loss_db)
    state = ChannelState(phase=float(chan_rng.uniform(0.0, 2.0 * np.pi)), rng=chan_rng)
    frame = apply_phase_noise(frame, core, state)
    frame = inject_excess_noise(frame, core.excess_noise, system.eta, chan_rng)

    acq_rng = np.random.default_rng(_seed(config, core.core_id, block, _ACQUISITION))
    delay = int(acq_rng.integers(0, config.max_delay_pulses + 1))
    received = np.concatenate([np.zeros(delay, dtype=np.complex128), frame.field])

    rx = ReceiverModel(
        eta=system.eta, v_elec=system.v_elec,
        seed=_seed(config, core.core_id, block, _RECEIVER), raw_scale=config.receiver.raw_scale,
    )
    cal = calibrate(rx, config.receiver.calibration_samples)
    if config.fidelity == "waveform":
        lead = int(acq_rng.integers(0, SAMPLES_PER_PULSE))
        wave = render_waveform(received, lead_samples=lead)
        pulses = detect_peaks(snu_normalize(heterodyne_measure(wave, rx), cal), SAMPLES_PER_PULSE).symbols
    else:
        pulses = snu_normalize(heterodyne_measure(received, rx), cal)

    refs, quantum, _ = split_pulses(pulses)
    rec = recover_phase(quantum, refs)
    offset = sync_offset(seq.symbols, rec.quantum_rx)
    rec.sync_offset = offset
    alice, bob = align(seq.symbols, rec.quantum_rx, offset)
    alice, bob = alice[: config.block_size], bob[: config.block_size]

    est = estimate_block(alice, bob, system, v_elec=cal.v_elec_snu, core_id=core.core_id, block_index=block)
    if not 0 < est.t_hat <= 1:
        raise DomainError(f"estimated transmittance {est.t_hat:.4g} outside (0, 1]")
    params = replace(system, v_elec=cal.v_elec_snu)
    key = secret_key_rate(params, est.t_hat, max(est.eps, 0.0))

    sample = None
    if keep_figure:
        k = min(FIGURE_POINTS, alice.size)
        start = max(offset, 0)
        sl = slice(start, start + k)
        sample = FigureSample(
            core_id=core.core_id,
            pre_refs=refs[sl].copy(),
            pre_quantum=quantum[sl].copy(),
            post_refs=refs[sl] * np.exp(-1j * rec.phase_track[sl]),
            post_quantum=rec.quantum_rx[sl].copy(),
            alice=alice[:k].copy(),
            bob=bob[:k].copy(),
            t_hat=est.t_hat,
        )
    return BlockRow(estimate=est, key=key), sample


_RECOVERABLE = (SyncError, CalibrationError, DegenerateReferenceError, DomainError)


def _task(args):
    config, core, block = args
    try:
        row, sample = simulate_block(config, core, block, keep_figure=(block == 0))
    except _RECOVERABLE as exc:
        return core.core_id, block, None, None, f"{type(exc).__name__}: {exc}"
    return core.core_id, block, row, sample, None


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values)


def summarize(core_id: int, rows: list[BlockRow], failed: int) -> CoreSummary:
    """Per-core means over successful blocks."""
    if not rows:
        return CoreSummary(core_id=core_id, n_blocks=0, failed_blocks=failed)
    t = [r.estimate.t_hat for r in rows]
    skr = [r.key.skr for r in rows]
    t_mean = _mean(t)
    t_std = float(np.std(t, ddof=1)) if len(t) > 1 else 0.0
    return CoreSummary(
        core_id=core_id,
        n_blocks=len(rows),
        failed_blocks=failed,
        eps=_mean([r.estimate.eps for r in rows]),
        t_hat=t_mean,
        t_rel_std=t_std / t_mean if t_mean else None,
        i_ab=_mean([r.key.i_ab for r in rows]),
        chi_be=_mean([r.key.chi_be for r in rows]),
        skr=_mean(skr),
        skr_min=min(skr),
        skr_max=max(skr),
    )


def _run_simulate(config: ScenarioConfig) -> RunReport:
    tasks = [(config, core, b) for core in config.cores for b in range(config.n_blocks)]
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]
    results.sort(key=lambda r: (r[0], r[1]))

    per_block, failures, samples = [], [], {}
    for core_id, block, row, sample, err in results:
        if err is not None:
            logger.warning("core %d block %d failed: %s", core_id, block, err)
            failures.append(BlockFailure(core_id, block, err))
            continue
        per_block.append(row)
        if sample is not None:
            samples[core_id] = sample

    summaries = []
    for core in sorted(config.cores, key=lambda c: c.core_id):
        rows = [r for r in per_block if r.estimate.core_id == core.core_id]
        failed = sum(1 for f in failures if f.core_id == core.core_id)
        summaries.append(summarize(core.core_id, rows, failed))
    agg = aggregate_skr(s.skr for s in summaries if s.skr is not None)
    return RunReport(
        mode="simulate", per_block=per_block, per_core_summary=summaries,
        aggregate_skr=agg, config_echo=config.to_dict(), failures=failures, figure_samples=samples,
    )


def _run_keyrate(config: ScenarioConfig) -> RunReport:
    summaries = []
    for core in sorted(config.cores, key=lambda c: c.core_id):
        key = secret_key_rate(config.system, core.transmittance, core.excess_noise)
        summaries.append(CoreSummary(
            core_id=core.core_id, n_blocks=0, failed_blocks=0, eps=core.excess_noise,
            t_hat=core.transmittance, i_ab=key.i_ab, chi_be=key.chi_be, skr=key.skr,
            skr_min=key.skr, skr_max=key.skr,
        ))
    agg = aggregate_skr(s.skr for s in summaries)
    return RunReport(
        mode="keyrate_only", per_block=[], per_core_summary=summaries,
        aggregate_skr=agg, config_echo=config.to_dict(),
    )


def _run_calibrate(config: ScenarioConfig) -> RunReport:
    records = {}
    for core in sorted(config.cores, key=lambda c: c.core_id):
        rx = ReceiverModel(
            eta=config.system.eta, v_elec=config.system.v_elec,
            seed=_seed(config, core.core_id, 0, _RECEIVER), raw_scale=config.receiver.raw_scale,
        )
        records[core.core_id] = calibrate(rx, config.receiver.calibration_samples)
    summaries = [CoreSummary(core_id=c, n_blocks=0, failed_blocks=0) for c in records]
    return RunReport(
        mode="calibrate", per_block=[], per_core_summary=summaries, aggregate_skr=0.0,
        config_echo=config.to_dict(), calibrations=records,
    )


def run_scenario(config: ScenarioConfig, out_dir: str | Path | None = None) -> RunReport:
    """Run the configured mode; write outputs when ``out_dir`` is given."""
    runners = {"simulate": _run_simulate, "keyrate_only": _run_keyrate, "calibrate": _run_calibrate}
    report = runners[config.mode](config)
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def _num(x) -> str:
    return repr(float(x))


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return _jsonable(x.item())
    return x


def _write_json(path: Path, payload: dict) -> None:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def report_summary(report: RunReport) -> dict:
    summary = {
        "version": report.version,
        "mode": report.mode,
        "cores": [asdict(s) for s in report.per_core_summary],
        "aggregate_skr_bps": report.aggregate_skr,
        "failures": [asdict(f) for f in report.failures],
        "config": report.config_echo,
    }
    if report.calibrations:
        summary["calibrations"] = {
            str(cid): {
                "shot_var_raw": cal.shot_var_raw,
                "elec_var_raw": cal.elec_var_raw,
                "snu_scale": cal.snu_scale,
                "v_elec_snu": cal.v_elec_snu,
                "clearance_db": cal.clearance_db,
            }
            for cid, cal in report.calibrations.items()
        }
    return summary


def write_report(report: RunReport, out_dir: str | Path) -> list[Path]:
    """Write ``summary.json``, ``config_echo.json`` and (simulate) ``blocks.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    summary_path = out / "summary.json"
    _write_json(summary_path, report_summary(report))
    written.append(summary_path)
    echo_path = out / "config_echo.json"
    _write_json(echo_path, report.config_echo)
    written.append(echo_path)
    if report.mode == "simulate":
        path = out / "blocks.csv"
        _write_csv(path, BLOCK_CSV_HEADER, (
            [r.estimate.core_id, r.estimate.block_index, _num(r.estimate.eps), _num(r.estimate.t_hat),
             _num(r.key.i_ab), _num(r.key.chi_be), _num(r.key.skr)]
            for r in report.per_block
        ))
        written.append(path)
    elif report.mode == "keyrate_only":
        path = out / "keyrate.csv"
        _write_csv(path, ["core_id", "eps_snu", "t", "i_ab_bits", "chi_be_bits", "skr_bps"], (
            [s.core_id, _num(s.eps), _num(s.t_hat), _num(s.i_ab), _num(s.chi_be), _num(s.skr)]
            for s in report.per_core_summary
        ))
        written.append(path)
    return written


def histogram_table(alice_x: np.ndarray, bob_x: np.ndarray, bins: int = HIST_BINS):
    """Shared-bin histograms of Alice's and Bob's X quadratures."""
    edges = np.histogram_bin_edges(np.concatenate([alice_x, bob_x]), bins=bins)
    a_counts, _ = np.histogram(alice_x, bins=edges)
    b_counts, _ = np.histogram(bob_x, bins=edges)
    return edges, a_counts, b_counts


def emit_figure_data(report: RunReport, which: str, out_dir: str | Path) -> list[Path]:
    """Write plot-ready CSVs for the phase-space, correlation and time-series figures."""
    if report.mode != "simulate":
        raise ModeError(f"figure data needs a simulate report, not {report.mode!r}")
    if which not in FIGURES:
        raise ValueError(f"which must be one of {FIGURES}, got {which!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if which == "fig5":
        for s in report.per_core_summary:
            path = out / f"fig5_core{s.core_id}.csv"
            _write_csv(path, ["block_index", "eps_snu", "t_hat", "skr_bps"], (
                [r.estimate.block_index, _num(r.estimate.eps), _num(r.estimate.t_hat), _num(r.key.skr)]
                for r in report.blocks_for(s.core_id)
            ))
            written.append(path)
        return written

    for core_id, fs in sorted(report.figure_samples.items()):
        if which == "fig3":
            path = out / f"fig3_core{core_id}.csv"
            rows = []
            for stage, refs, quantum in (("pre", fs.pre_refs, fs.pre_quantum), ("post", fs.post_refs, fs.post_quantum)):
                rows += [[stage, "reference", _num(z.real), _num(z.imag)] for z in refs]
                rows += [[stage, "quantum", _num(z.real), _num(z.imag)] for z in quantum]
            _write_csv(path, ["stage", "kind", "x", "p"], rows)
            written.append(path)
        else:
            eta = report.config_echo["system"]["eta"]
            gain = math.sqrt(eta * fs.t_hat / 2.0)
            path = out / f"fig4_series_core{core_id}.csv"
            n = min(40, fs.alice.size)
            _write_csv(path, ["index", "alice_x", "bob_x", "bob_x_rescaled"], (
                [i, _num(fs.alice[i].real), _num(fs.bob[i].real), _num(fs.bob[i].real / gain)]
                for i in range(n)
            ))
            written.append(path)
            path = out / f"fig4_hist_core{core_id}.csv"
            edges, a_counts, b_counts = histogram_table(fs.alice.real, fs.bob.real)
            _write_csv(path, ["bin_left", "bin_right", "alice_count", "bob_count"], (
                [_num(edges[i]), _num(edges[i + 1]), int(a_counts[i]), int(b_counts[i])]
                for i in range(len(a_counts))
            ))
            written.append(path)
    return written
