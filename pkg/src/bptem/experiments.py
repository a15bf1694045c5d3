"""Experiment harness reproducing the simulation study at desk scale.

Each command takes a declarative INI config (every key has a default),
re-validates the recovery condition, runs its sweep deterministically,
and writes sorted CSV tables plus a config echo.  Per-cell seeds are
derived from the cell coordinates, so re-running a subset of an axis
reproduces the matching rows byte-identically.
"""

from __future__ import annotations

import configparser
import dataclasses
import json
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import encoder as enc
from . import reconstruction as rec
from .errors import ConfigError, ParameterError
from .metrics import monte_carlo, sndr_db
from .signals import (BandSpec, IQPair, Signal, TimeGrid, add_noise,
                      bandpass_filter, gen_test_signal, modulate,
                      write_iq_csv, write_signal_csv)

TRIM = 0.9


@dataclass(frozen=True)
class SignalConfig:
    f0: float = 50.0
    f1: float = 10.0
    f2: float = 2.5
    bandwidth: float = 30.0

    def band(self, f0: float | None = None) -> BandSpec:
        return BandSpec(self.f0 if f0 is None else f0, self.bandwidth)


@dataclass(frozen=True)
class TemConfig:
    kappa: float = 1.0
    b: float = 3.0
    c: float = 2.0
    delta: float = 1.0 / 120.0

    def params(self, delta: float | None = None) -> enc.TemParams:
        return enc.TemParams(kappa=self.kappa,
                             delta=self.delta if delta is None else delta,
                             b=self.b, c=self.c)


@dataclass(frozen=True)
class GridConfig:
    t_start: float = -4.0
    t_end: float = 4.0
    oversampling: float = 8.0


@dataclass(frozen=True)
class DecoderConfig:
    name: str = "apocs"
    max_iter: int = 500
    rel_tol: float = 1e-9
    gain: float | None = None          # None -> select by idempotency probe
    rcond: float = rec.PINV_RCOND

    def iter_config(self, record: bool = True) -> rec.IterConfig:
        return rec.IterConfig(max_iter=self.max_iter, rel_tol=self.rel_tol,
                              record_trajectory=record)


@dataclass(frozen=True)
class FreqSweepConfig:
    f0_min: float = 15.0
    f0_max: float = 1500.0
    points: int = 100
    full_step: float = 1.5
    deltas: tuple = (1.0 / 120.0, 1.0 / 240.0, 1.0 / 360.0)
    window: float = 2.0
    oversampling: float = 8.0
    decoder: str = "closed_form"

    def axis(self, full: bool) -> np.ndarray:
        if full:
            n = int(math.floor((self.f0_max - self.f0_min) / self.full_step)) + 1
            return self.f0_min + self.full_step * np.arange(n)
        return np.linspace(self.f0_min, self.f0_max, self.points)


@dataclass(frozen=True)
class NoiseSweepConfig:
    snr_db: tuple = (5.0, 15.0, 25.0)
    f0: tuple = (50.0, 600.0)
    kinds: tuple = ("white", "bandpass")
    delta: float = 1.0 / 240.0
    window: float = 1.0
    oversampling: float = 32.0
    trials: int = 20


@dataclass(frozen=True)
class QuantSweepConfig:
    bits: tuple = (2, 4, 6, 8, 12)
    f0: tuple = (50.0, 150.0)
    delta: float = 1.0 / 240.0
    window: float = 4.0
    oversampling: float = 8.0
    trials: int = 8


@dataclass(frozen=True)
class BaselineConfig:
    f0: float = 600.0
    snr_db: float = 15.0
    rates: tuple = (65.0, 130.0, 250.0, 500.0, 1000.0)
    window: float = 8.0
    oversampling: float = 8.0
    trials: int = 3


@dataclass(frozen=True)
class ExperimentConfig:
    signal: SignalConfig = SignalConfig()
    tem: TemConfig = TemConfig()
    grid: GridConfig = GridConfig()
    decoder: DecoderConfig = DecoderConfig()
    freq_sweep: FreqSweepConfig = FreqSweepConfig()
    noise_sweep: NoiseSweepConfig = NoiseSweepConfig()
    quant_sweep: QuantSweepConfig = QuantSweepConfig()
    baseline: BaselineConfig = BaselineConfig()
    base_seed: int = 1234

    def replace_seed(self, seed: int | None) -> "ExperimentConfig":
        if seed is None:
            return self
        return dataclasses.replace(self, base_seed=seed)


_SECTIONS = {
    "signal": SignalConfig,
    "tem": TemConfig,
    "grid": GridConfig,
    "decoder": DecoderConfig,
    "freq_sweep": FreqSweepConfig,
    "noise_sweep": NoiseSweepConfig,
    "quant_sweep": QuantSweepConfig,
    "baseline": BaselineConfig,
}


def _parse_number(text: str) -> float:
    text = text.strip()
    if text.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _coerce(name: str, value: str, default):
    if isinstance(default, bool):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return _parse_number(value)
    if isinstance(default, tuple):
        items = [v for v in (s.strip() for s in value.split(",")) if v]
        if not items:
            raise ConfigError(f"{name}: empty list")
        element = default[0] if default else 0.0
        if isinstance(element, int) and not isinstance(element, bool):
            return tuple(int(v) for v in items)
        if isinstance(element, str):
            return tuple(items)
        return tuple(_parse_number(v) for v in items)
    if default is None or isinstance(default, str):
        if value.strip().lower() in ("auto", "none", ""):
            return None
        try:
            return _parse_number(value) if default is None else value.strip()
        except ValueError:
            return value.strip()
    raise ConfigError(f"{name}: unsupported value {value!r}")


def load_config(path: str | None, seed: int | None = None) -> ExperimentConfig:
    """Read an INI config, falling back to defaults for every key."""
    cfg = ExperimentConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        updates = {}
        for section in parser.sections():
            if section == "run":
                for key, value in parser.items("run"):
                    if key == "base_seed":
                        updates["base_seed"] = int(value)
                    else:
                        raise ConfigError(f"unknown key [run] {key}")
                continue
            if section not in _SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            cls = _SECTIONS[section]
            current = getattr(cfg, section)
            fields = {f.name: f for f in dataclasses.fields(cls)}
            kwargs = {}
            for key, value in parser.items(section):
                if key not in fields:
                    raise ConfigError(f"unknown key [{section}] {key}")
                try:
                    kwargs[key] = _coerce(f"[{section}] {key}", value,
                                          getattr(current, key))
                except (ValueError, ConfigError) as exc:
                    raise ConfigError(f"[{section}] {key}: {exc}") from exc
            updates[section] = dataclasses.replace(current, **kwargs)
        cfg = dataclasses.replace(cfg, **updates)
    cfg = cfg.replace_seed(seed)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    try:
        cfg.signal.band()
        cfg.tem.params()
        for delta in cfg.freq_sweep.deltas:
            cfg.tem.params(delta)
        cfg.tem.params(cfg.noise_sweep.delta)
        cfg.tem.params(cfg.quant_sweep.delta)
        rec.IterConfig(max_iter=cfg.decoder.max_iter, rel_tol=cfg.decoder.rel_tol)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.decoder.name not in ("apocs", "closed_form", "pocs_bl"):
        raise ConfigError(f"unknown decoder {cfg.decoder.name!r}")
    if cfg.freq_sweep.decoder not in ("apocs", "closed_form"):
        raise ConfigError(f"unknown sweep decoder {cfg.freq_sweep.decoder!r}")
    for name, sweep in (("freq_sweep", cfg.freq_sweep.axis(False)),
                        ("noise_sweep", cfg.noise_sweep.f0),
                        ("quant_sweep", cfg.quant_sweep.f0)):
        if len(sweep) == 0:
            raise ConfigError(f"{name}: empty axis")
    if cfg.freq_sweep.full_step <= 0:
        raise ConfigError("freq_sweep.full_step must be positive")
    if min(cfg.quant_sweep.bits) < 1:
        raise ConfigError("quant_sweep.bits must be >= 1")
    if cfg.noise_sweep.trials < 1 or cfg.quant_sweep.trials < 1 \
            or cfg.baseline.trials < 1:
        raise ConfigError("trial counts must be >= 1")
    for kind in cfg.noise_sweep.kinds:
        if kind not in ("white", "bandpass"):
            raise ConfigError(f"unknown noise kind {kind!r}")


def _fmt_exact(value) -> str:
    # repr round-trips floats exactly; the echo must reload to an
    # identical configuration
    if isinstance(value, float):
        return repr(value)
    return _fmt(value)


def write_config_echo(cfg: ExperimentConfig, path) -> None:
    parser = configparser.ConfigParser()
    for section, _ in _SECTIONS.items():
        obj = getattr(cfg, section)
        parser[section] = {}
        for f in dataclasses.fields(obj):
            value = getattr(obj, f.name)
            if isinstance(value, tuple):
                text = ", ".join(_fmt_exact(v) for v in value)
            elif value is None:
                text = "auto"
            else:
                text = _fmt_exact(value)
            parser[section][f.name] = text
    parser["run"] = {"base_seed": str(cfg.base_seed)}
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        parser.write(fh)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.12g}"
    return str(value)


def write_csv(path, header_lines, columns, rows) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def cell_seed(base_seed: int, key: str) -> int:
    """Deterministic per-cell seed derived from the cell coordinates."""
    return (base_seed + zlib.crc32(key.encode("ascii"))) % (2 ** 31)


def _sweep_grid(band: BandSpec, window: float, oversampling: float) -> TimeGrid:
    import warnings

    osf = oversampling
    if osf < 2.0:
        warnings.warn(f"oversampling {osf:g} below 2; raising to 2", stacklevel=2)
        osf = 2.0
    return TimeGrid.for_band(band, -0.5 * window, 0.5 * window, oversampling=osf)


def _decode(decoder: str, firing, y, band, grid, dec_cfg: DecoderConfig):
    """Run the configured decoder; returns (IQPair, Signal, diag_or_None)."""
    if decoder == "closed_form":
        system = rec.build_closed_form(firing, y, band, grid)
        pair = rec.solve_closed_form(system, rcond=dec_cfg.rcond)
        return pair, modulate(pair, band.f0), None
    pair, signal, diag = rec.apocs(firing, y, band, grid,
                                   dec_cfg.iter_config(), gain=dec_cfg.gain)
    return pair, signal, diag


# ---------------------------------------------------------------------------
# feasibility: encode/decode the reference waveform with the bandpass
# scheme (threshold 1/120) and the bandlimited baseline (threshold 1/260;
# components at 1/60), dumping waveforms, firing files, integrator traces
# and an SNDR summary.

def run_feasibility(cfg: ExperimentConfig, out_dir, figures: bool = True) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    band = cfg.signal.band()
    grid = TimeGrid.for_band(band, cfg.grid.t_start, cfg.grid.t_end,
                             oversampling=cfg.grid.oversampling)
    x, iq = gen_test_signal(cfg.signal.f0, cfg.signal.f1, cfg.signal.f2, grid)

    p_bp = cfg.tem.params()
    check = enc.validate_params(p_bp, band)
    f_bp = enc.encode(x, p_bp)
    y_bp = enc.measurements(f_bp)
    iq_bp, x_bp, diag_bp = rec.apocs(f_bp, y_bp, band, grid,
                                     cfg.decoder.iter_config(),
                                     gain=cfg.decoder.gain)

    cutoff_bl = band.upper_edge
    delta_bl = (p_bp.b - p_bp.c) / (2.0 * p_bp.kappa * 2.0 * cutoff_bl)
    p_bl = cfg.tem.params(delta_bl)
    f_bl = enc.encode(x, p_bl)
    y_bl = enc.measurements(f_bl)
    x_bl, diag_bl = rec.pocs_bandlimited(f_bl, y_bl, cutoff_bl, grid,
                                         cfg.decoder.iter_config())

    # Component-wise bandlimited encoding (threshold set by the component
    # cutoff b_bp/2).
    delta_iq = (p_bp.b - p_bp.c) / (2.0 * p_bp.kappa * cfg.signal.bandwidth)
    p_iq = cfg.tem.params(delta_iq)
    bl_iq = {}
    for name, values in (("i", iq.xi), ("q", iq.xq)):
        comp = Signal(grid, values)
        f_c = enc.encode(comp, p_iq)
        x_c, _ = rec.pocs_bandlimited(f_c, enc.measurements(f_c),
                                      0.5 * band.b_bp, grid,
                                      cfg.decoder.iter_config())
        bl_iq[name] = (f_c, x_c, sndr_db(comp, x_c, TRIM).sndr_db)

    write_signal_csv(x, os.path.join(out_dir, "signal_reference.csv"))
    write_iq_csv(iq, os.path.join(out_dir, "iq_reference.csv"))
    write_signal_csv(x_bp, os.path.join(out_dir, "bp_reconstructed.csv"))
    write_iq_csv(iq_bp, os.path.join(out_dir, "bp_iq_reconstructed.csv"))
    write_signal_csv(x_bl, os.path.join(out_dir, "bl_reconstructed.csv"))
    write_iq_csv(IQPair(grid, bl_iq["i"][1].values, bl_iq["q"][1].values),
                 os.path.join(out_dir, "bl_iq_reconstructed.csv"))
    enc.write_firing_file(f_bp, os.path.join(out_dir, "bp_firings.txt"))
    enc.write_firing_file(f_bl, os.path.join(out_dir, "bl_firings.txt"))
    enc.write_firing_file(bl_iq["i"][0], os.path.join(out_dir, "bl_i_firings.txt"))
    enc.write_firing_file(bl_iq["q"][0], os.path.join(out_dir, "bl_q_firings.txt"))
    trace_bp = enc.integrator_trace(x, p_bp, f_bp)
    trace_bl = enc.integrator_trace(x, p_bl, f_bl)
    write_signal_csv(trace_bp, os.path.join(out_dir, "bp_integrator.csv"))
    write_signal_csv(trace_bl, os.path.join(out_dir, "bl_integrator.csv"))

    summary = [
        ("bp_signal", "apocs", p_bp.delta, f_bp.times.size,
         sndr_db(x, x_bp, TRIM).sndr_db),
        ("bp_i", "apocs", p_bp.delta, f_bp.times.size,
         sndr_db(Signal(grid, iq.xi), Signal(grid, iq_bp.xi), TRIM).sndr_db),
        ("bp_q", "apocs", p_bp.delta, f_bp.times.size,
         sndr_db(Signal(grid, iq.xq), Signal(grid, iq_bp.xq), TRIM).sndr_db),
        ("bl_signal", "pocs_bl", p_bl.delta, f_bl.times.size,
         sndr_db(x, x_bl, TRIM).sndr_db),
        ("bl_i", "pocs_bl", p_iq.delta, bl_iq["i"][0].times.size, bl_iq["i"][2]),
        ("bl_q", "pocs_bl", p_iq.delta, bl_iq["q"][0].times.size, bl_iq["q"][2]),
    ]
    header = [
        "command=feasibility",
        f"base_seed={cfg.base_seed}",
        f"recovery_condition={check.message}",
        f"firings bp={f_bp.times.size} bl={f_bl.times.size}",
    ]
    write_csv(os.path.join(out_dir, "sndr_summary.csv"), header,
              ["branch", "decoder", "delta", "firings", "sndr_db"], summary)
    with open(os.path.join(out_dir, "diagnostics.json"), "w",
              encoding="ascii") as fh:
        json.dump({"bp_apocs": diag_bp.as_dict(),
                   "bl_pocs": diag_bl.as_dict()}, fh, indent=2)
        fh.write("\n")
    write_config_echo(cfg, os.path.join(out_dir, "config_echo.ini"))

    if figures:
        from . import plotting
        plotting.save_feasibility_figure(
            os.path.join(out_dir, "feasibility_signal.png"),
            grid, x, x_bp, x_bl, trace_bp, trace_bl)
        plotting.save_feasibility_iq_figure(
            os.path.join(out_dir, "feasibility_iq.png"),
            grid, iq, iq_bp,
            IQPair(grid, bl_iq["i"][1].values, bl_iq["q"][1].values))
    return {row[0]: row[4] for row in summary}


# ---------------------------------------------------------------------------
# freq-sweep: SNDR versus center frequency per threshold.

def _freq_point(args) -> tuple:
    cfg, delta, f0 = args
    sw = cfg.freq_sweep
    band = cfg.signal.band(f0)
    grid = _sweep_grid(band, sw.window, sw.oversampling)
    x, _ = gen_test_signal(f0, cfg.signal.f1, cfg.signal.f2, grid)
    params = cfg.tem.params(delta)
    check = enc.validate_params(params, band)
    firing = enc.encode(x, params)
    y = enc.measurements(firing)
    _, x_rec, _ = _decode(sw.decoder, firing, y, band, grid, cfg.decoder)
    return (delta, f0, check.accepted, sndr_db(x, x_rec, TRIM).sndr_db)


def run_freq_sweep(cfg: ExperimentConfig, out_dir, full: bool = False,
                   threads: int = 1, figures: bool = True) -> list:
    os.makedirs(out_dir, exist_ok=True)
    axis = cfg.freq_sweep.axis(full)
    cells = [(cfg, delta, float(f0))
             for delta in sorted(cfg.freq_sweep.deltas, reverse=True)
             for f0 in axis]
    rows = _run_cells(_freq_point, cells, threads)
    rows.sort(key=lambda r: (-r[0], r[1]))
    header = [
        "command=freq-sweep",
        f"base_seed={cfg.base_seed}",
        f"decoder={cfg.freq_sweep.decoder}",
        f"window={_fmt(cfg.freq_sweep.window)} "
        f"oversampling={_fmt(cfg.freq_sweep.oversampling)}",
    ]
    for delta in sorted(cfg.freq_sweep.deltas, reverse=True):
        check = enc.validate_params(cfg.tem.params(delta), cfg.signal.band())
        header.append(f"recovery_condition delta={_fmt(delta)}: {check.message}")
    write_csv(os.path.join(out_dir, "freq_sweep.csv"), header,
              ["delta", "f0", "feasible", "sndr_db"], rows)
    write_config_echo(cfg, os.path.join(out_dir, "config_echo.ini"))
    if figures:
        from . import plotting
        plotting.save_freq_sweep_figure(
            os.path.join(out_dir, "freq_sweep.png"), rows)
    return rows


# ---------------------------------------------------------------------------
# noise-sweep: Monte Carlo mean SNDR per (kind, f0, input SNR).

def _noise_trial(cfg: ExperimentConfig, kind: str, f0: float, snr: float,
                 seed: int) -> float:
    sw = cfg.noise_sweep
    band = cfg.signal.band(f0)
    grid = _sweep_grid(band, sw.window, sw.oversampling)
    x, _ = gen_test_signal(f0, cfg.signal.f1, cfg.signal.f2, grid)
    noisy = add_noise(x, snr, kind=kind, band=band, seed=seed)
    params = cfg.tem.params(sw.delta)
    # Noise excursions exceed the design bound; interval-bound guarantees
    # are void but the encoder still operates.
    firing = enc.encode(noisy, params,
                        enforce_amplitude_bound=math.isinf(snr))
    y = enc.measurements(firing)
    _, x_rec, _ = _decode("closed_form", firing, y, band, grid, cfg.decoder)
    return sndr_db(x, x_rec, TRIM).sndr_db


def _noise_cell(args) -> tuple:
    cfg, kind, f0, snr = args
    seed = cell_seed(cfg.base_seed, f"noise:{kind}:{f0:.6g}:{snr:.6g}")
    result = monte_carlo(lambda s: _noise_trial(cfg, kind, f0, snr, s),
                         cfg.noise_sweep.trials, seed)
    return (kind, f0, snr, result.trials, result.mean_db, result.std_db,
            result.mean_db - snr)


def run_noise_sweep(cfg: ExperimentConfig, out_dir, full: bool = False,
                    threads: int = 1, figures: bool = True) -> list:
    os.makedirs(out_dir, exist_ok=True)
    if full:
        cfg = dataclasses.replace(
            cfg, noise_sweep=dataclasses.replace(cfg.noise_sweep, trials=100))
    cells = [(cfg, kind, float(f0), float(snr))
             for kind in sorted(cfg.noise_sweep.kinds)
             for f0 in sorted(cfg.noise_sweep.f0)
             for snr in sorted(cfg.noise_sweep.snr_db)]
    rows = _run_cells(_noise_cell, cells, threads)
    check = enc.validate_params(cfg.tem.params(cfg.noise_sweep.delta),
                                cfg.signal.band())
    header = [
        "command=noise-sweep",
        f"base_seed={cfg.base_seed}",
        f"delta={_fmt(cfg.noise_sweep.delta)} decoder=closed_form",
        f"window={_fmt(cfg.noise_sweep.window)} "
        f"oversampling={_fmt(cfg.noise_sweep.oversampling)}",
        f"recovery_condition: {check.message}",
    ]
    write_csv(os.path.join(out_dir, "noise_sweep.csv"), header,
              ["kind", "f0", "snr_in_db", "trials", "sndr_rec_db",
               "sndr_std_db", "gain_db"], rows)
    write_config_echo(cfg, os.path.join(out_dir, "config_echo.ini"))
    if figures:
        from . import plotting
        plotting.save_noise_sweep_figure(
            os.path.join(out_dir, "noise_sweep.png"), rows)
    return rows


# ---------------------------------------------------------------------------
# quant-sweep: Monte Carlo mean SNDR per (f0, timing-resolution bits).

def _quant_trial(cfg: ExperimentConfig, firing, band, grid, x, n_bits: int,
                 seed: int) -> float:
    quantized = enc.quantize_times(firing, n_bits, seed=seed)
    y = enc.measurements(quantized)
    _, x_rec, _ = rec.apocs(quantized, y, band, grid,
                            cfg.decoder.iter_config(), gain=cfg.decoder.gain)
    return sndr_db(x, x_rec, TRIM).sndr_db


def _quant_cell(args) -> tuple:
    cfg, f0, n_bits = args
    sw = cfg.quant_sweep
    band = cfg.signal.band(f0)
    grid = _sweep_grid(band, sw.window, sw.oversampling)
    x, _ = gen_test_signal(f0, cfg.signal.f1, cfg.signal.f2, grid)
    params = cfg.tem.params(sw.delta)
    firing = enc.encode(x, params)
    step = enc.quantization_step(params, n_bits)
    seed = cell_seed(cfg.base_seed, f"quant:{f0:.6g}:{n_bits}")
    result = monte_carlo(
        lambda s: _quant_trial(cfg, firing, band, grid, x, n_bits, s),
        sw.trials, seed)
    return (f0, n_bits, step, result.trials, result.mean_db, result.std_db)


def run_quant_sweep(cfg: ExperimentConfig, out_dir, full: bool = False,
                    threads: int = 1, figures: bool = True) -> list:
    os.makedirs(out_dir, exist_ok=True)
    if full:
        cfg = dataclasses.replace(
            cfg, quant_sweep=dataclasses.replace(cfg.quant_sweep, trials=100))
    cells = [(cfg, float(f0), int(n))
             for f0 in sorted(cfg.quant_sweep.f0)
             for n in sorted(cfg.quant_sweep.bits)]
    rows = _run_cells(_quant_cell, cells, threads)
    check = enc.validate_params(cfg.tem.params(cfg.quant_sweep.delta),
                                cfg.signal.band())
    header = [
        "command=quant-sweep",
        f"base_seed={cfg.base_seed}",
        f"delta={_fmt(cfg.quant_sweep.delta)} decoder=apocs",
        f"recovery_condition: {check.message}",
    ]
    write_csv(os.path.join(out_dir, "quant_sweep.csv"), header,
              ["f0", "n_bits", "delta_step", "trials", "sndr_db",
               "sndr_std_db"], rows)
    write_config_echo(cfg, os.path.join(out_dir, "config_echo.ini"))
    if figures:
        from . import plotting
        plotting.save_quant_sweep_figure(
            os.path.join(out_dir, "quant_sweep.png"), rows)
    return rows


# ---------------------------------------------------------------------------
# baseline-uniform: classical uniform sampling + brick-wall band selection.

def uniform_sampling_valid(rate: float, band: BandSpec) -> bool:
    """Classical bandpass-sampling aliasing check for a uniform rate."""
    f_lo, f_hi = band.lower_edge, band.upper_edge
    if rate >= 2.0 * f_hi:
        return True
    m = 1
    while m * rate <= 2.0 * f_hi:
        if 2.0 * f_hi / (m + 1) <= rate <= (2.0 * f_lo / m if m > 0 else math.inf):
            return True
        m += 1
    return False


def _baseline_trial(cfg: ExperimentConfig, rate: float, seed: int) -> float:
    base = cfg.baseline
    band = cfg.signal.band(base.f0)
    nominal = base.oversampling * 2.0 * band.upper_edge
    m = max(int(math.ceil(nominal / rate)), 2)
    fs_grid = m * rate
    n = int(round(base.window * fs_grid)) + 1
    grid = TimeGrid(-0.5 * base.window, 1.0 / fs_grid, n)
    x, _ = gen_test_signal(base.f0, cfg.signal.f1, cfg.signal.f2, grid)
    noisy = add_noise(x, base.snr_db, kind="white", seed=seed)
    sampled = np.zeros(grid.n)
    sampled[::m] = noisy.values[::m]
    recovered = bandpass_filter(Signal(grid, m * sampled), band)
    return sndr_db(x, recovered, TRIM).sndr_db


def _baseline_cell(args) -> tuple:
    cfg, rate = args
    band = cfg.signal.band(cfg.baseline.f0)
    seed = cell_seed(cfg.base_seed, f"baseline:{rate:.6g}")
    result = monte_carlo(lambda s: _baseline_trial(cfg, rate, s),
                         cfg.baseline.trials, seed)
    aliased = not uniform_sampling_valid(rate, band)
    return (rate, aliased, result.trials, result.mean_db, result.std_db)


def run_baseline_uniform(cfg: ExperimentConfig, out_dir, full: bool = False,
                         threads: int = 1, figures: bool = True) -> list:
    os.makedirs(out_dir, exist_ok=True)
    cells = [(cfg, float(rate)) for rate in sorted(cfg.baseline.rates)]
    rows = _run_cells(_baseline_cell, cells, threads)
    header = [
        "command=baseline-uniform",
        f"base_seed={cfg.base_seed}",
        f"f0={_fmt(cfg.baseline.f0)} snr_in_db={_fmt(cfg.baseline.snr_db)} "
        f"kind=white",
        "aliased=true marks rates violating the bandpass-sampling condition",
    ]
    write_csv(os.path.join(out_dir, "baseline_uniform.csv"), header,
              ["sample_rate_hz", "aliased", "trials", "sndr_db",
               "sndr_std_db"], rows)
    write_config_echo(cfg, os.path.join(out_dir, "config_echo.ini"))
    if figures:
        from . import plotting
        plotting.save_baseline_figure(
            os.path.join(out_dir, "baseline_uniform.png"), rows)
    return rows


def _run_cells(worker, cells, threads: int) -> list:
    if threads <= 1:
        return [worker(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, cells, chunksize=1))
