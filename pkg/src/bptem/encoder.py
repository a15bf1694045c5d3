"""Integrate-and-fire time encoder.

The encoder adds a bias ``b`` to the input, scales by ``1/kappa`` and
integrates; every time the running integral gains ``2*delta`` a firing
time is recorded and the accumulation restarts.  For a bounded input
(``|x| <= c`` with ``b > c``) the integrator slope stays positive, so
consecutive firing intervals are confined to
``[2*kappa*delta/(b+c), 2*kappa*delta/(b-c)]`` and each interval
carries one amplitude integral ``y_k = 2*kappa*delta - b*(t_{k+1}-t_k)``.

Crossing times are located on the signal grid by integrating the local
cubic interpolant cell by cell and running a safeguarded Newton solve
inside the straddling cell, which keeps timing errors of the order of
``dt**4`` — far below what the decoders can resolve.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import (AmplitudeBoundError, DegenerateQuantizationError,
                     EncodingError, InsufficientFiringsError, ParameterError)
from .quadrature import _ANTI, _POLY, cell_integrals
from .signals import BandSpec, Signal, _readonly


@dataclass(frozen=True)
class TemParams:
    """Encoder parameters: scale ``kappa``, threshold ``delta``, bias ``b``
    and the amplitude bound ``c`` assumed on the input."""

    kappa: float
    delta: float
    b: float
    c: float

    def __post_init__(self):
        if not self.kappa > 0.0:
            raise ParameterError(f"kappa must be positive, got {self.kappa}")
        if not self.delta > 0.0:
            raise ParameterError(f"delta must be positive, got {self.delta}")
        if self.c < 0.0:
            raise ParameterError(f"amplitude bound must be >= 0, got {self.c}")
        if not self.b > 0.0:
            raise ParameterError(f"bias must be positive, got {self.b}")
        # b > c is required for encoding; it is checked by validate_params
        # and encode so that an infeasible combination can still be
        # constructed and reported on.

    @property
    def min_interval(self) -> float:
        return 2.0 * self.kappa * self.delta / (self.b + self.c)

    @property
    def max_interval(self) -> float:
        if self.b <= self.c:
            return math.inf
        return 2.0 * self.kappa * self.delta / (self.b - self.c)


@dataclass(frozen=True)
class ParamCheck:
    """Feasibility verdict for recovering a band from a firing sequence."""

    accepted: bool
    failed_condition: str | None
    delta_max: float
    min_rate: float
    landau_rate: float

    @property
    def message(self) -> str:
        if self.accepted:
            return (f"accepted: min firing rate {self.min_rate:g} Hz >= "
                    f"Landau rate {self.landau_rate:g} Hz")
        return (f"rejected ({self.failed_condition}): maximal admissible "
                f"delta is {self.delta_max:.12g}")


def validate_params(p: TemParams, band: BandSpec) -> ParamCheck:
    """Check that the parameters guarantee unique recovery over ``band``.

    The two conditions are ``b > c`` and ``2*b_bp <= (b-c)/(2*kappa*delta)``
    (minimum firing rate at or above the Landau rate of the band).  The
    report names the first failed inequality and the largest admissible
    threshold ``delta_max = (b-c)/(4*kappa*b_bp)``.
    """
    landau = 2.0 * band.b_bp
    delta_max = (p.b - p.c) / (4.0 * p.kappa * band.b_bp)
    if not p.b > p.c:
        return ParamCheck(False, "bias_exceeds_bound", delta_max, 0.0, landau)
    min_rate = (p.b - p.c) / (2.0 * p.kappa * p.delta)
    if landau > min_rate * (1.0 + 1e-12):
        return ParamCheck(False, "landau_rate", delta_max, min_rate, landau)
    return ParamCheck(True, None, delta_max, min_rate, landau)


def firing_rate_bounds(p: TemParams) -> tuple[float, float]:
    """Guaranteed (min_rate, max_rate) in firings per second."""
    lo = (p.b - p.c) / (2.0 * p.kappa * p.delta)
    hi = (p.b + p.c) / (2.0 * p.kappa * p.delta)
    return lo, hi


@dataclass(frozen=True)
class FiringSequence:
    """Strictly increasing firing times on an observation window."""

    times: np.ndarray
    params: TemParams
    window: tuple[float, float]
    repaired_collisions: int = 0

    def __post_init__(self):
        times = _readonly(self.times)
        if times.ndim != 1:
            raise ParameterError("firing times must be one-dimensional")
        if times.size >= 2 and not np.all(np.diff(times) > 0.0):
            raise ParameterError("firing times must be strictly increasing")
        object.__setattr__(self, "times", times)

    @property
    def intervals(self) -> np.ndarray:
        return np.diff(self.times)

    def interval_bound_violations(self, tol: float = 0.0) -> int:
        """Number of intervals outside the guaranteed bounds (with slack)."""
        gaps = self.intervals
        lo = self.params.min_interval - tol
        hi = self.params.max_interval + tol
        return int(np.sum((gaps < lo) | (gaps > hi)))


@dataclass(frozen=True)
class MeasurementSequence:
    """Per-interval amplitude integrals derived from a firing sequence."""

    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", _readonly(self.y))

    def __len__(self) -> int:
        return self.y.size


def _poly_eval(table: np.ndarray, stencil_vals: np.ndarray,
               theta: np.ndarray) -> np.ndarray:
    out = np.zeros_like(theta)
    for m in range(4):
        out += stencil_vals[:, m] * np.polyval(table[m], theta)
    return out


def _solve_crossings(u: np.ndarray, cum: np.ndarray, targets: np.ndarray,
                     cells: np.ndarray, dt: float) -> np.ndarray:
    """In-cell coordinates where the cumulative integral hits each target."""
    n = u.size
    s0 = np.minimum(np.maximum(cells - 1, 0), n - 4)
    offs = s0 - (cells - 1)
    stencil_vals = u[s0[:, None] + np.arange(4)]
    residual_target = targets - cum[cells]
    gain = cum[cells + 1] - cum[cells]
    theta = np.clip(np.divide(residual_target, gain,
                              out=np.full_like(targets, 0.5),
                              where=gain != 0.0), 0.0, 1.0)
    tiny = 1e-300
    for off in np.unique(offs):
        sel = offs == off
        sv = stencil_vals[sel]
        th = theta[sel]
        rt = residual_target[sel]
        for _ in range(6):
            f = dt * _poly_eval(_ANTI[off], sv, th) - rt
            fp = dt * _poly_eval(_POLY[off], sv, th)
            th = np.clip(th - f / np.where(np.abs(fp) > tiny, fp, tiny), 0.0, 1.0)
        f = dt * _poly_eval(_ANTI[off], sv, th) - rt
        scale = dt * (np.abs(sv).max() + 1.0)
        bad = np.abs(f) > 1e-11 * scale
        if np.any(bad):
            lo = np.zeros(int(bad.sum()))
            hi = np.ones_like(lo)
            svb = sv[bad]
            rtb = rt[bad]
            for _ in range(50):
                mid = 0.5 * (lo + hi)
                fm = dt * _poly_eval(_ANTI[off], svb, mid) - rtb
                above = fm > 0.0
                hi = np.where(above, mid, hi)
                lo = np.where(above, lo, mid)
            th[bad] = 0.5 * (lo + hi)
        theta[sel] = th
    return theta


def _integrator_cumulative(s: Signal, p: TemParams) -> np.ndarray:
    u = (s.values + p.b) / p.kappa
    cum = np.empty(s.grid.n)
    cum[0] = 0.0
    np.cumsum(cell_integrals(u, s.grid.dt), out=cum[1:])
    return cum


def encode(s: Signal, p: TemParams, *,
           enforce_amplitude_bound: bool = True) -> FiringSequence:
    """Run the integrate-and-fire encoder over the signal's window.

    The integrator starts empty at the left window edge; the first firing
    occurs once ``2*delta`` has accumulated.  Identical inputs produce
    bit-identical firing times.

    Parameters
    ----------
    s : Signal
        Input waveform; must satisfy ``max|s| <= c`` unless the check is
        explicitly disabled.
    p : TemParams
        Encoder parameters with ``b > c``.
    enforce_amplitude_bound : bool
        When False the amplitude check is skipped (used when encoding
        noisy inputs whose excursions exceed the design bound; the
        interval bounds are then no longer guaranteed).
    """
    if not p.b > p.c:
        raise ParameterError("bias must exceed the amplitude bound (b > c)")
    peak = float(np.max(np.abs(s.values)))
    if enforce_amplitude_bound and peak > p.c * (1.0 + 1e-12) + 1e-15:
        raise AmplitudeBoundError(
            f"max|signal| = {peak:.6g} exceeds the amplitude bound c = {p.c:g}; "
            "encoder behavior is undefined above the bound")
    dt = s.grid.dt
    cum = _integrator_cumulative(s, p)
    running = np.maximum.accumulate(cum)
    step = 2.0 * p.delta
    count = int(math.floor(running[-1] / step))
    while count > 0 and count * step > running[-1]:
        count -= 1
    window = (s.grid.t_start, s.grid.t_end)
    if count == 0:
        return FiringSequence(np.empty(0), p, window)
    targets = step * np.arange(1, count + 1)
    cells = np.searchsorted(running, targets, side="left") - 1
    cells = np.clip(cells, 0, s.grid.n - 2)
    # (s.values + b)/kappa is the integrand the cumulative was built from.
    theta = _solve_crossings((s.values + p.b) / p.kappa, cum, targets, cells, dt)
    times = s.grid.t_start + (cells + theta) * dt
    if np.any(np.diff(times) <= 0.0):
        gaps = np.diff(times)
        if np.any(gaps < -dt):
            raise EncodingError("crossing search produced out-of-order firings")
        for k in range(1, times.size):
            if times[k] <= times[k - 1]:
                times[k] = np.nextafter(times[k - 1], math.inf)
    return FiringSequence(times, p, window)


def integrator_trace(s: Signal, p: TemParams,
                     f: FiringSequence | None = None) -> Signal:
    """Sawtooth integrator state on the signal grid (resets at firings)."""
    if f is None:
        f = encode(s, p, enforce_amplitude_bound=False)
    cum = _integrator_cumulative(s, p)
    fired = np.searchsorted(f.times, s.grid.times(), side="right")
    return Signal(s.grid, cum - 2.0 * p.delta * fired)


def measurements(f: FiringSequence) -> MeasurementSequence:
    """Amplitude integrals ``y_k = 2*kappa*delta - b*(t_{k+1} - t_k)``."""
    if f.times.size < 2:
        raise InsufficientFiringsError(
            f"need at least 2 firings, got {f.times.size}")
    p = f.params
    return MeasurementSequence(2.0 * p.kappa * p.delta - p.b * np.diff(f.times))


def quantization_step(p: TemParams, n_bits: int) -> float:
    """Timing quantum for an ``n_bits`` representation of the interval range."""
    if n_bits < 1:
        raise ParameterError(f"n_bits must be >= 1, got {n_bits}")
    return (p.max_interval - p.min_interval) / 2.0 ** n_bits


def quantize_times(f: FiringSequence, n_bits: int, seed: int = 0) -> FiringSequence:
    """Perturb firing times by i.i.d. uniform noise on [-step/2, step/2].

    Models finite-precision timing: the quantum is the guaranteed
    interval range divided by ``2**n_bits``.  Order collisions are nudged
    apart by the smallest representable margin and counted in
    ``repaired_collisions``; a collision fraction above 25% raises
    :class:`DegenerateQuantizationError`.
    """
    step = quantization_step(f.params, n_bits)
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-0.5 * step, 0.5 * step, size=f.times.size)
    times = f.times + noise
    times = np.clip(times, f.window[0], f.window[1])
    collisions = int(np.sum(np.diff(times) <= 0.0))
    if f.times.size >= 2 and collisions > 0.25 * f.times.size:
        raise DegenerateQuantizationError(
            f"{collisions} of {f.times.size - 1} intervals collapsed; "
            "quantization step exceeds the interval spread")
    if collisions:
        for k in range(1, times.size):
            if times[k] <= times[k - 1]:
                times[k] = np.nextafter(times[k - 1], math.inf)
    return FiringSequence(times, f.params, f.window, repaired_collisions=collisions)


# ---------------------------------------------------------------------------
# Firing-sequence file format: one `# kappa=... delta=... b=... c=...
# t_start=... t_end=...` header line, then one firing time per line with
# >= 15 significant digits (timing precision dominates decode quality).

_HEADER_RE = re.compile(
    r"#\s*kappa=(?P<kappa>\S+)\s+delta=(?P<delta>\S+)\s+b=(?P<b>\S+)"
    r"\s+c=(?P<c>\S+)\s+t_start=(?P<t_start>\S+)\s+t_end=(?P<t_end>\S+)")


def write_firing_file(f: FiringSequence, path) -> None:
    p = f.params
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# kappa={p.kappa:.17g} delta={p.delta:.17g} "
                 f"b={p.b:.17g} c={p.c:.17g} "
                 f"t_start={f.window[0]:.17g} t_end={f.window[1]:.17g}\n")
        for t in f.times:
            fh.write(f"{t:.17g}\n")


def read_firing_file(path) -> FiringSequence:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        match = _HEADER_RE.match(header)
        if match is None:
            raise ParameterError(f"malformed firing-file header: {header!r}")
        g = {k: float(v) for k, v in match.groupdict().items()}
        times = np.array([float(line) for line in fh if line.strip()])
    params = TemParams(kappa=g["kappa"], delta=g["delta"], b=g["b"], c=g["c"])
    return FiringSequence(times, params, (g["t_start"], g["t_end"]))
