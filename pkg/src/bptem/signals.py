"""Continuous-time signal surrogate on uniform grids.

Signals are represented by their samples on a uniform, finite time grid
that is oversampled well beyond the band of interest.  Ideal filters are
brick-wall masks applied to the DFT of the windowed signal (circular
convention); this is the only filtering model used anywhere in the
package, so filter idempotency and Parseval identities hold to machine
precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, ParameterError

#: Default grid rate relative to twice the upper band edge.
DEFAULT_OVERSAMPLING = 8.0


def _readonly(values) -> np.ndarray:
    out = np.asarray(values, dtype=np.float64)
    out = np.array(out, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid: ``t_j = t_start + j * dt`` for ``j < n``."""

    t_start: float
    dt: float
    n: int

    def __post_init__(self):
        if not (self.dt > 0.0) or not math.isfinite(self.dt):
            raise ParameterError(f"grid step must be positive, got {self.dt}")
        if self.n < 2:
            raise ParameterError(f"grid needs at least 2 samples, got {self.n}")

    @property
    def t_end(self) -> float:
        return self.t_start + (self.n - 1) * self.dt

    @property
    def duration(self) -> float:
        return (self.n - 1) * self.dt

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    @property
    def nyquist(self) -> float:
        return 0.5 / self.dt

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n)

    @classmethod
    def for_band(cls, band: "BandSpec", t_start: float, t_end: float,
                 oversampling: float = DEFAULT_OVERSAMPLING) -> "TimeGrid":
        """Grid whose rate is at least ``oversampling * 2 * (f0 + b_bp/2)``.

        The sample count is rounded up to an FFT-friendly size (keeping
        the window endpoints exact), so the realized rate can slightly
        exceed the nominal one.
        """
        from scipy.fft import next_fast_len

        if oversampling < 1.0:
            raise ParameterError("oversampling factor must be >= 1")
        if not t_end > t_start:
            raise ParameterError("empty time window")
        duration = t_end - t_start
        rate = oversampling * 2.0 * band.upper_edge
        n = next_fast_len(max(int(math.floor(duration * rate)) + 1, 2))
        return cls(t_start=t_start, dt=duration / (n - 1), n=n)


@dataclass(frozen=True)
class BandSpec:
    """Bandpass band: center frequency ``f0`` and total width ``b_bp``."""

    f0: float
    b_bp: float

    def __post_init__(self):
        if not self.b_bp > 0.0:
            raise ParameterError(f"bandwidth must be positive, got {self.b_bp}")
        # Lower edge may touch zero (baseband boundary) but not cross it.
        if self.f0 < 0.5 * self.b_bp:
            raise ParameterError(
                f"band [f0 - b/2, f0 + b/2] = [{self.lower_edge}, {self.upper_edge}] "
                "extends below zero frequency")

    @property
    def lower_edge(self) -> float:
        return self.f0 - 0.5 * self.b_bp

    @property
    def upper_edge(self) -> float:
        return self.f0 + 0.5 * self.b_bp


@dataclass(frozen=True)
class Signal:
    """Real-valued waveform sampled on a :class:`TimeGrid`."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = _readonly(self.values)
        if vals.ndim != 1 or vals.size != self.grid.n:
            raise ParameterError(
                f"expected {self.grid.n} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("signal contains non-finite samples")
        object.__setattr__(self, "values", vals)

    def norm(self) -> float:
        """Windowed L2 norm, ``sqrt(dt * sum(v**2))``."""
        return math.sqrt(self.grid.dt * float(np.dot(self.values, self.values)))

    def inner(self, other: "Signal") -> float:
        if other.grid != self.grid:
            raise GridMismatchError("signals live on different grids")
        return self.grid.dt * float(np.dot(self.values, other.values))


@dataclass(frozen=True)
class IQPair:
    """In-phase / quadrature component waveforms on a shared grid."""

    grid: TimeGrid
    xi: np.ndarray
    xq: np.ndarray

    def __post_init__(self):
        xi = _readonly(self.xi)
        xq = _readonly(self.xq)
        if xi.shape != (self.grid.n,) or xq.shape != (self.grid.n,):
            raise ParameterError("component length does not match the grid")
        if not (np.all(np.isfinite(xi)) and np.all(np.isfinite(xq))):
            raise ParameterError("components contain non-finite samples")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "xq", xq)


def gen_test_signal(f0: float, f1: float, f2: float,
                    grid: TimeGrid) -> tuple[Signal, IQPair]:
    """Amplitude-and-phase modulated bandpass test waveform.

    The waveform is ``a(t) * cos(2*pi*f0*t + phi(t))`` with envelope
    ``a(t) = 2*sinc(2*f1*t)`` and phase ``phi(t) = sinc(2*f2*t)``
    (normalized sinc).  Its components are ``a*cos(phi)`` and
    ``a*sin(phi)``, band-limited to roughly ``1.5 * f1``.

    Parameters
    ----------
    f0, f1, f2 : float
        Carrier frequency, envelope rate and phase rate, all in Hz.
    grid : TimeGrid
        Evaluation grid; its Nyquist rate must clear the occupied band.

    Returns
    -------
    (Signal, IQPair)
        The passband waveform and its component pair on ``grid``.
    """
    for name, f in (("f0", f0), ("f1", f1), ("f2", f2)):
        if not f > 0.0:
            raise ParameterError(f"{name} must be positive, got {f}")
    if f0 + 1.5 * f1 >= grid.nyquist:
        raise ParameterError(
            f"band edge {f0 + 1.5 * f1} Hz at or above grid Nyquist {grid.nyquist} Hz")
    t = grid.times()
    env = 2.0 * np.sinc(2.0 * f1 * t)
    phase = np.sinc(2.0 * f2 * t)
    x = env * np.cos(2.0 * np.pi * f0 * t + phase)
    xi = env * np.cos(phase)
    xq = env * np.sin(phase)
    return Signal(grid, x), IQPair(grid, xi, xq)


def _apply_rfft_mask(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    spectrum = np.fft.rfft(values)
    return np.fft.irfft(spectrum * mask, n=values.size)


def _lowpass_mask(grid: TimeGrid, cutoff: float) -> np.ndarray:
    freqs = np.fft.rfftfreq(grid.n, d=grid.dt)
    return freqs <= cutoff * (1.0 + 1e-12)


def _bandpass_mask(grid: TimeGrid, band: BandSpec) -> np.ndarray:
    freqs = np.fft.rfftfreq(grid.n, d=grid.dt)
    lo = band.lower_edge * (1.0 - 1e-12)
    hi = band.upper_edge * (1.0 + 1e-12)
    return (freqs >= lo) & (freqs <= hi)


def lowpass_filter(s: Signal, cutoff: float) -> Signal:
    """Ideal (brick-wall) low-pass filter with pass band ``|f| <= cutoff``.

    The mask is applied to the DFT of the windowed signal, so the filter
    is exactly idempotent and exactly an orthogonal projection onto the
    grid's in-band subspace.
    """
    if not cutoff > 0.0:
        raise ParameterError(f"cutoff must be positive, got {cutoff}")
    if cutoff >= s.grid.nyquist:
        raise ParameterError(
            f"cutoff {cutoff} Hz at or above grid Nyquist {s.grid.nyquist} Hz")
    return Signal(s.grid, _apply_rfft_mask(s.values, _lowpass_mask(s.grid, cutoff)))


def bandpass_filter(s: Signal, band: BandSpec) -> Signal:
    """Ideal band-pass filter passing ``|f|`` in ``[f0 - b/2, f0 + b/2]``."""
    if band.upper_edge >= s.grid.nyquist:
        raise ParameterError(
            f"band edge {band.upper_edge} Hz at or above grid Nyquist "
            f"{s.grid.nyquist} Hz")
    return Signal(s.grid, _apply_rfft_mask(s.values, _bandpass_mask(s.grid, band)))


def modulate(iq: IQPair, f0: float) -> Signal:
    """Recompose the passband signal ``xi*cos(2*pi*f0*t) - xq*sin(2*pi*f0*t)``."""
    t = iq.grid.times()
    arg = 2.0 * np.pi * f0 * t
    return Signal(iq.grid, iq.xi * np.cos(arg) - iq.xq * np.sin(arg))


def add_noise(s: Signal, snr_in_db: float, kind: str = "white",
              band: BandSpec | None = None, seed: int = 0) -> Signal:
    """Add Gaussian noise at an exactly realized signal-to-noise ratio.

    ``snr_in_db = math.inf`` is the no-noise sentinel and returns the
    input unchanged.  The noise realization is drawn from
    ``numpy.random.default_rng(seed)`` and then rescaled so that
    ``||s|| / ||w||`` matches ``snr_in_db`` exactly, which removes Monte
    Carlo variance from energy ratios.

    ``kind`` is ``"white"`` or ``"bandpass"``; the latter passes white
    noise through :func:`bandpass_filter` on ``band`` before rescaling.
    """
    if math.isnan(snr_in_db):
        raise ParameterError("snr_in_db must be finite or +inf")
    if snr_in_db == math.inf:
        return s
    if kind not in ("white", "bandpass"):
        raise ParameterError(f"unknown noise kind {kind!r}")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(s.grid.n)
    if kind == "bandpass":
        if band is None:
            raise ParameterError("bandpass noise needs a band")
        w = bandpass_filter(Signal(s.grid, w), band).values
    w_norm = float(np.linalg.norm(w))
    if w_norm == 0.0:
        raise ParameterError("noise realization has zero energy on this grid")
    s_norm = float(np.linalg.norm(s.values))
    scale = s_norm / w_norm * 10.0 ** (-snr_in_db / 20.0)
    return Signal(s.grid, s.values + scale * w)


# ---------------------------------------------------------------------------
# CSV serialization: `t,value` (signals) and `t,xi,xq` (component pairs),
# one row per grid point, >= 12 significant digits.

def write_signal_csv(s: Signal, path) -> None:
    t = s.grid.times()
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("t,value\n")
        for ti, vi in zip(t, s.values):
            fh.write(f"{ti:.15g},{vi:.15g}\n")


def write_iq_csv(iq: IQPair, path) -> None:
    t = iq.grid.times()
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("t,xi,xq\n")
        for ti, ai, bi in zip(t, iq.xi, iq.xq):
            fh.write(f"{ti:.15g},{ai:.15g},{bi:.15g}\n")


def _grid_from_times(t: np.ndarray) -> TimeGrid:
    if t.size < 2:
        raise ParameterError("need at least two rows to infer a grid")
    dt = (t[-1] - t[0]) / (t.size - 1)
    return TimeGrid(t_start=float(t[0]), dt=float(dt), n=int(t.size))


def read_signal_csv(path) -> Signal:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    grid = _grid_from_times(data[:, 0])
    return Signal(grid, data[:, 1])


def read_iq_csv(path) -> IQPair:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    grid = _grid_from_times(data[:, 0])
    return IQPair(grid, data[:, 1], data[:, 2])
