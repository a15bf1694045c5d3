"""Reconstruction-quality metrics and Monte Carlo aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, MetricError, ParameterError, TrialError
from .signals import Signal


@dataclass(frozen=True)
class SndrReport:
    """Signal-to-noise-plus-distortion ratio over the trimmed window."""

    sndr_db: float
    trim_fraction: float
    n_samples_compared: int


def trim_slice(n: int, trim: float) -> slice:
    """Index range keeping the central ``trim`` fraction of the window."""
    if not 0.0 < trim <= 1.0:
        raise ParameterError(f"trim fraction must be in (0, 1], got {trim}")
    drop = int(round((n - 1) * 0.5 * (1.0 - trim)))
    return slice(drop, n - drop)


def sndr_db(reference: Signal, reconstructed: Signal,
            trim: float = 0.9) -> SndrReport:
    """SNDR in dB: ``20*log10(||x|| / ||x - x_hat||)``.

    Both signals are restricted to the central ``trim`` fraction of the
    time window (5% of the duration dropped at each end by default) to
    exclude boundary effects of the decoders.  An exact match reports
    ``+inf``; a zero-energy reference is undefined and raises.
    """
    if reference.grid != reconstructed.grid:
        raise GridMismatchError("signals live on different grids")
    sel = trim_slice(reference.grid.n, trim)
    ref = reference.values[sel]
    err = ref - reconstructed.values[sel]
    ref_norm = float(np.linalg.norm(ref))
    if ref_norm == 0.0:
        raise MetricError("reference has zero energy on the trimmed window")
    err_norm = float(np.linalg.norm(err))
    value = math.inf if err_norm == 0.0 else 20.0 * math.log10(ref_norm / err_norm)
    return SndrReport(sndr_db=value, trim_fraction=trim,
                      n_samples_compared=ref.size)


@dataclass(frozen=True)
class MonteCarloResult:
    """Mean and spread of a metric over independent seeded trials."""

    mean_db: float
    std_db: float
    values: tuple

    @property
    def trials(self) -> int:
        return len(self.values)


def monte_carlo(run, trials: int, base_seed: int) -> MonteCarloResult:
    """Average a seeded experiment closure over independent trials.

    Trial ``i`` calls ``run(base_seed + i)`` and expects a float back.
    The whole aggregate is deterministic given ``base_seed``; a failing
    trial raises :class:`TrialError` naming its seed.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    values = []
    for i in range(trials):
        seed = base_seed + i
        try:
            values.append(float(run(seed)))
        except Exception as exc:
            raise TrialError(f"trial with seed {seed} failed: {exc}") from exc
    arr = np.array(values)
    return MonteCarloResult(mean_db=float(arr.mean()),
                            std_db=float(arr.std()),
                            values=tuple(values))
