"""Interval integrals against off-grid breakpoints.

Measurements live on intervals ``[t_k, t_{k+1})`` between firing times
while signals live on a uniform grid.  This module provides both halves
of that bridge:

* :meth:`IntervalQuadrature.measure` integrates a grid signal over every
  interval.  Each grid cell contributes the exact antiderivative of its
  local four-point (cubic) interpolant, so smooth integrands are
  integrated with O(dt^4) error even when breakpoints fall inside cells.
* :meth:`IntervalQuadrature.spread` places per-interval coefficients back
  onto the grid using the *dual basis* of the measurement functionals
  (the raw weight functions corrected by their Gram matrix).  This makes
  ``measure(spread(r)) == r`` hold to machine precision and makes
  ``spread . measure`` an exact orthogonal projection in the grid inner
  product ``<u, v> = dt * sum(u*v)``.

The projection structure is what the decoders' operator identities
(idempotency, firm nonexpansiveness, interval data-consistency) rely on;
with naive sampled indicators those identities only hold up to O(dt).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import InsufficientFiringsError, ParameterError
from .signals import TimeGrid

# Cubic Lagrange bases on the three stencil placements relative to a cell
# [0, 1]: interior (nodes -1..2), left edge (0..3), right edge (-2..1).
# ``offset`` is the stencil start minus (cell - 1).
_STENCIL_OFFSETS = (0, 1, -1)


def _basis_tables(offset: int):
    nodes = np.arange(4, dtype=np.float64) - 1.0 + offset
    polys = []
    antis = []
    for m in range(4):
        others = np.delete(nodes, m)
        coeffs = np.poly(others) / np.prod(nodes[m] - others)
        polys.append(coeffs)
        antis.append(np.polyint(coeffs))
    return np.array(polys), np.array(antis)


_POLY = {}
_ANTI = {}
for _off in _STENCIL_OFFSETS:
    _POLY[_off], _ANTI[_off] = _basis_tables(_off)
# Integral of each basis over the full cell, per stencil placement.
_FULL = {off: np.array([np.polyval(a, 1.0) - np.polyval(a, 0.0) for a in _ANTI[off]])
         for off in _STENCIL_OFFSETS}


def _cell_stencil(cell: int, n: int) -> tuple[int, int]:
    """(first stencil index, offset key) for a grid cell."""
    s0 = min(max(cell - 1, 0), n - 4)
    return s0, s0 - (cell - 1)


def _partial_weights(offset: int, lo: float, hi: float) -> np.ndarray:
    anti = _ANTI[offset]
    return np.array([np.polyval(a, hi) - np.polyval(a, lo) for a in anti])


def cell_integrals(values: np.ndarray, dt: float) -> np.ndarray:
    """Integral of the local cubic interpolant over every grid cell."""
    u = np.asarray(values, dtype=np.float64)
    n = u.size
    if n < 4:
        raise ParameterError("cubic cell integration needs at least 4 samples")
    out = np.empty(n - 1)
    w = _FULL[0]
    out[1:-1] = dt * (w[0] * u[:-3] + w[1] * u[1:-2] + w[2] * u[2:-1] + w[3] * u[3:])
    out[0] = dt * float(np.dot(_FULL[1], u[:4]))
    out[-1] = dt * float(np.dot(_FULL[-1], u[-4:]))
    return out


def locate(grid: TimeGrid, instant: float) -> tuple[int, float]:
    """Cell index and in-cell coordinate (0..1) of a time instant."""
    pos = (instant - grid.t_start) / grid.dt
    cell = int(np.floor(pos))
    cell = min(max(cell, 0), grid.n - 2)
    theta = min(max(pos - cell, 0.0), 1.0)
    return cell, theta


class IntervalQuadrature:
    """Integration functionals over consecutive firing intervals.

    Parameters
    ----------
    grid : TimeGrid
        Grid the integrands are sampled on (needs at least 4 points).
    times : array_like
        Strictly increasing breakpoints inside the grid window; the k-th
        functional integrates over ``[times[k], times[k+1]]``.
    """

    def __init__(self, grid: TimeGrid, times):
        times = np.asarray(times, dtype=np.float64)
        if times.ndim != 1 or times.size < 2:
            raise InsufficientFiringsError(
                "need at least two breakpoints to form an interval")
        if np.any(np.diff(times) <= 0.0):
            raise ParameterError("breakpoints must be strictly increasing")
        if grid.n < 4:
            raise ParameterError("grid too short for interval quadrature")
        eps = 1e-9 * grid.dt
        if times[0] < grid.t_start - eps or times[-1] > grid.t_end + eps:
            raise ParameterError("breakpoints fall outside the grid window")
        self.grid = grid
        self.times = times
        self.durations = np.diff(times)
        self._build(grid, times)

    def _build(self, grid: TimeGrid, times: np.ndarray) -> None:
        n = grid.n
        dt = grid.dt
        rows, cols, vals = [], [], []
        for k in range(times.size - 1):
            ca, ta = locate(grid, times[k])
            cb, tb = locate(grid, times[k + 1])
            if cb > ca and tb == 0.0:
                cb -= 1
                tb = 1.0
            lo = min(_cell_stencil(ca, n)[0], _cell_stencil(cb, n)[0])
            hi = max(_cell_stencil(ca, n)[0], _cell_stencil(cb, n)[0]) + 4
            w = np.zeros(hi - lo)

            def _add_partial(cell, a, b):
                s0, off = _cell_stencil(cell, n)
                w[s0 - lo:s0 - lo + 4] += _partial_weights(off, a, b)

            if ca == cb:
                _add_partial(ca, ta, tb)
            else:
                _add_partial(ca, ta, 1.0)
                _add_partial(cb, 0.0, tb)
                first, last = ca + 1, cb - 1
                # Edge cells need their shifted stencils; interior full
                # cells all share one pattern and vectorize.
                while first <= last and _cell_stencil(first, n)[1] != 0:
                    s0, off = _cell_stencil(first, n)
                    w[s0 - lo:s0 - lo + 4] += _FULL[off]
                    first += 1
                while last >= first and _cell_stencil(last, n)[1] != 0:
                    s0, off = _cell_stencil(last, n)
                    w[s0 - lo:s0 - lo + 4] += _FULL[off]
                    last -= 1
                m = last - first + 1
                if m > 0:
                    base = first - 1 - lo
                    full = _FULL[0]
                    for j in range(4):
                        w[base + j:base + j + m] += full[j]
            nz = np.nonzero(w)[0]
            rows.append(np.full(nz.size, k))
            cols.append(nz + lo)
            vals.append(w[nz] * dt)
        self._weights = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(times.size - 1, n))
        gram = (self._weights @ self._weights.T) / dt
        self._gram = gram.tocsc()
        self._gram_solve = splu(self._gram)

    @property
    def n_intervals(self) -> int:
        return self.times.size - 1

    def measure(self, values: np.ndarray) -> np.ndarray:
        """Integral of the grid function over every interval.

        ``values`` may be ``(n,)`` or ``(n, m)``; one column per signal.
        """
        return self._weights @ np.asarray(values, dtype=np.float64)

    def spread(self, coeffs: np.ndarray) -> np.ndarray:
        """Grid function whose interval integrals equal ``coeffs`` exactly.

        Returns the dual-basis expansion: interior samples sit close to
        ``coeffs[k] / durations[k]`` (the piecewise-constant picture) and
        ``measure(spread(r)) == r`` to machine precision.
        """
        beta = self._gram_solve.solve(
            np.ascontiguousarray(coeffs, dtype=np.float64))
        return (self._weights.T @ beta) / self.grid.dt
