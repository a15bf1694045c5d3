"""Figure rendering for the experiment commands (Agg backend, PNG files)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .signals import IQPair, Signal, TimeGrid

_DPI = 150


def _new_fig(nrows, ncols, height=3.0):
    fig, axes = plt.subplots(nrows, ncols, figsize=(8.0, height * nrows),
                             squeeze=False)
    return fig, axes


def save_feasibility_figure(path, grid: TimeGrid, reference: Signal,
                            bp: Signal, bl: Signal,
                            trace_bp: Signal, trace_bl: Signal) -> None:
    t = grid.times()
    fig, axes = _new_fig(3, 1, height=2.4)
    ax = axes[0][0]
    ax.plot(t, reference.values, lw=0.8, label="reference")
    ax.plot(t, bp.values, lw=0.8, ls="--", label="bandpass TEM")
    ax.plot(t, bl.values, lw=0.8, ls=":", label="bandlimited TEM")
    ax.set_xlim(-0.35, 0.35)
    ax.set_ylabel("amplitude")
    ax.legend(loc="upper right", fontsize=8)
    ax = axes[1][0]
    ax.plot(t, trace_bp.values, lw=0.6)
    ax.set_xlim(-0.35, 0.35)
    ax.set_ylabel("integrator (BP)")
    ax = axes[2][0]
    ax.plot(t, trace_bl.values, lw=0.6)
    ax.set_xlim(-0.35, 0.35)
    ax.set_ylabel("integrator (BL)")
    ax.set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_feasibility_iq_figure(path, grid: TimeGrid, reference: IQPair,
                               bp: IQPair, bl: IQPair) -> None:
    t = grid.times()
    fig, axes = _new_fig(2, 1, height=2.6)
    for ax, name, ref, a, b in ((axes[0][0], "in-phase", reference.xi, bp.xi, bl.xi),
                                (axes[1][0], "quadrature", reference.xq, bp.xq, bl.xq)):
        ax.plot(t, ref, lw=0.8, label="reference")
        ax.plot(t, a, lw=0.8, ls="--", label="bandpass TEM")
        ax.plot(t, b, lw=0.8, ls=":", label="bandlimited TEM")
        ax.set_xlim(-1.0, 1.0)
        ax.set_ylabel(name)
    axes[0][0].legend(loc="upper right", fontsize=8)
    axes[1][0].set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_freq_sweep_figure(path, rows) -> None:
    fig, axes = _new_fig(1, 1, height=3.6)
    ax = axes[0][0]
    deltas = sorted({r[0] for r in rows}, reverse=True)
    for delta in deltas:
        pts = [(r[1], r[3]) for r in rows if r[0] == delta]
        f0, sndr = zip(*sorted(pts))
        ax.semilogx(f0, sndr, marker=".", ms=4, lw=0.8,
                    label=f"threshold {delta:.6g}")
    ax.set_xlabel("center frequency [Hz]")
    ax.set_ylabel("SNDR [dB]")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_noise_sweep_figure(path, rows) -> None:
    fig, axes = _new_fig(1, 2, height=3.6)
    kinds = sorted({r[0] for r in rows})
    for ax, kind in zip(axes[0], kinds):
        for f0 in sorted({r[1] for r in rows if r[0] == kind}):
            pts = [(r[2], r[4]) for r in rows if r[0] == kind and r[1] == f0]
            snr, sndr = zip(*sorted(pts))
            ax.plot(snr, sndr, marker="o", ms=4, lw=0.8, label=f"f0={f0:g} Hz")
        lo = min(r[2] for r in rows)
        hi = max(r[2] for r in rows)
        ax.plot([lo, hi], [lo, hi], ls=":", c="gray", lw=0.8)
        ax.set_title(f"{kind} noise", fontsize=9)
        ax.set_xlabel("input SNR [dB]")
        ax.set_ylabel("reconstructed SNDR [dB]")
        ax.legend(fontsize=8)
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_quant_sweep_figure(path, rows) -> None:
    fig, axes = _new_fig(1, 1, height=3.6)
    ax = axes[0][0]
    for f0 in sorted({r[0] for r in rows}):
        pts = [(r[1], r[4]) for r in rows if r[0] == f0]
        bits, sndr = zip(*sorted(pts))
        ax.plot(bits, sndr, marker="s", ms=4, lw=0.8, label=f"f0={f0:g} Hz")
    ax.set_xlabel("timing resolution [bits]")
    ax.set_ylabel("SNDR [dB]")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_baseline_figure(path, rows) -> None:
    fig, axes = _new_fig(1, 1, height=3.6)
    ax = axes[0][0]
    rates = [r[0] for r in rows]
    sndr = [r[3] for r in rows]
    ax.semilogx(rates, sndr, marker="d", ms=5, lw=0.8)
    for r in rows:
        if r[1]:
            ax.annotate("aliased", (r[0], r[3]), fontsize=7,
                        textcoords="offset points", xytext=(0, 6))
    ax.set_xlabel("uniform sampling rate [Hz]")
    ax.set_ylabel("SNDR [dB]")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
