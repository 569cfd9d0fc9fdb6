"""Figure rendering for the report paths.

Every experiment that writes a CSV also renders a matplotlib figure next to
it.  The CSV/JSON stay the source of truth (and the determinism contract);
figures are a convenience view and are excluded from byte-identity checks.
"""

from __future__ import annotations

import numpy as np


def _mpl():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_decay_figure(path, distances, means, stderrs, fit=None, bound=None,
                      xlabel="distance", title=""):
    """Semilog decay curve with error bars, optional fit line and bound line."""
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    d = np.asarray(distances, dtype=float)
    m = np.asarray(means, dtype=float)
    s = np.asarray(stderrs, dtype=float)
    ax.errorbar(d, m, yerr=s, fmt="o", ms=4, capsize=3, label="disorder average")
    if fit is not None:
        xs = np.linspace(d.min(), d.max(), 200)
        ax.plot(xs, fit.amplitude * np.exp(-fit.rate * xs), "-",
                label=f"fit: {fit.amplitude:.3g} exp(-{fit.rate:.3g} R)")
    if bound is not None:
        amp, rate = bound
        xs = np.linspace(d.min(), d.max(), 200)
        ax.plot(xs, amp * np.exp(-rate * xs), "--", label="bound")
    positive = m[m > 0]
    if positive.size:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("magnitude")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_experiment_figure(path, report):
    """Distance checks of a decay experiment with their bound curve."""
    ds = [c.distance for c in report.checks]
    ms = [c.estimate.mean for c in report.checks]
    ss = [c.estimate.stderr for c in report.checks]
    save_decay_figure(
        path, ds, ms, ss,
        fit=None,
        bound=(report.checks[0].bound / np.exp(-report.fit.rate * report.checks[0].distance),
               report.fit.rate) if report.checks else None,
        xlabel="configuration distance",
        title=report.kind,
    )


def save_violations_figure(path, violations, tol):
    """Convexity violations per sampled pair against the tolerance line."""
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    v = np.asarray(violations, dtype=float)
    ax.plot(np.arange(v.size), v, "o", ms=4)
    ax.axhline(tol, color="k", ls="--", lw=1, label=f"tolerance {tol:g}")
    ax.set_xlabel("pair index")
    ax.set_ylabel("convexity violation")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
