"""PNG renderings of the curve profiles (needs the optional matplotlib extra)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .profile import CurveProfile


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise ImportError("plots need matplotlib: pip install 'artifact[plot]'") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_norm_curve(profile: CurveProfile, path, gamma: float | None = None):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    x, v = profile.x, profile.values
    # break the line at each jump so it is not drawn as a steep segment
    cuts = [d.tau for d in profile.discontinuities]
    seg = np.searchsorted(cuts, x, side="right")
    pos = v[np.isfinite(v) & (v > 0)]
    log_scale = pos.size > 1 and pos.max() > 50 * np.median(pos)
    for s in np.unique(seg):
        mask = (seg == s) & np.isfinite(v) & ((v > 0) if log_scale else True)
        ax.plot(x[mask], v[mask], color="C0", lw=1.4)
    for d in profile.discontinuities:
        ax.plot([d.tau], [d.left_limit], "o", mfc="white", mec="C0")
        ax.plot([d.tau], [d.value], "o", color="C0")
        ax.axvline(d.tau, color="0.8", lw=0.8, ls="--", zorder=0)
    if gamma is not None:
        ax.axvline(gamma, color="C3", lw=0.8, ls=":", label=r"$\gamma(y_0)$")
        ax.legend()
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("T")
    ax.set_ylabel("N*(T)")
    ax.set_title("minimal norm")
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)


def plot_time_curve(profile: CurveProfile, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(profile.x, profile.values, color="C0", lw=1.4)
    for k, tau, m_inf, m_sup in profile.plateaus:
        ax.plot([m_inf, m_sup], [tau, tau], color="C1", lw=3, alpha=0.6)
        ax.annotate(f"k={k}", (0.5 * (m_inf + m_sup), tau), textcoords="offset points", xytext=(0, 5), ha="center")
    ax.set_xlabel("M")
    ax.set_ylabel("t*(M)")
    ax.set_title("minimal time (plateaus highlighted)")
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)


def render_profiles(result, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    files = [out_dir / "norm_curve.png", out_dir / "time_curve.png"]
    plot_norm_curve(result.norm, files[0], result.table.gamma)
    plot_time_curve(result.time, files[1])
    return files
