"""Report figures, rendered off-screen to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps PNG output byte-stable across runs
_PNG_METADATA = {"Software": None}


def _save(fig, path) -> None:
    fig.savefig(path, dpi=100, metadata=_PNG_METADATA)
    plt.close(fig)


def plot_convergence(rows, path) -> None:
    """Relative grid error against spacing, log-log."""
    h = np.array([r.spacing for r in rows])
    err = np.array([np.nan if r.rel_error is None else r.rel_error for r in rows])
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.loglog(h, err, "o-")
    ax.set_xlabel("grid spacing (A)")
    ax.set_ylabel("relative error of total energy")
    ax.invert_xaxis()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def _pose_label(pose: dict) -> str:
    return ",".join(f"{k}={v}" for k, v in pose.items() if v)


def plot_ranking(reports, path, top: int | None = 20) -> None:
    """Horizontal bars of ranked pose energies; padded poses are skipped."""
    real = [r for r in reports if not r.get("padded")]
    real = sorted(real, key=lambda r: r["E_total"])[:top]
    e = np.array([r["E_total"] for r in real])
    labels = [_pose_label(r["pose"]) or "ref" for r in real]
    fig, ax = plt.subplots(figsize=(5.5, 0.3 * len(real) + 1.2))
    ax.barh(np.arange(len(real)), e, color="tab:blue")
    ax.set_yticks(np.arange(len(real)), labels, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("E_total")
    fig.tight_layout()
    _save(fig, path)
