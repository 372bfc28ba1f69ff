"""Convergence figures rendered to files alongside the CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .analysis import ConvergenceStudy

_MARKERS = "osd^v<>ph"


def render_study_figures(
    study: ConvergenceStudy, out_dir, stem: str = "study"
) -> list[Path]:
    """Write one log-log error-vs-h_Z figure per metric; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for metric, column in (("l2", "l2_rms"), ("h2", "h2_rms")):
        fig, ax = plt.subplots(figsize=(5.0, 3.8))
        drew = False
        for idx, label in enumerate(study.theta_labels()):
            rows = [
                r
                for r in study.rows_for(label)
                if r.error is None and getattr(r, column) > 0
            ]
            rows.sort(key=lambda r: -r.h_z)
            if not rows:
                continue
            drew = True
            hs = [r.h_z for r in rows]
            es = [getattr(r, column) for r in rows]
            name = "CLS" if label == "inf" else f"WLS({label})"
            rates = study.fitted_rates.get(label)
            if rates:
                name += f", rate {rates[f'{metric}_rate']:.2f}"
            ax.loglog(hs, es, marker=_MARKERS[idx % len(_MARKERS)], label=name)
        if not drew:
            plt.close(fig)
            continue
        ax.set_xlabel(r"$h_Z$")
        ax.set_ylabel(f"{metric.upper()} error (RMS)")
        ax.invert_xaxis()
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / f"{stem}_{metric}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths
