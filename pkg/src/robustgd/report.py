"""Bound-overlay reports: per-iteration tables comparing the empirical mean
gap against the closed-form upper bound and the error floor, rendered both
as delimited text and as a figure."""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import momentum_dsgd_bound, trimmed_dgd_bound
from .harness import read_trace
from .losses import CapabilityError

__all__ = [
    "OVERLAY_SCHEMA",
    "OVERLAY_FIELDS",
    "load_summaries",
    "bound_at",
    "overlay_rows",
    "write_overlay",
]

OVERLAY_SCHEMA = "robustgd-overlay-v1"
OVERLAY_FIELDS = ("t", "mean_gap", "bound", "floor")


def load_summaries(path) -> list:
    records = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        record = json.loads(line)
        if record.get("schema") != "robustgd-summary-v1":
            raise ValueError(f"{path}:{i + 1}: unknown summary schema")
        records.append(record)
    return records


def bound_at(summary: dict, t: int) -> float:
    c = summary.get("constants") or {}
    required = {"q0", "mu", "L", "lam", "sigma_sq", "zeta_sq", "n", "f"}
    if not required <= set(c):
        raise CapabilityError(
            f"summary lacks instance constants {sorted(required - set(c))}"
        )
    if summary["algorithm"] == "dgd":
        return trimmed_dgd_bound(t, c["q0"], c["mu"], c["L"], c["lam"],
                                 c.get("lam_local", 0.0), c["sigma_sq"], c["zeta_sq"])
    return momentum_dsgd_bound(t, c["q0"], c["kappa"], c["lam"], c["sigma_sq"],
                               c["zeta_sq"], c["mu"], c["n"], c["f"])


def overlay_rows(summary: dict, base_dir, t_step: int = 1) -> list:
    """Rows of (t, mean empirical gap or None, bound or None, floor).

    The empirical column is filled from the summary's trace files when they
    exist; the bound column starts at t = 2, the first step the bound is
    stated for.
    """
    if t_step < 1:
        raise ValueError(f"t_step must be >= 1, got {t_step}")
    base = Path(base_dir)
    gaps = []
    for rel in (summary.get("traces") or {}).values():
        gaps.append(read_trace(base / rel)["loss_gap"])
    mean_gap = np.mean(gaps, axis=0) if gaps else None
    horizon = len(mean_gap) if mean_gap is not None else summary["T"]
    floor = summary["floor"]
    rows = []
    for t in range(0, horizon, t_step):
        rows.append((
            t,
            float(mean_gap[t]) if mean_gap is not None else None,
            bound_at(summary, t) if t >= 2 else None,
            floor,
        ))
    return rows


def _write_table(path: Path, rows):
    lines = [f"# schema={OVERLAY_SCHEMA}", ",".join(OVERLAY_FIELDS)]
    for t, gap, bound, floor in rows:
        lines.append(",".join((
            str(t),
            "" if gap is None else repr(gap),
            "" if bound is None else repr(bound),
            repr(float(floor)),
        )))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_figure(path: Path, rows, title: str):
    t = np.array([r[0] for r in rows])
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    gap = np.array([np.nan if r[1] is None else r[1] for r in rows])
    if np.isfinite(gap).any():
        ax.plot(t, np.maximum(gap, 1e-300), label="mean gap", color="tab:blue")
    bound = np.array([np.nan if r[2] is None else r[2] for r in rows])
    if np.isfinite(bound).any():
        ax.plot(t, bound, label="upper bound", color="tab:red", ls="--")
    floor = rows[0][3]
    if floor > 0:
        ax.axhline(floor, label="error floor", color="tab:gray", ls=":")
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("suboptimality gap")
    ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_overlay(summary: dict, base_dir, out_dir, t_step: int = 1,
                  plot: bool = True) -> list:
    """Emit the overlay table (and, by default, its figure) for one summary
    record; returns the paths written."""
    rows = overlay_rows(summary, base_dir, t_step=t_step)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"overlay_{summary['fingerprint'][:12]}"
    paths = [out / f"{stem}.csv"]
    _write_table(paths[0], rows)
    if plot:
        title = summary["name"]
        if summary.get("sweep_param") is not None:
            title += f" [{summary['sweep_param']}={summary['sweep_value']}]"
        fig_path = out / f"{stem}.png"
        _write_figure(fig_path, rows, title)
        paths.append(fig_path)
    return paths
