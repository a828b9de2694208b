"""Artifact emission: CSV time series, run manifests with checksums, and
optional SVG plots.

Reproducibility contract: floats are serialized with 9 significant
digits, rows are ordered by time, and plot files are generated with
fixed hash salts and no embedded timestamps, so identical inputs yield
byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .params import ConfigError
from .simcore import TimeSeries

FLOAT_FMT = "%.9g"

PLOT_CHANNELS = ("p", "v_dc", "omega_r", "beta", "v_t", "i_mag")


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def write_timeseries_csv(series: TimeSeries, path: str | Path) -> Path:
    """CSV with header `t,<channel>...`, one row per recorded step."""
    path = Path(path)
    names = list(series.channels.keys())
    cols = [series.t] + [series.channels[n] for n in names]
    lines = ["t," + ",".join(names)]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_timeseries_csv(path: str | Path) -> TimeSeries:
    """Parse a CSV produced by :func:`write_timeseries_csv`."""
    path = Path(path)
    lines = path.read_text().strip().split("\n")
    header = lines[0].split(",")
    if header[0] != "t":
        raise ConfigError(f"{path}: first column must be 't'")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    channels = {name: data[:, i + 1] for i, name in enumerate(header[1:])}
    return TimeSeries(t=data[:, 0], channels=channels,
                      meta={"source": str(path)})


def write_compare_csv(series_by_mode: dict[str, TimeSeries],
                      path: str | Path) -> Path:
    """Aligned multi-mode CSV: columns `t` then `<mode>.<channel>`."""
    path = Path(path)
    modes = list(series_by_mode.keys())
    if not modes:
        path.write_text("t\n")
        return path
    t = series_by_mode[modes[0]].t
    header = ["t"]
    cols = [t]
    for m in modes:
        s = series_by_mode[m]
        if len(s.t) != len(t):
            raise ConfigError("compare CSV requires equal-length series")
        for name, vec in s.channels.items():
            header.append(f"{m}.{name}")
            cols.append(vec)
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def sha256_of(path: str | Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def write_manifest(out_dir: str | Path, entries: dict,
                   artifacts: list[Path]) -> Path:
    """`manifest.json` listing every emitted file with its checksum."""
    out_dir = Path(out_dir)
    doc = dict(entries)
    doc["artifacts"] = [
        {"file": p.name, "sha256": sha256_of(p)}
        for p in sorted(artifacts, key=lambda p: p.name)
    ]
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _matplotlib():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "gfmsim"
    return plt


def plot_timeseries(series: TimeSeries, path: str | Path,
                    channels=PLOT_CHANNELS) -> Path:
    """Stacked per-channel traces of one run, written as SVG."""
    plt = _matplotlib()
    chans = [c for c in channels if c in series.channels]
    fig, axes = plt.subplots(len(chans), 1, figsize=(8, 1.8 * len(chans)),
                             sharex=True)
    if len(chans) == 1:
        axes = [axes]
    for ax, name in zip(axes, chans):
        ax.plot(series.t, series[name], lw=0.9)
        ax.set_ylabel(name)
        ax.grid(True, alpha=0.3)
    axes[-1].set_xlabel("t [s]")
    title = f"{series.meta.get('scenario', '')} / {series.meta.get('mode', '')}"
    fig.suptitle(title.strip(" /"))
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_compare(series_by_mode: dict[str, TimeSeries], out_dir: str | Path,
                 scenario_name: str, channels=PLOT_CHANNELS) -> list[Path]:
    """One overlay plot per channel across modes."""
    plt = _matplotlib()
    out_dir = Path(out_dir)
    written = []
    for name in channels:
        fig, ax = plt.subplots(figsize=(8, 4))
        for mode, s in series_by_mode.items():
            if name in s.channels:
                ax.plot(s.t, s[name], lw=0.9, label=mode)
        ax.set_xlabel("t [s]")
        ax.set_ylabel(name)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize=8)
        ax.set_title(f"{scenario_name}: {name}")
        fig.tight_layout()
        path = out_dir / f"{scenario_name}_{name}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


def plot_sensitivity(report, path: str | Path) -> Path:
    """Scatter of sampled parameters vs objectives (one grid of panels)."""
    plt = _matplotlib()
    names = report.param_names
    onames = report.OBJECTIVE_NAMES
    fig, axes = plt.subplots(len(onames), len(names),
                             figsize=(3.0 * len(names), 2.2 * len(onames)),
                             squeeze=False)
    for k, oname in enumerate(onames):
        col = report.objectives[:, k].copy()
        col[~np.isfinite(col)] = np.nan
        for j, pname in enumerate(names):
            ax = axes[k][j]
            ax.scatter(report.samples[:, j], col, s=8, alpha=0.7)
            if k == len(onames) - 1:
                ax.set_xlabel(pname)
            if j == 0:
                ax.set_ylabel(oname)
            rho = report.correlations[pname][oname]
            ax.set_title(f"rho={rho:+.2f}", fontsize=8)
            ax.grid(True, alpha=0.3)
    fig.suptitle(f"{report.mode}: parameter sensitivity "
                 f"(n={len(report.samples)}, seed={report.seed})")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
