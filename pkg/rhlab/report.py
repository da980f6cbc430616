from __future__ import annotations

import dataclasses
import json
import logging
import math
from collections.abc import Iterable, Mapping
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from rhlab.errors import ReportError  # noqa: E402
from rhlab.table import SweepTable, Table  # noqa: E402

logger = logging.getLogger(__name__)

REPORT_NAME = "report.txt"
SVG_HASHSALT = "rhlab"


@dataclasses.dataclass(frozen=True)
class ReportBundle:
    text: Path
    charts: tuple[Path, ...] = ()


def load_manifest(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ReportError(f"manifest {path} does not exist")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    manifest["_folder"] = path.parent
    return manifest


def _artifact_path(manifest: Mapping, artifact: Mapping) -> Path:
    path = Path(manifest["_folder"]) / artifact["path"]
    if not path.exists():
        raise ReportError(f"run {manifest.get('run_id', '?')}: artifact {artifact['path']!r} is missing ({path})")
    return path


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log2(x[keep]), np.log2(y[keep]), 1)[0])


def plot_table(table: Table, x: str, ys: Iterable[str], path: str | Path, loglog: bool = False) -> Path:
    path = Path(path)
    xs = np.array([math.nan if v is None or isinstance(v, str) else v for v in table.column(x)], dtype=float)
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASHSALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for name in ys:
            values = np.array(
                [math.nan if v is None or isinstance(v, str) else v for v in table.column(name)], dtype=float
            )
            if loglog:
                values = np.abs(values)
                values[values == 0] = math.nan
            ax.plot(xs, values, marker="o", label=name)
        if loglog:
            ax.set_xscale("log", base=2)
            ax.set_yscale("log")
        ax.set_xlabel(x)
        ax.set_title(table.name)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.debug("wrote chart %s", path)
    return path


def _summary(manifest: Mapping) -> list[str]:
    checks = manifest.get("checks", {})
    failed = sorted(name for name, ok in checks.items() if not ok)
    passed = f"  checks: {len(checks) - len(failed)}/{len(checks)} passed"
    lines = [
        f"run {manifest['run_id']} ({manifest['command']})",
        f"  status: {manifest.get('status', 'unknown')}",
        passed + (f", failed: {', '.join(failed)}" if failed else ""),
    ]
    for key, value in sorted(manifest.get("metrics", {}).items()):
        lines.append(f"  {key}: {Table.format_cell(value)}")
    return lines


def _sweep_paragraph(table: Table, x: str, ys: Iterable[str], loglog: bool) -> list[str]:
    xs = np.array([math.nan if isinstance(v, str) or v is None else v for v in table.column(x)], dtype=float)
    lines = [f"  table {table.name}: {len(table)} rows"]
    for name in ys:
        values = np.array(
            [math.nan if isinstance(v, str) or v is None else v for v in table.column(name)], dtype=float
        )
        finite = values[np.isfinite(values)]
        if finite.size == 0:
            lines.append(f"    {name}: no data")
            continue
        line = f"    {name}: min {finite.min():.6g}, max {finite.max():.6g}"
        if loglog:
            line += f", log-log slope {_slope(xs, np.abs(values)):.4f}"
        lines.append(line)
    return lines


def emit_report(manifests: Iterable[str | Path | Mapping], out: str | Path) -> ReportBundle:
    """Summary text plus one SVG per sweep table, rebuilt from the CSV files the manifests list."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    loaded = [load_manifest(m) if not isinstance(m, Mapping) else dict(m) for m in manifests]
    loaded.sort(key=lambda m: (m["command"], m["run_id"]))

    lines: list[str] = []
    charts: list[Path] = []
    for manifest in loaded:
        if lines:
            lines.append("")
        lines += _summary(manifest)
        for artifact in manifest.get("artifacts", []):
            plot = artifact.get("plot")
            if not plot:
                continue
            path = _artifact_path(manifest, artifact)
            x = plot["x"]
            table_cls = SweepTable if x == SweepTable.key else Table
            table = table_cls.read_csv(path)
            loglog = bool(plot.get("loglog"))
            lines += _sweep_paragraph(table, x, plot["y"], loglog)
            chart = out / f"{manifest['run_id'][:12]}-{path.stem}.svg"
            charts.append(plot_table(table, x, plot["y"], chart, loglog=loglog))

    text = out / REPORT_NAME
    text.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    logger.info("report for %d runs written to %s", len(loaded), text)
    return ReportBundle(text, tuple(charts))
