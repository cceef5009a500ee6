"""Report writers: aggregate JSON, per-fold CSV, text tables, and figures.

Every delimited or JSON output is deterministic for a given configuration
and seed; the one file carrying a timestamp (run_info.json) is kept
separate so runs can be compared byte for byte.  Figures are rendered with
matplotlib into the plots/ directory alongside their plot-ready CSVs.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .evaluation import ExperimentResult, MetricsReport, Regime

FORMAT_VERSION = 1


def result_to_dict(result: ExperimentResult) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "folds": result.plan.n,
        "fold_seed": result.plan.seed,
        "systems": {
            s.name: [
                {"task": m.code, "base": m.base, "annotations": list(m.annotations)}
                for m in s.modules
            ]
            for s in result.systems
        },
        "regimes": [r.value for r in result.regimes],
        "cells": [result.cells[key].to_dict() for key in sorted(result.cells)],
        "isolated_tasks": [
            result.isolated_tasks[key].to_dict() for key in sorted(result.isolated_tasks)
        ],
        "utility": [row.to_dict() for row in result.utility],
        "ttests": [row.to_dict() for row in result.ttests],
        "sizes": [row.to_dict() for row in result.sizes],
    }


def write_metrics_json(result: ExperimentResult, path: Path) -> None:
    payload = result_to_dict(result)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", "utf-8")


def write_folds_csv(result: ExperimentResult, path: Path) -> None:
    """Raw per-fold values, one row per (cell, fold, module, metric)."""
    with path.open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(["system", "regime", "fold", "module", "metric", "value"])
        for key in sorted(result.cells):
            report = result.cells[key]
            for module in report.modules:
                for metric in ("instance_error", "node_count", "leaf_count"):
                    series = getattr(module, metric)
                    for fold, value in enumerate(series.folds):
                        writer.writerow([report.system, report.regime, fold, module.code, metric, value])
            if report.end_to_end is not None:
                for metric in sorted(report.end_to_end):
                    for fold, value in enumerate(report.end_to_end[metric].folds):
                        writer.writerow([report.system, report.regime, fold, "", metric, value])
        for (task, base), module in sorted(result.isolated_tasks.items()):
            for metric in ("instance_error", "node_count", "leaf_count"):
                series = getattr(module, metric)
                for fold, value in enumerate(series.folds):
                    writer.writerow(["", "isolated", fold, f"{task}:{base}", metric, value])


def write_utility_csv(result: ExperimentResult, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(
            ["system", "task", "base", "isolated", "ideal", "ideal_utility", "actual", "actual_utility"]
        )
        for row in result.utility:
            writer.writerow(
                [
                    row.system,
                    row.task,
                    row.base,
                    f"{row.isolated:.6f}",
                    "" if row.ideal is None else f"{row.ideal:.6f}",
                    "" if row.ideal_utility is None else f"{row.ideal_utility:+.6f}",
                    f"{row.actual:.6f}",
                    f"{row.actual_utility:+.6f}",
                ]
            )


def write_sizes_csv(result: ExperimentResult, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(["system", "regime", "module", "mean_nodes", "mean_leaves", "bytes_estimate"])
        for row in result.sizes:
            writer.writerow(
                [row.system, row.regime, row.module, row.mean_nodes, row.mean_leaves, row.bytes_estimate]
            )


def write_ttests_csv(result: ExperimentResult, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(["regime", "metric", "a", "b", "variant", "t", "df", "p", "zero_variance"])
        for row in result.ttests:
            r = row.result
            writer.writerow(
                [row.regime, row.metric, row.a, row.b, r.variant, r.t, r.df, r.p, int(r.zero_variance)]
            )


def _fmt(value: float | None, width: int = 8) -> str:
    if value is None:
        return "--".rjust(width)
    return f"{value:{width}.2f}"


def format_text_report(result: ExperimentResult) -> str:
    """Aligned-column text rendition of every table in the run."""
    lines: list[str] = []
    for key in sorted(result.cells):
        report = result.cells[key]
        lines.append(f"== {report.system} / {report.regime} ==")
        lines.append(f"{'module':<10}{'base':<10}{'error%':>9}{'sd':>8}{'nodes':>10}{'leaves':>10}")
        for m in report.modules:
            lines.append(
                f"{m.code:<10}{m.base:<10}{m.instance_error.mean:>9.2f}{m.instance_error.sd:>8.2f}"
                f"{m.node_count.mean:>10.1f}{m.leaf_count.mean:>10.1f}"
            )
        if report.end_to_end is not None:
            for name in ("phoneme_error", "stress_error", "joint_ps_error", "word_flawless"):
                series = report.end_to_end[name]
                lines.append(f"  {name:<16}{series.mean:>8.2f} (sd {series.sd:.2f})")
        lines.append("")
    if result.utility:
        lines.append("== utility: isolated vs in-context error (% incorrect test instances) ==")
        lines.append(
            f"{'system':<8}{'task':<6}{'base':<10}{'isolated':>9}{'ideal':>9}{'(util)':>9}{'actual':>9}{'(util)':>9}"
        )
        for row in result.utility:
            ideal_util = "--".rjust(9) if row.ideal_utility is None else f"{row.ideal_utility:>+9.2f}"
            actual_util = f"{row.actual_utility:>+9.2f}"
            lines.append(
                f"{row.system:<8}{row.task:<6}{row.base:<10}{_fmt(row.isolated)}{_fmt(row.ideal)}"
                f"{ideal_util} {_fmt(row.actual)}{actual_util}"
            )
        lines.append("")
    if result.sizes:
        lines.append("== tree sizes (mean nodes over folds; bytes at 7 per node) ==")
        lines.append(f"{'system':<8}{'regime':<10}{'module':<8}{'nodes':>12}{'bytes':>14}")
        for row in result.sizes:
            lines.append(
                f"{row.system:<8}{row.regime:<10}{row.module:<8}{row.mean_nodes:>12.1f}{row.bytes_estimate:>14.1f}"
            )
        lines.append("")
    if result.ttests:
        lines.append("== one-tailed t tests on joint phoneme+stress error ==")
        lines.append(f"{'regime':<10}{'a':<8}{'b':<8}{'variant':<8}{'t':>10}{'df':>5}{'p':>12}")
        for row in result.ttests:
            r = row.result
            lines.append(
                f"{row.regime:<10}{row.a:<8}{row.b:<8}{r.variant:<8}{r.t:>10.3f}{r.df:>5}{r.p:>12.3g}"
            )
        lines.append("")
    return "\n".join(lines)


def _plot_regime(result: ExperimentResult) -> str | None:
    for regime in (Regime.ADAPTIVE, Regime.IDEAL):
        if regime in result.regimes:
            return regime.value
    return None


def write_error_figures(result: ExperimentResult, plots_dir: Path) -> list[Path]:
    """Per-system bar charts of module errors plus the joint PS error.

    Bars carry their percentage above the bar and an SD error bar, and the
    same values land in a CSV next to each figure.
    """
    regime = _plot_regime(result)
    if regime is None:
        return []
    written = []
    for system in result.systems:
        report = result.cells[(system.name, regime)]
        labels = [m.code for m in report.modules]
        means = [m.instance_error.mean for m in report.modules]
        sds = [m.instance_error.sd for m in report.modules]
        if report.end_to_end is not None:
            labels.append("PS")
            means.append(report.end_to_end["joint_ps_error"].mean)
            sds.append(report.end_to_end["joint_ps_error"].sd)

        csv_path = plots_dir / f"errors_{system.name}.csv"
        with csv_path.open("w", newline="", encoding="utf-8") as fp:
            writer = csv.writer(fp)
            writer.writerow(["label", "mean_error", "sd"])
            for row in zip(labels, means, sds):
                writer.writerow(row)

        fig, ax = plt.subplots(figsize=(1.2 + 0.9 * len(labels), 3.6))
        bars = ax.bar(labels, means, yerr=sds, capsize=3, color="#777777", edgecolor="black")
        for bar, mean in zip(bars, means):
            ax.annotate(
                f"{mean:.2f}",
                (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                textcoords="offset points",
                xytext=(0, 6),
                ha="center",
                fontsize=8,
            )
        ax.set_ylabel("% incorrect test instances")
        ax.set_title(f"{system.name} ({regime})")
        ax.margins(y=0.2)
        fig.tight_layout()
        png_path = plots_dir / f"errors_{system.name}.png"
        fig.savefig(png_path, dpi=150)
        plt.close(fig)
        written.extend([csv_path, png_path])
    return written


def write_size_figure(result: ExperimentResult, plots_dir: Path) -> list[Path]:
    """Stacked bars of per-module tree sizes, one bar per system."""
    regime = _plot_regime(result)
    if regime is None:
        return []
    per_system: dict[str, list[tuple[str, float]]] = {}
    for row in result.sizes:
        if row.regime == regime and row.module != "total":
            per_system.setdefault(row.system, []).append((row.module, row.mean_nodes))
    if not per_system:
        return []

    csv_path = plots_dir / "sizes.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(["system", "module", "mean_nodes"])
        for system, parts in per_system.items():
            for module, nodes in parts:
                writer.writerow([system, module, nodes])

    fig, ax = plt.subplots(figsize=(1.5 + 1.1 * len(per_system), 4.0))
    for x, (system, parts) in enumerate(per_system.items()):
        bottom = 0.0
        for module, nodes in parts:
            ax.bar(x, nodes, bottom=bottom, width=0.6, edgecolor="black", color="#aaaaaa")
            ax.annotate(
                f"{module}",
                (x, bottom + nodes / 2),
                ha="center",
                va="center",
                fontsize=8,
            )
            bottom += nodes
        ax.annotate(f"{bottom:.0f}", (x, bottom), ha="center", va="bottom", fontsize=8)
    ax.set_xticks(range(len(per_system)))
    ax.set_xticklabels(list(per_system))
    ax.set_ylabel(f"mean nodes ({regime})")
    ax.margins(y=0.15)
    fig.tight_layout()
    png_path = plots_dir / "sizes.png"
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return [csv_path, png_path]


def write_all(result: ExperimentResult, out_dir: Path) -> dict[str, Path]:
    """Write the complete report set; returns the paths written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    plots_dir = out_dir / "plots"
    plots_dir.mkdir(exist_ok=True)
    paths = {
        "metrics_json": out_dir / "metrics.json",
        "metrics_txt": out_dir / "metrics.txt",
        "folds_csv": out_dir / "folds.csv",
        "sizes_csv": out_dir / "sizes.csv",
        "ttests_csv": out_dir / "ttests.csv",
    }
    write_metrics_json(result, paths["metrics_json"])
    paths["metrics_txt"].write_text(format_text_report(result), "utf-8")
    write_folds_csv(result, paths["folds_csv"])
    write_sizes_csv(result, paths["sizes_csv"])
    write_ttests_csv(result, paths["ttests_csv"])
    if result.utility:
        paths["utility_csv"] = out_dir / "utility.csv"
        write_utility_csv(result, paths["utility_csv"])
    for p in write_error_figures(result, plots_dir) + write_size_figure(result, plots_dir):
        paths[str(p.relative_to(out_dir))] = p
    return paths
