"""Render bench results: TSV records, a plain-text summary table, and
PNG figures (time and memory against input size).

matplotlib is imported lazily with the Agg backend so library users who
never render figures pay nothing for it.
"""

from __future__ import annotations

from pathlib import Path

from .bench import BenchReport, ShapeReport

_MB = 1024 * 1024


def write_tsv(report: BenchReport, path: Path) -> None:
    lines = ["target_bytes\tinput_bytes\toutput_bytes\tseconds\tpeak_bytes\trows\tratio"]
    for r in report.records:
        lines.append(f"{r.target_bytes}\t{r.input_bytes}\t{r.output_bytes}\t"
                     f"{r.seconds:.6f}\t{r.peak_bytes}\t{r.rows}\t"
                     f"{r.output_bytes / r.input_bytes:.4f}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_shape_tsv(report: ShapeReport, path: Path) -> None:
    lines = ["items_per_row\titem_count\tseconds\tpeak_bytes"]
    for r in report.records:
        lines.append(f"{r.items_per_row}\t{r.item_count}\t{r.seconds:.6f}\t{r.peak_bytes}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def summary_text(report: BenchReport, shape: ShapeReport | None = None) -> str:
    out = ["scaling run", "==========="]
    out.append(f"{'input MB':>10} {'output MB':>10} {'ratio':>7} {'seconds':>9} "
               f"{'MB/s':>7} {'peak MB':>9}")
    for r in report.records:
        mb = r.input_bytes / _MB
        out.append(f"{mb:>10.2f} {r.output_bytes / _MB:>10.2f} "
                   f"{r.output_bytes / r.input_bytes:>7.3f} {r.seconds:>9.3f} "
                   f"{mb / r.seconds if r.seconds else 0.0:>7.2f} "
                   f"{r.peak_bytes / _MB:>9.2f}")
    out.append("")
    out.append(f"time vs size fit: slope {report.slope * _MB:.4f} s/MB, "
               f"intercept {report.intercept:.4f} s, R^2 {report.r_squared:.5f}")
    out.append(f"memory proxy: {report.memory_proxy}")
    if not report.valid:
        out.append(f"RUN INVALID: {report.note}")
    if shape is not None:
        out += ["", "schema shape run", "================",
                f"{'items/row':>10} {'items':>10} {'seconds':>9} {'peak MB':>9}"]
        for r in shape.records:
            out.append(f"{r.items_per_row:>10} {r.item_count:>10} "
                       f"{r.seconds:>9.3f} {r.peak_bytes / _MB:>9.2f}")
        out.append(f"value multisets identical: {shape.multisets_match}")
    return "\n".join(out) + "\n"


def _render_figures(report: BenchReport, out_dir: Path) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = [r.input_bytes / _MB for r in report.records]
    made = []

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(xs, [r.seconds for r in report.records], zorder=3, label="measured")
    if len(xs) > 1:
        lo, hi = min(xs), max(xs)
        ax.plot([lo, hi],
                [report.slope * lo * _MB + report.intercept,
                 report.slope * hi * _MB + report.intercept],
                color="tab:orange", label=f"fit (R$^2$={report.r_squared:.4f})")
    ax.set_xlabel("input size (MB)")
    ax.set_ylabel("wall time (s)")
    ax.set_title("parse + emit time vs input size")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    p = out_dir / "time_vs_size.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    made.append(p)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, [r.peak_bytes / _MB for r in report.records], marker="o")
    ax.set_xlabel("input size (MB)")
    ax.set_ylabel(f"peak memory (MB, {report.memory_proxy})")
    ax.set_title("peak memory vs input size")
    ax.set_ylim(bottom=0)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    p = out_dir / "memory_vs_size.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    made.append(p)
    return made


def write_report(report: BenchReport, out_dir: Path | str,
                 shape: ShapeReport | None = None) -> list[Path]:
    """Write report.tsv, summary.txt, PNG figures, and shape.tsv when a
    shape run is included.  Returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "report.tsv", out_dir / "summary.txt"]
    write_tsv(report, paths[0])
    paths[1].write_text(summary_text(report, shape), encoding="utf-8")
    if report.records:
        paths += _render_figures(report, out_dir)
    if shape is not None:
        p = out_dir / "shape.tsv"
        write_shape_tsv(shape, p)
        paths.append(p)
    return paths
