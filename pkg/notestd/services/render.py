"""Отчеты по сводке корпуса: текст, JSON, CSV и SVG гистограммы"""
import json
from typing import Dict, List

from notestd.core.config import DATA_DIR
from notestd.core.models import STAT_METRICS, CorpusSummary, MetricSummary
from notestd.utils.artifacts import csv_bytes
from notestd.utils.templates import load_template

TEMPLATES_DIR = DATA_DIR / "templates"

REPORT_FORMATS = ("text", "json", "csv", "svg-histograms")

SUMMARY_CSV_HEADER = ("metric", "n", "mean", "sd", "min", "max")

# Геометрия панели гистограммы (пиксели)
SVG_WIDTH = 640
SVG_PANEL_HEIGHT = 220
SVG_MARGIN = 40
SVG_TOP = 44


def _ordered(summary: CorpusSummary) -> List[tuple]:
    names = [name for name in STAT_METRICS if name in summary.metrics]
    names += sorted(name for name in summary.metrics if name not in STAT_METRICS)
    return [(name, summary.metrics[name]) for name in names]


def _panel(name: str, metric: MetricSummary, n: int, offset: int) -> dict:
    edges = metric.histogram.bin_edges
    counts = metric.histogram.counts
    plot_width = SVG_WIDTH - 2 * SVG_MARGIN
    plot_height = SVG_PANEL_HEIGHT - SVG_TOP - 30
    baseline = SVG_TOP + plot_height
    tallest = max(counts) or 1
    bar_width = plot_width / len(counts)
    bars = []
    for index, count in enumerate(counts):
        height = plot_height * count / tallest
        bars.append({
            "x": SVG_MARGIN + index * bar_width,
            "y": baseline - height,
            "width": max(bar_width - 1, 0.5),
            "height": height,
            "count": count,
            "low": edges[index],
            "high": edges[index + 1],
        })
    return {
        "title": name,
        "mean": metric.mean,
        "sd": metric.sd,
        "n": n,
        "offset": offset,
        "baseline": baseline,
        "bars": bars,
        "low": edges[0],
        "high": edges[-1],
    }


def _render_svg(panels: List[dict]) -> bytes:
    template = load_template(TEMPLATES_DIR / "histogram.svg.j2")
    svg = template.render(
        panels=panels,
        width=SVG_WIDTH,
        height=SVG_PANEL_HEIGHT * len(panels),
        margin=SVG_MARGIN,
    )
    return (svg + "\n").encode("utf-8")


def render_histograms(summary: CorpusSummary) -> Dict[str, bytes]:
    """Отдельный SVG на метрику: {'hist_<metric>.svg': bytes}"""
    return {
        f"hist_{name}.svg": _render_svg([_panel(name, metric, summary.n, 0)])
        for name, metric in _ordered(summary)
    }


def render_report(summary: CorpusSummary, fmt: str = "text") -> bytes:
    """Сводка в выбранном формате

    text - строки "metric: mean ± sd"; json - разбирается обратно в CorpusSummary;
    csv - строка на метрику; svg-histograms - один SVG с панелью на каждую метрику.
    """
    if fmt == "json":
        return (json.dumps(summary.model_dump(mode="json"), ensure_ascii=False, indent=2) + "\n").encode("utf-8")
    if fmt == "csv":
        rows = [(name, summary.n, m.mean, m.sd, m.min, m.max) for name, m in _ordered(summary)]
        return csv_bytes(SUMMARY_CSV_HEADER, rows)
    if fmt == "svg-histograms":
        panels = [_panel(name, m, summary.n, i * SVG_PANEL_HEIGHT) for i, (name, m) in enumerate(_ordered(summary))]
        return _render_svg(panels)
    if fmt == "text":
        rows = [{"metric": name, "mean": m.mean, "sd": m.sd, "min": m.min, "max": m.max} for name, m in _ordered(summary)]
        text = load_template(TEMPLATES_DIR / "summary.txt.j2").render(n=summary.n, rows=rows)
        return (text + "\n").encode("utf-8")
    raise ValueError(f"Неизвестный формат отчета: {fmt}; доступны {', '.join(REPORT_FORMATS)}")
