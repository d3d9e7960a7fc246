"""Tables and SVG figures for a finished analysis.

File names are fixed so downstream tooling can rely on them:

========================  ==============================================
``table1_descriptives``   yearly network statistics (CSV)
``fig1_democracy``        per-country democracy mean and change (CSV, SVG)
``fig2_backbone_<year>``  disparity backbone coloured by democracy (SVG)
``fig3_network_<year>``   untrimmed network coloured by democracy (SVG)
``table2_tergm``          temporal model estimates with bootstrap CIs (CSV)
``table3_vergm``          valued model estimates with stars and SEs (CSV)
``fig4_gof``              goodness-of-fit envelopes (CSV, SVG)
``trim_report``           edges removed per backbone level (CSV)
``vif``                   variance inflation factors (CSV)
========================  ==============================================
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np
import pandas as pd

from .descriptives import democracy_summary, summary_table
from .estimation import BootstrapResult, FitResult
from .gof import GofReport
from .graph import AttributePanel, BinaryNetwork, NetworkSeries
from .layout import Layout, layout_fr

log = logging.getLogger(__name__)

# ColorBrewer RdYlBu, red (low) to blue (high)
RDYLBU = ("#a50026", "#d73027", "#f46d43", "#fdae61", "#fee090", "#ffffbf",
          "#e0f3f8", "#abd9e9", "#74add1", "#4575b4", "#313695")


def _rgb(hex_color: str) -> tuple[int, int, int]:
    h = hex_color.lstrip("#")
    return int(h[0:2], 16), int(h[2:4], 16), int(h[4:6], 16)


def palette_color(value: float, palette: Sequence[str] = RDYLBU) -> str:
    """Piecewise-linear colour for ``value`` in [0, 1] (clipped)."""
    if not math.isfinite(value):
        return "#999999"
    x = min(max(value, 0.0), 1.0) * (len(palette) - 1)
    lo = min(int(math.floor(x)), len(palette) - 2)
    f = x - lo
    a, b = _rgb(palette[lo]), _rgb(palette[lo + 1])
    c = [round(a[k] + f * (b[k] - a[k])) for k in range(3)]
    return "#{:02x}{:02x}{:02x}".format(*c)


def node_radius(degree: np.ndarray, r_min: float = 2.0, r_max: float = 12.0) -> np.ndarray:
    """Marker radius, area proportional to degree."""
    d = np.asarray(degree, dtype=float)
    top = d.max() if d.size and d.max() > 0 else 1.0
    return r_min + (r_max - r_min) * np.sqrt(d / top)


def _num(x: float) -> str:
    return f"{x:.2f}"


def _svg(width: int, height: int, body: list[str], title: str) -> str:
    head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n<title>{escape(title)}</title>\n'
            f'<rect width="{width}" height="{height}" fill="white"/>\n')
    return head + "\n".join(body) + "\n</svg>\n"


def network_svg(net: BinaryNetwork, layout: Layout, color_values: dict, title: str = "",
                size: int = 640) -> str:
    """Nodes coloured by ``color_values`` (node -> [0, 1]) and sized by degree."""
    pos = layout.as_dict()
    nodes = list(layout.nodes)
    margin = 30
    if nodes:
        xy = layout.xy
        span = max(np.ptp(xy[:, 0]), np.ptp(xy[:, 1]), 1e-9)
        scale = (size - 2 * margin) / span
        mid = (xy.max(axis=0) + xy.min(axis=0)) / 2
        screen = {c: (size / 2 + (x - mid[0]) * scale, size / 2 + (y - mid[1]) * scale) for c, (x, y) in pos.items()}
    else:
        screen = {}
    index = {c: i for i, c in enumerate(net.nodes)}
    deg = net.degrees()
    body = [f'<text x="{margin}" y="20" font-family="sans-serif" font-size="14">{escape(title)}</text>']
    body.append('<g stroke="#888888" stroke-opacity="0.35" stroke-width="0.6">')
    for i, j in net.edges():
        a, b = net.nodes[i], net.nodes[j]
        if a in screen and b in screen:
            (x1, y1), (x2, y2) = screen[a], screen[b]
            body.append(f'<line x1="{_num(x1)}" y1="{_num(y1)}" x2="{_num(x2)}" y2="{_num(y2)}"/>')
    body.append("</g>")
    radii = node_radius(deg[[index[c] for c in nodes]]) if nodes else []
    body.append('<g stroke="#333333" stroke-width="0.5">')
    for c, r in zip(nodes, radii):
        x, y = screen[c]
        fill = palette_color(float(color_values.get(c, math.nan)))
        body.append(f'<circle cx="{_num(x)}" cy="{_num(y)}" r="{_num(r)}" fill="{fill}">'
                    f'<title>{escape(str(c))}</title></circle>')
    body.append("</g>")
    return _svg(size, size, body, title)


def democracy_svg(table: pd.DataFrame, title: str = "Liberal democracy") -> str:
    """Bars for the per-country mean with a tick at mean + change."""
    n = len(table)
    bar, gap, left, top = 6, 2, 60, 30
    width, height = 520, top + n * (bar + gap) + 20
    scale = width - left - 40
    body = [f'<text x="{left}" y="18" font-family="sans-serif" font-size="13">{escape(title)}</text>']
    for k, row in enumerate(table.itertuples(index=False)):
        y = top + k * (bar + gap)
        body.append(f'<text x="{left - 4}" y="{y + bar}" font-family="sans-serif" font-size="6" '
                    f'text-anchor="end">{escape(str(row.node))}</text>')
        body.append(f'<rect x="{left}" y="{y}" width="{_num(scale * row.mean)}" height="{bar}" '
                    f'fill="{palette_color(row.mean)}"/>')
        if math.isfinite(row.diff):
            xd = left + scale * min(max(row.mean + row.diff, 0.0), 1.0)
            body.append(f'<line x1="{_num(xd)}" y1="{y}" x2="{_num(xd)}" y2="{y + bar}" stroke="black"/>')
    return _svg(width, height, body, title)


def gof_svg(report: GofReport, title: str = "Goodness of fit") -> str:
    panel_w, panel_h, pad = 300, 220, 40
    families = list(report.families)
    width, height = panel_w * len(families), panel_h + 30
    body = [f'<text x="10" y="16" font-family="sans-serif" font-size="13">{escape(title)}</text>']
    for p, name in enumerate(families):
        fam = report.families[name]
        x0 = p * panel_w + pad
        w, h = panel_w - pad - 10, panel_h - pad
        nb = len(fam.observed)
        top = max(float(fam.q95.max(initial=0)), float(fam.observed.max(initial=0)), 1.0)
        sx = lambda k: x0 + w * (k / max(nb - 1, 1))
        sy = lambda v: 30 + h * (1 - v / top)

        def line(values, style):
            pts = " ".join(f"{_num(sx(k))},{_num(sy(float(v)))}" for k, v in enumerate(values))
            return f'<polyline points="{pts}" fill="none" {style}/>'

        body.append(f'<text x="{x0}" y="{panel_h + 20}" font-family="sans-serif" font-size="11">{escape(name)}</text>')
        body.append(f'<rect x="{x0}" y="30" width="{w}" height="{h}" fill="none" stroke="#cccccc"/>')
        body.append(line(fam.q05, 'stroke="#999999" stroke-dasharray="3,2"'))
        body.append(line(fam.q95, 'stroke="#999999" stroke-dasharray="3,2"'))
        body.append(line(fam.q50, 'stroke="#999999"'))
        body.append(line(fam.observed, 'stroke="black" stroke-width="1.5"'))
    return _svg(width, height, body, title)


@dataclass
class ReportInputs:
    series: NetworkSeries | None = None
    panel: AttributePanel | None = None
    backbones: dict = field(default_factory=dict)  # year -> BinaryNetwork
    trim: pd.DataFrame | None = None
    tergm: BootstrapResult | None = None
    vergm: FitResult | None = None
    gof: GofReport | None = None
    vif: pd.DataFrame | None = None
    layout_seed: int = 0
    layout_iterations: int = 300


@dataclass
class ReportOutput:
    files: list
    notices: list


def _write_csv(df: pd.DataFrame, path: Path, files: list, index: bool = False) -> None:
    df.to_csv(path, index=index, lineterminator="\n", float_format="%.10g")
    files.append(path.name)


def _write_text(text: str, path: Path, files: list) -> None:
    path.write_text(text, encoding="utf-8")
    files.append(path.name)


def render_report(inputs: ReportInputs, out_dir) -> ReportOutput:
    """Write every table and figure whose inputs are available.

    Each missing input yields a notice (also saved to ``report_notices.txt``)
    instead of an error.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files, notices = [], []

    def skip(what, why):
        notices.append(f"skipped {what}: {why}")
        log.warning("skipped %s: %s", what, why)

    if inputs.series is not None:
        _write_csv(summary_table(list(inputs.series)), out / "table1_descriptives.csv", files, index=True)
    else:
        skip("table1_descriptives", "no network series")

    libdem = {}
    if inputs.panel is not None and "libdem" in inputs.panel.frame:
        dem = democracy_summary(inputs.panel)
        _write_csv(dem.table, out / "fig1_democracy.csv", files)
        _write_text(democracy_svg(dem.table), out / "fig1_democracy.svg", files)
        libdem = dict(zip(dem.table["node"], dem.table["mean"]))
    else:
        skip("fig1_democracy", "no democracy panel")

    def year_colors(year):
        if inputs.panel is None:
            return libdem
        df = inputs.panel.frame
        rows = df[df["year"] == year]
        return dict(zip(rows["node"], rows["libdem"])) or libdem

    if inputs.backbones:
        for year, bb in sorted(inputs.backbones.items()):
            lay = layout_fr(bb, inputs.layout_seed, inputs.layout_iterations)
            _write_text(network_svg(bb, lay, year_colors(year), f"Backbone {year}"),
                        out / f"fig2_backbone_{year}.svg", files)
    else:
        skip("fig2_backbone", "no backbone networks")

    if inputs.series is not None:
        for net in inputs.series:
            b = net.binary()
            lay = layout_fr(b, inputs.layout_seed, inputs.layout_iterations)
            _write_text(network_svg(b, lay, year_colors(net.year), f"Collaboration {net.year}"),
                        out / f"fig3_network_{net.year}.svg", files)
    else:
        skip("fig3_network", "no network series")

    if inputs.trim is not None:
        _write_csv(inputs.trim, out / "trim_report.csv", files)
    else:
        skip("trim_report", "no backbone trim table")

    if inputs.tergm is not None:
        t = inputs.tergm
        df = pd.DataFrame({"term": t.labels, "estimate": t.mean, "point": t.point_estimate,
                           "ci_low": t.ci_low, "ci_high": t.ci_high, "significant": t.significant,
                           "cell": t.table()["estimate"]})
        _write_csv(df, out / "table2_tergm.csv", files)
    else:
        skip("table2_tergm", "no temporal model fit")

    if inputs.vergm is not None:
        f = inputs.vergm
        df = pd.DataFrame({"term": f.labels, "estimate": f.coefficients, "se": f.se,
                           "p_value": f.p_values, "stars": f.stars(), "cell": f.table()["estimate"]})
        _write_csv(df, out / "table3_vergm.csv", files)
    else:
        skip("table3_vergm", "no valued model fit")

    if inputs.gof is not None:
        inputs.gof.to_csv(out / "fig4_gof.csv")
        files.append("fig4_gof.csv")
        _write_text(gof_svg(inputs.gof), out / "fig4_gof.svg", files)
    else:
        skip("fig4_gof", "no goodness-of-fit report")

    if inputs.vif is not None:
        _write_csv(inputs.vif, out / "vif.csv", files)
    else:
        skip("vif", "no collinearity diagnostics")

    _write_text("".join(f"{n}\n" for n in notices), out / "report_notices.txt", files)
    return ReportOutput(files, notices)
