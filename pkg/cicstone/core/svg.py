# -*- coding: utf-8 -*-
""" SVG Writers.

Plots are written as plain SVG text so that identical inputs give identical files.
The only varying part is a generation timestamp comment, left out in deterministic
mode.
"""

from datetime import datetime, timezone

__all__ = ["flow_field_svg", "interval_svg", "PANEL_SIZE"]

PANEL_SIZE = 200
_MARGIN = 10
_HEADER = '<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
_STYLE = ('<style>.arrow{stroke:#1f4e79;stroke-width:1.2}.frame{fill:none;stroke:#444}'
          '.interval{stroke:#1f4e79;stroke-width:3}.point{fill:#c0392b}text{font:10px sans-serif}</style>')
_MARKER = ('<defs><marker id="head" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto">'
           '<path d="M0,0 L6,3 L0,6 z" fill="#1f4e79"/></marker></defs>')


def _fmt(value: float) -> str:
    return "{:.3f}".format(value)


def _open(width: int, height: int, deterministic: bool) -> list:
    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    if not deterministic:
        lines.append("<!-- generated {} -->".format(datetime.now(timezone.utc).isoformat(timespec="seconds")))
    lines.append(_HEADER.format(width=width, height=height))
    lines.append(_STYLE)
    return lines


def flow_field_svg(panels: list, deterministic: bool = False) -> str:
    """ One square panel per skill; one arrow per start point.

    Arena coordinates [-1, 1]^2 map onto the panel with y pointing up. Arrow lengths are
    scaled jointly so the longest arrow spans most of a grid cell.

    :param panels: Output of the flow field study: [{"value", "arrows": [(x, y, dx, dy), ...]}, ...].
    :param deterministic: Leave out the timestamp comment.
    :return: SVG document.
    """
    width, height = PANEL_SIZE * max(len(panels), 1), PANEL_SIZE + 20
    lines = _open(width, height, deterministic)
    lines.append(_MARKER)
    span = (PANEL_SIZE - 2 * _MARGIN) / 2.0
    longest = max([abs(dx) + abs(dy) for panel in panels for _, _, dx, dy in panel["arrows"]] + [0.0])
    cells = max([len(panel["arrows"]) for panel in panels] + [1]) ** 0.5
    scale = 0.8 * (2.0 * span / max(cells, 1.0)) / longest if longest > 0 else 0.0
    for index, panel in enumerate(panels):
        left = index * PANEL_SIZE
        lines.append('<g class="panel" data-skill="{}">'.format(_fmt(panel["value"])))
        lines.append('<rect class="frame" x="{}" y="{}" width="{}" height="{}"/>'.format(
            left + _MARGIN, _MARGIN, PANEL_SIZE - 2 * _MARGIN, PANEL_SIZE - 2 * _MARGIN))
        for x, y, dx, dy in panel["arrows"]:
            x1 = left + _MARGIN + (x + 1.0) * span
            y1 = _MARGIN + (1.0 - y) * span
            lines.append('<line class="arrow" x1="{}" y1="{}" x2="{}" y2="{}" marker-end="url(#head)"/>'.format(
                _fmt(x1), _fmt(y1), _fmt(x1 + dx * scale), _fmt(y1 - dy * scale)))
        lines.append('<text x="{}" y="{}">z = {} &#183; 1</text>'.format(
            left + _MARGIN, PANEL_SIZE + 12, _fmt(panel["value"])))
        lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def interval_svg(rows: list, deterministic: bool = False) -> str:
    """ Horizontal interval plot of report rows ({agent, statistic, point, lo, hi}). """
    row_height, label_width, plot_width = 18, 170, 300
    height = row_height * (len(rows) + 1) + 10
    lines = _open(label_width + plot_width + 20, height, deterministic)
    values = [v for row in rows for v in (row["lo"], row["hi"], row["point"])] or [0.0, 1.0]
    low, high = min(values), max(values)
    width = (high - low) or 1.0

    def position(value: float) -> float:
        return label_width + (value - low) / width * plot_width

    for index, row in enumerate(rows):
        y = row_height * (index + 1)
        lines.append('<text x="4" y="{}">{} {}</text>'.format(y + 3, row["agent"], row["statistic"]))
        lines.append('<line class="interval" x1="{}" y1="{}" x2="{}" y2="{}"/>'.format(
            _fmt(position(row["lo"])), y, _fmt(position(row["hi"])), y))
        lines.append('<circle class="point" cx="{}" cy="{}" r="3"/>'.format(_fmt(position(row["point"])), y))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
