"""Minimal SVG writer: enough shapes for phase portraits and basin maps.

Emits elements directly (no plotting dependency) in a world coordinate
system with the y axis pointing up; output is deterministic for identical
inputs.
"""

from __future__ import annotations


def _g(x: float) -> str:
    return f"{float(x):.6g}"


class Svg:
    def __init__(self, width: int, height: int, world: tuple[float, float, float, float]):
        self.width = width
        self.height = height
        x0, y0, x1, y1 = world
        if x1 <= x0 or y1 <= y0:
            raise ValueError("world box must have positive extent")
        self._x0, self._y0, self._x1, self._y1 = x0, y0, x1, y1
        self._sx = width / (x1 - x0)
        self._sy = height / (y1 - y0)
        self._parts: list[str] = []

    def _map(self, x: float, y: float) -> tuple[float, float]:
        return (x - self._x0) * self._sx, (self._y1 - y) * self._sy

    def polyline(self, pts, stroke: str = "#1f77b4", width: float = 1.0):
        coords = " ".join(
            f"{_g(u)},{_g(v)}" for u, v in (self._map(x, y) for x, y in pts)
        )
        self._parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" '
            f'stroke-width="{_g(width)}"/>'
        )

    def line(self, x1, y1, x2, y2, stroke: str = "#000000", width: float = 1.0,
             dash: str | None = None):
        u1, v1 = self._map(x1, y1)
        u2, v2 = self._map(x2, y2)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self._parts.append(
            f'<line x1="{_g(u1)}" y1="{_g(v1)}" x2="{_g(u2)}" y2="{_g(v2)}" '
            f'stroke="{stroke}" stroke-width="{_g(width)}"{extra}/>'
        )

    def circle(self, x, y, r_px: float, fill: str = "#d62728"):
        u, v = self._map(x, y)
        self._parts.append(
            f'<circle cx="{_g(u)}" cy="{_g(v)}" r="{_g(r_px)}" fill="{fill}"/>'
        )

    def rect_world(self, x, y, w, h, fill: str):
        """Axis-aligned rectangle given by its lower-left world corner."""
        u, v = self._map(x, y + h)
        self._parts.append(
            f'<rect x="{_g(u)}" y="{_g(v)}" width="{_g(w * self._sx)}" '
            f'height="{_g(h * self._sy)}" fill="{fill}"/>'
        )

    def polygon(self, pts, stroke: str = "#000000", width: float = 1.0,
                fill: str = "none"):
        coords = " ".join(
            f"{_g(u)},{_g(v)}" for u, v in (self._map(x, y) for x, y in pts)
        )
        self._parts.append(
            f'<polygon points="{coords}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{_g(width)}"/>'
        )

    def text(self, x, y, s: str, size: int = 12, fill: str = "#000000"):
        u, v = self._map(x, y)
        self._parts.append(
            f'<text x="{_g(u)}" y="{_g(v)}" font-size="{size}" '
            f'font-family="sans-serif" fill="{fill}">{s}</text>'
        )

    def to_string(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">'
        )
        return "\n".join([head, *self._parts, "</svg>"]) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.to_string())
