"""Text formats: vectors in, labels in, coordinates out, SVG scatter out."""

from __future__ import annotations

import hashlib
import math
import os
from xml.sax.saxutils import escape

import numpy as np

from .core import DataMatrix
from .evaluation import LabeledSet


class ParseError(ValueError):
    def __init__(self, path, lineno, message):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class UnsupportedDimensionError(ValueError):
    pass


# tab20, reordered so the first ten are the saturated members of each pair
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5",
    "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5",
)
UNLABELED_COLOR = "#1f77b4"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_header(path, line):
    parts = line.split()
    if len(parts) != 2:
        raise ParseError(path, 1, f"expected header 'N d', got {line.strip()!r}")
    try:
        n, d = int(parts[0], 10), int(parts[1], 10)
    except ValueError:
        raise ParseError(path, 1, f"header values must be integers, got {line.strip()!r}") from None
    if n < 1 or d < 1:
        raise ParseError(path, 1, f"header needs N >= 1 and d >= 1, got {n} {d}")
    return n, d


def ingest_vectors(path) -> DataMatrix:
    """Read ``N d`` then N rows of d reals; errors name the offending line."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(path, 1, "empty file")
    n, d = _parse_header(path, lines[0])
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    values = np.empty((n, d), dtype=np.float32)
    for r in range(n):
        lineno = r + 2
        if r >= len(body):
            raise ParseError(path, lineno, f"expected {n} rows, found {len(body)}")
        parts = body[r].split()
        if len(parts) != d:
            raise ParseError(path, lineno, f"expected {d} values, found {len(parts)}")
        try:
            row = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError(path, lineno, "non-finite value")
        values[r] = row
    if len(body) > n:
        raise ParseError(path, n + 2, f"expected {n} rows, found more")
    return DataMatrix(values)


def write_vectors(path, values, digits: int = 9):
    values = np.asarray(values)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{values.shape[0]} {values.shape[1]}\n")
        for row in values:
            fh.write(" ".join(f"{v:.{digits}g}" for v in row.tolist()) + "\n")


def ingest_labels(path, n: int) -> LabeledSet:
    """One label token per line; ids are dense in first-appearance order."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) != n:
        raise ParseError(path, min(len(lines), n) + 1,
                         f"expected {n} labels, found {len(lines)}")
    tokens = []
    for lineno, line in enumerate(lines, 1):
        token = line.strip()
        if not token or len(token.split()) != 1:
            raise ParseError(path, lineno, f"expected one label token, got {line!r}")
        tokens.append(token)
    return LabeledSet.from_tokens(tokens)


def write_labels(path, tokens):
    with open(path, "w", encoding="utf-8") as fh:
        for t in tokens:
            fh.write(f"{t}\n")


def format_embedding(coords, labels=None) -> str:
    coords = np.asarray(coords)
    n, s = coords.shape
    out = [f"{n} {s}\n"]
    for i in range(n):
        name = labels.token(i) if labels is not None else str(i)
        out.append(name + " " + " ".join(f"{v:.6f}" for v in coords[i].tolist()) + "\n")
    return "".join(out)


def write_embedding(path, coords, labels=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_embedding(coords, labels))


def read_embedding(path):
    """Return ``(names, coords)`` from an embedding file."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    n, s = _parse_header(path, lines[0])
    names = []
    coords = np.empty((n, s), dtype=np.float64)
    for r in range(n):
        parts = lines[r + 1].split()
        if len(parts) != s + 1:
            raise ParseError(path, r + 2, f"expected label and {s} coordinates")
        names.append(parts[0])
        coords[r] = [float(p) for p in parts[1:]]
    return names, coords


SVG_SIZE = 1000.0
SVG_MARGIN = 0.05


def svg_positions(coords) -> np.ndarray:
    """Map 2-d coordinates into the viewBox, preserving aspect ratio.

    Data are centred in a square inset by the margin on each side; SVG's y
    axis points down, so y is flipped.  A zero-extent cloud is treated as a
    unit box around its centre.
    """
    coords = np.asarray(coords, dtype=np.float64)
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    span = float((hi - lo).max())
    if span == 0.0:
        span = 1.0
    inner = SVG_SIZE * (1.0 - 2.0 * SVG_MARGIN)
    scale = inner / span
    centre = 0.5 * (lo + hi)
    x = SVG_SIZE / 2 + (coords[:, 0] - centre[0]) * scale
    y = SVG_SIZE / 2 - (coords[:, 1] - centre[1]) * scale
    return np.column_stack([x, y])


def emit_svg(embedding, labels, path, point_radius: float = 2.0, palette=PALETTE):
    """Write one circle per point; colors cycle ``palette`` by label id."""
    coords = np.asarray(getattr(embedding, "coords", embedding))
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise UnsupportedDimensionError(
            f"SVG output needs a 2-d embedding, got shape {coords.shape}")
    pos = svg_positions(coords)
    ids = None
    if labels is not None:
        ids = labels.ids if isinstance(labels, LabeledSet) else np.asarray(labels)
    size = f"{SVG_SIZE:g}"
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size} {size}" '
        f'width="{size}" height="{size}">\n',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="#ffffff"/>\n',
    ]
    for i, (x, y) in enumerate(pos.tolist()):
        color = UNLABELED_COLOR if ids is None else palette[int(ids[i]) % len(palette)]
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{point_radius:g}" '
                     f'fill="{escape(color)}"/>\n')
    parts.append("</svg>\n")
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("".join(parts))
    os.replace(tmp, path)
