import xml.etree.ElementTree as ET

import numpy as np
import pytest

from knnvis.evaluation import LabeledSet
from knnvis.io import (
    PALETTE,
    UNLABELED_COLOR,
    ParseError,
    UnsupportedDimensionError,
    emit_svg,
    format_embedding,
    ingest_labels,
    ingest_vectors,
    read_embedding,
    write_vectors,
)

SVG = "{http://www.w3.org/2000/svg}"


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_vectors(tmp_path):
    m = ingest_vectors(_write(tmp_path, "v.txt", "2 2\n0 0\n1 1\n"))
    assert m.values.tolist() == [[0.0, 0.0], [1.0, 1.0]]


def test_trailing_whitespace(tmp_path):
    m = ingest_vectors(_write(tmp_path, "v.txt", "2 2  \n0 0 \t\n1 1\n\n\n"))
    assert m.n_points == 2


def test_missing_row_line_number(tmp_path):
    with pytest.raises(ParseError) as err:
        ingest_vectors(_write(tmp_path, "v.txt", "3 2\n0 0\n1 1\n"))
    assert err.value.lineno == 4


@pytest.mark.parametrize("text,line", [
    ("2\n0 0\n", 1),
    ("a b\n0 0\n", 1),
    ("2 2\n0 0\n1 nan\n", 3),
    ("2 2\n0 0 0\n1 1\n", 2),
    ("2 2\n0 0\n1 x\n", 3),
    ("1 2\n0 0\n1 1\n", 3),
])
def test_malformed(tmp_path, text, line):
    with pytest.raises(ParseError) as err:
        ingest_vectors(_write(tmp_path, "v.txt", text))
    assert err.value.lineno == line


def test_round_trip(tmp_path):
    x = np.random.default_rng(0).standard_normal((50, 9)).astype(np.float32) * 1e3
    p = tmp_path / "v.txt"
    write_vectors(p, x)
    back = ingest_vectors(p).values
    assert np.allclose(back, x, rtol=1e-7, atol=0)


def test_labels(tmp_path):
    ls = ingest_labels(_write(tmp_path, "l.txt", "a\nb\na\n"), 3)
    assert ls.ids.tolist() == [0, 1, 0]
    with pytest.raises(ParseError):
        ingest_labels(_write(tmp_path, "l2.txt", "a\nb\n"), 3)


def test_twenty_classes(tmp_path):
    tokens = [f"class{(i * 7) % 20}" for i in range(1000)]
    ls = ingest_labels(_write(tmp_path, "l.txt", "\n".join(tokens) + "\n"), 1000)
    assert ls.n_classes == 20 and ls.ids.max() == 19


def test_embedding_format(tmp_path):
    ls = LabeledSet.from_tokens(["x", "y"])
    text = format_embedding(np.array([[1.0, -2.5], [0.0, 3.0]]), ls)
    assert text == "2 2\nx 1.000000 -2.500000\ny 0.000000 3.000000\n"
    p = _write(tmp_path, "e.txt", text)
    names, coords = read_embedding(p)
    assert names == ["x", "y"] and coords.tolist() == [[1.0, -2.5], [0.0, 3.0]]


def _circles(path):
    root = ET.parse(path).getroot()
    return [(float(c.get("cx")), float(c.get("cy")), c.get("fill"))
            for c in root.iter(SVG + "circle")]


def test_svg_single_point(tmp_path):
    p = tmp_path / "one.svg"
    emit_svg(np.array([[3.0, -4.0]]), None, p)
    assert _circles(p) == [(500.0, 500.0, UNLABELED_COLOR)]


def test_svg_square_corners(tmp_path):
    p = tmp_path / "sq.svg"
    emit_svg(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]), [0, 1, 2, 3], p)
    pts = _circles(p)
    assert [(x, y) for x, y, _ in pts] == [(50, 950), (950, 950), (50, 50), (950, 50)]
    assert [c for _, _, c in pts] == list(PALETTE[:4])


def test_svg_aspect_preserved(tmp_path):
    p = tmp_path / "wide.svg"
    emit_svg(np.array([[0.0, 0.0], [4.0, 1.0]]), None, p)
    (x0, y0, _), (x1, y1, _) = _circles(p)
    assert (x1 - x0) == pytest.approx(900) and (y0 - y1) == pytest.approx(225)


def test_svg_many_points(tmp_path):
    p = tmp_path / "many.svg"
    x = np.random.default_rng(0).standard_normal((500, 2))
    emit_svg(x, np.arange(500) % 25, p)
    circles = _circles(p)
    assert len(circles) == 500
    assert circles[20][2] == PALETTE[0]


def test_svg_rejects_3d(tmp_path):
    with pytest.raises(UnsupportedDimensionError):
        emit_svg(np.zeros((3, 3)), None, tmp_path / "x.svg")
