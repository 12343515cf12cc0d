"""Regenerate the packaged input fixtures and the test glyph corpus.

Everything here is deterministic arithmetic (no RNG), so rerunning the
script reproduces the committed files byte for byte.

Usage: python3 tools/make_fixtures.py
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "src" / "dronedraw" / "data"
TESTDATA = ROOT / "tests" / "data"


def write_p1(img: np.ndarray, path: Path) -> None:
    height, width = img.shape
    lines = [f"P1\n{width} {height}\n"]
    for row in img:
        lines.append(" ".join("1" if v else "0" for v in row) + "\n")
    path.write_text("".join(lines))


def write_p4(img: np.ndarray, path: Path) -> None:
    packed = np.packbits(img.astype(np.uint8), axis=1)
    with open(path, "wb") as fh:
        fh.write(f"P4\n{img.shape[1]} {img.shape[0]}\n".encode())
        fh.write(packed.tobytes())


def stamp_disc(img, r, c, radius):
    rr, cc = np.ogrid[:img.shape[0], :img.shape[1]]
    img[(rr - r) ** 2 + (cc - c) ** 2 <= radius * radius] = True


def thick_line(img, r0, c0, r1, c1, radius=1):
    steps = max(abs(r1 - r0), abs(c1 - c0), 1) * 2
    for t in np.linspace(0.0, 1.0, steps + 1):
        stamp_disc(img, round(r0 + t * (r1 - r0)), round(c0 + t * (c1 - c0)),
                   radius)


def make_cloud_csv() -> None:
    """Closed scalloped outline, 1000 points, one continuous stroke."""
    n = 1000
    theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    r = 1.0 + 0.18 * np.abs(np.sin(3.0 * theta))
    x = 1.3 * r * np.cos(theta)
    y = r * np.sin(theta)
    lines = ["x,y\n"]
    lines += [f"{xi:.8g},{yi:.8g}\n" for xi, yi in zip(x, y)]
    (DATA / "cloud.csv").write_text("".join(lines))


def make_human_csv() -> None:
    """Stick figure in six strokes. Stroke boundaries (point counts 300,
    200, 150, 150, 150, 150) match the break pairs hardcoded in the
    human-1582-N20 preset."""

    def seg(a, b, n):
        t = np.linspace(0.0, 1.0, n)
        return np.column_stack([a[0] + t * (b[0] - a[0]),
                                a[1] + t * (b[1] - a[1])])

    th = np.linspace(-0.5 * math.pi, 1.5 * math.pi, 300, endpoint=False)
    head = np.column_stack([0.15 * np.cos(th), 0.8 + 0.15 * np.sin(th)])
    strokes = [
        head,
        seg((0.0, 0.65), (0.0, 0.2), 200),
        seg((0.0, 0.5), (-0.25, 0.3), 150),
        seg((0.0, 0.5), (0.25, 0.3), 150),
        seg((0.0, 0.2), (-0.2, -0.2), 150),
        seg((0.0, 0.2), (0.2, -0.2), 150),
    ]
    pts = np.vstack(strokes)
    lines = ["x,y\n"]
    lines += [f"{xi:.8g},{yi:.8g}\n" for xi, yi in pts]
    (DATA / "human.csv").write_text("".join(lines))


def make_hi_pbm() -> None:
    img = np.zeros((30, 44), dtype=bool)
    thick_line(img, 4, 7, 24, 7)      # h stem
    thick_line(img, 14, 8, 14, 14)    # h shoulder
    thick_line(img, 14, 15, 24, 15)   # h right leg
    thick_line(img, 13, 25, 24, 25)   # i stem
    stamp_disc(img, 8, 25, 1)         # i dot
    write_p4(img, DATA / "hi.pbm")


def make_glyph_corpus() -> None:
    glyphs = {}

    g = np.zeros((16, 16), dtype=bool)
    g[2:14, 2:14] = True
    glyphs["square.pbm"] = g

    g = np.zeros((3, 11), dtype=bool)
    g[:, :] = True
    glyphs["rect11x3.pbm"] = g

    g = np.zeros((20, 20), dtype=bool)
    rr, cc = np.ogrid[:20, :20]
    d2 = (rr - 9.5) ** 2 + (cc - 9.5) ** 2
    g[(d2 <= 8.5 ** 2) & (d2 >= 5.5 ** 2)] = True
    glyphs["ring.pbm"] = g

    g = np.zeros((18, 14), dtype=bool)
    thick_line(g, 2, 3, 15, 3)
    thick_line(g, 15, 3, 15, 11)
    glyphs["ell.pbm"] = g

    g = np.zeros((16, 16), dtype=bool)
    thick_line(g, 3, 2, 3, 13)
    thick_line(g, 3, 8, 13, 8)
    glyphs["tee.pbm"] = g

    g = np.zeros((17, 17), dtype=bool)
    thick_line(g, 2, 2, 14, 14)
    thick_line(g, 2, 14, 14, 2)
    glyphs["ex.pbm"] = g

    g = np.zeros((15, 15), dtype=bool)
    thick_line(g, 7, 2, 7, 12)
    thick_line(g, 2, 7, 12, 7)
    glyphs["plus.pbm"] = g

    g = np.zeros((16, 18), dtype=bool)
    thick_line(g, 2, 3, 12, 3)
    thick_line(g, 12, 3, 12, 14)
    thick_line(g, 12, 14, 2, 14)
    glyphs["ubend.pbm"] = g

    g = np.zeros((14, 16), dtype=bool)
    thick_line(g, 2, 2, 2, 13)
    thick_line(g, 2, 13, 11, 2)
    thick_line(g, 11, 2, 11, 13)
    glyphs["zed.pbm"] = g

    g = np.zeros((12, 20), dtype=bool)
    g[3:9, 2:6] = True
    g[3:9, 14:18] = True
    glyphs["twobars.pbm"] = g

    for name, img in glyphs.items():
        write_p1(img, TESTDATA / name)


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    TESTDATA.mkdir(parents=True, exist_ok=True)
    make_cloud_csv()
    make_human_csv()
    make_hi_pbm()
    make_glyph_corpus()
    for p in sorted(DATA.iterdir()) + sorted(TESTDATA.iterdir()):
        print(f"wrote {p.relative_to(ROOT)} ({p.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
