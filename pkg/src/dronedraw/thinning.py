"""Bitmap skeletonization for glyph input.

Images are plain 2D bool arrays, True where there is ink. Files use the
PBM formats: P1 (ascii) and P4 (packed binary), where 1 bits are ink.
"""

from __future__ import annotations

import numpy as np


def load_pbm(path) -> np.ndarray:
    """Read a P1 or P4 PBM file into a bool array (True = ink)."""
    with open(path, "rb") as fh:
        data = fh.read()

    def tokens():
        i = 0
        while i < len(data):
            c = data[i:i + 1]
            if c == b"#":
                while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                    i += 1
            elif c.isspace():
                i += 1
            else:
                j = i
                while j < len(data) and not data[j:j + 1].isspace() \
                        and data[j:j + 1] != b"#":
                    j += 1
                yield data[i:j], j
                i = j

    it = tokens()
    try:
        magic, _ = next(it)
        (wtok, _), (htok, end) = next(it), next(it)
        width, height = int(wtok), int(htok)
    except (StopIteration, ValueError):
        raise ValueError(f"{path}: malformed PBM header") from None
    if magic not in (b"P1", b"P4"):
        raise ValueError(f"{path}: not a PBM file (magic {magic!r})")
    if width <= 0 or height <= 0:
        raise ValueError(f"{path}: bad dimensions {width}x{height}")

    if magic == b"P1":
        bits = []
        for tok, _ in it:
            bits.extend(tok)   # tolerate runs like "0110" with no spaces
        cells = [b for b in bits if b in (ord("0"), ord("1"))]
        if len(cells) < width * height:
            raise ValueError(f"{path}: truncated P1 data")
        arr = np.array(cells[:width * height], dtype=np.uint8) == ord("1")
        return arr.reshape(height, width)

    # P4: a single whitespace byte separates the header from packed rows
    start = end + 1
    row_bytes = (width + 7) // 8
    need = row_bytes * height
    raw = data[start:start + need]
    if len(raw) < need:
        raise ValueError(f"{path}: truncated P4 data")
    rows = np.frombuffer(raw, dtype=np.uint8).reshape(height, row_bytes)
    bits = np.unpackbits(rows, axis=1)[:, :width]
    return bits.astype(bool)


def save_pbm(img, path, fmt="P1") -> None:
    img = np.asarray(img, dtype=bool)
    if img.ndim != 2:
        raise ValueError("image must be 2D")
    height, width = img.shape
    if fmt == "P1":
        with open(path, "w") as fh:
            fh.write(f"P1\n{width} {height}\n")
            for row in img:
                fh.write(" ".join("1" if v else "0" for v in row) + "\n")
    elif fmt == "P4":
        packed = np.packbits(img.astype(np.uint8), axis=1)
        with open(path, "wb") as fh:
            fh.write(f"P4\n{width} {height}\n".encode())
            fh.write(packed.tobytes())
    else:
        raise ValueError(f"unknown PBM format {fmt!r}")


def _neighbor_views(padded):
    # P2..P9 clockwise from north, as views over the unpadded region
    return (
        padded[:-2, 1:-1],   # P2 north
        padded[:-2, 2:],     # P3 northeast
        padded[1:-1, 2:],    # P4 east
        padded[2:, 2:],      # P5 southeast
        padded[2:, 1:-1],    # P6 south
        padded[2:, :-2],     # P7 southwest
        padded[1:-1, :-2],   # P8 west
        padded[:-2, :-2],    # P9 northwest
    )


def _thin_pass(img, second: bool) -> np.ndarray:
    padded = np.pad(img, 1, constant_values=False)
    nb = _neighbor_views(padded)
    P2, P3, P4, P5, P6, P7, P8, P9 = nb
    count = sum(n.astype(np.uint8) for n in nb)
    ring = nb + (P2,)
    transitions = sum(((~ring[i]) & ring[i + 1]).astype(np.uint8)
                      for i in range(8))
    cond = img & (count >= 2) & (count <= 6) & (transitions == 1)
    if not second:
        cond &= ~(P2 & P4 & P6) & ~(P4 & P6 & P8)
    else:
        cond &= ~(P2 & P4 & P8) & ~(P2 & P6 & P8)
    return img & ~cond


def skeletonize(img) -> np.ndarray:
    """Thin ink regions to one-pixel-wide strokes.

    Classic two-subiteration erosion: each full pass first peels from the
    south-east faces, then from the north-west, deleting only simple border
    pixels (2..6 ink neighbors, exactly one 0-to-1 transition around the
    ring) so connectivity and line ends survive. Repeats until stable,
    which makes the result a subset of the input and a fixed point of
    itself.
    """
    img = np.asarray(img, dtype=bool).copy()
    if img.ndim != 2:
        raise ValueError("image must be 2D")
    while True:
        after = _thin_pass(_thin_pass(img, second=False), second=True)
        if np.array_equal(after, img):
            return after
        img = after
