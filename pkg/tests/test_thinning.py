from pathlib import Path

import numpy as np
import pytest

from dronedraw.thinning import load_pbm, save_pbm, skeletonize

DATA = Path(__file__).parent / "data"

GLYPH_FILES = [
    "square.pbm", "rect11x3.pbm", "ring.pbm", "ell.pbm", "tee.pbm",
    "ex.pbm", "plus.pbm", "ubend.pbm", "zed.pbm", "twobars.pbm",
]


def thin_reference(img):
    """Plain-loop two-subiteration thinning, written independently of the
    vectorized implementation. P2..P9 run clockwise from north."""
    img = img.astype(np.uint8)

    def neighbours(r, c, a):
        return [a[r - 1, c], a[r - 1, c + 1], a[r, c + 1], a[r + 1, c + 1],
                a[r + 1, c], a[r + 1, c - 1], a[r, c - 1], a[r - 1, c - 1]]

    def transitions(nb):
        ring = nb + [nb[0]]
        return sum(ring[i] == 0 and ring[i + 1] == 1 for i in range(8))

    changed = True
    while changed:
        changed = False
        for second in (False, True):
            padded = np.pad(img, 1)
            kill = []
            for r in range(1, padded.shape[0] - 1):
                for c in range(1, padded.shape[1] - 1):
                    if padded[r, c] == 0:
                        continue
                    nb = neighbours(r, c, padded)
                    p2, p3, p4, p5, p6, p7, p8, p9 = nb
                    if not (2 <= sum(nb) <= 6):
                        continue
                    if transitions(nb) != 1:
                        continue
                    if not second:
                        if p2 * p4 * p6 != 0 or p4 * p6 * p8 != 0:
                            continue
                    else:
                        if p2 * p4 * p8 != 0 or p2 * p6 * p8 != 0:
                            continue
                    kill.append((r - 1, c - 1))
            for r, c in kill:
                img[r, c] = 0
            if kill:
                changed = True
    return img.astype(bool)


def count_components(img):
    """8-connected component count by flood fill."""
    img = np.asarray(img, dtype=bool)
    seen = np.zeros_like(img)
    count = 0
    for r0, c0 in zip(*np.nonzero(img)):
        if seen[r0, c0]:
            continue
        count += 1
        stack = [(r0, c0)]
        seen[r0, c0] = True
        while stack:
            r, c = stack.pop()
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < img.shape[0] and 0 <= cc < img.shape[1] \
                            and img[rr, cc] and not seen[rr, cc]:
                        seen[rr, cc] = True
                        stack.append((rr, cc))
    return count


@pytest.mark.parametrize("name", GLYPH_FILES)
def test_matches_loop_reference_on_corpus(name):
    img = load_pbm(DATA / name)
    assert np.array_equal(skeletonize(img), thin_reference(img))


def test_matches_loop_reference_on_random_blobs():
    rng = np.random.default_rng(42)
    for _ in range(5):
        img = rng.random((18, 18)) < 0.45
        assert np.array_equal(skeletonize(img), thin_reference(img))


def test_rect_11x3_reduces_to_single_pixel_row():
    sk = skeletonize(load_pbm(DATA / "rect11x3.pbm"))
    rows, cols = np.nonzero(sk)
    assert set(rows) == {1}                 # one-pixel-wide horizontal path
    assert list(cols) == list(range(1, 9))  # contiguous run


@pytest.mark.parametrize("name", GLYPH_FILES)
def test_skeleton_subset_of_foreground(name):
    img = load_pbm(DATA / name)
    sk = skeletonize(img)
    assert not np.any(sk & ~img)


@pytest.mark.parametrize("name", GLYPH_FILES)
def test_skeletonize_idempotent(name):
    sk = skeletonize(load_pbm(DATA / name))
    assert np.array_equal(skeletonize(sk), sk)


@pytest.mark.parametrize("name", GLYPH_FILES)
def test_component_count_preserved(name):
    img = load_pbm(DATA / name)
    assert count_components(skeletonize(img)) == count_components(img)


def test_twobars_has_two_components():
    img = load_pbm(DATA / "twobars.pbm")
    assert count_components(img) == 2


def test_empty_image_unchanged():
    img = np.zeros((6, 9), dtype=bool)
    assert np.array_equal(skeletonize(img), img)


def test_single_pixel_survives():
    img = np.zeros((5, 5), dtype=bool)
    img[2, 2] = True
    assert np.array_equal(skeletonize(img), img)


def test_thin_line_already_skeletal():
    img = np.zeros((5, 12), dtype=bool)
    img[2, 1:11] = True
    assert np.array_equal(skeletonize(img), img)


def test_pbm_roundtrip_both_formats(tmp_path):
    rng = np.random.default_rng(9)
    img = rng.random((13, 11)) < 0.5   # width deliberately not byte-aligned
    for fmt in ("P1", "P4"):
        f = tmp_path / f"img_{fmt}.pbm"
        save_pbm(img, f, fmt=fmt)
        assert np.array_equal(load_pbm(f), img)


def test_load_pbm_handles_comments(tmp_path):
    f = tmp_path / "c.pbm"
    f.write_text("P1\n# a comment line\n3 2\n1 0 1\n0 1 0\n")
    img = load_pbm(f)
    assert img.shape == (2, 3)
    assert img[0, 0] and not img[0, 1]


def test_load_pbm_rejects_bad_magic(tmp_path):
    f = tmp_path / "bad.pbm"
    f.write_text("P5\n3 2\n")
    with pytest.raises(ValueError, match="not a PBM"):
        load_pbm(f)


def test_load_pbm_rejects_truncated(tmp_path):
    f = tmp_path / "short.pbm"
    f.write_bytes(b"P4\n16 4\n\x00")
    with pytest.raises(ValueError, match="truncated"):
        load_pbm(f)


def test_save_pbm_rejects_bad_format(tmp_path):
    with pytest.raises(ValueError, match="unknown PBM format"):
        save_pbm(np.zeros((2, 2), dtype=bool), tmp_path / "x.pbm", fmt="P7")
