import csv

import numpy as np
import pytest

from regionnet.netpbm import write_pgm, write_ppm

MANIFEST_HEADER = ["input", "label", "seed", "target_col", "target_row", "shift"]


def synth_pair(rng, size=(24, 24)):
    """Input whose green band, clipped by red obstacles, is the label: a
    mapping tiny nets can learn, so mechanics tests stay meaningful."""
    h, w = size
    img = np.zeros((h, w, 3), dtype=np.uint8)
    col = int(rng.integers(4, w - 4))
    half = int(rng.integers(2, 4))
    img[:, max(col - half, 0) : col + half + 1, 1] = 255
    n_blk = int(rng.integers(0, 3))
    for _ in range(n_blk):
        r, c = rng.integers(0, h - 4), rng.integers(0, w - 4)
        img[r : r + 4, c : c + 4, 0] = 255
    tr, tc = int(rng.integers(0, h)), int(rng.integers(0, w))
    img[max(tr - 2, 0) : tr + 3, max(tc - 2, 0) : tc + 3, 2] = 255
    label = (img[:, :, 1] == 255) & (img[:, :, 0] == 0)
    return img, label


def write_sample_tree(out_dir, n, size=(24, 24), seed=0):
    """n synthetic pairs plus a manifest.csv shaped like the planner's."""
    rng = np.random.default_rng(seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(n):
        img, label = synth_pair(rng, size)
        input_name = f"input_{i:05d}.ppm"
        label_name = f"label_{i:05d}.pgm"
        write_ppm(img, out_dir / input_name)
        write_pgm(label, out_dir / label_name)
        rows.append([input_name, label_name, 1000 + i, 5, 5, "0.0"])
    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        writer.writerows(rows)
    return manifest


@pytest.fixture
def sample_tree(tmp_path):
    def build(n, size=(24, 24), seed=0, name="data"):
        return write_sample_tree(tmp_path / name, n, size, seed)

    return build
