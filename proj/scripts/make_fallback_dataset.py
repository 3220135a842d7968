#!/usr/bin/env python3
"""Build the bundled handwritten-digit IDX files under data/.

The canonical MNIST corpus is not redistributable inside this repository, so
the committed dataset is derived from the scikit-learn `digits` corpus
(1797 real handwritten 8x8 samples): source images are split into disjoint
train/test pools, then augmented (rotation, shift, scale, contrast, noise)
and rendered onto a 28x28 canvas.  The output files use the exact IDX layout
of the MNIST distribution, so swapping in the real MNIST files via the
`data.*` config keys changes nothing else.

Deterministic: fixed seed, fixed generation order.
"""

import struct
import sys
from pathlib import Path

import numpy as np
from scipy import ndimage
from sklearn.datasets import load_digits

SEED = 20240913
TRAIN_COUNT = 5000
TEST_COUNT = 1000
OUT_DIR = Path(__file__).resolve().parent.parent / "data"


def render(img8, rng):
    """One augmented 28x28 uint8 image from an 8x8 source (values 0..16)."""
    x = img8.astype(np.float64) / 16.0
    angle = rng.uniform(-5.0, 5.0)
    scale = rng.uniform(0.95, 1.05)
    x = ndimage.rotate(x, angle, reshape=False, order=1, mode="constant")
    side = 20.0 * scale
    x = ndimage.zoom(x, side / 8.0, order=1)
    canvas = np.zeros((28, 28))
    h, w = x.shape
    dy = int(round((28 - h) / 2 + rng.uniform(-1.2, 1.2)))
    dx = int(round((28 - w) / 2 + rng.uniform(-1.2, 1.2)))
    y0, x0 = max(dy, 0), max(dx, 0)
    y1, x1 = min(dy + h, 28), min(dx + w, 28)
    canvas[y0:y1, x0:x1] = x[y0 - dy : y1 - dy, x0 - dx : x1 - dx]
    contrast = rng.uniform(0.9, 1.0)
    canvas = np.clip(canvas * contrast, 0.0, 1.0) * 255.0
    canvas += rng.normal(0.0, 3.0, canvas.shape)
    return np.clip(canvas, 0, 255).astype(np.uint8)


def make_split(images, labels, count, rng):
    order = rng.permutation(len(images))
    out_imgs = np.zeros((count, 28, 28), dtype=np.uint8)
    out_labels = np.zeros(count, dtype=np.uint8)
    for i in range(count):
        src = order[i % len(order)]
        out_imgs[i] = render(images[src], rng)
        out_labels[i] = labels[src]
    perm = rng.permutation(count)
    return out_imgs[perm], out_labels[perm]


def write_idx_images(path, images):
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.tobytes())


def main():
    rng = np.random.default_rng(SEED)
    digits = load_digits()
    images = digits.images  # (1797, 8, 8)
    labels = digits.target.astype(np.uint8)

    src_order = rng.permutation(len(images))
    test_src = src_order[:360]
    train_src = src_order[360:]

    train_imgs, train_labels = make_split(
        images[train_src], labels[train_src], TRAIN_COUNT, rng
    )
    test_imgs, test_labels = make_split(
        images[test_src], labels[test_src], TEST_COUNT, rng
    )

    OUT_DIR.mkdir(exist_ok=True)
    write_idx_images(OUT_DIR / "digits-train-images.idx3-ubyte", train_imgs)
    write_idx_labels(OUT_DIR / "digits-train-labels.idx1-ubyte", train_labels)
    write_idx_images(OUT_DIR / "digits-test-images.idx3-ubyte", test_imgs)
    write_idx_labels(OUT_DIR / "digits-test-labels.idx1-ubyte", test_labels)
    print(f"wrote {TRAIN_COUNT} train / {TEST_COUNT} test samples to {OUT_DIR}")


if __name__ == "__main__":
    sys.exit(main())
