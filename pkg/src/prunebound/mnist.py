"""MNIST-style IDX ingestion plus a synthetic digit generator.

The loader speaks the standard IDX format: big-endian magic 2051 for image
files (u8 pixels, dims n x rows x cols) and 2049 for label files. Pixels are
scaled to [0, 1] and flattened. The generator writes class-template images
in the same format so the full pipeline can run on machines without the
real dataset; real MNIST files work identically.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import IdxFormatError, IdxLabelError, IdxTruncatedError
from .models import Dataset
from .rng import RngHandle

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049


def _read_header(raw: bytes, expected_magic: int, n_dims: int, path) -> tuple[list[int], int]:
    header_len = 4 * (1 + n_dims)
    if len(raw) < header_len:
        raise IdxTruncatedError(f"{path}: file shorter than its header")
    magic = struct.unpack(">i", raw[:4])[0]
    if magic != expected_magic:
        raise IdxFormatError(f"{path}: magic {magic}, expected {expected_magic}")
    dims = list(struct.unpack(f">{n_dims}i", raw[4:header_len]))
    return dims, header_len


def load_mnist_idx(images_path, labels_path, limit: int | None = None) -> Dataset:
    """Load an IDX image/label file pair into a flattened [0,1] dataset."""
    images_path = Path(images_path)
    labels_path = Path(labels_path)
    raw_img = images_path.read_bytes()
    raw_lab = labels_path.read_bytes()

    (n_img, rows, cols), off_img = _read_header(raw_img, IMAGE_MAGIC, 3, images_path)
    (n_lab,), off_lab = _read_header(raw_lab, LABEL_MAGIC, 1, labels_path)
    if n_img != n_lab:
        raise IdxFormatError(
            f"image count {n_img} != label count {n_lab} for {images_path} / {labels_path}")

    need_img = off_img + n_img * rows * cols
    if len(raw_img) < need_img:
        raise IdxTruncatedError(
            f"{images_path}: header declares {n_img} images but payload is short")
    if len(raw_lab) < off_lab + n_lab:
        raise IdxTruncatedError(
            f"{labels_path}: header declares {n_lab} labels but payload is short")

    n = n_img if limit is None else min(limit, n_img)
    pixels = np.frombuffer(raw_img, dtype=np.uint8, count=n * rows * cols, offset=off_img)
    labels = np.frombuffer(raw_lab, dtype=np.uint8, count=n, offset=off_lab)
    if labels.size and labels.max() > 9:
        bad = int(labels.max())
        raise IdxLabelError(f"{labels_path}: label {bad} outside [0, 9]")

    samples = pixels.reshape(n, rows * cols).astype(np.float64) / 255.0
    return Dataset(samples=samples, labels=labels.astype(np.int64))


def write_idx_images(path, images: np.ndarray) -> None:
    """Write u8 images of shape (n, rows, cols) in IDX format."""
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">iiii", IMAGE_MAGIC, n, rows, cols))
        fh.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">ii", LABEL_MAGIC, len(labels)))
        fh.write(labels.tobytes())


def make_class_templates(rng: RngHandle, side: int = 28,
                         num_classes: int = 10) -> np.ndarray:
    """Smooth per-class template images: low-resolution random fields
    upsampled to side x side, mid-gray range."""
    gen = rng.generator()
    coarse = 7
    templates = gen.random((num_classes, coarse, coarse))
    reps = side // coarse + 1
    up = np.kron(templates, np.ones((reps, reps)))[:, :side, :side]
    return up * 200.0 + 20.0


def synthesize_digit_arrays(n: int, templates: np.ndarray,
                            rng: RngHandle) -> tuple[np.ndarray, np.ndarray]:
    """Template images plus pixel noise, clipped to u8; balanced, shuffled."""
    gen = rng.generator()
    num_classes, side, _ = templates.shape
    labels = np.tile(np.arange(num_classes), n // num_classes + 1)[:n]
    gen.shuffle(labels)
    noise = gen.normal(0.0, 25.0, size=(n, side, side))
    images = np.clip(templates[labels] + noise, 0, 255).astype(np.uint8)
    return images, labels.astype(np.uint8)


def make_synthetic_mnist(out_dir, n_train: int, n_test: int, seed: int,
                         side: int = 28) -> dict[str, str]:
    """Write a synthetic train/test IDX quartet; returns the four paths.

    Train and test share the class templates and differ only in noise, so
    a trained classifier generalizes to the test split.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    templates = make_class_templates(RngHandle(seed, 0), side)
    tr_img, tr_lab = synthesize_digit_arrays(n_train, templates, RngHandle(seed, 1))
    te_img, te_lab = synthesize_digit_arrays(n_test, templates, RngHandle(seed, 2))
    paths = {
        "train_images": str(out_dir / "train-images-idx3-ubyte"),
        "train_labels": str(out_dir / "train-labels-idx1-ubyte"),
        "test_images": str(out_dir / "t10k-images-idx3-ubyte"),
        "test_labels": str(out_dir / "t10k-labels-idx1-ubyte"),
    }
    write_idx_images(paths["train_images"], tr_img)
    write_idx_labels(paths["train_labels"], tr_lab)
    write_idx_images(paths["test_images"], te_img)
    write_idx_labels(paths["test_labels"], te_lab)
    return paths
