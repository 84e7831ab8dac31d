"""Grayscale datasets: PGM ingestion, seeded splits and synthetic faces."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import CountTooLarge, InconsistentDimensions, MalformedHeader, MaxvalZero

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


@dataclass
class Dataset:
    """Flattened samples in ``[0, 1]``, one row per image, in a fixed order."""

    samples: np.ndarray
    image_shape: Optional[tuple[int, int]] = None
    split: str = "all"
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2:
            raise InconsistentDimensions(f"samples must be 2-D, got shape {self.samples.shape}")
        if self.image_shape is not None:
            rows, cols = self.image_shape
            if rows * cols != self.samples.shape[1]:
                raise InconsistentDimensions(
                    f"image shape {self.image_shape} does not match sample length {self.samples.shape[1]}"
                )

    def __len__(self) -> int:
        return self.samples.shape[0]

    def images(self) -> np.ndarray:
        if self.image_shape is None:
            raise InconsistentDimensions("dataset has no image shape")
        return self.samples.reshape(len(self), *self.image_shape)


def read_pgm(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a P2 (ASCII) or P5 (binary) graymap; returns ``(pixels, maxval)``."""
    raw = Path(path).read_bytes()
    pos = 0
    header = []
    for _ in range(4):
        m = _TOKEN.match(raw, pos)
        if m is None:
            raise MalformedHeader(f"{path}: truncated header")
        header.append(m.group(1))
        pos = m.end()
    magic = header[0]
    if magic not in (b"P2", b"P5"):
        raise MalformedHeader(f"{path}: unsupported magic {magic!r}")
    try:
        width, height, maxval = (int(tok) for tok in header[1:])
    except ValueError:
        raise MalformedHeader(f"{path}: non-numeric header fields") from None
    if width < 1 or height < 1:
        raise MalformedHeader(f"{path}: bad size {width}x{height}")
    if maxval == 0:
        raise MaxvalZero(f"{path}: maxval is zero")
    if not 0 < maxval < 65536:
        raise MalformedHeader(f"{path}: maxval {maxval} out of range")
    n = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        body = raw[pos : pos + n * dtype.itemsize]
        if len(body) != n * dtype.itemsize:
            raise MalformedHeader(f"{path}: raster is shorter than {width}x{height}")
        pixels = np.frombuffer(body, dtype=dtype).astype(np.int64)
    else:
        tokens = re.sub(rb"#[^\n]*", b"", raw[pos:]).split()
        if len(tokens) < n:
            raise MalformedHeader(f"{path}: expected {n} samples, found {len(tokens)}")
        pixels = np.array([int(tok) for tok in tokens[:n]], dtype=np.int64)
    if pixels.max(initial=0) > maxval:
        raise MalformedHeader(f"{path}: sample exceeds maxval {maxval}")
    return pixels.reshape(height, width), maxval


def write_pgm(path: str | Path, image, maxval: int = 255, binary: bool = True) -> None:
    """Quantise an image with values in ``[0, 1]`` to ``maxval`` levels and write it."""
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    levels = np.rint(img * maxval).astype(np.int64)
    height, width = levels.shape
    if binary:
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        data = f"P5\n{width} {height}\n{maxval}\n".encode() + levels.astype(dtype).tobytes()
    else:
        rows = "\n".join(" ".join(str(v) for v in row) for row in levels)
        data = f"P2\n{width} {height}\n{maxval}\n{rows}\n".encode()
    Path(path).write_bytes(data)


def load_pgm_directory(path: str | Path) -> Dataset:
    """Load every ``.pgm`` file in filename order, scaled by its own maxval."""
    files = sorted(p for p in Path(path).iterdir() if p.suffix.lower() in (".pgm", ".pnm"))
    rows = []
    shape = None
    for f in files:
        pixels, maxval = read_pgm(f)
        if shape is None:
            shape = pixels.shape
        elif pixels.shape != shape:
            raise InconsistentDimensions(f"{f.name} is {pixels.shape}, expected {shape}")
        rows.append(pixels.reshape(-1) / maxval)
    if not rows:
        return Dataset(np.zeros((0, 0)), None, names=[])
    return Dataset(np.vstack(rows), shape, names=[f.name for f in files])


def save_pgm_directory(d: Dataset, path: str | Path, maxval: int = 255) -> list[Path]:
    """Write each sample as ``NNNN.pgm`` plus a ``manifest.txt`` listing file order."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for idx, img in enumerate(d.images()):
        p = out / f"{idx:04d}.pgm"
        write_pgm(p, img, maxval)
        written.append(p)
    (out / "manifest.txt").write_text("".join(p.name + "\n" for p in written))
    return written


def split(d: Dataset, train_count: int, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then the first ``train_count`` samples train and the rest test."""
    if train_count < 0 or train_count >= len(d):
        raise CountTooLarge(f"train_count {train_count} must be in [0, {len(d)})")
    perm = np.random.default_rng(seed).permutation(len(d))
    tr, te = np.sort(perm[:train_count]), np.sort(perm[train_count:])

    def take(idx, tag):
        names = [d.names[i] for i in idx] if d.names else []
        return Dataset(d.samples[idx], d.image_shape, tag, names)

    return take(tr, "train"), take(te, "test")


def synthetic_faces(count: int, rows: int, cols: int, seed: int) -> Dataset:
    """Smooth images built from a few 2-D Gaussian bumps, rescaled to ``[0, 1]``.

    Each image has a face-like skeleton (a broad head blob, two eye dips and a
    mouth dip) whose positions, sizes and strengths are jittered, plus one or
    two random bumps. Every image is min-max normalised.
    """
    if rows < 8 or cols < 8:
        raise ValueError("synthetic images need at least 8x8 pixels")
    rng = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.linspace(0.0, 1.0, rows), np.linspace(0.0, 1.0, cols), indexing="ij")

    def bump(cy, cx, sy, sx):
        return np.exp(-(((yy - cy) / sy) ** 2 + ((xx - cx) / sx) ** 2) / 2.0)

    out = np.empty((count, rows * cols))
    for n in range(count):
        cy, cx = 0.5 + rng.normal(0.0, 0.04, size=2)
        img = bump(cy, cx, rng.uniform(0.22, 0.3), rng.uniform(0.17, 0.24))
        eye_y = cy - rng.uniform(0.08, 0.14)
        gap = rng.uniform(0.09, 0.14)
        depth = rng.uniform(0.3, 0.6)
        for side in (-1.0, 1.0):
            img -= depth * bump(eye_y, cx + side * gap, 0.04, 0.05)
        img -= rng.uniform(0.2, 0.5) * bump(cy + rng.uniform(0.12, 0.18), cx, 0.03, rng.uniform(0.06, 0.1))
        for _ in range(rng.integers(1, 3)):
            cy2, cx2 = rng.uniform(0.1, 0.9, size=2)
            img += rng.uniform(-0.3, 0.3) * bump(cy2, cx2, *rng.uniform(0.08, 0.2, size=2))
        img -= img.min()
        img /= img.max()
        out[n] = img.reshape(-1)
    return Dataset(out, (rows, cols), "all", [f"synthetic_{n:04d}" for n in range(count)])
