"""Dataset ingestion (CSV, PPM image patches) and synthetic generators."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .core import Dataset, InputError, make_rng, standard_normal

CHANNELS = ("red", "green", "blue")


class DataFormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


# -- CSV -------------------------------------------------------------------


def _parse_row(row: list[str]) -> Optional[list[float]]:
    try:
        return [float(cell) for cell in row]
    except ValueError:
        return None


def load_csv(path: os.PathLike | str) -> Dataset:
    """Read comma-separated numeric rows; a non-numeric first row is a header."""
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            values = _parse_row(row)
            if values is None:
                if lineno == 1:
                    continue
                raise DataFormatError("non-numeric cell", lineno)
            if not all(math.isfinite(v) for v in values):
                raise DataFormatError("non-finite value", lineno)
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise DataFormatError(f"expected {width} columns, found {len(values)}", lineno)
            rows.append(values)
    if not rows:
        raise DataFormatError("no data rows")
    return Dataset(np.array(rows, dtype=np.float64))


def save_csv(path: os.PathLike | str, data: Dataset | ArrayLike, header: Optional[Sequence[str]] = None) -> None:
    """Write points with 17 significant digits so that ``load_csv`` reads them back exactly."""
    pts = data.points if isinstance(data, Dataset) else np.atleast_2d(np.asarray(data, dtype=np.float64))
    with open(path, "w", newline="") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in pts:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def save_assignments_csv(
    path: os.PathLike | str,
    labels: ArrayLike,
    responsibilities: Optional[ArrayLike] = None,
) -> None:
    """One row per point: 1-based point index, 1-based cluster id or ``noise``, responsibilities."""
    labels = np.asarray(labels)
    if responsibilities is not None:
        responsibilities = np.asarray(responsibilities, dtype=np.float64)
        if responsibilities.ndim != 2 or responsibilities.shape[0] != labels.shape[0]:
            raise InputError("responsibilities must have one row per label")
    with open(path, "w", newline="") as fh:
        for i, label in enumerate(labels):
            fields = [str(i + 1), "noise" if label < 0 else str(int(label) + 1)]
            if responsibilities is not None:
                fields.extend(_fmt(v) for v in responsibilities[i])
            fh.write(",".join(fields) + "\n")


# -- PPM patches -----------------------------------------------------------


@dataclass(frozen=True)
class PatchGrid:
    image_width: int
    image_height: int
    patch_width: int
    patch_height: int
    features: Dataset

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.image_height // self.patch_height, self.image_width // self.patch_width


def _header_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(buf) and buf[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(buf):
            raise DataFormatError("truncated PPM header")
        if buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
            pos += 1
        tokens.append(buf[start:pos])
    return tokens, pos


def read_ppm(path: os.PathLike | str) -> tuple[np.ndarray, int]:
    """Decode a P3 or P6 image into an (H, W, 3) integer array and its maxval."""
    with open(path, "rb") as fh:
        buf = fh.read()
    tokens, pos = _header_tokens(buf, 4)
    magic = tokens[0]
    if magic not in (b"P3", b"P6"):
        raise DataFormatError(f"unsupported magic {magic!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise DataFormatError("malformed PPM header") from None
    if width < 1 or height < 1 or not 0 < maxval <= 65535:
        raise DataFormatError("malformed PPM header")
    count = width * height * 3

    if magic == b"P6":
        # exactly one whitespace byte separates maxval from the raster
        if pos >= len(buf) or not buf[pos : pos + 1].isspace():
            raise DataFormatError("truncated pixel data")
        raster = buf[pos + 1 :]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        if len(raster) < count * dtype.itemsize:
            raise DataFormatError("truncated pixel data")
        pixels = np.frombuffer(raster, dtype=dtype, count=count).astype(np.int64)
    else:
        body = buf[pos:]
        lines = [ln.split(b"#", 1)[0] for ln in body.splitlines()]
        words = b" ".join(lines).split()
        if len(words) < count:
            raise DataFormatError("truncated pixel data")
        try:
            pixels = np.array([int(w) for w in words[:count]], dtype=np.int64)
        except ValueError:
            raise DataFormatError("non-integer sample in pixel data") from None
    if pixels.max(initial=0) > maxval or pixels.min(initial=0) < 0:
        raise DataFormatError("sample exceeds maxval")
    return pixels.reshape(height, width, 3), maxval


def extract_patch_features(ppm_path: os.PathLike | str, patch_width: int, patch_height: int) -> PatchGrid:
    """Mean red, green and blue intensity of every full patch, scaled to [0, 1].

    Patches are enumerated row by row from the top-left corner; trailing
    pixels that do not fill a whole patch are dropped.
    """
    if patch_width < 1 or patch_height < 1:
        raise InputError("patch dimensions must be >= 1")
    img, maxval = read_ppm(ppm_path)
    height, width, _ = img.shape
    rows, cols = height // patch_height, width // patch_width
    if rows == 0 or cols == 0:
        raise InputError("patch is larger than the image")
    crop = img[: rows * patch_height, : cols * patch_width]
    blocks = crop.reshape(rows, patch_height, cols, patch_width, 3)
    sums = blocks.sum(axis=(1, 3)).reshape(rows * cols, 3)
    features = sums / (patch_width * patch_height * maxval)
    return PatchGrid(width, height, patch_width, patch_height, Dataset(features))


def write_ppm(path: os.PathLike | str, pixels: ArrayLike, maxval: int = 255, binary: bool = False) -> None:
    """Write an (H, W, 3) integer array as P3 text or P6 binary."""
    img = np.asarray(pixels, dtype=np.int64)
    height, width, _ = img.shape
    header = f"{'P6' if binary else 'P3'}\n{width} {height}\n{maxval}\n".encode()
    with open(path, "wb") as fh:
        fh.write(header)
        if binary:
            dtype = ">u2" if maxval > 255 else "u1"
            fh.write(img.astype(dtype).tobytes())
        else:
            for row in img:
                fh.write((" ".join(str(v) for v in row.ravel()) + "\n").encode())


# -- generators ------------------------------------------------------------


def sample_gmm(params, m: int, seed: int) -> tuple[Dataset, np.ndarray]:
    """Draw m points from a Gaussian mixture.

    The stream first yields m uniforms that pick components through the
    cumulative priors, then Box-Muller normals (n per point, in point order)
    that are mapped through each component's Cholesky factor.
    """
    if m < 1:
        raise InputError("m must be >= 1")
    rng = make_rng(seed)
    priors = np.asarray(params.priors, dtype=np.float64)
    k, n = params.means.shape
    chols = np.linalg.cholesky(params.covariances)
    cum = np.cumsum(priors)
    cum[-1] = max(cum[-1], 1.0)
    labels = np.searchsorted(cum, rng.random(m), side="right")
    labels = np.minimum(labels, k - 1)
    z = standard_normal(rng, m * n).reshape(m, n)
    x = params.means[labels] + np.einsum("mij,mj->mi", chols[labels], z)
    return Dataset(x), labels


def blob_params(centers: ArrayLike, sd: float | ArrayLike = 1.0, priors: Optional[ArrayLike] = None):
    """Isotropic mixture with the given centres and per-blob standard deviations."""
    from .gmm import GmmParams

    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    k, n = centers.shape
    sd = np.broadcast_to(np.asarray(sd, dtype=np.float64), (k,))
    if np.any(sd <= 0):
        raise InputError("blob standard deviations must be > 0")
    priors = np.full(k, 1.0 / k) if priors is None else np.asarray(priors, dtype=np.float64)
    if priors.shape == (k,) and priors.sum() > 0:
        priors = priors / priors.sum()
    covs = (sd**2)[:, None, None] * np.eye(n)[None]
    return GmmParams(centers, covs, priors)


def generate_blobs(
    m: int,
    centers: ArrayLike,
    sd: float | ArrayLike = 1.0,
    priors: Optional[ArrayLike] = None,
    seed: int = 0,
) -> tuple[Dataset, np.ndarray]:
    return sample_gmm(blob_params(centers, sd, priors), m, seed)


def generate_rings(
    m_per_ring: int,
    radii: Sequence[float],
    noise_sd: float = 0.0,
    seed: int = 0,
) -> tuple[Dataset, np.ndarray]:
    """Concentric rings around the origin in the plane.

    For each ring in turn: m_per_ring uniform angles, then m_per_ring
    Box-Muller normals for the radial perturbation (skipped when
    noise_sd is 0).
    """
    radii = [float(r) for r in radii]
    if m_per_ring < 1 or not radii:
        raise InputError("need at least one ring with at least one point")
    if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise InputError("radii must be positive and strictly increasing")
    if noise_sd < 0:
        raise InputError("noise_sd must be nonnegative")
    rng = make_rng(seed)
    pts, labels = [], []
    for j, r in enumerate(radii):
        theta = 2.0 * np.pi * rng.random(m_per_ring)
        radius = np.full(m_per_ring, r)
        if noise_sd > 0:
            radius = radius + noise_sd * standard_normal(rng, m_per_ring)
        pts.append(np.column_stack([radius * np.cos(theta), radius * np.sin(theta)]))
        labels.append(np.full(m_per_ring, j, dtype=np.intp))
    return Dataset(np.vstack(pts)), np.concatenate(labels)
