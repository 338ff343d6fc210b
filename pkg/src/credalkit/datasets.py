"""Synthetic desk-scale datasets and their CSV on-disk form.

Three generators: separable 2-D Gaussian class clusters, the two-moons
pair, and an out-of-distribution cluster placed at a configurable
distance from a Gaussian mixture.  All are deterministic given a seed.

Datasets persist as plain CSV (``x0,...,label``); OOD rows carry the
label -1 meaning "unlabeled".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .archive import format_float
from .credal import InputValidationError

__all__ = ["Dataset", "gen_synthetic", "save_dataset", "load_dataset", "gaussian_centers"]

OOD_LABEL = -1

_KIND_PARAMS = {
    "gaussians": {"classes", "separation", "sigma", "n"},
    "two_moons": {"n", "noise"},
    "ood_cluster": {"classes", "separation", "sigma", "n", "distance", "spread"},
}


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (N, d) with integer labels (N,); -1 = unlabeled."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise InputValidationError(
                f"features must be (N, d) with labels (N,), got {x.shape} and {y.shape}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.x.shape[0]


def gaussian_centers(classes: int, separation: float, sigma: float) -> np.ndarray:
    """Class centers on a circle with adjacent centers ``separation * sigma`` apart."""
    if classes == 2:
        radius = separation * sigma / 2.0
    else:
        radius = separation * sigma / (2.0 * math.sin(math.pi / classes))
    angles = math.pi / 2.0 + 2.0 * math.pi * np.arange(classes) / classes
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def _check_params(kind: str, params: dict) -> None:
    unknown = set(params) - _KIND_PARAMS[kind]
    if unknown:
        raise InputValidationError(
            f"unknown parameters for {kind!r}: {sorted(unknown)}"
        )


def gen_synthetic(kind: str, params: dict | None = None, seed: int = 0) -> Dataset:
    """Generate a synthetic dataset, deterministic given ``seed``.

    Kinds:

    * ``gaussians`` — ``classes`` isotropic 2-D clusters of std ``sigma``
      whose adjacent centers sit ``separation`` sigmas apart.
    * ``two_moons`` — the interleaved half-circles; ``noise`` = 0 puts
      every point exactly on its arc.
    * ``ood_cluster`` — one unlabeled cluster for the matching
      ``gaussians`` geometry.  Its center lies on the ray from the
      class-0 center through the mixture centroid, at the first point
      whose distance to the nearest class center equals ``distance``
      sigmas; ``distance`` = 0 therefore lands on the class-0 center
      and the cluster overlaps the in-distribution data.  ``spread``
      is the cluster's own standard deviation (default ``sigma``).
    """
    params = dict(params or {})
    if kind not in _KIND_PARAMS:
        raise InputValidationError(
            f"unknown dataset kind {kind!r}; choose from {sorted(_KIND_PARAMS)}"
        )
    _check_params(kind, params)
    rng = np.random.default_rng(seed)
    if kind == "gaussians":
        return _gen_gaussians(params, rng)
    if kind == "two_moons":
        return _gen_two_moons(params, rng)
    return _gen_ood_cluster(params, rng)


def _gaussian_geometry(params: dict):
    classes = int(params.get("classes", 3))
    separation = float(params.get("separation", 6.0))
    sigma = float(params.get("sigma", 1.0))
    n = int(params.get("n", 1000))
    if classes < 2:
        raise InputValidationError(f"need at least 2 classes, got {classes}")
    if sigma <= 0.0 or separation < 0.0:
        raise InputValidationError(
            f"need sigma > 0 and separation >= 0, got {sigma}, {separation}"
        )
    if n < 1:
        raise InputValidationError(f"need n >= 1, got {n}")
    return classes, separation, sigma, n


def _gen_gaussians(params: dict, rng: np.random.Generator) -> Dataset:
    classes, separation, sigma, n = _gaussian_geometry(params)
    centers = gaussian_centers(classes, separation, sigma)
    counts = [n // classes + (1 if k < n % classes else 0) for k in range(classes)]
    xs, ys = [], []
    for k, count in enumerate(counts):
        xs.append(centers[k] + sigma * rng.standard_normal((count, 2)))
        ys.append(np.full(count, k, dtype=np.int64))
    return Dataset(x=np.concatenate(xs), y=np.concatenate(ys))


def _gen_two_moons(params: dict, rng: np.random.Generator) -> Dataset:
    n = int(params.get("n", 1000))
    noise = float(params.get("noise", 0.1))
    if n < 2:
        raise InputValidationError(f"need n >= 2, got {n}")
    if noise < 0.0:
        raise InputValidationError(f"noise must be >= 0, got {noise}")
    n_outer = n - n // 2
    n_inner = n // 2
    t_outer = np.linspace(0.0, math.pi, n_outer)
    t_inner = np.linspace(0.0, math.pi, n_inner)
    outer = np.stack([np.cos(t_outer), np.sin(t_outer)], axis=1)
    inner = np.stack([1.0 - np.cos(t_inner), 1.0 - np.sin(t_inner) - 0.5], axis=1)
    x = np.concatenate([outer, inner])
    if noise > 0.0:
        x = x + noise * rng.standard_normal(x.shape)
    y = np.concatenate(
        [np.zeros(n_outer, dtype=np.int64), np.ones(n_inner, dtype=np.int64)]
    )
    return Dataset(x=x, y=y)


def _ood_center(centers: np.ndarray, sigma: float, distance: float) -> np.ndarray:
    """First point on the (class 0 -> centroid) ray whose distance to
    the nearest class center is ``distance * sigma``."""
    centroid = centers.mean(axis=0)
    direction = centroid - centers[0]
    direction = direction / float(np.linalg.norm(direction))
    target = distance * sigma

    def gap(t: float) -> float:
        point = centers[0] + t * direction
        return float(np.min(np.linalg.norm(centers - point, axis=1))) - target

    if gap(0.0) >= 0.0:  # distance 0: the ray starts on the class-0 center
        return centers[0].copy()
    t_hi = float(np.max(np.linalg.norm(centers - centers[0], axis=1))) + 2.0 * target
    # walk to bracket the first sign change, then bisect
    steps = np.linspace(0.0, t_hi, 2049)
    lo = 0.0
    hi = t_hi
    for a, b in zip(steps[:-1], steps[1:]):
        if gap(b) >= 0.0:
            lo, hi = float(a), float(b)
            break
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return centers[0] + hi * direction


def _gen_ood_cluster(params: dict, rng: np.random.Generator) -> Dataset:
    classes, separation, sigma, n = _gaussian_geometry(params)
    distance = float(params.get("distance", 6.0))
    spread = float(params.get("spread", sigma))
    if distance < 0.0:
        raise InputValidationError(f"distance must be >= 0, got {distance}")
    if spread <= 0.0:
        raise InputValidationError(f"spread must be > 0, got {spread}")
    centers = gaussian_centers(classes, separation, sigma)
    center = _ood_center(centers, sigma, distance)
    x = center + spread * rng.standard_normal((n, 2))
    return Dataset(x=x, y=np.full(n, OOD_LABEL, dtype=np.int64))


def save_dataset(dataset: Dataset, path) -> None:
    dim = dataset.x.shape[1]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join([f"x{i}" for i in range(dim)] + ["label"]) + "\n")
        for row in range(len(dataset)):
            cells = [format_float(v) for v in dataset.x[row]]
            cells.append(str(int(dataset.y[row])))
            fh.write(",".join(cells) + "\n")


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise InputValidationError(f"{path}: empty dataset file")
    header = lines[0].split(",")
    if header[-1] != "label" or any(not h.startswith("x") for h in header[:-1]):
        raise InputValidationError(f"{path}: malformed dataset header {lines[0]!r}")
    dim = len(header) - 1
    rows = lines[1:]
    x = np.empty((len(rows), dim))
    y = np.empty(len(rows), dtype=np.int64)
    for i, line in enumerate(rows):
        cells = line.split(",")
        if len(cells) != dim + 1:
            raise InputValidationError(
                f"{path}: row {i} has {len(cells)} fields, expected {dim + 1}"
            )
        x[i] = [float(v) for v in cells[:-1]]
        y[i] = int(cells[-1])
    return Dataset(x=x, y=y)
