"""Positive definite radial kernels and the dense kernel-matrix oracle."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .cluster_tree import PointCloud
from .errors import InvalidInput, ResourceLimit

MATERN12 = "matern12"
MATERN32 = "matern32"
MATERN52 = "matern52"
SQUARED_EXPONENTIAL = "squared-exponential"
SCALED_EXPONENTIAL = "scaled-exponential"

FAMILIES = (MATERN12, MATERN32, MATERN52, SQUARED_EXPONENTIAL, SCALED_EXPONENTIAL)

DENSE_CAP = 2 ** 14


@dataclass(frozen=True)
class KernelConfig:
    """A radial kernel: half-integer Matern family, its smooth limit, or a plain
    exponential k(r) = exp(-c r) parameterized by the distance scale c."""

    family: str
    length_scale: float = 1.0
    distance_scale: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInput(f"unknown kernel family {self.family!r}; choose from {FAMILIES}")
        if self.length_scale <= 0 or self.distance_scale <= 0:
            raise InvalidInput("kernel scales must be positive")

    @classmethod
    def from_json(cls, text: str) -> "KernelConfig":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"kernel config is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict) or "family" not in payload:
            raise InvalidInput('kernel config must be an object with a "family" key')
        kwargs = {"family": payload["family"]}
        if "length_scale" in payload:
            kwargs["length_scale"] = float(payload["length_scale"])
        if "distance_scale" in payload:
            kwargs["distance_scale"] = float(payload["distance_scale"])
        return cls(**kwargs)

    def to_json(self) -> str:
        payload = {"family": self.family}
        if self.family == SCALED_EXPONENTIAL:
            payload["distance_scale"] = self.distance_scale
        else:
            payload["length_scale"] = self.length_scale
        return json.dumps(payload, sort_keys=True)


def kernel_radial(cfg: KernelConfig, r: np.ndarray) -> np.ndarray:
    """Evaluate the kernel on an array of nonnegative radii."""
    r = np.asarray(r, dtype=np.float64)
    ell = cfg.length_scale
    if cfg.family == MATERN12:
        return np.exp(-r / ell)
    if cfg.family == MATERN32:
        s = np.sqrt(3.0) * r / ell
        return (1.0 + s) * np.exp(-s)
    if cfg.family == MATERN52:
        s = np.sqrt(5.0) * r / ell
        return (1.0 + s + s * s / 3.0) * np.exp(-s)
    if cfg.family == SQUARED_EXPONENTIAL:
        return np.exp(-(r * r) / (2.0 * ell * ell))
    return np.exp(-cfg.distance_scale * r)  # scaled exponential


def kernel_eval(cfg: KernelConfig, x: np.ndarray, y: np.ndarray) -> float:
    """k(||x - y||) for a single pair of points."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise InvalidInput(f"point dimensions differ: {x.shape} vs {y.shape}")
    return float(kernel_radial(cfg, np.linalg.norm(x - y)))


def kernel_cross(cfg: KernelConfig, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Kernel matrix between two point sets, shapes (n, d) and (m, d)."""
    return kernel_radial(cfg, cdist(xs, ys))


def dense_kernel_matrix(cfg: KernelConfig, cloud: PointCloud,
                        order: str = "original",
                        permutation: np.ndarray | None = None,
                        cap: int = DENSE_CAP) -> np.ndarray:
    """Exact dense N x N kernel matrix, guarded against oversize allocation.

    ``order="tree"`` evaluates in tree-permuted point order, which requires
    the tree permutation.
    """
    n = cloud.count
    if n > cap:
        raise ResourceLimit(f"dense kernel matrix capped at N <= {cap}, got {n}")
    coords = cloud.coords
    if order == "tree":
        if permutation is None:
            raise InvalidInput("tree ordering requires the tree permutation")
        coords = coords[permutation]
    elif order != "original":
        raise InvalidInput(f"unknown ordering {order!r}; use 'original' or 'tree'")
    return kernel_cross(cfg, coords, coords)
