"""Pure-Python (numpy) implementation of the distance kernels."""

from __future__ import annotations

import numpy as np

BACKEND = "python"

EARTH_RADIUS_M = 6_371_000.0


def pairwise_m(lat0: float, lon0: float, lats: np.ndarray, lons: np.ndarray, out: np.ndarray):
    phi0 = np.radians(lat0)
    phi = np.radians(lats)
    dphi = np.radians(lats - lat0) * 0.5
    dlmb = np.radians(lons - lon0) * 0.5
    s = np.sin(dphi) ** 2 + np.cos(phi0) * np.cos(phi) * np.sin(dlmb) ** 2
    np.clip(s, 0.0, 1.0, out=s)
    out[:] = 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(s))
    return out


def nearest_index(lat0: float, lon0: float, lats: np.ndarray, lons: np.ndarray) -> int:
    out = np.empty(lats.shape[0], dtype=np.float64)
    pairwise_m(lat0, lon0, lats, lons, out)
    return int(np.argmin(out))
