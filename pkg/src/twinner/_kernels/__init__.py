"""Great-circle distance kernels.

Two interchangeable implementations sit behind this module: a Cython
extension (``geo_cy``, compiled at install time) and a vectorized numpy
fallback (``geo_py``).  The compiled one is picked when importable; set
``TWINNER_PURE_PYTHON=1`` to force the fallback.  ``benchmarks/bench_geo.py``
compares the two.
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("TWINNER_PURE_PYTHON") == "1":
    from . import geo_py as _impl
else:
    try:
        from . import geo_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import geo_py as _impl  # type: ignore[no-redef]

BACKEND: str = _impl.BACKEND


def _as_f64(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.float64)


def pairwise_m(lat: float, lon: float, lats, lons) -> np.ndarray:
    """Distances in meters from one origin to every (lats[i], lons[i])."""
    lats = _as_f64(lats)
    lons = _as_f64(lons)
    if lats.shape != lons.shape:
        raise ValueError("lats and lons must have the same length")
    out = np.empty(lats.shape[0], dtype=np.float64)
    _impl.pairwise_m(float(lat), float(lon), lats, lons, out)
    return out


def nearest_index(lat: float, lon: float, lats, lons) -> int:
    """Index of the closest point; first occurrence wins on exact ties."""
    lats = _as_f64(lats)
    lons = _as_f64(lons)
    if lats.shape[0] == 0:
        raise ValueError("no candidate points")
    return int(_impl.nearest_index(float(lat), float(lon), lats, lons))
