# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the distance kernels (same contract as geo_py)."""

from libc.math cimport asin, cos, sin, sqrt, M_PI

BACKEND = "cython"

cdef double EARTH_RADIUS_M = 6371000.0
cdef double DEG = M_PI / 180.0


cdef inline double _haversine(double lat0, double lon0, double lat, double lon) noexcept nogil:
    cdef double dphi = (lat - lat0) * DEG * 0.5
    cdef double dlmb = (lon - lon0) * DEG * 0.5
    cdef double sp = sin(dphi)
    cdef double sl = sin(dlmb)
    cdef double s = sp * sp + cos(lat0 * DEG) * cos(lat * DEG) * sl * sl
    if s > 1.0:
        s = 1.0
    elif s < 0.0:
        s = 0.0
    return 2.0 * EARTH_RADIUS_M * asin(sqrt(s))


def pairwise_m(double lat0, double lon0, double[::1] lats, double[::1] lons, double[::1] out):
    cdef Py_ssize_t i
    cdef Py_ssize_t n = lats.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _haversine(lat0, lon0, lats[i], lons[i])
    return None


def nearest_index(double lat0, double lon0, double[::1] lats, double[::1] lons):
    cdef Py_ssize_t i, best = 0
    cdef Py_ssize_t n = lats.shape[0]
    cdef double d
    cdef double best_d = _haversine(lat0, lon0, lats[0], lons[0])
    with nogil:
        for i in range(1, n):
            d = _haversine(lat0, lon0, lats[i], lons[i])
            if d < best_d:
                best_d = d
                best = i
    return best
