"""Geographic environment: agent placement and great-circle proximity queries.

Distances use the haversine formula on a sphere of radius 6,371,000 m,
which is plenty at municipal scale.  Query results are defined against an
exhaustive scan; the kernel in :mod:`twinner._kernels` only accelerates it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .engine import Engine
from .errors import TwinnerError

EARTH_RADIUS_M = 6_371_000.0


class InvalidCoordinate(TwinnerError):
    pass


class NotAMember(TwinnerError):
    pass


class EmptyCandidateSet(TwinnerError):
    pass


class UnplacedCandidate(TwinnerError):
    pass


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise InvalidCoordinate(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise InvalidCoordinate(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon < 180.0:
            raise InvalidCoordinate(f"longitude {self.lon} outside [-180, 180)")


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters; symmetric and non-negative."""
    dphi = math.radians(b.lat - a.lat) * 0.5
    dlmb = math.radians(b.lon - a.lon) * 0.5
    s = (
        math.sin(dphi) ** 2
        + math.cos(math.radians(a.lat)) * math.cos(math.radians(b.lat)) * math.sin(dlmb) ** 2
    )
    s = min(1.0, max(0.0, s))
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(s))


class GeoIndex:
    """Positions keyed by agent id with batch nearest/radius queries."""

    def __init__(self):
        self._points: dict[int, GeoPoint] = {}
        self._cache: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    def __len__(self) -> int:
        return len(self._points)

    def __contains__(self, agent_id: int) -> bool:
        return agent_id in self._points

    def place(self, agent_id: int, point: GeoPoint) -> None:
        if not isinstance(point, GeoPoint):
            point = GeoPoint(*point)
        self._points[agent_id] = point
        self._cache = None

    def point_of(self, agent_id: int) -> GeoPoint:
        try:
            return self._points[agent_id]
        except KeyError:
            raise UnplacedCandidate(f"agent {agent_id} has no position") from None

    def ids(self) -> list[int]:
        return sorted(self._points)

    def _arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._cache is None:
            ids = np.fromiter(sorted(self._points), dtype=np.int64, count=len(self._points))
            lats = np.array([self._points[i].lat for i in ids], dtype=np.float64)
            lons = np.array([self._points[i].lon for i in ids], dtype=np.float64)
            self._cache = (ids, lats, lons)
        return self._cache

    def _candidate_arrays(self, candidates) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ids, lats, lons = self._arrays()
        if candidates is None:
            return ids, lats, lons
        wanted = np.fromiter(sorted(set(candidates)), dtype=np.int64, count=len(set(candidates)))
        pos = np.searchsorted(ids, wanted)
        bad = (pos >= len(ids)) | (ids[np.minimum(pos, len(ids) - 1)] != wanted)
        if bad.any():
            missing = int(wanted[bad][0])
            raise UnplacedCandidate(f"agent {missing} has no position")
        return wanted, lats[pos], lons[pos]

    def nearest(self, origin: GeoPoint, candidates) -> int:
        """Candidate closest to origin; exact distance ties go to the lowest id."""
        ids, lats, lons = self._candidate_arrays(candidates)
        if len(ids) == 0:
            raise EmptyCandidateSet("no candidates to search")
        i = _kernels.nearest_index(origin.lat, origin.lon, lats, lons)
        return int(ids[i])

    def within_radius(self, origin: GeoPoint, radius_m: float, candidates=None) -> list[int]:
        """Candidates within radius_m, sorted by distance then id."""
        if radius_m < 0:
            raise ValueError("radius_m must be non-negative")
        ids, lats, lons = self._candidate_arrays(candidates)
        if len(ids) == 0:
            return []
        dists = _kernels.pairwise_m(origin.lat, origin.lon, lats, lons)
        keep = dists <= radius_m
        order = np.lexsort((ids[keep], dists[keep]))
        return [int(i) for i in ids[keep][order]]


class GeoEnvironment:
    """Engine-bound geographic group; only members can be placed."""

    def __init__(self, engine: Engine, name: str = "GeoEnvironment"):
        self.engine = engine
        self.id = engine.create_environment(name, "geo")
        self.index = GeoIndex()

    @property
    def name(self) -> str:
        return self.engine.environments[self.id].name

    def place(self, agent_id: int, point: GeoPoint) -> None:
        if not self.engine.is_member(self.id, agent_id):
            raise NotAMember(f"agent {agent_id} is not a member of {self.name}")
        if not isinstance(point, GeoPoint):
            raise InvalidCoordinate(f"not a GeoPoint: {point!r}")
        self.index.place(agent_id, point)
        self.engine.log_event(agent_id, "placed", f"{point.lat:.6f},{point.lon:.6f}")

    def position_of(self, agent_id: int) -> GeoPoint | None:
        return self.index._points.get(agent_id)

    def nearest(self, origin: GeoPoint, candidates) -> int:
        return self.index.nearest(origin, candidates)

    def within_radius(self, origin: GeoPoint, radius_m: float, candidates=None) -> list[int]:
        return self.index.within_radius(origin, radius_m, candidates)
