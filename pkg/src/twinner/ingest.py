"""Infrastructure file loading: residential buildings and schools.

The canonical exchange format is UTF-8 CSV with a header row; a GeoJSON
reader accepting FeatureCollections of Points with equivalent properties
is provided for geo tooling.  Validation errors carry the 1-based file
line (the header is line 1) or feature number.

Building-type semantics: cabins and garages are non-residential and hold
zero dwelling units; residential buildings with a missing or zero recorded
unit count are normalized to one dwelling, so an apartment complex keeps
its full unit count while a detached house never collapses to zero.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import TwinnerError
from .geo import GeoPoint, InvalidCoordinate

BUILDING_TYPES = (
    "studio_apartment",
    "detached_house",
    "row_house",
    "apartment_complex",
    "cabin",
    "garage",
)
NON_RESIDENTIAL_TYPES = frozenset({"cabin", "garage"})

SCHOOL_KINDS = ("compulsory", "high_school")
GRADES = tuple(range(1, 14))
COMPULSORY_GRADES = tuple(range(1, 11))
HIGH_SCHOOL_GRADES = tuple(range(11, 14))

BUILDINGS_HEADER = ["id", "building_type", "dwelling_units", "lat", "lon"]
SCHOOLS_HEADER = ["id", "name", "kind", "lat", "lon"] + [f"g{g}" for g in GRADES]


class IngestError(TwinnerError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedRow(IngestError):
    pass


class UnknownBuildingType(IngestError):
    pass


class MissingCoordinate(IngestError):
    pass


class NegativePupilCount(IngestError):
    pass


class GradeKindMismatch(IngestError):
    pass


@dataclass(frozen=True)
class Building:
    id: int
    building_type: str
    dwelling_units: int
    location: GeoPoint


@dataclass(frozen=True)
class School:
    id: int
    name: str
    kind: str
    location: GeoPoint
    pupils_per_grade: dict[int, int]


def residential_filter(building: Building) -> bool:
    """True iff the building may host households."""
    return building.building_type not in NON_RESIDENTIAL_TYPES


def dwelling_units(building: Building) -> int:
    """Allocatable dwelling capacity: 0 for non-residential, at least 1 otherwise."""
    if not residential_filter(building):
        return 0
    return building.dwelling_units if building.dwelling_units > 0 else 1


# ----------------------------------------------------------------------
# field parsing shared by CSV and GeoJSON
# ----------------------------------------------------------------------


def _parse_int(raw, what: str, line: int) -> int:
    try:
        return int(str(raw).strip())
    except (TypeError, ValueError):
        raise MalformedRow(f"{what} is not an integer: {raw!r}", line) from None


def _parse_location(lat_raw, lon_raw, line: int) -> GeoPoint:
    if lat_raw is None or lon_raw is None or str(lat_raw).strip() == "" or str(lon_raw).strip() == "":
        raise MissingCoordinate("missing lat/lon", line)
    try:
        lat = float(lat_raw)
        lon = float(lon_raw)
    except (TypeError, ValueError):
        raise MalformedRow(f"coordinate is not a number: ({lat_raw!r}, {lon_raw!r})", line) from None
    try:
        return GeoPoint(lat, lon)
    except InvalidCoordinate as exc:
        raise MalformedRow(str(exc), line) from None


def _make_building(id_raw, type_raw, units_raw, lat_raw, lon_raw, line: int) -> Building:
    building_id = _parse_int(id_raw, "id", line)
    building_type = str(type_raw).strip()
    if building_type not in BUILDING_TYPES:
        raise UnknownBuildingType(f"unknown building_type {building_type!r}", line)
    if units_raw is None or str(units_raw).strip() == "":
        units = 0
    else:
        units = _parse_int(units_raw, "dwelling_units", line)
    if units < 0:
        raise MalformedRow(f"dwelling_units is negative: {units}", line)
    location = _parse_location(lat_raw, lon_raw, line)
    if building_type in NON_RESIDENTIAL_TYPES:
        units = 0
    elif units == 0:
        units = 1
    return Building(building_id, building_type, units, location)


def _make_school(id_raw, name_raw, kind_raw, lat_raw, lon_raw, grade_raws, line: int) -> School:
    school_id = _parse_int(id_raw, "id", line)
    name = str(name_raw).strip()
    if not name:
        raise MalformedRow("school name is empty", line)
    kind = str(kind_raw).strip()
    if kind not in SCHOOL_KINDS:
        raise MalformedRow(f"unknown school kind {kind!r}", line)
    location = _parse_location(lat_raw, lon_raw, line)
    pupils: dict[int, int] = {}
    for grade, raw in zip(GRADES, grade_raws):
        count = 0 if raw is None or str(raw).strip() == "" else _parse_int(raw, f"g{grade}", line)
        if count < 0:
            raise NegativePupilCount(f"g{grade} is negative: {count}", line)
        pupils[grade] = count
    banned = HIGH_SCHOOL_GRADES if kind == "compulsory" else COMPULSORY_GRADES
    for grade in banned:
        if pupils[grade] != 0:
            raise GradeKindMismatch(
                f"{kind} school has {pupils[grade]} pupils in grade {grade}", line
            )
    return School(school_id, name, kind, location, pupils)


# ----------------------------------------------------------------------
# CSV
# ----------------------------------------------------------------------


def _read_csv(path, expected_header: list[str]):
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows or rows[0] != expected_header:
        raise MalformedRow(f"expected header {','.join(expected_header)}", 1)
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(expected_header):
            raise MalformedRow(f"expected {len(expected_header)} fields, got {len(row)}", i)
        yield i, row


def load_buildings(path) -> list[Building]:
    """Read a buildings CSV (id,building_type,dwelling_units,lat,lon), in file order."""
    return [_make_building(*row, line) for line, row in _read_csv(path, BUILDINGS_HEADER)]


def load_schools(path) -> list[School]:
    """Read a schools CSV (id,name,kind,lat,lon,g1..g13), in file order."""
    out = []
    for line, row in _read_csv(path, SCHOOLS_HEADER):
        out.append(_make_school(row[0], row[1], row[2], row[3], row[4], row[5:], line))
    return out


def save_buildings(buildings: list[Building], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(BUILDINGS_HEADER)
        for b in buildings:
            writer.writerow([b.id, b.building_type, b.dwelling_units, b.location.lat, b.location.lon])


def save_schools(schools: list[School], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(SCHOOLS_HEADER)
        for s in schools:
            row = [s.id, s.name, s.kind, s.location.lat, s.location.lon]
            row += [s.pupils_per_grade[g] for g in GRADES]
            writer.writerow(row)


# ----------------------------------------------------------------------
# GeoJSON
# ----------------------------------------------------------------------


def _read_features(path):
    with open(path, encoding="utf-8") as handle:
        doc = json.load(handle)
    if doc.get("type") != "FeatureCollection" or not isinstance(doc.get("features"), list):
        raise MalformedRow("not a GeoJSON FeatureCollection", 1)
    for i, feature in enumerate(doc["features"], start=1):
        geometry = feature.get("geometry") or {}
        if geometry.get("type") != "Point":
            raise MalformedRow("feature geometry must be a Point", i)
        coords = geometry.get("coordinates") or []
        if len(coords) < 2:
            raise MissingCoordinate("missing lat/lon", i)
        lon, lat = coords[0], coords[1]
        yield i, feature.get("properties") or {}, lat, lon


def load_buildings_geojson(path) -> list[Building]:
    """Read buildings from a FeatureCollection of Points with the CSV properties."""
    out = []
    for i, props, lat, lon in _read_features(path):
        out.append(
            _make_building(props.get("id"), props.get("building_type"),
                           props.get("dwelling_units"), lat, lon, i)
        )
    return out


def load_schools_geojson(path) -> list[School]:
    out = []
    for i, props, lat, lon in _read_features(path):
        grades = [props.get(f"g{g}") for g in GRADES]
        out.append(_make_school(props.get("id"), props.get("name"), props.get("kind"),
                                lat, lon, grades, i))
    return out


def load_buildings_any(path) -> list[Building]:
    """Dispatch on extension: .geojson/.json use the GeoJSON reader, else CSV."""
    if Path(path).suffix.lower() in (".geojson", ".json"):
        return load_buildings_geojson(path)
    return load_buildings(path)


def load_schools_any(path) -> list[School]:
    if Path(path).suffix.lower() in (".geojson", ".json"):
        return load_schools_geojson(path)
    return load_schools(path)
