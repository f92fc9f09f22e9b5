"""Shared fixtures: marginals, building/school files, and full demo towns.

The demo town puts its urban core near (58.87, 9.41) with all high schools
in the core, and a rural pocket ~12 km east served only by a local
compulsory school, so high-school-age residents out there are rural
commuters.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pytest

URBAN_CENTER = (58.87, 9.41)
RURAL_CENTER = (58.87, 9.62)  # ~12 km east of the core


def make_marginals() -> dict:
    return {
        "age_bands": {"16-18": 0.15, "19-29": 0.20, "30-44": 0.25, "45-66": 0.25, "67-90": 0.15},
        "sex": {"female": 0.5, "male": 0.5},
        "economic_status": {"employed": 0.55, "unemployed": 0.05, "student": 0.15, "inactive": 0.25},
        "education_level": {"primary": 0.25, "secondary": 0.45, "tertiary": 0.30},
        "self_perceived_health": {"very_good": 0.25, "good": 0.35, "fair": 0.25, "bad": 0.10, "very_bad": 0.05},
        "household": {
            "adult_count": {"1": 0.4, "2": 0.5, "3": 0.1},
            "child_probability": 0.4,
            "child_count": {"1": 0.45, "2": 0.35, "3": 0.2},
            "child_age_bands": {"0-5": 0.3, "6-12": 0.4, "13-15": 0.3},
        },
    }


def write_marginals(path: Path, doc: dict | None = None) -> Path:
    path.write_text(json.dumps(doc or make_marginals(), indent=2), encoding="utf-8")
    return path


def write_buildings_csv(path: Path, rows: list) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "building_type", "dwelling_units", "lat", "lon"])
        writer.writerows(rows)
    return path


def write_schools_csv(path: Path, rows: list) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "name", "kind", "lat", "lon"] + [f"g{g}" for g in range(1, 14)])
        writer.writerows(rows)
    return path


def school_row(school_id, name, kind, lat, lon, grades: dict[int, int] | None = None) -> list:
    counts = {g: 0 for g in range(1, 14)}
    counts.update(grades or {})
    return [school_id, name, kind, lat, lon] + [counts[g] for g in range(1, 14)]


def make_town_buildings(n: int, seed: int, rural_share: float = 0.3) -> list:
    """Deterministic mixed building rows; garages and cabins sprinkled in."""
    rng = np.random.default_rng(seed)
    types = ["detached_house", "row_house", "apartment_complex", "studio_apartment", "garage", "cabin"]
    probs = [0.45, 0.20, 0.10, 0.05, 0.10, 0.10]
    units_for = {"detached_house": 1, "row_house": 4, "apartment_complex": 12, "studio_apartment": 1, "garage": 0, "cabin": 0}
    rows = []
    for i in range(1, n + 1):
        rural = rng.random() < rural_share
        cy, cx = RURAL_CENTER if rural else URBAN_CENTER
        lat = cy + rng.uniform(-0.012, 0.012)
        lon = cx + rng.uniform(-0.022, 0.022)
        btype = types[rng.choice(len(types), p=probs)]
        rows.append([i, btype, units_for[btype], round(lat, 6), round(lon, 6)])
    return rows


def make_town_schools() -> list:
    uy, ux = URBAN_CENTER
    ry, rx = RURAL_CENTER
    return [
        school_row(1, "Harbor Compulsory School", "compulsory", uy + 0.002, ux + 0.003,
                   {g: 25 for g in range(1, 11)}),
        school_row(2, "Hillside Compulsory School", "compulsory", uy - 0.004, ux - 0.006,
                   {g: 18 for g in range(1, 11)}),
        school_row(3, "Eastfield Compulsory School", "compulsory", ry + 0.002, rx - 0.004,
                   {g: 9 for g in range(1, 11)}),
        school_row(4, "Harbor High School", "high_school", uy + 0.001, ux - 0.002,
                   {11: 40, 12: 38, 13: 35}),
        school_row(5, "Hillside High School", "high_school", uy - 0.003, ux + 0.005,
                   {11: 28, 12: 30, 13: 27}),
    ]


def make_scenario_dict(town: dict, **overrides) -> dict:
    doc = {
        "buildings_path": str(town["buildings"]),
        "schools_path": str(town["schools"]),
        "marginals_path": str(town["marginals"]),
        "seed": 7,
        "days": 21,
        "start_weekday": 0,
        "demo_force_rural_absence": True,
        "population_size": 150,
    }
    doc.update(overrides)
    return doc


def _town(tmp_path: Path, n_buildings: int, seed: int) -> dict:
    town = {
        "buildings": write_buildings_csv(tmp_path / "buildings.csv", make_town_buildings(n_buildings, seed)),
        "schools": write_schools_csv(tmp_path / "schools.csv", make_town_schools()),
        "marginals": write_marginals(tmp_path / "marginals.json"),
        "dir": tmp_path,
    }
    return town


@pytest.fixture
def small_town(tmp_path: Path) -> dict:
    """~60 buildings; pair with population_size around 100-200."""
    return _town(tmp_path, 60, seed=11)


@pytest.fixture
def large_town(tmp_path: Path) -> dict:
    """3,000 mixed buildings; enough capacity for a 10k-adult population."""
    return _town(tmp_path, 3000, seed=23)


@pytest.fixture
def small_scenario(small_town) -> dict:
    return make_scenario_dict(small_town)


@pytest.fixture
def large_scenario(large_town) -> dict:
    return make_scenario_dict(large_town, population_size=10000)
