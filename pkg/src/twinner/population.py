"""Synthetic population: adults from categorical marginals, households, allocation.

Attributes are drawn independently per marginal; no joint structure is
modeled, and the fit report says so.  Ages are uniform within a drawn
band.  All sampling is driven by an explicit seed, so identical inputs
reproduce identical populations, households and allocations.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import TwinnerError
from .ingest import Building, dwelling_units, residential_filter

SEXES = ("female", "male")
ECONOMIC_STATUSES = ("employed", "unemployed", "student", "inactive")
EDUCATION_LEVELS = ("primary", "secondary", "tertiary")
HEALTH_LEVELS = ("very_good", "good", "fair", "bad", "very_bad")

ADULT_MIN_AGE = 16
CHILD_MAX_AGE = 15

POPULATION_CSV_HEADER = [
    "person_id",
    "household_id",
    "age",
    "sex",
    "economic_status",
    "education_level",
    "self_perceived_health",
    "building_id",
]

_PROB_TOL = 1e-9


class InvalidMarginals(TwinnerError):
    pass


class InsufficientCapacity(TwinnerError):
    pass


@dataclass
class PersonAttributes:
    person_id: int
    age: int
    sex: str
    economic_status: str
    education_level: str
    self_perceived_health: str

    @property
    def is_adult(self) -> bool:
        return self.age >= ADULT_MIN_AGE


@dataclass
class Household:
    household_id: int
    adult_ids: list[int]
    child_ids: list[int] = field(default_factory=list)
    residence_building_id: int | None = None


def _parse_band(label: str) -> tuple[int, int]:
    try:
        lo_s, hi_s = str(label).split("-", 1)
        lo, hi = int(lo_s), int(hi_s)
    except ValueError:
        raise InvalidMarginals(f"age band {label!r} is not of the form LO-HI") from None
    if lo > hi:
        raise InvalidMarginals(f"age band {label!r} is reversed")
    return lo, hi


def _check_distribution(name: str, dist: dict, allowed=None) -> None:
    if not dist:
        raise InvalidMarginals(f"{name} distribution is empty")
    total = 0.0
    for category, p in dist.items():
        if allowed is not None and category not in allowed:
            raise InvalidMarginals(f"{name} has unknown category {category!r}")
        if not isinstance(p, (int, float)) or p < 0:
            raise InvalidMarginals(f"{name}[{category!r}] must be a probability >= 0")
        total += p
    if abs(total - 1.0) > _PROB_TOL:
        raise InvalidMarginals(f"{name} probabilities sum to {total}, expected 1")


@dataclass
class MarginalSpec:
    """Per-attribute categorical targets plus household composition parameters."""

    age_bands: dict[str, float]
    sex: dict[str, float]
    economic_status: dict[str, float]
    education_level: dict[str, float]
    self_perceived_health: dict[str, float]
    adult_count: dict[int, float]
    child_probability: float
    child_count: dict[int, float]
    child_age_bands: dict[str, float]

    def validate(self) -> None:
        _check_distribution("age_bands", self.age_bands)
        for label in self.age_bands:
            lo, _hi = _parse_band(label)
            if lo < ADULT_MIN_AGE:
                raise InvalidMarginals(f"adult age band {label!r} starts below {ADULT_MIN_AGE}")
        _check_distribution("sex", self.sex, SEXES)
        _check_distribution("economic_status", self.economic_status, ECONOMIC_STATUSES)
        _check_distribution("education_level", self.education_level, EDUCATION_LEVELS)
        _check_distribution("self_perceived_health", self.self_perceived_health, HEALTH_LEVELS)
        _check_distribution("household.adult_count", self.adult_count)
        for count in self.adult_count:
            if int(count) < 1:
                raise InvalidMarginals("household.adult_count categories must be >= 1")
        if not 0.0 <= self.child_probability <= 1.0:
            raise InvalidMarginals("household.child_probability must be in [0, 1]")
        _check_distribution("household.child_count", self.child_count)
        for count in self.child_count:
            if int(count) < 1:
                raise InvalidMarginals("household.child_count categories must be >= 1")
        _check_distribution("household.child_age_bands", self.child_age_bands)
        for label in self.child_age_bands:
            lo, hi = _parse_band(label)
            if lo < 0 or hi > CHILD_MAX_AGE:
                raise InvalidMarginals(f"child age band {label!r} outside [0, {CHILD_MAX_AGE}]")

    @classmethod
    def from_dict(cls, doc: dict) -> MarginalSpec:
        try:
            household = doc["household"]
            spec = cls(
                age_bands=dict(doc["age_bands"]),
                sex=dict(doc["sex"]),
                economic_status=dict(doc["economic_status"]),
                education_level=dict(doc["education_level"]),
                self_perceived_health=dict(doc["self_perceived_health"]),
                adult_count={int(k): v for k, v in household["adult_count"].items()},
                child_probability=float(household["child_probability"]),
                child_count={int(k): v for k, v in household["child_count"].items()},
                child_age_bands=dict(household["child_age_bands"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidMarginals(f"marginals document malformed: {exc}") from None
        spec.validate()
        return spec

    @classmethod
    def from_json_file(cls, path) -> MarginalSpec:
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


def _draw_categories(rng: np.random.Generator, dist: dict, n: int) -> list:
    """n draws from a categorical distribution, in sorted-category order."""
    categories = sorted(dist)
    probs = np.array([dist[c] for c in categories], dtype=np.float64)
    probs = probs / probs.sum()
    idx = rng.choice(len(categories), size=n, p=probs)
    return [categories[i] for i in idx]


def _draw_ages(rng: np.random.Generator, bands: dict[str, float], n: int) -> np.ndarray:
    labels = _draw_categories(rng, bands, n)
    bounds = {label: _parse_band(label) for label in bands}
    lows = np.array([bounds[l][0] for l in labels], dtype=np.int64)
    highs = np.array([bounds[l][1] for l in labels], dtype=np.int64)
    return rng.integers(lows, highs + 1)


def sample_adults(marginals: MarginalSpec, n: int, seed) -> list[PersonAttributes]:
    """Draw n adults (age >= 16), each attribute independently per marginal."""
    marginals.validate()
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    ages = _draw_ages(rng, marginals.age_bands, n)
    sexes = _draw_categories(rng, marginals.sex, n)
    statuses = _draw_categories(rng, marginals.economic_status, n)
    educations = _draw_categories(rng, marginals.education_level, n)
    healths = _draw_categories(rng, marginals.self_perceived_health, n)
    return [
        PersonAttributes(i + 1, int(ages[i]), sexes[i], statuses[i], educations[i], healths[i])
        for i in range(n)
    ]


def build_households(
    adults: list[PersonAttributes], marginals: MarginalSpec, seed
) -> tuple[list[Household], list[PersonAttributes]]:
    """Partition adults into households and generate their children.

    Every adult lands in exactly one household.  Children are brand-new
    person records (ages in 0..15) whose ids continue after the adults'.
    Returns (households, children).
    """
    if not adults:
        raise ValueError("adults must be non-empty")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(adults))
    next_person_id = max(p.person_id for p in adults) + 1

    households: list[Household] = []
    children: list[PersonAttributes] = []
    cursor = 0
    while cursor < len(adults):
        size = int(_draw_categories(rng, marginals.adult_count, 1)[0])
        member_idx = order[cursor : cursor + size]
        cursor += size
        hh = Household(
            household_id=len(households) + 1,
            adult_ids=[adults[i].person_id for i in member_idx],
        )
        if rng.random() < marginals.child_probability:
            n_children = int(_draw_categories(rng, marginals.child_count, 1)[0])
            ages = _draw_ages(rng, marginals.child_age_bands, n_children)
            sexes = _draw_categories(rng, marginals.sex, n_children)
            healths = _draw_categories(rng, marginals.self_perceived_health, n_children)
            for k in range(n_children):
                child = PersonAttributes(
                    person_id=next_person_id,
                    age=int(ages[k]),
                    sex=sexes[k],
                    economic_status="student",
                    education_level="primary",
                    self_perceived_health=healths[k],
                )
                next_person_id += 1
                children.append(child)
                hh.child_ids.append(child.person_id)
        households.append(hh)
    return households, children


def allocate_households(
    households: list[Household], buildings: list[Building], seed
) -> dict[int, int]:
    """Assign each household to a residential dwelling slot, uniformly at random.

    A building hosts at most its dwelling-unit count of households;
    non-residential buildings host none.  Returns household_id -> building_id
    and records the assignment on each household.
    """
    slots: list[int] = []
    for b in buildings:
        slots.extend([b.id] * dwelling_units(b))
    if len(households) > len(slots):
        raise InsufficientCapacity(
            f"{len(households)} households but only {len(slots)} dwelling units"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(slots))
    allocation: dict[int, int] = {}
    for i, hh in enumerate(households):
        building_id = slots[order[i]]
        allocation[hh.household_id] = building_id
        hh.residence_building_id = building_id
    return allocation


@dataclass
class FitReport:
    """Per-attribute L1 distance between sample frequencies and targets."""

    l1: dict[str, float]
    threshold: float
    passed: bool
    method: str = "independent-marginals"

    def to_dict(self) -> dict:
        return {
            "l1": dict(self.l1),
            "threshold": self.threshold,
            "passed": self.passed,
            "method": self.method,
        }


def _band_of(age: int, bounds: dict[str, tuple[int, int]]) -> str | None:
    for label, (lo, hi) in bounds.items():
        if lo <= age <= hi:
            return label
    return None


def _l1(empirical: dict, target: dict) -> float:
    keys = set(empirical) | set(target)
    return float(sum(abs(empirical.get(k, 0.0) - target.get(k, 0.0)) for k in keys))


def validate_population(
    sample: list[PersonAttributes], marginals: MarginalSpec, threshold: float = 0.05
) -> FitReport:
    """Compare a sample against the target marginals attribute by attribute."""
    if not sample:
        raise ValueError("sample must be non-empty")
    n = len(sample)
    bounds = {label: _parse_band(label) for label in marginals.age_bands}

    def frequencies(values) -> dict:
        counts: dict = {}
        for v in values:
            counts[v] = counts.get(v, 0) + 1
        return {k: c / n for k, c in counts.items()}

    l1 = {
        "age_bands": _l1(frequencies(_band_of(p.age, bounds) for p in sample), marginals.age_bands),
        "sex": _l1(frequencies(p.sex for p in sample), marginals.sex),
        "economic_status": _l1(
            frequencies(p.economic_status for p in sample), marginals.economic_status
        ),
        "education_level": _l1(
            frequencies(p.education_level for p in sample), marginals.education_level
        ),
        "self_perceived_health": _l1(
            frequencies(p.self_perceived_health for p in sample), marginals.self_perceived_health
        ),
    }
    return FitReport(l1, threshold, all(v <= threshold for v in l1.values()))


def write_population_csv(
    path,
    persons: list[PersonAttributes],
    households: list[Household] | None = None,
    allocation: dict[int, int] | None = None,
) -> None:
    """Export persons (adults and children) with household and residence columns."""
    household_of: dict[int, int] = {}
    for hh in households or []:
        for pid in hh.adult_ids + hh.child_ids:
            household_of[pid] = hh.household_id
    allocation = allocation or {}
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(POPULATION_CSV_HEADER)
        for p in sorted(persons, key=lambda p: p.person_id):
            hh_id = household_of.get(p.person_id)
            building = allocation.get(hh_id, "") if hh_id is not None else ""
            writer.writerow(
                [
                    p.person_id,
                    hh_id if hh_id is not None else "",
                    p.age,
                    p.sex,
                    p.economic_status,
                    p.education_level,
                    p.self_perceived_health,
                    building,
                ]
            )
