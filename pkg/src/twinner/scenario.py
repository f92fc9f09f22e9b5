"""School-dropout scenario: assignment, attendance streaks, rural commuting.

Students attend the nearest school of the kind matching their age.  A
high-school-age student with no high school within the configured radius
of home is rural and must commute; assignment still targets the globally
nearest high school.  Absence streaks advance on weekdays 0-4 only, reset
on any attended school day, and a streak strictly greater than the
threshold marks the student as a dropout, permanently.

The demo switch forces every rural student to be absent on every school
day, so a long enough run drops all of them out.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .engine import Engine, EventLogEntry
from .errors import TwinnerError
from .geo import GeoEnvironment, GeoPoint
from .ingest import (
    Building,
    School,
    dwelling_units,
    load_buildings_any,
    load_schools_any,
    residential_filter,
)
from .population import (
    Household,
    MarginalSpec,
    PersonAttributes,
    allocate_households,
    build_households,
    sample_adults,
)

SCHOOL_WEEKDAYS = (0, 1, 2, 3, 4)

DEFAULT_RURAL_RADIUS_M = 5000.0
DEFAULT_DROPOUT_THRESHOLD_DAYS = 10
DEFAULT_COMPULSORY_AGE_RANGE = (6, 15)
DEFAULT_HIGH_SCHOOL_AGE_RANGE = (16, 18)

EVENTS_CSV_HEADER = ["day", "agent_id", "event_type", "detail"]


class ConfigError(TwinnerError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class NoSchoolOfKind(TwinnerError):
    pass


class AgeOutOfRange(TwinnerError):
    pass


class AlreadyDroppedOut(TwinnerError):
    pass


class InfeasibleScenario(TwinnerError):
    pass


@dataclass
class StudentState:
    person_id: int
    assigned_school_id: int
    is_rural: bool
    commuter: bool
    consecutive_absences: int = 0
    dropped_out: bool = False
    dropout_day: int | None = None


@dataclass
class ScenarioConfig:
    buildings_path: str
    schools_path: str
    marginals_path: str
    seed: int
    days: int
    start_weekday: int = 0
    rural_radius_m: float = DEFAULT_RURAL_RADIUS_M
    dropout_threshold_days: int = DEFAULT_DROPOUT_THRESHOLD_DAYS
    demo_force_rural_absence: bool = False
    compulsory_age_range: tuple[int, int] = DEFAULT_COMPULSORY_AGE_RANGE
    high_school_age_range: tuple[int, int] = DEFAULT_HIGH_SCHOOL_AGE_RANGE
    # Adults to synthesize; defaults to the total dwelling capacity of the
    # buildings file, i.e. a town filled to one adult per dwelling unit.
    population_size: int | None = None

    def validate(self) -> None:
        if self.days < 1:
            raise ConfigError("days", "must be >= 1")
        if not 0 <= self.start_weekday <= 6:
            raise ConfigError("start_weekday", "must be in 0..6")
        if self.rural_radius_m <= 0:
            raise ConfigError("rural_radius_m", "must be > 0")
        if self.dropout_threshold_days < 1:
            raise ConfigError("dropout_threshold_days", "must be >= 1")
        for name, (lo, hi) in (
            ("compulsory_age_range", self.compulsory_age_range),
            ("high_school_age_range", self.high_school_age_range),
        ):
            if lo > hi:
                raise ConfigError(name, "range is reversed")
        if self.compulsory_age_range[1] >= self.high_school_age_range[0]:
            raise ConfigError(
                "high_school_age_range", "must start above the compulsory range"
            )
        if self.population_size is not None and self.population_size < 0:
            raise ConfigError("population_size", "must be >= 0")

    @classmethod
    def from_dict(cls, doc: dict) -> ScenarioConfig:
        if not isinstance(doc, dict):
            raise ConfigError("scenario", "must be a JSON object")
        required = ["buildings_path", "schools_path", "marginals_path", "seed", "days"]
        for key in required:
            if key not in doc:
                raise ConfigError(key, "is required")
        known = set(required) | {
            "start_weekday",
            "rural_radius_m",
            "dropout_threshold_days",
            "demo_force_rural_absence",
            "compulsory_age_range",
            "high_school_age_range",
            "population_size",
        }
        for key in doc:
            if key not in known:
                raise ConfigError(key, "is not a recognized field")

        def _range(key, default):
            value = doc.get(key, default)
            try:
                lo, hi = int(value[0]), int(value[1])
            except (TypeError, ValueError, IndexError):
                raise ConfigError(key, "must be a [lo, hi] pair") from None
            return (lo, hi)

        try:
            config = cls(
                buildings_path=str(doc["buildings_path"]),
                schools_path=str(doc["schools_path"]),
                marginals_path=str(doc["marginals_path"]),
                seed=int(doc["seed"]),
                days=int(doc["days"]),
                start_weekday=int(doc.get("start_weekday", 0)),
                rural_radius_m=float(doc.get("rural_radius_m", DEFAULT_RURAL_RADIUS_M)),
                dropout_threshold_days=int(
                    doc.get("dropout_threshold_days", DEFAULT_DROPOUT_THRESHOLD_DAYS)
                ),
                demo_force_rural_absence=bool(doc.get("demo_force_rural_absence", False)),
                compulsory_age_range=_range("compulsory_age_range", DEFAULT_COMPULSORY_AGE_RANGE),
                high_school_age_range=_range(
                    "high_school_age_range", DEFAULT_HIGH_SCHOOL_AGE_RANGE
                ),
                population_size=(
                    int(doc["population_size"]) if doc.get("population_size") is not None else None
                ),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError("scenario", f"malformed value: {exc}") from None
        config.validate()
        return config

    @classmethod
    def from_json_file(cls, path) -> ScenarioConfig:
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))

    def to_dict(self) -> dict:
        return {
            "buildings_path": self.buildings_path,
            "schools_path": self.schools_path,
            "marginals_path": self.marginals_path,
            "seed": self.seed,
            "days": self.days,
            "start_weekday": self.start_weekday,
            "rural_radius_m": self.rural_radius_m,
            "dropout_threshold_days": self.dropout_threshold_days,
            "demo_force_rural_absence": self.demo_force_rural_absence,
            "compulsory_age_range": list(self.compulsory_age_range),
            "high_school_age_range": list(self.high_school_age_range),
            "population_size": self.population_size,
        }


# ----------------------------------------------------------------------
# assignment and attendance rules
# ----------------------------------------------------------------------


class SchoolLocator:
    """Nearest-school queries with per-kind cached coordinate arrays."""

    def __init__(self, schools: list[School]):
        self._by_kind: dict[str, tuple[list[School], np.ndarray, np.ndarray]] = {}
        for kind in ("compulsory", "high_school"):
            group = sorted((s for s in schools if s.kind == kind), key=lambda s: s.id)
            lats = np.array([s.location.lat for s in group], dtype=np.float64)
            lons = np.array([s.location.lon for s in group], dtype=np.float64)
            self._by_kind[kind] = (group, lats, lons)

    def nearest(self, kind: str, home: GeoPoint) -> tuple[School, float]:
        group, lats, lons = self._by_kind[kind]
        if not group:
            raise NoSchoolOfKind(f"no school of kind {kind!r}")
        i = _kernels.nearest_index(home.lat, home.lon, lats, lons)
        dists = _kernels.pairwise_m(home.lat, home.lon, lats[i : i + 1], lons[i : i + 1])
        return group[i], float(dists[0])

    def school_kind_for_age(self, age: int, config: ScenarioConfig) -> str:
        lo, hi = config.compulsory_age_range
        if lo <= age <= hi:
            return "compulsory"
        lo, hi = config.high_school_age_range
        if lo <= age <= hi:
            return "high_school"
        raise AgeOutOfRange(f"age {age} is outside both school age ranges")


def assign_school(
    student_age: int,
    home: GeoPoint,
    schools: list[School] | SchoolLocator,
    config: ScenarioConfig,
) -> tuple[int, bool, bool]:
    """Pick the nearest school of the age-appropriate kind.

    Returns (school_id, is_rural, commuter).  Only high-school-age students
    can be rural: no high school within config.rural_radius_m of home.
    Distance ties go to the lowest school id.
    """
    locator = schools if isinstance(schools, SchoolLocator) else SchoolLocator(schools)
    kind = locator.school_kind_for_age(student_age, config)
    school, distance = locator.nearest(kind, home)
    if kind == "high_school" and distance > config.rural_radius_m:
        return school.id, True, True
    return school.id, False, False


def classify_dropout(consecutive_absences: int, threshold: int) -> bool:
    """True once the streak is strictly greater than the threshold."""
    if consecutive_absences < 0 or threshold < 0:
        raise ValueError("counts must be non-negative")
    return consecutive_absences > threshold


def record_attendance(
    state: StudentState,
    day: int,
    weekday: int,
    present: bool,
    threshold: int = DEFAULT_DROPOUT_THRESHOLD_DAYS,
) -> StudentState:
    """Advance the absence streak for one calendar day.

    Weekends (weekday 5-6) leave the streak untouched; attended school days
    reset it; missed school days extend it and may tip the student over the
    dropout threshold, recording the day it happened.
    """
    if state.dropped_out:
        raise AlreadyDroppedOut(f"student {state.person_id} already dropped out")
    if weekday in SCHOOL_WEEKDAYS:
        state.consecutive_absences = 0 if present else state.consecutive_absences + 1
        if classify_dropout(state.consecutive_absences, threshold):
            state.dropped_out = True
            state.dropout_day = day
    return state


# ----------------------------------------------------------------------
# the experiment
# ----------------------------------------------------------------------


@dataclass
class GroupCounts:
    students: int = 0
    dropouts: int = 0

    def to_dict(self) -> dict:
        return {"students": self.students, "dropouts": self.dropouts}


@dataclass
class MetricsReport:
    day: int
    students_total: int
    dropouts_total: int
    dropout_rate: float
    by_school: dict[int, GroupCounts]
    by_area: dict[str, GroupCounts]

    def to_dict(self) -> dict:
        return {
            "day": self.day,
            "students_total": self.students_total,
            "dropouts_total": self.dropouts_total,
            "dropout_rate": self.dropout_rate,
            "by_school": {str(k): v.to_dict() for k, v in sorted(self.by_school.items())},
            "by_area": {k: v.to_dict() for k, v in sorted(self.by_area.items())},
        }


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    metrics: MetricsReport
    events: list[EventLogEntry]
    students: dict[int, StudentState]

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "metrics": self.metrics.to_dict()}

    def write_results_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")

    def write_events_csv(self, path) -> None:
        write_events_csv(self.events, path)


def write_events_csv(events: list[EventLogEntry], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(EVENTS_CSV_HEADER)
        for e in events:
            writer.writerow([e.day, e.agent_id, e.event_type, e.detail])


class DropoutExperiment:
    """A fully wired dropout scenario: engine, population, schools, behaviors.

    ``setup`` builds everything at day 0; ``step_days`` advances the clock;
    ``run`` finishes the configured horizon.  All state changes land in the
    engine's event log.
    """

    def __init__(self, config: ScenarioConfig, engine: Engine, geo_env: GeoEnvironment):
        self.config = config
        self.engine = engine
        self.geo_env = geo_env
        self.network_env_id: int = 0
        self.twinner_env_id: int = 0
        self.twinner_agent_id: int = 0
        self.buildings: list[Building] = []
        self.schools: list[School] = []
        self.persons: dict[int, PersonAttributes] = {}
        self.households: list[Household] = []
        self.allocation: dict[int, int] = {}
        self.students: dict[int, StudentState] = {}  # keyed by agent id
        self.agent_of_person: dict[int, int] = {}
        self.agent_of_building: dict[int, int] = {}
        self.agent_of_school: dict[int, int] = {}

    # -- construction ---------------------------------------------------

    @classmethod
    def setup(cls, config: ScenarioConfig) -> DropoutExperiment:
        config.validate()
        buildings = load_buildings_any(config.buildings_path)
        schools = load_schools_any(config.schools_path)
        marginals = MarginalSpec.from_json_file(config.marginals_path)
        if not schools:
            raise InfeasibleScenario("scenario has zero schools")

        capacity = sum(dwelling_units(b) for b in buildings)
        n_adults = config.population_size if config.population_size is not None else capacity
        seed_adults, seed_households, seed_allocation = np.random.SeedSequence(
            config.seed
        ).spawn(3)
        adults = sample_adults(marginals, n_adults, seed_adults)
        if not adults:
            raise InfeasibleScenario("population is empty")
        households, children = build_households(adults, marginals, seed_households)
        allocation = allocate_households(households, buildings, seed_allocation)

        engine = Engine(config.start_weekday)
        geo_env = GeoEnvironment(engine, "GeoEnvironment")
        exp = cls(config, engine, geo_env)
        exp.buildings = buildings
        exp.schools = schools
        exp.households = households
        exp.allocation = allocation
        exp.persons = {p.person_id: p for p in adults + children}
        exp.network_env_id = engine.create_environment("NetworkEnvironment", "network")
        exp.twinner_env_id = engine.create_environment("SocialDigitalTwinner", "twinner")
        exp._create_twinner_agent()
        exp._create_building_agents()
        exp._create_person_agents()
        exp._enroll_students()
        engine.load_scenario("school-dropout")
        return exp

    def _bind_interlocutor(self, agent_id: int) -> None:
        self.engine.assume_role(agent_id, self.twinner_env_id, "interlocutor")

    def _create_twinner_agent(self) -> None:
        engine = self.engine
        self.twinner_agent_id = engine.create_agent("Social Digital Twinner", "twinner")
        engine.assume_role(
            self.twinner_agent_id,
            self.twinner_env_id,
            "experimenter",
            {
                "scenario": "school-dropout",
                "days": self.config.days,
                "seed": self.config.seed,
                "dropout_threshold_days": self.config.dropout_threshold_days,
            },
        )
        self._bind_interlocutor(self.twinner_agent_id)

    def _create_building_agents(self) -> None:
        engine = self.engine
        for b in self.buildings:
            agent_id = engine.create_agent(f"Building {b.id}", "building")
            self.agent_of_building[b.id] = agent_id
            if residential_filter(b):
                engine.assume_role(
                    agent_id,
                    self.geo_env.id,
                    "residence",
                    {"building_type": b.building_type, "dwelling_units": dwelling_units(b)},
                )
                self.geo_env.place(agent_id, b.location)
            self._bind_interlocutor(agent_id)
        for s in self.schools:
            agent_id = engine.create_agent(s.name, "building")
            self.agent_of_school[s.id] = agent_id
            role_data = {"name": s.name, "kind": s.kind}
            role_data.update({f"g{g}": s.pupils_per_grade[g] for g in sorted(s.pupils_per_grade)})
            engine.assume_role(agent_id, self.geo_env.id, "school", role_data)
            self.geo_env.place(agent_id, s.location)
            engine.assume_role(agent_id, self.network_env_id, "school")
            self._bind_interlocutor(agent_id)

    def _home_of(self, person_id: int) -> tuple[int, GeoPoint]:
        household_id = self._household_of[person_id]
        building_id = self.allocation[household_id]
        return building_id, self._building_by_id[building_id].location

    def _create_person_agents(self) -> None:
        engine = self.engine
        self._household_of = {}
        for hh in self.households:
            for pid in hh.adult_ids + hh.child_ids:
                self._household_of[pid] = hh.household_id
        self._building_by_id = {b.id: b for b in self.buildings}
        for pid in sorted(self.persons):
            p = self.persons[pid]
            agent_id = engine.create_agent(f"Person {pid}", "person")
            self.agent_of_person[pid] = agent_id
            building_id, home = self._home_of(pid)
            engine.assume_role(
                agent_id,
                self.geo_env.id,
                "resident",
                {
                    "age": p.age,
                    "sex": p.sex,
                    "economic_status": p.economic_status,
                    "education_level": p.education_level,
                    "self_perceived_health": p.self_perceived_health,
                    "household_id": self._household_of[pid],
                    "building_id": building_id,
                },
            )
            self.geo_env.place(agent_id, home)
            self._bind_interlocutor(agent_id)

    def _enroll_students(self) -> None:
        engine = self.engine
        locator = SchoolLocator(self.schools)
        school_by_id = {s.id: s for s in self.schools}
        lo_c, hi_c = self.config.compulsory_age_range
        lo_h, hi_h = self.config.high_school_age_range
        for pid in sorted(self.persons):
            age = self.persons[pid].age
            if not (lo_c <= age <= hi_c or lo_h <= age <= hi_h):
                continue
            _building_id, home = self._home_of(pid)
            school_id, is_rural, commuter = assign_school(age, home, locator, self.config)
            agent_id = self.agent_of_person[pid]
            state = StudentState(pid, school_id, is_rural, commuter)
            self.students[agent_id] = state
            engine.assume_role(
                agent_id,
                self.network_env_id,
                "student",
                {
                    "age": age,
                    "school_id": school_id,
                    "school_name": school_by_id[school_id].name,
                    "is_rural": is_rural,
                    "commuter": commuter,
                    "consecutive_absences": 0,
                    "dropped_out": False,
                },
            )
            engine.log_event(
                agent_id, "school_assigned", f"school {school_id}, rural={is_rural}"
            )
            engine.set_behavior(agent_id, self._student_behavior)

    # -- dynamics ---------------------------------------------------------

    def _student_behavior(self, engine: Engine, agent_id: int, day: int, weekday: int) -> None:
        state = self.students[agent_id]
        if state.dropped_out:
            return
        present = not (self.config.demo_force_rural_absence and state.is_rural)
        previous_streak = state.consecutive_absences
        record_attendance(state, day, weekday, present, self.config.dropout_threshold_days)
        if weekday not in SCHOOL_WEEKDAYS:
            return
        binding = engine.binding(agent_id, self.network_env_id, "student")
        binding.role_data["consecutive_absences"] = state.consecutive_absences
        if not present:
            engine.log_event(agent_id, "absent", f"streak={state.consecutive_absences}")
        elif previous_streak > 0:
            engine.log_event(agent_id, "present", "streak reset")
        if state.dropped_out:
            binding.role_data["dropped_out"] = True
            engine.log_event(
                agent_id,
                "dropped_out",
                f"after {state.consecutive_absences} consecutive school-day absences",
            )
            engine.send_message(
                agent_id,
                self.agent_of_school[state.assigned_school_id],
                {"type": "dropout", "day": day},
            )

    def step_days(self, k: int = 1) -> list[EventLogEntry]:
        new_events: list[EventLogEntry] = []
        for _ in range(k):
            new_events.extend(self.engine.step())
        return new_events

    def run(self) -> ExperimentResult:
        while self.engine.clock.day < self.config.days:
            self.engine.step()
        return ExperimentResult(self.config, self.metrics(), list(self.engine.events), dict(self.students))

    # -- reporting --------------------------------------------------------

    def metrics(self) -> MetricsReport:
        by_school = {s.id: GroupCounts() for s in self.schools}
        by_area = {"rural": GroupCounts(), "urban": GroupCounts()}
        dropouts = 0
        for state in self.students.values():
            area = "rural" if state.is_rural else "urban"
            by_school[state.assigned_school_id].students += 1
            by_area[area].students += 1
            if state.dropped_out:
                dropouts += 1
                by_school[state.assigned_school_id].dropouts += 1
                by_area[area].dropouts += 1
        total = len(self.students)
        return MetricsReport(
            day=self.engine.clock.day,
            students_total=total,
            dropouts_total=dropouts,
            dropout_rate=(dropouts / total) if total else 0.0,
            by_school=by_school,
            by_area=by_area,
        )


def run_experiment(config: ScenarioConfig) -> ExperimentResult:
    """Build the scenario from its data files and run it to the horizon."""
    return DropoutExperiment.setup(config).run()
