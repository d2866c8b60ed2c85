"""Domain types shared across the package.

Units are SI internally (N, m, Pa) except where a field name says otherwise:
UDLs on :class:`BeamSystem` are in kN/m, because that is how design data is
tabulated and how the load generators discretise it.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

GRAVITY = 9.81

GAMMA_G = 1.35
GAMMA_Q = 1.5


class ValidationError(ValueError):
    """Raised when input data violates a type invariant."""


@dataclass(frozen=True)
class Material:
    elastic_modulus: float
    shear_modulus: float
    yield_strength: float
    unit_weight: float = 77.0e3

    def __post_init__(self):
        for name in ("elastic_modulus", "shear_modulus", "yield_strength", "unit_weight"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if not 2.0 <= self.modulus_ratio <= 3.0:
            raise ValidationError(f"E/G = {self.modulus_ratio:.3f} outside [2, 3]")

    @property
    def modulus_ratio(self) -> float:
        return self.elastic_modulus / self.shear_modulus

    @classmethod
    def s355(cls) -> "Material":
        """S355 steel with E = 210 GPa and E/G = 2.6."""
        e = 210e9
        return cls(elastic_modulus=e, shear_modulus=e / 2.6, yield_strength=355e6)


@dataclass(frozen=True)
class SteelSection:
    """Prismatic I-section, all properties in SI units."""

    designation: str
    depth: float
    mass_per_length: float
    second_moment_major: float
    plastic_modulus_major: float
    shear_area_major: float
    cross_area: float

    def __post_init__(self):
        for name in ("depth", "mass_per_length", "second_moment_major",
                     "plastic_modulus_major", "shear_area_major", "cross_area"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{self.designation}: {name} must be positive")
        if not self.shear_area_major < self.cross_area:
            raise ValidationError(f"{self.designation}: shear area must be below cross area")

    @property
    def self_weight(self) -> float:
        """Self-weight in kN/m."""
        return self.mass_per_length * GRAVITY / 1000.0

    @property
    def shear_ratio(self) -> float:
        """I_yy / A_z in m^2."""
        return self.second_moment_major / self.shear_area_major

    @property
    def ordering_key(self) -> tuple:
        return (self.depth, self.plastic_modulus_major, self.mass_per_length, self.designation)


CATALOG_HEADER = ["designation", "mass_kg_m", "depth_mm", "Iyy_cm4", "Wply_cm3", "Avz_cm2", "A_cm2"]


@dataclass(frozen=True)
class SectionCatalog:
    """Candidate sections sorted by (depth, plastic modulus).

    Sorting happens on construction, so the first feasible entry in a forward
    scan is the shallowest section that works.
    """

    sections: tuple[SteelSection, ...]
    ordering_key: str = "by_depth_then_capacity"
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.sections:
            raise ValidationError("catalog is empty")
        names = [s.designation for s in self.sections]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ValidationError(f"duplicate designations: {', '.join(dupes)}")
        ordered = tuple(sorted(self.sections, key=lambda s: s.ordering_key))
        object.__setattr__(self, "sections", ordered)
        object.__setattr__(self, "_index", {s.designation: i for i, s in enumerate(ordered)})

    def __len__(self):
        return len(self.sections)

    def __getitem__(self, i: int) -> SteelSection:
        return self.sections[i]

    def __iter__(self):
        return iter(self.sections)

    def __contains__(self, designation: str) -> bool:
        return designation in self._index

    def index(self, designation: str) -> int:
        try:
            return self._index[designation]
        except KeyError:
            raise KeyError(f"section {designation!r} not in catalog") from None

    def get(self, designation: str) -> SteelSection:
        return self.sections[self.index(designation)]

    @property
    def max_shear_ratio(self) -> float:
        return max(s.shear_ratio for s in self.sections)

    @classmethod
    def from_csv(cls, path) -> "SectionCatalog":
        """Read a catalog CSV in mm / cm units and convert to SI."""
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(CATALOG_HEADER) - set(reader.fieldnames or [])
            if missing:
                raise ValidationError(f"catalog missing columns: {sorted(missing)}")
            sections = []
            for row in reader:
                sections.append(SteelSection(
                    designation=row["designation"].strip(),
                    depth=float(row["depth_mm"]) * 1e-3,
                    mass_per_length=float(row["mass_kg_m"]),
                    second_moment_major=float(row["Iyy_cm4"]) * 1e-8,
                    plastic_modulus_major=float(row["Wply_cm3"]) * 1e-6,
                    shear_area_major=float(row["Avz_cm2"]) * 1e-4,
                    cross_area=float(row["A_cm2"]) * 1e-4,
                ))
        return cls(tuple(sections))

    @classmethod
    def default(cls) -> "SectionCatalog":
        return cls.from_csv(default_catalog_path())


def default_catalog_path() -> Path:
    return Path(__file__).parent / "data" / "ukb_sections.csv"


@dataclass(frozen=True)
class LoadArrangement:
    """Activation factors (0 or 1) of the variable load on each member."""

    activation: tuple[int, ...]

    def __post_init__(self):
        act = tuple(int(a) for a in self.activation)
        if any(a not in (0, 1) for a in act):
            raise ValidationError(f"activation factors must be 0 or 1, got {self.activation}")
        object.__setattr__(self, "activation", act)

    def __len__(self):
        return len(self.activation)

    def __getitem__(self, i):
        return self.activation[i]

    @property
    def bits(self) -> str:
        return "".join(str(a) for a in self.activation)

    @classmethod
    def from_bits(cls, bits: str) -> "LoadArrangement":
        return cls(tuple(int(c) for c in bits.strip()))

    def complement(self) -> "LoadArrangement":
        return LoadArrangement(tuple(1 - a for a in self.activation))


@dataclass(frozen=True)
class LoadCombination:
    gamma_permanent: float = GAMMA_G
    gamma_variable: float = GAMMA_Q

    def __post_init__(self):
        if self.gamma_permanent < 1.0 or self.gamma_variable < 1.0:
            raise ValidationError("partial factors must be >= 1.0")


@dataclass(frozen=True)
class BeamSystem:
    """Continuous beam on simple supports at every node.

    ``permanent_udl`` excludes self-weight; that is added from the assigned
    section when loads are factored.
    """

    spans: tuple[float, ...]
    permanent_udl: tuple[float, ...]
    variable_udl: tuple[float, ...]
    sections: Optional[tuple[Optional[SteelSection], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(float(x) for x in self.spans))
        object.__setattr__(self, "permanent_udl", tuple(float(x) for x in self.permanent_udl))
        object.__setattr__(self, "variable_udl", tuple(float(x) for x in self.variable_udl))
        if self.sections is not None:
            object.__setattr__(self, "sections", tuple(self.sections))

    @property
    def m(self) -> int:
        return len(self.spans)

    @property
    def has_sections(self) -> bool:
        return self.sections is not None and all(s is not None for s in self.sections)

    def with_sections(self, sections: Sequence[SteelSection]) -> "BeamSystem":
        return BeamSystem(self.spans, self.permanent_udl, self.variable_udl, tuple(sections))

    def self_weights(self) -> list[float]:
        if not self.has_sections:
            raise ValidationError("sections not assigned")
        return [s.self_weight for s in self.sections]

    def to_json(self) -> dict:
        return {
            "spans": list(self.spans),
            "permanent_udl": list(self.permanent_udl),
            "variable_udl": list(self.variable_udl),
            "sections": [None if s is None else s.designation for s in self.sections]
            if self.sections is not None else [None] * self.m,
        }

    @classmethod
    def from_json(cls, doc: dict, catalog: Optional[SectionCatalog] = None) -> "BeamSystem":
        try:
            spans = doc["spans"]
            g = doc["permanent_udl"]
            q = doc["variable_udl"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"beam system document missing field {exc}") from None
        names = doc.get("sections")
        sections = None
        if names is not None and any(n is not None for n in names):
            if catalog is None:
                raise ValidationError("sections named but no catalog given")
            sections = []
            for n in names:
                if n is None:
                    sections.append(None)
                elif n not in catalog:
                    raise ValidationError(f"section {n!r} not in catalog")
                else:
                    sections.append(catalog.get(n))
        return cls(spans, g, q, None if sections is None else tuple(sections))

    @classmethod
    def load(cls, path, catalog: Optional[SectionCatalog] = None) -> "BeamSystem":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: malformed JSON ({exc})") from None
        return cls.from_json(doc, catalog)


def validate_system(system: BeamSystem, catalog: Optional[SectionCatalog] = None) -> list[str]:
    """Return a list of human-readable invariant violations (empty if valid)."""
    problems = []
    m = len(system.spans)
    if m < 1:
        problems.append("system has no members")
    for name in ("permanent_udl", "variable_udl"):
        n = len(getattr(system, name))
        if n != m:
            problems.append(f"{name} has {n} entries, expected {m}")
    if system.sections is not None and len(system.sections) != m:
        problems.append(f"sections has {len(system.sections)} entries, expected {m}")
    for i, L in enumerate(system.spans):
        if not (math.isfinite(L) and L > 0):
            problems.append(f"member {i}: span {L} must be positive")
    for name in ("permanent_udl", "variable_udl"):
        for i, w in enumerate(getattr(system, name)):
            if not (math.isfinite(w) and w >= 0):
                problems.append(f"member {i}: {name} {w} must be non-negative")
    if system.sections is not None and catalog is not None:
        for i, s in enumerate(system.sections):
            if s is not None and s.designation not in catalog:
                problems.append(f"member {i}: section {s.designation!r} not in catalog")
    return problems


def factored_udl(system: BeamSystem, member: int, arrangement: Iterable[int] | LoadArrangement,
                 combo: LoadCombination, self_weight: float) -> float:
    """Design UDL (kN/m) on one member: permanent always on, variable patterned."""
    if not 0 <= member < system.m:
        raise IndexError(f"member {member} out of range for m={system.m}")
    act = arrangement.activation if isinstance(arrangement, LoadArrangement) else tuple(arrangement)
    return (combo.gamma_permanent * (system.permanent_udl[member] + self_weight)
            + combo.gamma_variable * system.variable_udl[member] * act[member])
