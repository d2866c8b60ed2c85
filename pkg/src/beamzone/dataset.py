"""Seeded generation of design data sets and batch execution of zone studies."""

from __future__ import annotations

import csv
import itertools
import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .arrangements import (critical_set, flexural_set, naive_set, shear_set,
                           shear_susceptible)
from .design import DesignError, brute_force_critical, design_system
from .model import BeamSystem, LoadCombination, Material, SectionCatalog
from .zone import DEFAULT_EPS, ZoneResult, zone_results

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DesignSetConfig:
    set_id: str
    q_range: tuple[float, float]
    span_range: tuple[float, float]
    m: int = 15
    samples: tuple[int, int] = (32, 32)  # (UDL draws, span draws)
    seed: int = 0
    q_step: float = 5.0
    span_step: float = 0.5
    g_base: float = 3.0
    uniform_per_system: bool = False

    def __post_init__(self):
        if self.q_step <= 0 or self.span_step <= 0:
            raise ValueError("discretisation steps must be positive")
        if self.q_range[0] > self.q_range[1] or self.span_range[0] > self.span_range[1]:
            raise ValueError("empty range")
        if self.span_range[0] <= 0 or self.q_range[0] < 0:
            raise ValueError("spans must be positive and UDLs non-negative")
        if str(self.set_id) == "1" and not self.uniform_per_system:
            raise ValueError("set 1 has identical spans and loads on every member")
        if self.m < 1:
            raise ValueError("m must be at least 1")

    @property
    def q_values(self) -> np.ndarray:
        return lattice(*self.q_range, self.q_step)

    @property
    def span_values(self) -> np.ndarray:
        return lattice(*self.span_range, self.span_step)


def lattice(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 10)


def preset(set_id, m: int = 15, samples: tuple[int, int] = (32, 32), seed: int = 0) -> DesignSetConfig:
    """Design scenarios: sets 1-4 of increasing variation, plus ``stress``."""
    ranges = {
        "1": ((0.0, 60.0), (1.0, 12.0)),
        "2": ((20.0, 40.0), (4.0, 8.0)),
        "3": ((10.0, 50.0), (2.0, 10.0)),
        "4": ((0.0, 60.0), (1.0, 12.0)),
        "stress": ((200.0, 400.0), (1.0, 12.0)),
    }
    key = str(set_id)
    if key not in ranges:
        raise ValueError(f"unknown set {set_id!r}")
    if key == "stress" and m == 15:
        m = 10
    q, L = ranges[key]
    return DesignSetConfig(key, q, L, m=m, samples=tuple(samples), seed=seed,
                           uniform_per_system=(key == "1"))


def generate(config: DesignSetConfig) -> list[BeamSystem]:
    """Systems in a deterministic order.

    Set 1 enumerates every (span, Q) lattice pair. Other sets draw
    ``samples[0]`` per-member UDL vectors and ``samples[1]`` span vectors
    from a PCG64 stream and take their Cartesian product.
    """
    m = config.m
    g = [config.g_base] * m
    if config.uniform_per_system:
        return [BeamSystem([L] * m, g, [q] * m)
                for L in config.span_values for q in config.q_values]
    rng = np.random.Generator(np.random.PCG64(config.seed))
    n_q, n_L = config.samples
    qs = [config.q_values[rng.integers(0, len(config.q_values), m)] for _ in range(n_q)]
    Ls = [config.span_values[rng.integers(0, len(config.span_values), m)] for _ in range(n_L)]
    return [BeamSystem(L, g, q) for q in qs for L in Ls]


def write_dataset(directory, systems: Sequence[BeamSystem], config: DesignSetConfig):
    d = Path(directory)
    (d / "systems").mkdir(parents=True, exist_ok=True)
    m = config.m
    rows = []
    for k, s in enumerate(systems):
        _atomic_write(d / "systems" / f"{k:06d}.json", json.dumps(s.to_json()))
        rows.append([k, config.set_id, config.seed, *map(repr, s.spans), *map(repr, s.variable_udl)])
    header = ["system_id", "set_id", "seed"] + [f"L{i}" for i in range(m)] + [f"Q{i}" for i in range(m)]
    _write_csv(d / "manifest.csv", header, rows)
    _atomic_write(d / "config.json", json.dumps(asdict(config), sort_keys=True))


def read_dataset(directory) -> tuple[DesignSetConfig, list[BeamSystem]]:
    d = Path(directory)
    raw = json.loads((d / "config.json").read_text())
    for key in ("q_range", "span_range", "samples"):
        raw[key] = tuple(raw[key])
    config = DesignSetConfig(**raw)
    files = sorted((d / "systems").glob("*.json"))
    return config, [BeamSystem.from_json(json.loads(f.read_text())) for f in files]


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        wr.writerows(rows)


@dataclass
class StudyRecord:
    system_id: int
    zones: list = field(default_factory=list)   # ZoneResult
    design: Optional[dict] = None
    error: Optional[str] = None


@dataclass
class StudyResult:
    records: list

    @property
    def zones(self) -> list[ZoneResult]:
        return [z for r in self.records for z in r.zones]

    @property
    def designs(self) -> list[dict]:
        return [r.design for r in self.records if r.design is not None]

    @property
    def failures(self) -> list[StudyRecord]:
        return [r for r in self.records if r.error is not None]

    @property
    def skip_rate(self) -> float:
        return len(self.failures) / len(self.records) if self.records else 0.0


def _study_one(args) -> StudyRecord:
    k, system, catalog, material, combo, eps = args
    try:
        crit = critical_set(flexural_set(system.m),
                            shear_set(system.m, None, shear_susceptible(system, material, catalog)))
        result = design_system(system, catalog, material, combo, crit)
        zones = zone_results(result, material, combo, eps, system_id=k)
    except DesignError as exc:
        log.warning("system %d skipped: %s", k, exc)
        return StudyRecord(k, error=str(exc))
    return StudyRecord(k, zones, result.to_json())


def _record_to_json(rec: StudyRecord) -> dict:
    return {
        "system_id": rec.system_id,
        "error": rec.error,
        "design": rec.design,
        "zones": [{"beam": z.design_beam, "eps": list(z.eps), "k_max": list(z.k_max),
                   "u_true": z.u_true, "ratios": list(z.ratios)} for z in rec.zones],
    }


def _record_from_json(doc: dict) -> StudyRecord:
    k = doc["system_id"]
    zones = [ZoneResult(k, z["beam"], tuple(z["eps"]), tuple(z["k_max"]), z["u_true"],
                        tuple(z["ratios"])) for z in doc["zones"]]
    return StudyRecord(k, zones, doc["design"], doc["error"])


def run_study(systems: Sequence[BeamSystem], catalog: SectionCatalog, material: Material,
              combo: LoadCombination, eps: Sequence[float] = DEFAULT_EPS, jobs: int = 1,
              checkpoint: Optional[Path] = None) -> StudyResult:
    """Design every system against its critical set and extract zone sizes.

    With ``checkpoint`` set, each finished system is stored as JSON there and
    re-used on the next run, so an interrupted study resumes where it stopped.
    """
    eps = tuple(eps)
    done: dict = {}
    if checkpoint is not None:
        checkpoint = Path(checkpoint)
        checkpoint.mkdir(parents=True, exist_ok=True)
        for k in range(len(systems)):
            f = checkpoint / f"{k:06d}.json"
            if f.exists():
                rec = _record_from_json(json.loads(f.read_text()))
                if not rec.zones or rec.zones[0].eps == eps:
                    done[k] = rec
    todo = [(k, s, catalog, material, combo, eps) for k, s in enumerate(systems) if k not in done]

    def store(rec):
        done[rec.system_id] = rec
        if checkpoint is not None:
            _atomic_write(checkpoint / f"{rec.system_id:06d}.json", json.dumps(_record_to_json(rec)))

    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for rec in pool.map(_study_one, todo, chunksize=max(1, len(todo) // (4 * jobs))):
                store(rec)
    else:
        for args in todo:
            store(_study_one(args))
    return StudyResult([done[k] for k in range(len(systems))])


@dataclass(frozen=True)
class ContainmentRow:
    system_id: int
    beam_index: int
    shear_count: int
    winner_index: int     # position in the naive ordering
    winner_bits: str
    in_flexural: bool
    in_critical: bool
    utilisation: float


def _contain_one(args):
    k, system, catalog, material, combo = args
    m = system.m
    beams = shear_susceptible(system, material, catalog)
    flex = flexural_set(m)
    crit = critical_set(flex, shear_set(m, flex, beams))
    try:
        result = design_system(system, catalog, material, combo, crit)
    except DesignError as exc:
        log.warning("system %d skipped: %s", k, exc)
        return k, None
    bf = brute_force_critical(result.system, material, combo, naive=naive_set(m, beams))
    rows = []
    for d in range(m):
        bits = bf.naive[bf.winner[d]]
        rows.append(ContainmentRow(k, d, len(beams), bf.winner[d], "".join(map(str, bits)),
                                   bits in flex, bits in crit, bf.utilisation[d]))
    return k, rows


@dataclass
class ContainmentReport:
    rows: list
    skipped: list

    @property
    def rate(self) -> float:
        return sum(r.in_critical for r in self.rows) / len(self.rows) if self.rows else 1.0

    @property
    def violations(self) -> list:
        return [r for r in self.rows if not r.in_critical]

    def ordered(self) -> list:
        return sorted(self.rows, key=lambda r: (r.shear_count, r.winner_index, r.system_id, r.beam_index))

    def to_csv(self, path):
        rows = [[rank, r.winner_index, r.shear_count, r.system_id, r.beam_index, r.winner_bits,
                 int(r.in_flexural), int(r.in_critical), repr(r.utilisation)]
                for rank, r in enumerate(self.ordered())]
        _write_csv(Path(path), ["example_rank", "arrangement_index", "shear_count", "system_id",
                                "beam_index", "bits", "in_flexural", "in_critical", "utilisation"], rows)


def validate_containment(systems: Sequence[BeamSystem], catalog: SectionCatalog,
                         material: Material, combo: LoadCombination, jobs: int = 1) -> ContainmentReport:
    """Check each designed beam's brute-force worst case lies in its critical set."""
    args = [(k, s, catalog, material, combo) for k, s in enumerate(systems)]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_contain_one, args))
    else:
        out = [_contain_one(a) for a in args]
    rows, skipped = [], []
    for k, r in out:
        if r is None:
            skipped.append(k)
        else:
            rows.extend(r)
    return ContainmentReport(rows, skipped)
