"""Construction of critical pattern-load sets for continuous beams.

Flexural arrangements depend only on the member count. Shear arrangements
additionally need the members whose span is short enough for shear
deformation to reverse the carry-over of moment through them.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .model import BeamSystem, LoadArrangement, Material, SectionCatalog

NAIVE_LIMIT = 20

Bits = tuple[int, ...]


@dataclass(frozen=True)
class ArrangementSet:
    arrangements: tuple[Bits, ...]
    kind: str
    raw_count: int = 0  # outputs before deduplication, shear sets only

    def __len__(self):
        return len(self.arrangements)

    def __iter__(self):
        return iter(self.arrangements)

    def __getitem__(self, j) -> Bits:
        return self.arrangements[j]

    def __contains__(self, bits) -> bool:
        return tuple(bits) in self._lookup

    @property
    def _lookup(self) -> dict:
        cache = self.__dict__.get("_lookup_cache")
        if cache is None:
            cache = {a: j for j, a in enumerate(self.arrangements)}
            object.__setattr__(self, "_lookup_cache", cache)
        return cache

    def index(self, bits) -> int:
        return self._lookup[tuple(bits)]

    def as_arrangements(self) -> list[LoadArrangement]:
        return [LoadArrangement(a) for a in self.arrangements]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["index", "kind", "bits"])
            for j, a in enumerate(self.arrangements):
                wr.writerow([j, self.kind, "".join(map(str, a))])


def _dedup(seq: Iterable[Bits], exclude=()) -> tuple[Bits, ...]:
    seen = set(exclude)
    out = []
    for a in seq:
        if a not in seen:
            seen.add(a)
            out.append(a)
    return tuple(out)


def alternating(m: int) -> Bits:
    return tuple([1, 0] * (m // 2) + ([1] if m % 2 else []))


def adjacent(m: int) -> list[Bits]:
    """The m - 1 arrangements with one adjacent loaded pair, alternating outward."""
    out = []
    for i in range(m - 1):
        start = [1, 0] * (i // 2) if i % 2 == 0 else [0, 1] * (i // 2) + [0]
        rest = m - i - 2
        end = [0, 1] * (rest // 2) + ([0] if rest % 2 else [])
        out.append(tuple(start + [1, 1] + end))
    return out


def flexural_set(m: int) -> ArrangementSet:
    if m < 1:
        raise ValueError("need at least one member")
    positive = [alternating(m)] + adjacent(m)
    negative = [tuple(1 - a for a in arr) for arr in positive]
    return ArrangementSet(tuple(positive + negative), "flexural")


def shear_span_limit(modulus_ratio: float, shear_ratio: float) -> float:
    """Span below which a member may reverse the moment carry-over (m)."""
    return math.sqrt(6.0 * modulus_ratio * shear_ratio)


def shear_susceptible(system: BeamSystem | Sequence[float], material: Material,
                      catalog: SectionCatalog) -> list[int]:
    """Members shorter than the catalog-wide shear span limit.

    Uses the largest I/A_z in the catalog, so the answer does not depend on
    which sections end up assigned.
    """
    spans = system.spans if isinstance(system, BeamSystem) else system
    limit = shear_span_limit(material.modulus_ratio, catalog.max_shear_ratio)
    return [i for i, L in enumerate(spans) if L < limit]


def shear_transform(arrangement, shear_beams, start: int) -> Bits:
    """Walk outward from ``start`` flipping the pattern past shear beams.

    Returns a new tuple; the input is left untouched.
    """
    arr = list(arrangement)
    n = len(arr)
    if not 0 <= start < n:
        raise IndexError(f"start {start} out of range for m={n}")
    shear = set(shear_beams)
    for direction in (-1, 1):
        updating = finishing = False
        update_act = 0
        i = start
        while True:
            i += direction
            if i < 0 or i >= n:
                break
            if not updating and not finishing:
                if i in shear:
                    updating = True
                    update_act = arr[i]
            elif updating and not finishing:
                arr[i] = update_act
                if i not in shear:
                    updating = False
                    finishing = True
            else:
                arr[i] = (arr[i - direction] + 1) % 2
                if i in shear:
                    update_act = arr[i]
                    updating = True
                    finishing = False
    return tuple(arr)


def _adjacent_with_start(m: int) -> list[tuple[Bits, int]]:
    pos = adjacent(m)
    neg = [tuple(1 - a for a in arr) for arr in pos]
    return [(arr, i) for i, arr in enumerate(pos)] + [(arr, i) for i, arr in enumerate(neg)]


@lru_cache(maxsize=256)
def _shear_set_cached(m: int, shear_beams: tuple[int, ...], full_sweep: bool):
    flex = flexural_set(m).arrangements
    if full_sweep:
        seeds = [(arr, s) for arr in flex for s in range(m)]
    else:
        seeds = _adjacent_with_start(m)
    raw = []
    for r in range(1, len(shear_beams) + 1):
        for subset in itertools.combinations(shear_beams, r):
            for arr, start in seeds:
                raw.append(shear_transform(arr, subset, start))
    return _dedup(raw, exclude=flex), len(raw)


def shear_set(m: int, flexural: ArrangementSet | None, shear_beams: Sequence[int],
              full_sweep: bool = False) -> ArrangementSet:
    """Shear arrangements for every non-empty subset of ``shear_beams``.

    Only adjacent-type flexural arrangements are transformed, each starting at
    the left member of its adjacent pair. ``full_sweep`` instead transforms
    every flexural arrangement from every start index.
    """
    beams = tuple(sorted(set(shear_beams)))
    if not beams:
        return ArrangementSet((), "shear", 0)
    if flexural is not None and len(flexural) and len(flexural[0]) != m:
        raise ValueError("flexural set does not match member count")
    arrs, raw = _shear_set_cached(m, beams, full_sweep)
    return ArrangementSet(arrs, "shear", raw)


def shear_set_bound(m: int, n: int) -> int:
    return 2 * (m - 1) * (2 ** n - 1)


def critical_set(flexural: ArrangementSet, shear: ArrangementSet) -> ArrangementSet:
    return ArrangementSet(_dedup(itertools.chain(flexural, shear)), "critical")


def critical_set_for(system: BeamSystem, material: Material, catalog: SectionCatalog) -> ArrangementSet:
    flex = flexural_set(system.m)
    beams = shear_susceptible(system, material, catalog)
    return critical_set(flex, shear_set(system.m, flex, beams))


def naive_set(m: int, shear_beams: Sequence[int] = ()) -> ArrangementSet:
    """All 2^m arrangements: flexural first, then shear, then the rest."""
    if m < 1:
        raise ValueError("need at least one member")
    if m > NAIVE_LIMIT:
        raise ValueError(f"naive set for m={m} exceeds the limit of {NAIVE_LIMIT}")
    flex = flexural_set(m)
    shear = shear_set(m, flex, shear_beams)
    everything = itertools.product((0, 1), repeat=m)
    return ArrangementSet(_dedup(itertools.chain(flex, shear, everything)), "naive")
