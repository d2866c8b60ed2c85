"""Influence-zone extraction for designed continuous beams.

For a design beam ``d`` and half-width ``k`` only members ``d-k .. d+k``
contribute load; forces from that window are summed per station and
arrangement and checked once, giving the captured utilisation. The zone size
is the smallest ``k`` from which the captured/true ratio stays within the
error threshold for every larger ``k``.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .design import (DesignResult, arrangement_matrix, factored_loads, resistances,
                     response_tensors, utilisation, window_forces)
from .model import LoadCombination, Material

DEFAULT_EPS = (0.001, 0.005, 0.01, 0.05, 0.10, 0.20, 0.50)


class DegenerateInput(ValueError):
    pass


@dataclass(frozen=True)
class CapturedCurve:
    design_beam: int
    utilisations: np.ndarray  # u_cap for k = 0..m
    u_true: float

    @property
    def ratios(self) -> np.ndarray:
        return self.utilisations / self.u_true


def captured_curves(result: DesignResult, material: Material, combo: LoadCombination,
                    tensors=None) -> list[CapturedCurve]:
    """Captured-utilisation curves for every member of a designed system."""
    system = result.system
    m = system.m
    Mt, Vt = response_tensors(system, material) if tensors is None else tensors
    loads = factored_loads(system, combo, arrangement_matrix(result.arrangements))
    idx = np.arange(m)
    curves = []
    for d, sec in enumerate(system.sections):
        r = resistances(sec, material)
        caps = np.empty(m + 1)
        for k in range(m + 1):
            mask = (np.abs(idx - d) <= k).astype(float)
            M, V = window_forces(Mt[d], Vt[d], loads, mask)
            caps[k] = np.max(utilisation(M, V, r.moment_resistance, r.shear_resistance))
        u_true = caps[m]
        if not u_true > 0:
            raise DegenerateInput(f"design beam {d} has zero utilisation")
        curves.append(CapturedCurve(d, caps, float(u_true)))
    return curves


def captured_curve(result: DesignResult, d: int, material: Material,
                   combo: LoadCombination, tensors=None) -> CapturedCurve:
    return captured_curves(result, material, combo, tensors)[d]


def extract_k_max(ratios: Sequence[float], eps: float) -> int:
    """Smallest k such that every ratio from k onward is within ``eps`` of 1."""
    r = np.asarray(ratios, dtype=float)
    ok = np.abs(1.0 - r) <= eps
    k = len(r) - 1
    while k > 0 and ok[k - 1]:
        k -= 1
    # the last entry is the full system, always admissible by definition
    return k


def first_crossing_k(ratios: Sequence[float], eps: float) -> int:
    """Naive rule: first k within ``eps``, ignoring later oscillation."""
    r = np.asarray(ratios, dtype=float)
    hits = np.flatnonzero(np.abs(1.0 - r) <= eps)
    return int(hits[0]) if len(hits) else len(r) - 1


@dataclass(frozen=True)
class ZoneResult:
    system_id: int
    design_beam: int
    eps: tuple[float, ...]
    k_max: tuple[int, ...]
    u_true: float
    ratios: tuple[float, ...] = field(default=(), repr=False)


def zone_results(result: DesignResult, material: Material, combo: LoadCombination,
                 eps: Sequence[float] = DEFAULT_EPS, system_id: int = 0) -> list[ZoneResult]:
    out = []
    for c in captured_curves(result, material, combo):
        r = c.ratios
        out.append(ZoneResult(system_id, c.design_beam, tuple(eps),
                              tuple(extract_k_max(r, e) for e in eps), c.u_true,
                              tuple(float(x) for x in r)))
    return out


@dataclass(frozen=True)
class ZoneSummary:
    eps: tuple[float, ...]
    mean: tuple[float, ...]
    max: tuple[int, ...]
    histograms: tuple[dict, ...]  # k_max -> fraction of beams
    count: int

    def row(self, eps: float):
        i = self.eps.index(eps)
        return self.mean[i], self.max[i], self.histograms[i]


def zone_statistics(results: Iterable[ZoneResult], eps: Optional[Sequence[float]] = None) -> ZoneSummary:
    results = list(results)
    if not results:
        raise ValueError("no zone results to summarise")
    eps = tuple(results[0].eps if eps is None else eps)
    means, maxes, hists = [], [], []
    for e in eps:
        ks = np.array([r.k_max[r.eps.index(e)] for r in results])
        means.append(float(ks.mean()))
        maxes.append(int(ks.max()))
        counts = Counter(ks.tolist())
        hists.append({k: counts[k] / len(ks) for k in sorted(counts)})
    return ZoneSummary(eps, tuple(means), tuple(maxes), tuple(hists), len(results))


def write_results_csv(path, results: Iterable[ZoneResult]):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["system_id", "beam_index", "eps", "k_max", "u_true"])
        for r in results:
            for e, k in zip(r.eps, r.k_max):
                wr.writerow([r.system_id, r.design_beam, repr(e), k, repr(r.u_true)])


def read_results_csv(path) -> list[ZoneResult]:
    rows: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["system_id"]), int(row["beam_index"]))
            entry = rows.setdefault(key, {"eps": [], "k": [], "u": float(row["u_true"])})
            entry["eps"].append(float(row["eps"]))
            entry["k"].append(int(row["k_max"]))
    return [ZoneResult(s, b, tuple(v["eps"]), tuple(v["k"]), v["u"]) for (s, b), v in rows.items()]


def write_summary_csv(path, summaries: dict):
    """Table of mean and max k_max per threshold, one column pair per set."""
    labels = list(summaries)
    eps = summaries[labels[0]].eps
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["eps_percent"] + [f"mean_{s}" for s in labels] + [f"max_{s}" for s in labels])
        for i, e in enumerate(eps):
            wr.writerow([f"{100 * e:g}"]
                        + [f"{summaries[s].mean[i]:.2f}" for s in labels]
                        + [summaries[s].max[i] for s in labels])


def write_histogram_csv(path, summary: ZoneSummary, eps: float):
    i = summary.eps.index(eps)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k_max", "fraction"])
        for k, f in summary.histograms[i].items():
            wr.writerow([k, f"{f:.6f}"])
