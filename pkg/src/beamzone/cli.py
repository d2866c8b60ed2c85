"""Command-line entry point: ``beamzone <command> [options]``.

Every command that writes files puts them in ``--out`` alongside a
``manifest.json`` describing the run. Outputs are deterministic for identical
inputs; only the manifest timestamps change between runs.

Exit codes: 0 success, 1 containment violations found, 2 invalid input,
3 numerical failure, 4 infeasible design.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .arrangements import (critical_set, flexural_set, shear_set, shear_set_bound,
                           shear_susceptible)
from .dataset import (generate, preset, read_dataset, run_study, validate_containment,
                      write_dataset)
from .design import (InfeasibleDesign, NonConvergence, design_system,
                     factored_loads)
from .model import (BeamSystem, LoadCombination, Material, SectionCatalog, ValidationError,
                    default_catalog_path, validate_system)
from .solver import STATIONS, SolverError, solve
from .zone import (DEFAULT_EPS, read_results_csv, write_histogram_csv, write_results_csv,
                   write_summary_csv, zone_statistics)

log = logging.getLogger("beamzone")

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 1, 2, 3, 4
CATALOG_ENV = "IZ_CATALOG"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: Optional[int]
    catalog_hash: str
    version: str
    started: str
    finished: str = ""
    outputs: list = field(default_factory=list)

    def write(self, directory: Path):
        self.finished = _now()
        self.outputs = sorted(self.outputs)
        (directory / "manifest.json").write_text(json.dumps(asdict(self), indent=2) + "\n")


class Run:
    """Output directory plus the manifest that accounts for everything in it."""

    def __init__(self, args, catalog_path: Path):
        self.out = Path(args.out) if getattr(args, "out", None) else None
        config = {k: v for k, v in sorted(vars(args).items())
                  if k not in ("out", "jobs", "checkpoint", "func", "verbose")}
        self.manifest = RunManifest(
            command=args.command,
            config_hash=_sha256(json.dumps(config, sort_keys=True, default=str).encode()),
            seed=getattr(args, "seed", None),
            catalog_hash=_sha256(catalog_path.read_bytes()),
            version=__version__,
            started=_now(),
        )
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        self.manifest.outputs.append(name)
        return self.out / name

    def emit(self, name: str, text: str):
        """Write ``text`` to ``--out/name``, or stdout without ``--out``."""
        if self.out is None:
            sys.stdout.write(text)
        else:
            self.path(name).write_text(text)

    def close(self):
        if self.out is not None:
            self.manifest.write(self.out)


# ---------------------------------------------------------------- helpers

def _catalog_path(args) -> Path:
    p = args.catalog or os.environ.get(CATALOG_ENV) or default_catalog_path()
    return Path(p)


def _samples(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        n = (int(a), int(b))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NxN, got {text!r}") from None
    if min(n) < 1:
        raise argparse.ArgumentTypeError("sample counts must be positive")
    return n


def _eps_list(text: str) -> tuple[float, ...]:
    """Comma-separated thresholds in percent, e.g. ``0.1,0.5,1``."""
    try:
        vals = tuple(float(x) / 100.0 for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {text!r}") from None
    if not vals or any(not 0 <= v < 1 for v in vals):
        raise argparse.ArgumentTypeError("thresholds must lie in [0, 100) percent")
    return vals


def _load_system(path, catalog) -> BeamSystem:
    s = BeamSystem.load(path, catalog)
    problems = validate_system(s, catalog)
    if problems:
        raise ValidationError("; ".join(problems))
    return s


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    return buf.getvalue()


def _systems_for(args, catalog):
    """Systems from a positional path (file or dataset dir) or from ``--set``."""
    if getattr(args, "input", None):
        p = Path(args.input)
        if p.is_dir():
            return read_dataset(p)[1]
        return [_load_system(p, catalog)]
    if args.set is None:
        raise ValidationError("give an input file/directory or --set")
    return generate(_config(args))


def _config(args):
    kw = {"samples": args.samples, "seed": args.seed}
    if args.members is not None:
        kw["m"] = args.members
    return preset(args.set, **kw)


# ---------------------------------------------------------------- commands

def cmd_analyze(args, run: Run, catalog, material, combo):
    s = _load_system(args.input, catalog)
    if not s.has_sections:
        raise ValidationError("analysis needs a section on every member")
    bits = args.arrangement or "1" * s.m
    if len(bits) != s.m or set(bits) - {"0", "1"}:
        raise ValidationError(f"arrangement must be {s.m} binary digits")
    act = np.array([[int(b)] for b in bits], dtype=float)
    w = factored_loads(s, combo, act)
    sol = solve(s, w, material)
    stations = range(len(STATIONS)) if args.station is None else [args.station]
    if args.station is not None and not 0 <= args.station < len(STATIONS):
        raise ValidationError(f"station must be in 0..{len(STATIONS) - 1}")
    rows = []
    for d in range(s.m):
        M, V = sol.forces(d, STATIONS[list(stations)])
        for k, st in enumerate(stations):
            rows.append([d, st, repr(float(M[k, 0])), repr(float(V[k, 0]))])
    run.emit("forces.csv", _csv_text(["member", "station", "M_kNm", "V_kN"], rows))


def cmd_arrangements(args, run: Run, catalog, material, combo):
    if args.input:
        s = _load_system(args.input, catalog)
        m, beams = s.m, shear_susceptible(s, material, catalog)
    elif args.members:
        m, beams = args.members, []
    else:
        raise ValidationError("give a system file or --members")
    flex = flexural_set(m)
    shear = shear_set(m, flex, beams)
    crit = critical_set(flex, shear)
    kinds = {a: "flexural" for a in flex}
    rows = [[i, kinds.get(a, "shear"), "".join(map(str, a))] for i, a in enumerate(crit)]
    run.emit("arrangements.csv", _csv_text(["index", "kind", "bits"], rows))
    print(f"members={m} flexural={len(flex)} shear_beams={beams} "
          f"shear_bound={shear_set_bound(m, len(beams)) if beams else 0} shear={len(shear)} "
          f"critical={len(crit)}", file=sys.stderr)


def cmd_design(args, run: Run, catalog, material, combo):
    s = _load_system(args.input, catalog)
    crit = critical_set(flexural_set(s.m),
                        shear_set(s.m, None, shear_susceptible(s, material, catalog)))
    result = design_system(s, catalog, material, combo, crit)
    run.emit("design.json", json.dumps(result.to_json(), indent=2) + "\n")


def cmd_dataset(args, run: Run, catalog, material, combo):
    if run.out is None:
        raise ValidationError("dataset needs --out")
    args.set = args.set or "1"
    cfg = _config(args)
    systems = generate(cfg)
    write_dataset(run.out, systems, cfg)
    run.manifest.outputs += ["config.json", "manifest.csv", "systems/"]
    print(f"set {cfg.set_id}: {len(systems)} systems x {cfg.m} members", file=sys.stderr)


def cmd_zone(args, run: Run, catalog, material, combo):
    if run.out is None:
        raise ValidationError("zone needs --out")
    systems = _systems_for(args, catalog)
    res = run_study(systems, catalog, material, combo, args.eps, jobs=args.jobs,
                    checkpoint=args.checkpoint)
    write_results_csv(run.path("zone_results.csv"), res.zones)
    run.path("designs.json").write_text(json.dumps(
        [{"system_id": r.system_id, **r.design} for r in res.records if r.design], indent=1) + "\n")
    fails = [[r.system_id, r.error] for r in res.failures]
    run.path("failures.csv").write_text(_csv_text(["system_id", "error"], fails))
    print(f"{len(systems)} systems, {len(res.zones)} design beams, "
          f"skip rate {100 * res.skip_rate:.1f}%", file=sys.stderr)
    if res.zones:
        summary = zone_statistics(res.zones)
        for e, mean, mx in zip(summary.eps, summary.mean, summary.max):
            print(f"  eps {100 * e:g}%: mean k_max {mean:.2f}, max {mx}", file=sys.stderr)


def cmd_validate(args, run: Run, catalog, material, combo):
    if run.out is None:
        raise ValidationError("validate needs --out")
    if args.input:
        systems = _systems_for(args, catalog)
    else:
        args.set = args.set or "stress"
        systems = generate(_config(args))
    rep = validate_containment(systems, catalog, material, combo, jobs=args.jobs)
    rep.to_csv(run.path("containment.csv"))
    print(f"containment {100 * rep.rate:.1f}% ({len(rep.rows)} beams, "
          f"{len(rep.skipped)} systems skipped as infeasible)")
    return EXIT_OK if not rep.violations else EXIT_VIOLATION


def cmd_stats(args, run: Run, catalog, material, combo):
    if run.out is None:
        raise ValidationError("stats needs --out")
    summaries = {}
    for item in args.results:
        label, _, path = item.rpartition("=")
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"{path}: no such results file")
        label = label or path.parent.name or path.stem
        summaries[label] = zone_statistics(read_results_csv(path), args.eps if args.eps_given else None)
    table = run.path("zone_summary.csv")
    write_summary_csv(table, summaries)
    for label, s in summaries.items():
        for e in s.eps:
            write_histogram_csv(run.path(f"histogram_{label}_eps{100 * e:g}.csv"), s, e)
    sys.stdout.write(table.read_text())


COMMANDS = {
    "analyze": cmd_analyze,
    "arrangements": cmd_arrangements,
    "design": cmd_design,
    "dataset": cmd_dataset,
    "zone": cmd_zone,
    "validate": cmd_validate,
    "stats": cmd_stats,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--catalog", help=f"section catalog CSV (default ${CATALOG_ENV} or bundled UKB)")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    gen = argparse.ArgumentParser(add_help=False)
    gen.add_argument("--set", choices=["1", "2", "3", "4", "stress"])
    gen.add_argument("--samples", type=_samples, default=(32, 32), help="UDL x span draws, e.g. 32x32")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--members", type=int, help="members per system")
    gen.add_argument("--jobs", type=int, default=1)

    p = argparse.ArgumentParser(prog="beamzone", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="station forces for one load arrangement")
    a.add_argument("input", help="system JSON with sections")
    a.add_argument("--arrangement", help="variable-load bits, e.g. 10101 (default all on)")
    a.add_argument("--station", type=int, help="single station index 0..10")

    r = sub.add_parser("arrangements", parents=[common], help="critical load arrangement set")
    r.add_argument("input", nargs="?", help="system JSON")
    r.add_argument("--members", type=int)

    d = sub.add_parser("design", parents=[common], help="minimum-depth sizing of one system")
    d.add_argument("input")

    g = sub.add_parser("dataset", parents=[common, gen], help="generate a design set")

    z = sub.add_parser("zone", parents=[common, gen], help="design and extract influence zones")
    z.add_argument("input", nargs="?", help="system JSON or dataset directory")
    z.add_argument("--eps", type=_eps_list, default=DEFAULT_EPS, help="thresholds in percent")
    z.add_argument("--checkpoint", help="directory for per-system resume files")

    v = sub.add_parser("validate", parents=[common, gen], help="brute-force containment check")
    v.add_argument("input", nargs="?", help="system JSON or dataset directory (default: stress set)")

    s = sub.add_parser("stats", parents=[common], help="summary table and histograms")
    s.add_argument("results", nargs="+", help="zone_results.csv, optionally LABEL=PATH")
    s.add_argument("--eps", type=_eps_list, default=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "stats":
        args.eps_given = args.eps is not None
    try:
        catalog_path = _catalog_path(args)
        catalog = SectionCatalog.from_csv(catalog_path)
        run = Run(args, catalog_path)
        code = COMMANDS[args.command](args, run, catalog, Material.s355(), LoadCombination())
        run.close()
        return code or EXIT_OK
    except InfeasibleDesign as exc:
        print(f"error: infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SolverError, NonConvergence, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValidationError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
