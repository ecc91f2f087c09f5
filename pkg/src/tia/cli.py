"""``tia`` command line: evaluate, sweep, export.

Exit codes: 0 success, 1 a result row carries an error, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .contact import assemble_jacobian, detect_contacts
from .geometry import HexBlockParams, MeshResolution, SineBlockParams, build
from .loads import LOAD_KINDS, LoadCase, assemble_load
from .mesh_io import FORMATS, export_mesh, face_pressures
from .pipeline import ConfigError, SweepConfig, evaluate, run_sweep, write_rows
from .statics import LOCKED, SUPPRESSED, kinematic_report, solve_contact_forces

EXIT_OK, EXIT_ROW_ERROR, EXIT_CONFIG = 0, 1, 2


def _block_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("block")
    g.add_argument("--block", choices=("sine", "hex"), default="sine")
    g.add_argument("--a", type=float, default=20.0, help="amplitude [mm]")
    g.add_argument("--s", type=float, default=0.0, help="phase shift in [0,1)")
    g.add_argument("--f", type=float, default=1.5, help="frequency")
    g.add_argument("--n", type=int, default=4, help="blocks per layer")
    g.add_argument("--t", type=float, default=40.0, help="wall thickness [mm]")
    g.add_argument("--h", type=float, default=200.0, help="block height [mm] (sine only)")
    g.add_argument("--ri", type=float, default=120.0, help="inner radius [mm]")
    g.add_argument("--L", type=int, default=12, help="interior layers")
    g.add_argument("--wave-unit", choices=("half", "block"), default="half")
    g.add_argument("--resolution", default=None, help="NX,NY,NZ mesh subdivisions")


def _load_args(p: argparse.ArgumentParser, required=True) -> None:
    p.add_argument("--bvp", choices=LOAD_KINDS, required=required, default=None)
    p.add_argument("--p0", type=float, default=0.01, help="pressure [MPa]")
    p.add_argument("--pillar-mode", choices=("top_layer", "release_frame"), default="top_layer")


def _params(ns):
    if ns.block == "hex":
        return HexBlockParams(n=ns.n, r_i=ns.ri, r_o=ns.ri + ns.t, L=ns.L)
    return SineBlockParams(h=ns.h, a=ns.a, f=ns.f, s=ns.s, n=ns.n, r_i=ns.ri, t=ns.t,
                           L=ns.L, wave_unit=ns.wave_unit)


def _resolution(ns):
    return MeshResolution.parse(ns.resolution) if ns.resolution else None


def cmd_evaluate(ns) -> int:
    try:
        params = _params(ns)
        res = _resolution(ns)
        case = LoadCase(ns.bvp, p0=ns.p0, pillar_mode=ns.pillar_mode)
    except ValueError as exc:
        print(f"tia: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    row = evaluate(params, case, res)
    write_rows([row], ns.out or sys.stdout)
    return EXIT_ROW_ERROR if row.classification == "error" else EXIT_OK


def cmd_sweep(ns) -> int:
    try:
        cfg = SweepConfig.load(ns.config) if ns.config else SweepConfig()
        overrides = {"jobs": ns.jobs, "out": ns.out, "resolution": ns.resolution,
                     "p0": ns.p0}
        for k, v in overrides.items():
            if v is not None:
                setattr(cfg, k, v)
        if ns.bvp:
            cfg.bvp = ns.bvp
        cfg.validate()
    except (ConfigError, ValueError) as exc:
        print(f"tia: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    def progress(done, total):
        print(f"\r{done}/{total} rows", end="", file=sys.stderr, flush=True)

    rows = run_sweep(cfg, progress)
    print(file=sys.stderr)
    errors = sum(1 for r in rows if r.classification == "error")
    print(json.dumps({"rows": len(rows), "errors": errors, "out": str(Path(cfg.out))}))
    return EXIT_ROW_ERROR if errors else EXIT_OK


def cmd_export(ns) -> int:
    try:
        params = _params(ns)
        asm = build(params, _resolution(ns))
    except ValueError as exc:
        print(f"tia: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    press = None
    if ns.pressures:
        case = LoadCase(ns.bvp or "pipe", p0=ns.p0, pillar_mode=ns.pillar_mode)
        pairs = detect_contacts(asm)
        jac = assemble_jacobian(asm, pairs)
        f = assemble_load(asm, case).vector(jac)
        rep = kinematic_report(jac, f, asm.r_i)
        if rep.classification not in (LOCKED, SUPPRESSED):
            print(f"tia: {case.kind} is {rep.classification}; no contact forces", file=sys.stderr)
            return EXIT_ROW_ERROR
        eq = solve_contact_forces(jac, f, rep.classification)
        press = face_pressures(asm, pairs, eq.lambdas)
    try:
        export_mesh(asm, ns.format, ns.out, press)
    except OSError as exc:
        print(f"tia: {exc}", file=sys.stderr)
        return EXIT_ROW_ERROR
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tia", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="one configuration and load case")
    _block_args(ev)
    _load_args(ev)
    ev.add_argument("--out", default=None, help="CSV file (default: stdout)")
    ev.set_defaults(func=cmd_evaluate)

    sw = sub.add_parser("sweep", help="parameter sweep from a YAML/JSON config")
    sw.add_argument("--config", default=None)
    sw.add_argument("--jobs", type=int, default=None)
    sw.add_argument("--out", default=None, help="output directory")
    sw.add_argument("--resolution", default=None)
    sw.add_argument("--p0", type=float, default=None)
    sw.add_argument("--bvp", action="append", choices=LOAD_KINDS)
    sw.set_defaults(func=cmd_sweep)

    ex = sub.add_parser("export", help="write the assembly surface mesh")
    _block_args(ex)
    _load_args(ex, required=False)
    ex.add_argument("--format", choices=FORMATS, required=True)
    ex.add_argument("--out", required=True)
    ex.add_argument("--pressures", action="store_true",
                    help="attach contact pressures of --bvp (default pipe)")
    ex.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
