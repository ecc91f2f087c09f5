"""End-to-end evaluation of block assemblies and the parameter sweep.

For one configuration the steps are: build the assembly, detect contacts,
assemble ``G``, run the explosion test and, per load case, classify the
admissible cone, solve the contact forces (locked / suppressed only) and
compute the pressure measures.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .contact import assemble_jacobian, detect_contacts
from .geometry import HexBlockParams, MeshResolution, SineBlockParams, build
from .loads import LOAD_KINDS, LoadCase, assemble_load
from .metrics import PressureField, UndefinedMetric, evaluate_metrics
from .statics import (
    ACTIVATED,
    LOCKED,
    NEUTRAL,
    SUPPRESSED,
    explosion_check,
    kinematic_report,
    solve_contact_forces,
)

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class ResultRow:
    block: str
    h: float
    a: float
    f: float
    s: float
    n: int
    r_i: float
    t: float
    L: int
    p0: float
    bvp: str
    classification: str
    z_star: Optional[float] = None
    gamma_max: Optional[float] = None
    gamma_min: Optional[float] = None
    residual: Optional[float] = None
    effective_area_pct: Optional[float] = None
    p_eff_bar: Optional[float] = None
    p_max_bar: Optional[float] = None
    exploding: Optional[bool] = None
    n_w: Optional[float] = None
    wall_clock_s: Optional[float] = None
    resolution: str = ""
    error: str = ""

    def key(self):
        return (
            self.block, self.h, self.a, self.f, self.s, self.n,
            self.r_i, self.t, self.L, self.p0, LOAD_KINDS.index(self.bvp),
        )


FIELDS = [f.name for f in dataclasses.fields(ResultRow)]
# the sweep file leaves out the timing so reruns are byte-identical
STABLE_FIELDS = [f for f in FIELDS if f != "wall_clock_s"]


def _params_row(params, case: LoadCase, res: MeshResolution) -> dict:
    if isinstance(params, HexBlockParams):
        d = dict(block="hex", h=params.h, a=0.0, f=0.0, s=0.0, n=params.n,
                 r_i=params.r_i, t=params.t, L=params.L, n_w=None)
    else:
        d = dict(block="sine", h=params.h, a=params.a, f=params.f, s=params.s,
                 n=params.n, r_i=params.r_i, t=params.t, L=params.L, n_w=params.n_w)
    d.update(p0=case.p0, bvp=case.kind, resolution=res.as_text())
    return d


def evaluate(params, case: LoadCase, res: Optional[MeshResolution] = None) -> ResultRow:
    """One configuration, one load case."""
    return evaluate_cases(params, [case], res)[0]


def evaluate_cases(
    params, cases: Sequence[LoadCase], res: Optional[MeshResolution] = None
) -> list[ResultRow]:
    """Several load cases on one geometry; errors become error rows."""
    t0 = time.perf_counter()
    try:
        res = res or MeshResolution.default_for(params)
        asm = build(params, res)
        pairs = detect_contacts(asm)
        jac = assemble_jacobian(asm, pairs)
        exploding = explosion_check(asm, jac)
    except Exception as exc:  # row-level error record
        log.warning("configuration %s failed: %s", params, exc)
        res_txt = res or MeshResolution(1)
        return [
            ResultRow(**_params_row(params, c, res_txt), classification="error",
                      error=f"{type(exc).__name__}: {exc}")
            for c in cases
        ]
    setup = time.perf_counter() - t0
    rows = []
    for case in cases:
        t1 = time.perf_counter()
        row = ResultRow(**_params_row(params, case, res), classification="error",
                        exploding=exploding)
        try:
            _solve_case(asm, pairs, jac, case, row)
        except Exception as exc:
            log.warning("%s / %s failed: %s", params, case.kind, exc)
            row.classification = "error"
            row.error = f"{type(exc).__name__}: {exc}"
        row.wall_clock_s = setup / len(cases) + time.perf_counter() - t1
        rows.append(row)
    return rows


def _solve_case(asm, pairs, jac, case: LoadCase, row: ResultRow) -> None:
    if case.releases_top_frame:
        fixed = {b.id for b in asm.bodies if b.layer == -1}
        pairs = detect_contacts(asm, fixed=fixed)
        jac = assemble_jacobian(asm, pairs, fixed=fixed)
    f = assemble_load(asm, case).vector(jac)
    rep = kinematic_report(jac, f, asm.r_i)
    row.classification = rep.classification
    row.z_star, row.gamma_max, row.gamma_min = rep.z_star, rep.gamma_max, rep.gamma_min
    if rep.classification not in (LOCKED, SUPPRESSED):
        return
    eq = solve_contact_forces(jac, f, rep.classification)
    row.residual = eq.residual
    if not eq.feasible:
        row.error = "load cannot be sustained"
        return
    free = [b.id for b in asm.free_bodies]
    try:
        m = evaluate_metrics(PressureField.from_solution(pairs, eq.lambdas, free), free)
    except UndefinedMetric as exc:
        row.error = str(exc)
        return
    row.effective_area_pct = m.effective_area_pct
    row.p_eff_bar = m.p_eff_bar
    row.p_max_bar = m.p_max_bar


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepConfig:
    a: list = field(default_factory=lambda: [10.0, 15.0, 20.0, 25.0])
    s: list = field(default_factory=lambda: [0.0, 0.5])
    f: list = field(default_factory=lambda: [1.0, 1.5, 2.0])
    n: list = field(default_factory=lambda: [2, 3, 4, 5, 6])
    t: list = field(default_factory=lambda: [30.0, 40.0, 50.0, 60.0])
    h: float = 200.0
    r_i: float = 120.0
    L: int = 12
    p0: float = 0.01
    resolution: Optional[str] = None  # "NX,NY,NZ"; None = per-frequency default
    bvp: list = field(default_factory=lambda: ["pipe"])
    out: str = "sweep_out"
    jobs: int = 1
    wave_unit: str = "half"
    pillar_mode: str = "top_layer"

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "SweepConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            if path.suffix == ".json":
                d = json.loads(text)
            else:
                import yaml

                d = yaml.safe_load(text)
        except Exception as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError(f"config {path} must be a mapping")
        return cls.from_dict(d)

    def validate(self) -> None:
        for name in ("a", "s", "f", "n", "t", "bvp"):
            v = getattr(self, name)
            if not isinstance(v, (list, tuple)):
                setattr(self, name, [v])
        bad = [b for b in self.bvp if b not in LOAD_KINDS]
        if bad:
            raise ConfigError(f"unknown load cases {bad}")
        if self.resolution is not None:
            try:
                MeshResolution.parse(str(self.resolution))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        try:
            LoadCase(self.bvp[0], p0=self.p0, pillar_mode=self.pillar_mode)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def grid(self) -> list[tuple]:
        return list(itertools.product(self.a, self.s, self.f, self.n, self.t))

    def cases(self) -> list[LoadCase]:
        return [LoadCase(k, p0=self.p0, pillar_mode=self.pillar_mode) for k in self.bvp]

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _run_point(args):
    cfg, point = args
    a, s, f, n, t = point
    res = MeshResolution.parse(cfg.resolution) if cfg.resolution else None
    try:
        params = SineBlockParams(h=cfg.h, a=a, f=f, s=s, n=int(n), r_i=cfg.r_i, t=t,
                                 L=cfg.L, wave_unit=cfg.wave_unit)
    except ValueError as exc:
        return [
            ResultRow(block="sine", h=cfg.h, a=a, f=f, s=s, n=int(n), r_i=cfg.r_i, t=t,
                      L=cfg.L, p0=cfg.p0, bvp=c.kind, classification="error",
                      n_w=2 * f * n, resolution=cfg.resolution or "",
                      error=f"{type(exc).__name__}: {exc}")
            for c in cfg.cases()
        ]
    return evaluate_cases(params, cfg.cases(), res)


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            return str(v)
        return f"{float(v):.9g}"
    return str(v)


def write_rows(rows, path, fields=FIELDS) -> None:
    """CSV with a header; ``path`` may also be an open text stream."""
    if hasattr(path, "write"):
        _write_csv(rows, path, fields)
        return
    with open(path, "w", newline="") as fh:
        _write_csv(rows, fh, fields)


def _write_csv(rows, fh, fields):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([format_value(getattr(r, k)) for k in fields])


def run_sweep(cfg: SweepConfig, progress=None) -> list[ResultRow]:
    """Evaluate the whole grid; rows are appended to ``results.partial.csv``
    as they complete and written sorted to ``results.csv`` at the end."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    partial = out / "results.partial.csv"
    tasks = [(cfg, p) for p in cfg.grid()]
    rows: list[ResultRow] = []
    with open(partial, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELDS)

        def sink(batch):
            for r in batch:
                w.writerow([format_value(getattr(r, k)) for k in FIELDS])
            fh.flush()
            rows.extend(batch)
            if progress:
                progress(len(rows), len(tasks) * len(cfg.bvp))

        if cfg.jobs == 1:
            for t in tasks:
                sink(_run_point(t))
        else:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                futs = [pool.submit(_run_point, t) for t in tasks]
                for fut in as_completed(futs):
                    sink(fut.result())
    rows.sort(key=ResultRow.key)
    write_rows(rows, out / "results.csv", STABLE_FIELDS)
    with open(out / "timings.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "s", "f", "n", "t", "bvp", "wall_clock_s"])
        for r in rows:
            w.writerow([format_value(v) for v in (r.a, r.s, r.f, r.n, r.t, r.bvp, r.wall_clock_s)])
    sidecar = {
        "config": cfg.as_dict(),
        "tolerances": {
            "residual": 1e-6,
            "gamma_rel": 1e-9,
            "explosion_rel": 1e-9,
            "contact_match_rel": 1e-6,
            "contact_angle_rad": 1e-6,
        },
        "resolution": cfg.resolution or "div_x=24f, div_y=4, div_z=24",
        "metrics_bodies": "non-frame bodies only",
        "version": __version__,
        "rows": len(rows),
        "error_rows": sum(1 for r in rows if r.classification == "error"),
    }
    (out / "results.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    os.remove(partial)
    return rows
