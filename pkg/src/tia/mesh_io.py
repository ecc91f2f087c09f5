"""ASCII surface export (Wavefront OBJ and legacy VTK) and matching readers.

OBJ layout: one ``o body_NNNN`` group per body, its ``v`` lines, then its
``f`` lines (1-based, global numbering).  When pressures are given every
``f`` line is followed by a ``#p <value>`` comment, which plain OBJ readers
ignore.

VTK layout: a single POLYDATA with ``CELL_DATA`` arrays ``body_id`` and,
when given, ``pressure``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

FORMATS = ("obj", "vtk-ascii")


@dataclass
class SurfaceObject:
    name: str
    vertices: np.ndarray  # (V, 3)
    faces: np.ndarray  # (F, 4) local indices
    pressure: Optional[np.ndarray] = None  # (F,)


@dataclass
class SurfaceFile:
    objects: list = field(default_factory=list)

    @property
    def names(self) -> list:
        return [o.name for o in self.objects]


def surface_objects(asm, face_pressure: Optional[dict] = None) -> list:
    """Boundary quads of every body, with unused (interior) vertices dropped.

    ``face_pressure`` maps body id to an array over that body's surface faces.
    """
    out = []
    for b in asm.bodies:
        m = b.mesh
        used, inv = np.unique(m.surface_faces, return_inverse=True)
        faces = inv.reshape(m.surface_faces.shape)
        p = None if face_pressure is None else np.asarray(face_pressure[b.id], float)
        out.append(SurfaceObject(f"body_{b.id:04d}", m.vertices[used], faces, p))
    return out


def face_pressures(asm, pairs, lambdas) -> dict:
    """Per-body surface-face pressure ``lam / A``; faces without contact get 0."""
    res = {b.id: np.zeros(len(b.mesh.surface_faces)) for b in asm.bodies}
    for pr, lam in zip(pairs, lambdas):
        p = lam / pr.area
        res[pr.master_body][pr.master_face] = p
        res[pr.slave_body][pr.slave_face] = p
    return res


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_obj(objects, path) -> None:
    path = Path(path)
    lines = ["# quad surface mesh; '#p' after a face gives its contact pressure [MPa]"]
    base = 1
    for o in objects:
        lines.append(f"o {o.name}")
        lines.extend(f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in o.vertices)
        for k, f in enumerate(o.faces):
            lines.append("f " + " ".join(str(base + int(i)) for i in f))
            if o.pressure is not None:
                lines.append(f"#p {_fmt(o.pressure[k])}")
        base += len(o.vertices)
    _write(path, "\n".join(lines) + "\n")


def read_obj(path) -> SurfaceFile:
    objs: list[SurfaceObject] = []
    verts: list = []
    cur = None
    offset = 0
    for raw in Path(path).read_text().splitlines():
        if raw.startswith("o "):
            if cur is not None:
                objs.append(_close(cur, verts))
                offset += len(verts)
            cur = {"name": raw[2:].strip(), "faces": [], "p": []}
            verts = []
        elif raw.startswith("v "):
            verts.append([float(t) for t in raw.split()[1:4]])
        elif raw.startswith("f "):
            cur["faces"].append([int(t.split("/")[0]) - 1 - offset for t in raw.split()[1:]])
        elif raw.startswith("#p "):
            cur["p"].append(float(raw.split()[1]))
    if cur is not None:
        objs.append(_close(cur, verts))
    return SurfaceFile(objs)


def _close(cur, verts) -> SurfaceObject:
    p = np.array(cur["p"]) if cur["p"] else None
    return SurfaceObject(
        cur["name"], np.array(verts, dtype=float).reshape(-1, 3),
        np.array(cur["faces"], dtype=int).reshape(-1, 4), p,
    )


def write_vtk(objects, path, title: str = "tia surface") -> None:
    pts, polys, body, press = [], [], [], []
    base = 0
    for k, o in enumerate(objects):
        pts.append(o.vertices)
        polys.append(o.faces + base)
        body.append(np.full(len(o.faces), k))
        if o.pressure is not None:
            press.append(o.pressure)
        base += len(o.vertices)
    P = np.concatenate(pts)
    Q = np.concatenate(polys)
    lines = [
        "# vtk DataFile Version 3.0",
        title + "; objects: " + " ".join(o.name for o in objects),
        "ASCII",
        "DATASET POLYDATA",
        f"POINTS {len(P)} double",
    ]
    lines.extend(f"{_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in P)
    lines.append(f"POLYGONS {len(Q)} {5 * len(Q)}")
    lines.extend("4 " + " ".join(str(int(i)) for i in q) for q in Q)
    lines.append(f"CELL_DATA {len(Q)}")
    lines += ["SCALARS body_id int 1", "LOOKUP_TABLE default"]
    lines.extend(str(int(b)) for b in np.concatenate(body))
    if press:
        if len(press) != len(objects):
            raise ValueError("pressure given for some objects only")
        lines += ["SCALARS pressure double 1", "LOOKUP_TABLE default"]
        lines.extend(_fmt(p) for p in np.concatenate(press))
    _write(Path(path), "\n".join(lines) + "\n")


def read_vtk(path) -> SurfaceFile:
    tokens = Path(path).read_text().splitlines()
    names = tokens[1].split("objects:")[1].split() if "objects:" in tokens[1] else None
    i = 0
    P = Q = None
    arrays = {}
    while i < len(tokens):
        line = tokens[i].split()
        if not line:
            i += 1
            continue
        if line[0] == "POINTS":
            n = int(line[1])
            P = np.array([[float(v) for v in tokens[i + 1 + k].split()] for k in range(n)])
            i += n + 1
        elif line[0] == "POLYGONS":
            n = int(line[1])
            Q = np.array([[int(v) for v in tokens[i + 1 + k].split()[1:]] for k in range(n)])
            i += n + 1
        elif line[0] == "SCALARS":
            name = line[1]
            n = len(Q)
            arrays[name] = np.array([float(tokens[i + 2 + k]) for k in range(n)])
            i += n + 2
        else:
            i += 1
    body = arrays["body_id"].astype(int)
    objs = []
    for k in range(body.max() + 1):
        sel = body == k
        used, inv = np.unique(Q[sel], return_inverse=True)
        p = arrays["pressure"][sel] if "pressure" in arrays else None
        name = names[k] if names else f"body_{k:04d}"
        objs.append(SurfaceObject(name, P[used], inv.reshape(-1, 4), p))
    return SurfaceFile(objs)


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write mesh to {path}: {exc}") from exc


def export_mesh(asm, fmt: str, path, pressures: Optional[dict] = None) -> Path:
    """Write the assembly surface; ``pressures`` as from :func:`face_pressures`."""
    objs = surface_objects(asm, pressures)
    if fmt == "obj":
        write_obj(objs, path)
    elif fmt == "vtk-ascii":
        write_vtk(objs, path)
    else:
        raise ValueError(f"unknown format {fmt!r}; use one of {FORMATS}")
    return Path(path)


def read_mesh(path, fmt: Optional[str] = None) -> SurfaceFile:
    fmt = fmt or ("obj" if str(path).endswith(".obj") else "vtk-ascii")
    return read_obj(path) if fmt == "obj" else read_vtk(path)
