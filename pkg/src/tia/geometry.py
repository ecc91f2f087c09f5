"""Parametric tubular interlocking blocks and their hexahedral meshes.

Two block families are provided:

* the sine block, a brick whose horizontal sections are sheared in z by a
  sine wave with a radially tapered amplitude, and
* the hexagon-based block, a hexagon extruded through the wall thickness whose
  two zigzag sides are replaced by arcs of its circumscribed circle.

Blocks are built in a planar frame ``x in [-l/2, l/2]`` (along the layer),
``y in [0, t]`` (through the wall), ``z`` (along the tube axis) and then wrapped
onto a cylinder.  Lengths are in mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

FACE_TAGS = ("inner", "outer", "top", "bottom", "lateral", "frame_exposed")


class InvalidParameters(ValueError):
    pass


class InvalidResolution(ValueError):
    pass


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


def linear_taper(y: np.ndarray, t: float) -> np.ndarray:
    return y / t


@dataclass(frozen=True)
class SineBlockParams:
    """Design vector of a tubular sine-block assembly.

    ``wave_unit`` selects the x-extent over which ``f`` full sine periods fit:
    ``"half"`` (half a block width, so a block carries ``2 f`` periods and a
    layer ``2 f n``) or ``"block"`` (the full block width).
    """

    h: float = 200.0
    a: float = 20.0
    f: float = 1.5
    s: float = 0.0
    n: int = 4
    r_i: float = 120.0
    t: float = 40.0
    L: int = 12
    wave_unit: str = "half"
    taper: Callable[[np.ndarray, float], np.ndarray] = field(
        default=linear_taper, compare=False, repr=False
    )

    def __post_init__(self):
        if not (self.h > 0 and self.t > 0 and self.r_i > 0):
            raise InvalidParameters("h, t and r_i must be positive")
        if self.a < 0:
            raise InvalidParameters("amplitude must be non-negative")
        if not self.f > 0:
            raise InvalidParameters("frequency must be positive")
        if not 0 <= self.s < 1:
            raise InvalidParameters("phase shift must lie in [0, 1)")
        if self.n < 2:
            raise InvalidParameters("need at least two blocks per layer")
        if self.L < 1:
            raise InvalidParameters("need at least one layer")
        if not self.a < self.h / 2:
            raise InvalidParameters("amplitude must be below h/2")
        if self.wave_unit not in ("half", "block"):
            raise InvalidParameters(f"unknown wave_unit {self.wave_unit!r}")
        if not _is_integer(self.periods_per_block * self.n):
            raise InvalidParameters(
                f"{self.periods_per_block * self.n:g} sine periods per layer; "
                "the wave must close around the tube"
            )

    @property
    def ell(self) -> float:
        return block_length(self.n, self.r_i)

    @property
    def r_o(self) -> float:
        return self.r_i + self.t

    @property
    def periods_per_block(self) -> float:
        return self.f * (2.0 if self.wave_unit == "half" else 1.0)

    @property
    def n_w(self) -> float:
        return 2.0 * self.f * self.n


@dataclass(frozen=True)
class HexBlockParams:
    n: int = 4
    r_i: float = 120.0
    r_o: float = 160.0
    L: int = 12

    def __post_init__(self):
        if self.n < 2:
            raise InvalidParameters("need at least two blocks per layer")
        if not self.r_o > self.r_i > 0:
            raise InvalidParameters("require r_o > r_i > 0")
        if self.L < 1:
            raise InvalidParameters("need at least one layer")

    @property
    def t(self) -> float:
        return self.r_o - self.r_i

    @property
    def ell(self) -> float:
        """Hexagon edge length; equals the in-plane pitch of the blocks."""
        return block_length(self.n, self.r_i)

    @property
    def h(self) -> float:
        """Layer height, the flat-to-flat width of the hexagon."""
        return 2.0 * self.ell * math.cos(math.pi / 6)


@dataclass(frozen=True)
class MeshResolution:
    div_x: int
    div_y: int = 4
    div_z: int = 24

    def __post_init__(self):
        if min(self.div_x, self.div_y, self.div_z) < 1:
            raise InvalidResolution("all subdivisions must be >= 1")

    @classmethod
    def default_for(cls, params) -> "MeshResolution":
        if isinstance(params, SineBlockParams):
            return cls(div_x=int(round(24 * params.f)), div_y=4, div_z=24)
        return cls(div_x=24, div_y=4, div_z=24)

    @classmethod
    def parse(cls, text: str) -> "MeshResolution":
        parts = [int(p) for p in text.replace(" ", "").split(",")]
        if len(parts) != 3:
            raise InvalidResolution(f"expected NX,NY,NZ, got {text!r}")
        return cls(*parts)

    def as_text(self) -> str:
        return f"{self.div_x},{self.div_y},{self.div_z}"


def _is_integer(v: float, tol: float = 1e-9) -> bool:
    return abs(v - round(v)) < tol


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------

# Local faces of a hexahedron with nodes (i,j,k), (i+1,j,k), (i+1,j+1,k),
# (i,j+1,k) and the same four at k+1, ordered so the vector area points out.
_HEX_FACES = {
    "x-": (0, 4, 7, 3),
    "x+": (1, 2, 6, 5),
    "y-": (0, 1, 5, 4),
    "y+": (3, 7, 6, 2),
    "z-": (0, 3, 2, 1),
    "z+": (4, 5, 6, 7),
}

_GAUSS = np.array([-1.0, 1.0]) / math.sqrt(3.0)


@dataclass
class BlockMesh:
    """Hexahedral volume mesh with tagged quadrilateral boundary faces."""

    vertices: np.ndarray  # (V, 3)
    hex_cells: np.ndarray  # (C, 8)
    surface_faces: np.ndarray  # (F, 4)
    face_tags: np.ndarray  # (F,) str
    face_cells: np.ndarray  # (F,) owning cell

    def copy(self) -> "BlockMesh":
        return BlockMesh(
            self.vertices.copy(),
            self.hex_cells.copy(),
            self.surface_faces.copy(),
            self.face_tags.copy(),
            self.face_cells.copy(),
        )

    def faces_with_tag(self, *tags: str) -> np.ndarray:
        return np.flatnonzero(np.isin(self.face_tags, tags))

    # face geometry -------------------------------------------------------
    def face_vector_areas(self) -> np.ndarray:
        """Exact vector area of each bilinear quad, 0.5 (v2-v0) x (v3-v1)."""
        q = self.vertices[self.surface_faces]
        return 0.5 * np.cross(q[:, 2] - q[:, 0], q[:, 3] - q[:, 1])

    def face_areas(self) -> np.ndarray:
        return np.linalg.norm(self.face_vector_areas(), axis=1)

    def face_normals(self) -> np.ndarray:
        va = self.face_vector_areas()
        return va / np.linalg.norm(va, axis=1)[:, None]

    def face_centroids(self) -> np.ndarray:
        return self.vertices[self.surface_faces].mean(axis=1)

    # volume --------------------------------------------------------------
    def cell_volumes_and_centroids(self) -> tuple[np.ndarray, np.ndarray]:
        """Trilinear cell volumes and centroids by 2x2x2 Gauss quadrature.

        The rule is exact for trilinear hexahedra.
        """
        X = self.vertices[self.hex_cells]  # (C, 8, 3)
        # reference corners in [-1,1]^3 matching the node order
        ref = np.array(
            [
                [-1, -1, -1],
                [1, -1, -1],
                [1, 1, -1],
                [-1, 1, -1],
                [-1, -1, 1],
                [1, -1, 1],
                [1, 1, 1],
                [-1, 1, 1],
            ],
            dtype=float,
        )
        vol = np.zeros(len(X))
        mom = np.zeros((len(X), 3))
        for xi in _GAUSS:
            for eta in _GAUSS:
                for zeta in _GAUSS:
                    p = np.array([xi, eta, zeta])
                    N = 0.125 * np.prod(1 + ref * p, axis=1)
                    dN = np.empty((8, 3))
                    for d in range(3):
                        others = [e for e in range(3) if e != d]
                        dN[:, d] = (
                            0.125
                            * ref[:, d]
                            * (1 + ref[:, others[0]] * p[others[0]])
                            * (1 + ref[:, others[1]] * p[others[1]])
                        )
                    J = np.einsum("cai,ad->cid", X, dN)
                    detJ = np.linalg.det(J)
                    vol += detJ
                    mom += detJ[:, None] * np.einsum("a,cai->ci", N, X)
        return vol, mom / vol[:, None]

    def volume(self) -> float:
        return float(self.cell_volumes_and_centroids()[0].sum())

    def centroid(self) -> np.ndarray:
        v, c = self.cell_volumes_and_centroids()
        return (v[:, None] * c).sum(axis=0) / v.sum()


def structured_hex_mesh(
    nx: int,
    ny: int,
    nz: int,
    coords: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    tags: dict[str, str],
) -> BlockMesh:
    """Mesh the image of the unit cube under ``coords``.

    ``coords(u, v, w)`` receives node parameters in [0,1] (arrays broadcast
    over the node grid) and returns points of shape (..., 3).  ``tags`` maps
    the cube sides ``"x-", "x+", "y-", "y+", "z-", "z+"`` to face tags.
    """
    u, v, w = np.meshgrid(
        np.linspace(0, 1, nx + 1),
        np.linspace(0, 1, ny + 1),
        np.linspace(0, 1, nz + 1),
        indexing="ij",
    )
    verts = coords(u, v, w).reshape(-1, 3)
    nid = np.arange((nx + 1) * (ny + 1) * (nz + 1)).reshape(nx + 1, ny + 1, nz + 1)

    i, j, k = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    cells = np.stack(
        [
            nid[i, j, k],
            nid[i + 1, j, k],
            nid[i + 1, j + 1, k],
            nid[i, j + 1, k],
            nid[i, j, k + 1],
            nid[i + 1, j, k + 1],
            nid[i + 1, j + 1, k + 1],
            nid[i, j + 1, k + 1],
        ],
        axis=1,
    )
    cell_id = np.arange(len(cells)).reshape(nx, ny, nz)

    side_cells = {
        "x-": cell_id[0, :, :],
        "x+": cell_id[-1, :, :],
        "y-": cell_id[:, 0, :],
        "y+": cell_id[:, -1, :],
        "z-": cell_id[:, :, 0],
        "z+": cell_id[:, :, -1],
    }
    faces, ftags, fcells = [], [], []
    for side, local in _HEX_FACES.items():
        c = side_cells[side].ravel()
        faces.append(cells[c][:, list(local)])
        ftags.append(np.full(len(c), tags[side], dtype=object))
        fcells.append(c)
    return BlockMesh(
        vertices=verts,
        hex_cells=cells,
        surface_faces=np.concatenate(faces),
        face_tags=np.concatenate(ftags).astype(str),
        face_cells=np.concatenate(fcells),
    )


# ---------------------------------------------------------------------------
# sine block
# ---------------------------------------------------------------------------


def block_length(n: int, r_i: float) -> float:
    """Planar block width for ``n`` blocks per layer on inner radius ``r_i``."""
    return r_i * math.sqrt(2.0 * (1.0 - math.cos(math.pi / n)))


def sine_offset(x, y, p: SineBlockParams, phase: float = 0.0):
    """z-displacement of the horizontal sections of a planar sine block.

    ``phase`` is the position of the block centre along the layer, in block
    widths; it lets neighbouring blocks sample one continuous wave.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    arg = 2.0 * math.pi * p.periods_per_block * (x / p.ell + phase) + p.s * math.pi
    return p.taper(y, p.t) * p.a * np.sin(arg)


def _check_resolution(p: SineBlockParams, res: MeshResolution) -> None:
    if res.div_x % 2:
        raise InvalidResolution("div_x must be even so staggered layers share nodes")
    if p.a == 0:
        return
    # extrema of sin(2 pi P (x/l + phase) + s pi) sit at x/l = (1/2 - s + k)/(2P) - phase;
    # with phase a multiple of 1/2 they must hit the grid x/l = -1/2 + i/div_x.
    P = Fraction(p.periods_per_block).limit_denominator(1000)
    s = Fraction(p.s).limit_denominator(1000)
    for phase in (Fraction(0), Fraction(1, 2)):
        first = (Fraction(1, 2) - s) / (2 * P) - phase
        spacing = 1 / (2 * P)
        # the grid index of every extremum must be an integer
        i0 = (first + Fraction(1, 2)) * res.div_x
        di = spacing * res.div_x
        if i0.denominator != 1 or di.denominator != 1:
            raise InvalidResolution(
                f"div_x={res.div_x} leaves sine extrema off the mesh lines "
                f"(need a multiple of {(4 * P).numerator * 1})"
            )


def build_planar_sine_block(
    p: SineBlockParams,
    res: MeshResolution,
    phase: float = 0.0,
    z0: float = 0.0,
    flat_bottom: Optional[float] = None,
    flat_top: Optional[float] = None,
) -> BlockMesh:
    """Hexahedral mesh of the sheared brick ``[-l/2,l/2] x [0,t] x [z0,z0+h]``.

    Every node is lifted by :func:`sine_offset`.  ``flat_bottom`` / ``flat_top``
    replace the respective sine surface by the plane ``z = value`` (trimmed
    frame blocks); interior nodes are spread linearly between the two ends.
    """
    _check_resolution(p, res)
    ell = p.ell

    def coords(u, v, w):
        x = (u - 0.5) * ell
        y = v * p.t
        off = sine_offset(x, y, p, phase)
        lo = z0 + off if flat_bottom is None else np.full_like(off, flat_bottom)
        hi = z0 + p.h + off if flat_top is None else np.full_like(off, flat_top)
        return np.stack([x, y, lo + w * (hi - lo)], axis=-1)

    tags = {
        "x-": "lateral",
        "x+": "lateral",
        "y-": "inner",
        "y+": "outer",
        "z-": "bottom" if flat_bottom is None else "frame_exposed",
        "z+": "top" if flat_top is None else "frame_exposed",
    }
    return structured_hex_mesh(res.div_x, res.div_y, res.div_z, coords, tags)


def map_to_cylinder(planar: BlockMesh, p, phi0: float = 0.0) -> BlockMesh:
    """Wrap a planar block onto the cylinder of inner radius ``r_i``.

    ``(x, y, z)`` goes to radius ``r_i + y`` at angle ``x/l * 2 pi/n + phi0``.
    The map is orientation reversing, so faces and cells are re-ordered to keep
    outward normals and positive cell volumes.
    """
    ell, n, r_i = p.ell, p.n, p.r_i
    x, y, z = planar.vertices.T
    phi = x / ell * (2.0 * math.pi / n) + phi0
    r = r_i + y
    verts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    return BlockMesh(
        vertices=verts,
        hex_cells=planar.hex_cells[:, [4, 5, 6, 7, 0, 1, 2, 3]],
        surface_faces=planar.surface_faces[:, ::-1],
        face_tags=planar.face_tags.copy(),
        face_cells=planar.face_cells.copy(),
    )


# ---------------------------------------------------------------------------
# hexagon-based block
# ---------------------------------------------------------------------------


def build_planar_hex_block(
    p: HexBlockParams, res: MeshResolution, z0: float = 0.0
) -> BlockMesh:
    """Hexagon (edge ``l``, flat top and bottom) extruded through ``t``.

    The right zigzag is replaced by the arc of the block's circumscribed circle
    and the left one by the arc of the left neighbour's circle, so congruent
    copies at pitch ``l`` mate along the arcs.  Horizontal sections keep the
    width ``l``; the flat top and bottom span ``[-l/2, l/2]``.
    """
    if res.div_x % 2:
        raise InvalidResolution("div_x must be even so staggered layers share nodes")
    ell, h = p.ell, p.h

    def coords(u, v, w):
        zl = (w - 0.5) * h
        right = np.sqrt(np.maximum(ell**2 - zl**2, 0.0))
        x = right - ell + u * ell
        return np.stack([x, v * p.t, z0 + zl + h / 2], axis=-1)

    tags = {
        "x-": "lateral",
        "x+": "lateral",
        "y-": "inner",
        "y+": "outer",
        "z-": "bottom",
        "z+": "top",
    }
    return structured_hex_mesh(res.div_x, res.div_y, res.div_z, coords, tags)


# ---------------------------------------------------------------------------
# assemblies
# ---------------------------------------------------------------------------


@dataclass
class Body:
    id: int
    mesh: BlockMesh
    centroid: np.ndarray
    volume: float
    layer: int  # -1 bottom frame, 0..L-1 interior, L top frame
    slot: int
    is_frame: bool
    phi0: float  # angle of the block centre
    contains: Callable[[np.ndarray, float], np.ndarray] = field(repr=False, default=None)


@dataclass
class Assembly:
    bodies: list[Body]
    r_i: float
    r_o: float
    kind: str  # "sine" | "hexagon"
    params: object
    resolution: MeshResolution
    layer_height: float

    @property
    def n_layers(self) -> int:
        return self.params.L

    @property
    def free_bodies(self) -> list[Body]:
        return [b for b in self.bodies if not b.is_frame]

    def body_at(self, layer: int, slot: int) -> Body:
        for b in self.bodies:
            if b.layer == layer and b.slot == slot:
                return b
        raise KeyError((layer, slot))


def _make_body(bid, mesh, layer, slot, is_frame, phi0, contains) -> Body:
    vols, cents = mesh.cell_volumes_and_centroids()
    V = float(vols.sum())
    c = (vols[:, None] * cents).sum(axis=0) / V
    return Body(bid, mesh, c, V, layer, slot, is_frame, phi0, contains)


def _to_planar(points, phi0, ell, n, r_i):
    """Inverse cylinder map relative to a block centred at ``phi0``."""
    pts = np.atleast_2d(points)
    phi = np.arctan2(pts[:, 1], pts[:, 0]) - phi0
    phi = (phi + math.pi) % (2.0 * math.pi) - math.pi
    x = phi * ell * n / (2.0 * math.pi)
    y = np.hypot(pts[:, 0], pts[:, 1]) - r_i
    return x, y, pts[:, 2]


def build_assembly(p: SineBlockParams, res: Optional[MeshResolution] = None) -> Assembly:
    """Layered tube of sine blocks with one frame layer below and above.

    All bed surfaces sample the same wave, so layer ``k`` (rotated by half a
    block when ``k`` is odd) mates conformingly with its neighbours.
    """
    res = res or MeshResolution.default_for(p)
    _check_resolution(p, res)
    ell, n, h, L = p.ell, p.n, p.h, p.L
    dphi = 2.0 * math.pi / n
    bodies: list[Body] = []
    for layer in range(-1, L + 1):
        shift = 0.5 if layer % 2 else 0.0
        is_frame = layer in (-1, L)
        for slot in range(n):
            phase = slot + shift
            z0 = layer * h
            flat_bottom = -h if layer == -1 else None
            flat_top = (L + 1) * h if layer == L else None
            planar = build_planar_sine_block(p, res, phase, z0, flat_bottom, flat_top)
            phi0 = phase * dphi
            mesh = map_to_cylinder(planar, p, phi0)
            contains = _sine_membership(p, phase, z0, flat_bottom, flat_top)
            bodies.append(_make_body(len(bodies), mesh, layer, slot, is_frame, phi0, contains))
    return Assembly(bodies, p.r_i, p.r_o, "sine", p, res, h)


def _sine_membership(p, phase, z0, flat_bottom, flat_top):
    ell, n = p.ell, p.n
    phi0 = phase * 2.0 * math.pi / n

    def contains(points, tol=1e-9):
        x, y, z = _to_planar(points, phi0, ell, n, p.r_i)
        off = sine_offset(x, np.clip(y, 0, p.t), p, phase)
        lo = z0 + off if flat_bottom is None else flat_bottom
        hi = z0 + p.h + off if flat_top is None else flat_top
        tx = tol * ell * n / (2 * math.pi * max(p.r_i, 1.0))
        return (
            (np.abs(x) < ell / 2 - tx)
            & (y > tol)
            & (y < p.t - tol)
            & (z > lo + tol)
            & (z < hi - tol)
        )

    return contains


def build_hex_assembly(p: HexBlockParams, res: Optional[MeshResolution] = None) -> Assembly:
    """Layered tube of hexagon-based blocks with flat frame layers."""
    res = res or MeshResolution.default_for(p)
    ell, n, h, L = p.ell, p.n, p.h, p.L
    dphi = 2.0 * math.pi / n
    bodies: list[Body] = []
    for layer in range(-1, L + 1):
        shift = 0.5 if layer % 2 else 0.0
        is_frame = layer in (-1, L)
        for slot in range(n):
            z0 = layer * h
            planar = build_planar_hex_block(p, res, z0)
            if layer == -1:
                planar.face_tags[planar.face_tags == "bottom"] = "frame_exposed"
            if layer == L:
                planar.face_tags[planar.face_tags == "top"] = "frame_exposed"
            phi0 = (slot + shift) * dphi
            mesh = map_to_cylinder(planar, p, phi0)
            contains = _hex_membership(p, phi0, z0)
            bodies.append(_make_body(len(bodies), mesh, layer, slot, is_frame, phi0, contains))
    return Assembly(bodies, p.r_i, p.r_o, "hexagon", p, res, h)


def _hex_membership(p, phi0, z0):
    ell, n, h = p.ell, p.n, p.h

    def contains(points, tol=1e-9):
        x, y, z = _to_planar(points, phi0, ell, n, p.r_i)
        zl = z - z0 - h / 2
        right = np.sqrt(np.maximum(ell**2 - zl**2, 0.0))
        u = x - right + ell
        return (
            (u > tol)
            & (u < ell - tol)
            & (y > tol)
            & (y < p.t - tol)
            & (np.abs(zl) < h / 2 - tol)
        )

    return contains


def build(params, res: Optional[MeshResolution] = None) -> Assembly:
    if isinstance(params, HexBlockParams):
        return build_hex_assembly(params, res)
    return build_assembly(params, res)


def overlapping_vertices(asm: Assembly, tol: float = 1e-9) -> list[tuple[int, int, int]]:
    """Vertices of one body strictly inside another, as ``(body, other, count)``."""
    boxes = [(b.mesh.vertices.min(axis=0), b.mesh.vertices.max(axis=0)) for b in asm.bodies]
    hits = []
    for a in asm.bodies:
        va = a.mesh.vertices
        for b in asm.bodies:
            if a.id == b.id:
                continue
            lo, hi = boxes[b.id]
            if np.any(boxes[a.id][0] > hi) or np.any(boxes[a.id][1] < lo):
                continue
            inside = b.contains(va, tol)
            if inside.any():
                hits.append((a.id, b.id, int(inside.sum())))
    return hits
