"""Generalized external loads for the five canonical load cases.

Surface tractions are lumped per face: a face of area ``A`` loaded with
traction ``p0 d`` contributes the force ``p0 A d`` at its centroid and the
torque ``lever x F`` about the body centroid.  Units are mm, N and MPa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .contact import ContactJacobian
from .geometry import Assembly

LOAD_KINDS = ("pipe", "tunnel", "pillar", "beam", "shaft")


class TaggingError(ValueError):
    pass


@dataclass(frozen=True)
class LoadCase:
    """One boundary value problem.

    ``pillar_mode`` picks how the axial pillar load enters: ``"top_layer"``
    pushes the topmost interior layer down through the faces it shares with
    the (fixed) top frame, ``"release_frame"`` frees the top frame and loads
    its flat top.
    """

    kind: str = "pipe"
    p0: float = 0.01
    target_layer: Optional[int] = None  # 1-based; beam and shaft only
    gravity: bool = False
    rho: float = 2.4e-9  # t/mm^3 (concrete), so rho*g*V is in N
    g: float = 9810.0  # mm/s^2
    pillar_mode: str = "top_layer"

    def __post_init__(self):
        if self.kind not in LOAD_KINDS:
            raise ValueError(f"unknown load case {self.kind!r}")
        if not self.p0 > 0:
            raise ValueError("p0 must be positive")
        if self.pillar_mode not in ("top_layer", "release_frame"):
            raise ValueError(f"unknown pillar_mode {self.pillar_mode!r}")

    def layer_for(self, L: int) -> int:
        """1-based loaded layer: the given one, else ceil(L/2) + 1 (7 of 12)."""
        k = self.target_layer if self.target_layer is not None else math.ceil(L / 2) + 1
        if not 1 <= k <= L:
            raise ValueError(f"target layer {k} outside 1..{L}")
        return k

    @property
    def releases_top_frame(self) -> bool:
        return self.kind == "pillar" and self.pillar_mode == "release_frame"


@dataclass
class GeneralizedLoad:
    """Per-body force (N) and torque about the centroid (N mm)."""

    forces: dict = field(default_factory=dict)
    torques: dict = field(default_factory=dict)

    def add(self, body: int, F, M):
        self.forces[body] = self.forces.get(body, np.zeros(3)) + F
        self.torques[body] = self.torques.get(body, np.zeros(3)) + M

    def scaled(self, alpha: float) -> "GeneralizedLoad":
        return GeneralizedLoad(
            {b: alpha * v for b, v in self.forces.items()},
            {b: alpha * v for b, v in self.torques.items()},
        )

    def vector(self, jac: ContactJacobian) -> np.ndarray:
        """Stack into the free-DOF ordering of ``jac``; fixed bodies drop out."""
        f = np.zeros(jac.n_dof)
        for b, k in jac.free_index.items():
            if b in self.forces:
                f[6 * k : 6 * k + 3] = self.forces[b]
                f[6 * k + 3 : 6 * k + 6] = self.torques[b]
        return f

    def net_force(self) -> np.ndarray:
        return sum(self.forces.values(), np.zeros(3))

    def net_torque(self, about=(0.0, 0.0, 0.0), centroids=None) -> np.ndarray:
        """Total moment about ``about``; needs body centroids for the transfer."""
        about = np.asarray(about, dtype=float)
        total = np.zeros(3)
        for b, F in self.forces.items():
            total += self.torques[b] + np.cross(centroids[b] - about, F)
        return total


def _face_loads(body, face_idx, directions, p0, out: GeneralizedLoad):
    m = body.mesh
    areas = m.face_areas()[face_idx]
    cents = m.face_centroids()[face_idx]
    F = p0 * areas[:, None] * directions
    M = np.cross(cents - body.centroid, F)
    out.add(body.id, F.sum(axis=0), M.sum(axis=0))


def _tagged(body, *tags):
    idx = body.mesh.faces_with_tag(*tags)
    if len(idx) == 0:
        raise TaggingError(f"body {body.id} has no faces tagged {tags}")
    return idx


def assemble_load(asm: Assembly, case: LoadCase) -> GeneralizedLoad:
    out = GeneralizedLoad()
    p0 = case.p0
    L = asm.n_layers
    free = asm.free_bodies

    if case.kind in ("pipe", "tunnel"):
        tag = "inner" if case.kind == "pipe" else "outer"
        for b in free:
            idx = _tagged(b, tag)
            # a pressure pushes into the loaded surface, i.e. along -n_out
            _face_loads(b, idx, -b.mesh.face_normals()[idx], p0, out)
    elif case.kind == "pillar":
        if case.releases_top_frame:
            for b in asm.bodies:
                if b.layer == L:
                    idx = _tagged(b, "frame_exposed")
                    d = np.tile([0.0, 0.0, -1.0], (len(idx), 1))
                    _face_loads(b, idx, d, p0, out)
        else:
            _pillar_top_layer(asm, p0, out)
    elif case.kind == "beam":
        k = case.layer_for(L) - 1
        b = asm.body_at(k, 0)
        idx = _tagged(b, "outer")
        _face_loads(b, idx, -b.mesh.face_normals()[idx], p0, out)
    elif case.kind == "shaft":
        k = case.layer_for(L) - 1
        for b in asm.bodies:
            if b.layer != k:
                continue
            idx = _tagged(b, "outer")
            c = b.mesh.face_centroids()[idx]
            r = np.hypot(c[:, 0], c[:, 1])
            e_phi = np.stack([-c[:, 1] / r, c[:, 0] / r, np.zeros(len(r))], axis=1)
            _face_loads(b, idx, e_phi, p0, out)

    if case.gravity:
        bodies = list(free)
        if case.releases_top_frame:
            bodies += [b for b in asm.bodies if b.layer == L]
        for b in bodies:
            out.add(b.id, np.array([0.0, 0.0, -case.rho * b.volume * case.g]), np.zeros(3))

    for b in free:
        out.forces.setdefault(b.id, np.zeros(3))
        out.torques.setdefault(b.id, np.zeros(3))
    return out


def _pillar_top_layer(asm: Assembly, p0: float, out: GeneralizedLoad):
    """Axial load on the top interior layer, as if the top frame pressed on it.

    Each face shared with the top frame receives ``-e_z p0 |A_z|``, the
    downward pressure over its horizontal projection; the layer as a whole
    then carries ``p0`` times the annulus area.
    """
    L = asm.n_layers
    for b in asm.bodies:
        if b.layer != L - 1:
            continue
        idx = _tagged(b, "top")
        va = b.mesh.face_vector_areas()[idx]
        proj = np.abs(va[:, 2])
        d = np.zeros_like(va)
        d[:, 2] = -proj / np.linalg.norm(va, axis=1)
        _face_loads(b, idx, d, p0, out)
