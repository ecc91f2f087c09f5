"""Face-pair contact detection, gap functions and the contact Jacobian.

Contacts are detected once in the reference configuration: two boundary
faces of different bodies form a pair when their centroids coincide and
their outward normals are opposite.  Each pair contributes one column

    (-n, -(p_m x n), n, p_s x n)

to the Jacobian, in the slots of the master (lower index) and slave bodies.
Frame bodies are fixed, so their rows are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .geometry import Assembly

ANGLE_TOL = 1e-6
CONTACT_TAGS = ("top", "bottom", "lateral")


class PairingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ContactPair:
    master_body: int
    slave_body: int
    master_face: int
    slave_face: int
    normal: np.ndarray  # unit, outward from the master
    area: float
    centroid: np.ndarray
    lever_m: np.ndarray
    lever_s: np.ndarray


@dataclass
class ContactJacobian:
    """Sparse ``(6 N_free, n_c)`` matrix with the body-to-row map."""

    matrix: sp.csc_matrix
    free_index: dict  # body id -> block row (rows 6k..6k+5)
    pairs: list

    @property
    def n_dof(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_contacts(self) -> int:
        return self.matrix.shape[1]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def rotation(theta) -> np.ndarray:
    """Rodrigues formula for ``exp([theta]x)``."""
    theta = np.asarray(theta, dtype=float)
    angle = float(np.linalg.norm(theta))
    K = np.array(
        [
            [0.0, -theta[2], theta[1]],
            [theta[2], 0.0, -theta[0]],
            [-theta[1], theta[0], 0.0],
        ]
    )
    if angle < 1e-8:
        # second-order series; the closed form loses precision near zero
        return np.eye(3) + K + 0.5 * K @ K
    return (
        np.eye(3)
        + math.sin(angle) / angle * K
        + (1.0 - math.cos(angle)) / angle**2 * (K @ K)
    )


def _faces_of(asm: Assembly, tags=CONTACT_TAGS):
    """Stacked centroid/normal/area arrays of all contact-eligible faces."""
    cents, norms, areas, owner, local = [], [], [], [], []
    for b in asm.bodies:
        m = b.mesh
        idx = m.faces_with_tag(*tags)
        va = m.face_vector_areas()[idx]
        a = np.linalg.norm(va, axis=1)
        cents.append(m.face_centroids()[idx])
        norms.append(va / a[:, None])
        areas.append(a)
        owner.append(np.full(len(idx), b.id))
        local.append(idx)
    return (
        np.concatenate(cents),
        np.concatenate(norms),
        np.concatenate(areas),
        np.concatenate(owner),
        np.concatenate(local),
    )


def detect_contacts(
    asm: Assembly, tol: float | None = None, fixed: set | None = None
) -> list[ContactPair]:
    """Match opposing faces of different bodies by centroid and normal.

    ``tol`` defaults to ``1e-6 r_i``.  Pairs between two fixed bodies (by
    default the frame) are dropped since neither can move.
    """
    if tol is None:
        tol = 1e-6 * asm.r_i
    cents, norms, areas, owner, local = _faces_of(asm)
    tree = cKDTree(cents)
    cos_tol = math.cos(ANGLE_TOL)
    frame = fixed_bodies(asm) if fixed is None else set(fixed)
    partner = np.full(len(cents), -1)

    for i, j in sorted(tree.query_pairs(tol)):
        if owner[i] == owner[j]:
            continue
        if norms[i] @ norms[j] > -cos_tol:
            continue
        for a, b in ((i, j), (j, i)):
            if partner[a] not in (-1, b):
                fa = (int(owner[a]), int(local[a]))
                raise PairingError(
                    f"face {fa[1]} of body {fa[0]} has several partners: "
                    f"body {owner[partner[a]]} face {local[partner[a]]} and "
                    f"body {owner[b]} face {local[b]}"
                )
            partner[a] = b

    centroids = {b.id: b.centroid for b in asm.bodies}
    pairs = []
    for i in range(len(cents)):
        j = partner[i]
        if j < 0 or owner[i] > owner[j]:
            continue
        m, s = int(owner[i]), int(owner[j])
        if m in frame and s in frame:
            continue
        c = 0.5 * (cents[i] + cents[j])
        pairs.append(
            ContactPair(
                master_body=m,
                slave_body=s,
                master_face=int(local[i]),
                slave_face=int(local[j]),
                normal=norms[i].copy(),
                area=float(areas[i]),
                centroid=c,
                lever_m=c - centroids[m],
                lever_s=c - centroids[s],
            )
        )
    pairs.sort(key=lambda p: (p.master_body, p.slave_body, p.master_face))
    return pairs


def gap(pair: ContactPair, q: dict) -> float:
    """Signed normal separation ``n . (r_s - r_m)`` at generalized coords ``q``.

    ``q`` maps body id to a 6-vector ``(t, theta)``; missing bodies stay put.
    The normal is the master's reference normal, as in the linearized model.
    """
    zero = np.zeros(6)
    qm = np.asarray(q.get(pair.master_body, zero), dtype=float)
    qs = np.asarray(q.get(pair.slave_body, zero), dtype=float)
    c_m = pair.centroid - pair.lever_m
    c_s = pair.centroid - pair.lever_s
    r_m = c_m + qm[:3] + rotation(qm[3:]) @ pair.lever_m
    r_s = c_s + qs[:3] + rotation(qs[3:]) @ pair.lever_s
    return float(pair.normal @ (r_s - r_m))


def fixed_bodies(asm: Assembly) -> set:
    return {b.id for b in asm.bodies if b.is_frame}


def free_body_index(asm: Assembly, fixed: set | None = None) -> dict:
    fixed = fixed_bodies(asm) if fixed is None else set(fixed)
    free = [b.id for b in asm.bodies if b.id not in fixed]
    return {b: k for k, b in enumerate(free)}


def assemble_jacobian(
    asm: Assembly, pairs: list[ContactPair], fixed: set | None = None
) -> ContactJacobian:
    """Sparse Jacobian; ``fixed`` overrides which bodies have no DOFs."""
    free = free_body_index(asm, fixed)
    rows, cols, vals = [], [], []
    for c, pr in enumerate(pairs):
        n = pr.normal
        for body, sign, lever in (
            (pr.master_body, -1.0, pr.lever_m),
            (pr.slave_body, 1.0, pr.lever_s),
        ):
            k = free.get(body)
            if k is None:
                continue
            rows.extend(range(6 * k, 6 * k + 6))
            cols.extend([c] * 6)
            vals.extend(sign * np.concatenate([n, np.cross(lever, n)]))
    G = sp.csc_matrix((vals, (rows, cols)), shape=(6 * len(free), len(pairs)))
    return ContactJacobian(G, free, pairs)


def pack_q(jac: ContactJacobian, q: dict) -> np.ndarray:
    v = np.zeros(jac.n_dof)
    for b, k in jac.free_index.items():
        if b in q:
            v[6 * k : 6 * k + 6] = q[b]
    return v


def unpack_q(jac: ContactJacobian, v: np.ndarray) -> dict:
    return {b: np.asarray(v[6 * k : 6 * k + 6]) for b, k in jac.free_index.items()}
