"""Brute-force reference solvers for small dense instances.

These deliberately share no code with the package solvers:

* work-rate LPs by enumerating candidate extreme rays of the admissible cone
  inside every orthant (rays with ``m - 1`` independent active constraints),
* minimum-norm contact forces by enumerating supports,
* NNLS residual from the same support enumeration.
"""

from itertools import combinations

import numpy as np


def _null_vectors(rows, m, tol=1e-10):
    """Unit null vectors of every ``(m-1)``-subset of ``rows`` with full rank."""
    rows = np.asarray(rows, dtype=float)
    if m == 1:
        return np.array([[1.0]])
    subsets = np.array(list(combinations(range(len(rows)), m - 1)))
    if len(subsets) == 0:
        return np.zeros((0, m))
    S = rows[subsets]  # (k, m-1, m)
    _, sv, Vt = np.linalg.svd(S)
    scale = np.maximum(sv[:, 0], 1e-300)
    ok = sv[:, -1] > tol * scale
    return Vt[ok, -1, :]


def candidate_rays(G, tol=1e-9):
    """Admissible directions that span every orthant piece of the cone.

    Each returned row ``x`` satisfies ``G^T x >= 0`` and ``||x||_1 = 1``.
    """
    G = np.asarray(G, dtype=float)
    m = G.shape[0]
    rows = np.vstack([G.T, np.eye(m)])
    V = _null_vectors(rows, m)
    V = np.vstack([V, -V])
    V = V / np.abs(V).sum(axis=1, keepdims=True)
    scale = max(1.0, np.abs(G).max())
    ok = (V @ G >= -tol * scale).all(axis=1)
    return V[ok]


def work_rate_bounds(G, f):
    """``(max, min)`` of ``f^T x`` over ``G^T x >= 0, ||x||_1 <= 1``."""
    R = candidate_rays(G)
    vals = R @ np.asarray(f, dtype=float)
    if len(vals) == 0:
        return 0.0, 0.0
    return max(0.0, vals.max()), min(0.0, vals.min())


def nullity(G, tol=1e-10):
    G = np.asarray(G, dtype=float)
    if G.size == 0:
        return G.shape[0]
    sv = np.linalg.svd(G, compute_uv=False)
    rank = int((sv > tol * sv[0]).sum()) if sv.size else 0
    return G.shape[0] - rank


def z_star(G):
    G = np.asarray(G, dtype=float)
    gmax, _ = work_rate_bounds(G, G @ np.ones(G.shape[1]))
    return gmax + nullity(G)


def _supports(n):
    for k in range(1, n + 1):
        yield from combinations(range(n), k)


def min_norm_forces(G, b, tol=1e-10):
    """Smallest ``||lam||`` with ``G lam = b, lam >= 0``; None if infeasible."""
    G = np.asarray(G, dtype=float)
    b = np.asarray(b, dtype=float)
    nb = max(np.linalg.norm(b), 1e-300)
    best = None
    if np.linalg.norm(b) == 0:
        return np.zeros(G.shape[1])
    for S in _supports(G.shape[1]):
        GS = G[:, S]
        x = np.linalg.pinv(GS) @ b
        if np.linalg.norm(GS @ x - b) > tol * nb or (x < -tol * nb).any():
            continue
        lam = np.zeros(G.shape[1])
        lam[list(S)] = np.maximum(x, 0.0)
        if best is None or lam @ lam < best @ best - 1e-15:
            best = lam
    return best


def nnls_residual(G, b):
    """``min ||G lam - b||`` over ``lam >= 0`` by support enumeration."""
    G = np.asarray(G, dtype=float)
    b = np.asarray(b, dtype=float)
    best = np.linalg.norm(b)
    for S in _supports(G.shape[1]):
        GS = G[:, S]
        x, *_ = np.linalg.lstsq(GS, b, rcond=None)
        if (x < -1e-12).any():
            continue
        best = min(best, np.linalg.norm(GS @ x - b))
    return best


def random_instance(rng, m=None, nc=None, kind="gauss"):
    """Random dense Jacobian with at most 8 DOFs and 12 contacts."""
    m = m or int(rng.integers(2, 9))
    nc = nc or int(rng.integers(1, 13))
    if kind == "gauss":
        return rng.normal(size=(m, nc))
    # integer entries give exact ties and degenerate faces
    return rng.integers(-2, 3, size=(m, nc)).astype(float)


def cube_on_plane(points, normal=(0.0, 0.0, 1.0)):
    """Jacobian of a unit cube (centroid at origin) touching a fixed support.

    ``points`` are contact points relative to the centroid; the cube is the
    slave body, so each column is ``(n, p x n)``.
    """
    n = np.asarray(normal, dtype=float)
    cols = [np.concatenate([n, np.cross(np.asarray(p, float), n)]) for p in points]
    return np.array(cols).T
