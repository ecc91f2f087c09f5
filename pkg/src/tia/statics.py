"""Kinematic classification and contact-force equilibrium of rigid assemblies.

Three linear programs probe the cone of admissible first-order motions
``{dq : G^T dq >= 0}``:

* feasibility: ``z* = 0`` iff the cone is trivial (locked),
* activation / suppression: the largest and smallest external work rate
  ``f^T dq`` over the cone intersected with the unit l1 ball.

For locked and suppressed assemblies the contact forces are the minimum-norm
solution of ``G lam = -f, lam >= 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog, nnls

from .contact import ContactJacobian
from .geometry import Assembly

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-6
GAMMA_REL_TOL = 1e-9
EXPLOSION_REL_TOL = 1e-9
RANK_TOL = 1e-12

LOCKED, ACTIVATED, NEUTRAL, SUPPRESSED = "locked", "activated", "neutral", "suppressed"


class SolverFailure(RuntimeError):
    pass


class ContractViolation(RuntimeError):
    pass


@dataclass
class KinematicReport:
    z_star: float
    classification: str
    gamma_max: Optional[float] = None
    gamma_min: Optional[float] = None
    mechanism: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class EquilibriumReport:
    lambdas: np.ndarray = field(repr=False)
    residual: float
    feasible: bool
    iterations: int = 0


def _matrix(G):
    if isinstance(G, ContactJacobian):
        return G.matrix
    if sp.issparse(G):
        return G.tocsc()
    return sp.csc_matrix(np.atleast_2d(np.asarray(G, dtype=float)))


def _linprog(c, A_ub, b_ub, bounds, what):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise SolverFailure(
            f"{what}: HiGHS status {res.status} ({res.message}); "
            f"iterations={getattr(res, 'nit', '?')}"
        )
    return res


def kinematic_feasibility(
    G, length_scale: float = 1.0, method: str = "auto"
) -> tuple[float, np.ndarray]:
    """Size of the admissible cone ``C = {dq : G^T dq >= 0}``; returns ``(z*, dq)``.

    ``z* = z_open + dim null(G^T)`` where ``z_open`` is the largest total gap
    opening rate ``1^T G^T dq`` over ``C`` with ``||dq||_1 <= 1`` (an LP of the
    same form as the work-rate LPs) and the null space collects the sliding
    motions that leave every gap unchanged.  If ``z_open = 0`` every admissible
    motion slides, so ``z* = 0`` exactly when ``C = {0}``.  The returned ``dq``
    is an admissible non-zero motion when one exists.

    With ``method="auto"`` a full-rank ``G`` is first tested for a strictly
    positive self-equilibrated force set ``G lam = 0, lam >= 1``; by Farkas'
    lemma that certifies ``z_open = 0`` without the LP.  ``length_scale``
    converts rotations to lengths for the rank test.
    """
    A = _matrix(G)
    m, nc = A.shape
    nullity, slide = _sliding_motions(A, length_scale)
    if method == "auto" and nullity == 0 and nc > 0:
        lam, *_ = _dual_newton(A, -(A @ np.ones(nc)), tol=1e-12)
        if lam is not None:
            return 0.0, np.zeros(m)
    z_open, dq = _work_rate_lp(A, A @ np.ones(nc), +1.0)
    if z_open <= GAMMA_REL_TOL * max(1.0, float(np.linalg.norm(A @ np.ones(nc)))):
        z_open = 0.0
        dq = slide
    return z_open + nullity, dq


def _sliding_motions(A, length_scale):
    """Dimension of ``null(G^T)`` and one unit (max-norm) vector from it."""
    m = A.shape[0]
    D = np.ones(m)
    for k in range(m // 6):
        D[6 * k + 3 : 6 * k + 6] = 1.0 / length_scale
    As = sp.diags(D) @ A  # rotations measured as arc lengths
    w, V = np.linalg.eigh((As @ As.T).toarray())
    null = w <= RANK_TOL * max(w[-1], 1e-300) if m else np.zeros(0, bool)
    if not null.any():
        return 0, np.zeros(m)
    dq = D * V[:, 0]
    return int(null.sum()), dq / np.abs(dq).max()


def _work_rate_lp(G, f_ext, sign):
    A = _matrix(G)
    m, nc = A.shape
    f = np.asarray(f_ext, dtype=float)
    # dq = u - v with u, v >= 0 and 1^T (u + v) <= 1
    A_ub = sp.vstack(
        [
            sp.hstack([-A.T, A.T]),
            sp.csr_matrix(np.ones((1, 2 * m))),
        ],
        format="csc",
    )
    b_ub = np.concatenate([np.zeros(nc), [1.0]])
    c = -sign * np.concatenate([f, -f])
    res = _linprog(c, A_ub, b_ub, [(0.0, None)] * (2 * m), "work-rate LP")
    dq = res.x[:m] - res.x[m:]
    return float(f @ dq), dq


def mechanism_activation(G, f_ext) -> tuple[float, np.ndarray]:
    """``max f^T dq`` over admissible motions with ``||dq||_1 <= 1``."""
    g, dq = _work_rate_lp(G, f_ext, +1.0)
    return max(g, 0.0), dq


def mechanism_suppression(G, f_ext) -> float:
    """``min f^T dq`` over admissible motions with ``||dq||_1 <= 1``."""
    g, _ = _work_rate_lp(G, f_ext, -1.0)
    return min(g, 0.0)


def classify(z_star, gamma_max=None, gamma_min=None, f_norm: float = 1.0) -> str:
    if z_star == 0:
        return LOCKED
    eps = GAMMA_REL_TOL * f_norm
    if gamma_max > eps:
        return ACTIVATED
    if gamma_min < -eps:
        return SUPPRESSED
    return NEUTRAL


def kinematic_report(G, f_ext, length_scale: float = 1.0) -> KinematicReport:
    z, dq = kinematic_feasibility(G, length_scale)
    if z == 0:
        return KinematicReport(z, LOCKED)
    gmax, mech = mechanism_activation(G, f_ext)
    gmin = mechanism_suppression(G, f_ext)
    cls = classify(z, gmax, gmin, float(np.linalg.norm(f_ext)))
    return KinematicReport(z, cls, gmax, gmin, mech if cls == ACTIVATED else dq)


# ---------------------------------------------------------------------------
# minimum-norm contact forces
# ---------------------------------------------------------------------------


def _relative_residual(A, lam, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ lam - b)
    return float(r / nb) if nb > 0 else float(r)


def _dual_newton(A, b, tol, max_iter=200, polish=1e-14):
    """Semismooth Newton on the dual of ``min ||lam||^2/2, A lam = b, lam >= 0``.

    The dual function ``theta(mu) = ||(A^T mu)_+||^2/2 - b^T mu`` is convex and
    piecewise quadratic; its minimizer gives ``lam = (A^T mu)_+``.  Iterates
    until the relative residual reaches ``polish`` or stops improving.
    Returns ``(lam, iterations)``, with ``lam = None`` unless the residual got
    below ``tol``.
    """
    m = A.shape[0]
    At = A.T.tocsr()
    Ac = A.tocsc()
    reg = 1e-12 * max(1.0, float(abs(A).max()) ** 2)
    try:
        mu = np.linalg.solve((Ac @ Ac.T).toarray() + reg * np.eye(m), b)
    except np.linalg.LinAlgError:
        mu = np.zeros(m)

    def theta(mu):
        z = np.maximum(At @ mu, 0.0)
        return 0.5 * z @ z - b @ mu, z

    val, lam = theta(mu)
    best, best_res, best_mu = lam, _relative_residual(Ac, lam, b), mu
    it = 0
    for it in range(1, max_iter + 1):
        if best_res <= polish:
            break
        grad = Ac @ lam - b
        active = (At @ mu) > 0
        Aa = Ac[:, active]
        H = (Aa @ Aa.T).toarray()
        H[np.diag_indices(m)] += reg + 1e-10 * np.linalg.norm(grad)
        try:
            d = -np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            break
        step, slope = 1.0, grad @ d
        if not slope < 0:
            break
        new_val, new_lam = theta(mu + d)
        # full steps that halve the gradient are taken even when the
        # objective change is below roundoff
        if np.linalg.norm(Ac @ new_lam - b) >= 0.5 * np.linalg.norm(grad):
            while step >= 1e-14:
                if new_val <= val + 1e-4 * step * slope:
                    break
                step *= 0.5
                new_val, new_lam = theta(mu + step * d)
            if step < 1e-14:
                break
        mu = mu + step * d
        val, lam = new_val, new_lam
        if not np.isfinite(val):
            break
        res = _relative_residual(Ac, lam, b)
        if res < best_res:
            best, best_res, best_mu = lam, res, mu
        elif best_res <= tol:
            break  # no further progress at machine precision
    return (best if best_res <= tol else None), it, best_mu


def _prox_newton(A, b, mu, tol, outer=50, inner=20):
    """Proximal-point iterations on the same dual, each solved by Newton.

    ``theta(mu) + rho/2 ||mu - mu_k||^2`` is strongly convex, so the inner
    Newton steps cannot stall on kinks the way the plain iteration can.
    """
    m = A.shape[0]
    At = A.T.tocsr()
    rho = 1e-8 * max(1.0, float(abs(A).max()) ** 2)
    it = 0
    lam = np.maximum(At @ mu, 0.0)
    for _ in range(outer):
        center = mu.copy()

        def phi(x):
            z = np.maximum(At @ x, 0.0)
            d = x - center
            return 0.5 * z @ z - b @ x + 0.5 * rho * d @ d, z

        val, lam = phi(mu)
        for _ in range(inner):
            it += 1
            grad = A @ lam - b + rho * (mu - center)
            if np.linalg.norm(grad) <= 1e-13 * max(1.0, np.linalg.norm(b)):
                break
            active = (At @ mu) > 0
            Aa = A[:, active]
            H = (Aa @ Aa.T).toarray() + rho * np.eye(m)
            d = -np.linalg.solve(H, grad)
            step, slope = 1.0, grad @ d
            new_val, new_lam = phi(mu + d)
            new_grad = A @ new_lam - b + rho * (mu + d - center)
            # near the optimum objective decrease drowns in roundoff, so a
            # full step that shrinks the gradient is accepted outright
            if np.linalg.norm(new_grad) >= 0.5 * np.linalg.norm(grad):
                while step > 1e-14:
                    if new_val <= val + 1e-4 * step * slope:
                        break
                    step *= 0.5
                    new_val, new_lam = phi(mu + step * d)
                if step <= 1e-14:
                    break
            mu = mu + step * d
            val, lam = new_val, new_lam
        if _relative_residual(A, lam, b) <= min(tol, 1e-12):
            break
    res = _relative_residual(A, lam, b)
    return (lam if res <= tol else None), it


def solve_contact_forces(
    G, f_ext, classification: Optional[str] = None, tol: float = RESIDUAL_TOL
) -> EquilibriumReport:
    """Minimum-norm nonnegative contact forces balancing ``f_ext``.

    Infeasibility is judged by the nonnegative least-squares residual
    ``min ||G lam + f||/||f||`` over ``lam >= 0``.
    """
    if classification in (ACTIVATED, NEUTRAL):
        raise ContractViolation(
            f"equilibrium is only defined for locked/suppressed states, got {classification}"
        )
    A = _matrix(G)
    b = -np.asarray(f_ext, dtype=float)
    if not np.any(b):
        return EquilibriumReport(np.zeros(A.shape[1]), 0.0, True)
    lam, it, mu = _dual_newton(A, b, tol=tol)
    if lam is None:
        log.info("dual Newton stalled after %d iterations; proximal restart", it)
        lam, extra = _prox_newton(A.tocsc(), b, mu, tol)
        it += extra
    if lam is not None:
        res = _relative_residual(A, lam, b)
        return EquilibriumReport(lam, res, res <= tol, it)
    # no equilibrium found; report the best achievable residual
    log.info("dual Newton stopped after %d iterations; running NNLS", it)
    lam, _ = nnls(A.toarray(), b, maxiter=50 * A.shape[1])
    res = _relative_residual(A, lam, b)
    if res <= tol:
        raise SolverFailure(
            f"NNLS residual {res:.3e} says the load is sustainable but the "
            f"min-norm solve did not converge ({it} iterations)"
        )
    return EquilibriumReport(lam, res, False, it)


# ---------------------------------------------------------------------------
# explosion test
# ---------------------------------------------------------------------------


def explosion_motion(asm: Assembly, G: ContactJacobian) -> np.ndarray:
    dq = np.zeros(G.n_dof)
    for b in asm.free_bodies:
        k = G.free_index[b.id]
        e = np.array([b.centroid[0], b.centroid[1], 0.0])
        dq[6 * k : 6 * k + 3] = e / np.linalg.norm(e)
    return dq


def explosion_check(asm: Assembly, G: ContactJacobian) -> bool:
    """True when all free blocks can move radially outward at once."""
    dg = G.matrix.T @ explosion_motion(asm, G)
    frame = {b.id for b in asm.bodies if b.is_frame}
    inner = np.array(
        [p.master_body not in frame and p.slave_body not in frame for p in G.pairs],
        dtype=bool,
    )
    if not inner.any():
        return True
    return bool(dg[inner].min() >= -EXPLOSION_REL_TOL * asm.r_i)
