"""Contact-pressure evaluation measures.

For a body with face pressures ``p`` the participation ratio
``N_eff = (sum p)^2 / sum p^2`` counts how many faces effectively carry the
load.  The ``K = floor(N_eff)`` largest pressures form the effective set,
from which the assembly-level measures below are averaged over free bodies:

* effective area: masked face area over all contact face area, in %,
* effective mean pressure: mean of ``sum(masked p) / K``,
* max-mean pressure: mean of the per-body maximum pressure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class UndefinedMetric(ValueError):
    """Raised for a body whose pressures are all zero."""


def participation_ratio(pressures) -> float:
    p = np.asarray(pressures, dtype=float)
    s2 = float(p @ p)
    if s2 == 0.0:
        raise UndefinedMetric("all pressures are zero")
    return float(p.sum()) ** 2 / s2


def effective_mask(pressures, K: Optional[int] = None) -> np.ndarray:
    """Boolean mask of the ``K`` largest pressures; ties go to lower index."""
    p = np.asarray(pressures, dtype=float)
    if K is None:
        # guard against N_eff = 3.9999999 from rounding of a uniform field
        K = int(math.floor(participation_ratio(p) + 1e-9))
    order = np.lexsort((np.arange(len(p)), -p))
    mask = np.zeros(len(p), dtype=bool)
    mask[order[:K]] = True
    return mask


@dataclass
class PressureField:
    """Pair pressures ``lam / A`` and, per body, the faces it sees."""

    pair_pressure: np.ndarray
    pair_area: np.ndarray
    body_pairs: dict  # body id -> pair indices (sorted by the body's face index)
    body_faces: dict  # body id -> that body's face index for each listed pair

    @classmethod
    def from_solution(cls, pairs, lambdas, bodies=None) -> "PressureField":
        area = np.array([p.area for p in pairs], dtype=float)
        lam = np.asarray(lambdas, dtype=float)
        press = lam / area
        members: dict = {}
        for k, pr in enumerate(pairs):
            members.setdefault(pr.master_body, []).append((pr.master_face, k))
            members.setdefault(pr.slave_body, []).append((pr.slave_face, k))
        if bodies is not None:
            members = {b: members.get(b, []) for b in bodies}
        bp, bf = {}, {}
        for b, items in members.items():
            items.sort()
            bf[b] = np.array([f for f, _ in items], dtype=int)
            bp[b] = np.array([k for _, k in items], dtype=int)
        return cls(press, area, bp, bf)

    def pressures(self, body: int) -> np.ndarray:
        return self.pair_pressure[self.body_pairs[body]]

    def areas(self, body: int) -> np.ndarray:
        return self.pair_area[self.body_pairs[body]]


@dataclass
class MetricsReport:
    effective_area_pct: float
    p_eff_bar: float
    p_max_bar: float
    n_eff: dict = field(repr=False)
    masks: dict = field(repr=False)
    excluded: list = field(default_factory=list)


def effective_area_percent(field_: PressureField, masks: dict, bodies) -> float:
    """100 * masked area / contact area, both summed over ``bodies``."""
    num = sum(float(field_.areas(b)[masks[b]].sum()) for b in bodies if b in masks)
    den = sum(float(field_.areas(b).sum()) for b in bodies)
    return 100.0 * num / den


def effective_mean_pressure(pressures: dict, masks: dict) -> float:
    vals = [float(pressures[b][m].sum()) / int(m.sum()) for b, m in masks.items()]
    return float(np.mean(vals))


def max_mean_pressure(pressures: dict) -> float:
    return float(np.mean([float(np.max(p)) for p in pressures.values()]))


def evaluate_metrics(field_: PressureField, bodies) -> MetricsReport:
    """All measures over the given (free) bodies; all-zero bodies are skipped."""
    bodies = list(bodies)
    press, masks, neff, skipped = {}, {}, {}, []
    for b in bodies:
        p = field_.pressures(b)
        if len(p) == 0 or not np.any(p > 0):
            skipped.append(b)
            continue
        press[b] = p
        neff[b] = participation_ratio(p)
        masks[b] = effective_mask(p)
    if not press:
        raise UndefinedMetric("no body carries any contact pressure")
    return MetricsReport(
        effective_area_pct=effective_area_percent(field_, masks, bodies),
        p_eff_bar=effective_mean_pressure(press, masks),
        p_max_bar=max_mean_pressure(press),
        n_eff=neff,
        masks=masks,
        excluded=skipped,
    )
