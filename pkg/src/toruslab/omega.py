"""Finite-horizon approximation of the nonwandering set, and weak
transitivity checks.

A grid box is *certified nonreturning* at horizon ``n_max`` when the outer
enclosures of its first ``n_max`` iterates all miss the box: soundness of
the enclosures makes this a proof that no point of the box returns to it
within the horizon.  The remaining boxes over-approximate the nonwandering
set; the over-approximation shrinks as the horizon grows.

Weak transitivity of two box domains is verified by iterating the outer
box enclosure of one until it meets the other, confirming every candidate
hit with a genuine sample orbit landing inside the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from .boxes import BoxDomain, cover_indices
from .errors import BudgetError
from .skew import SkewProduct

__all__ = [
    "NonwanderingApprox",
    "nonwandering_approx",
    "weak_transitivity_check",
]


@dataclass(frozen=True)
class NonwanderingApprox:
    """Partition of the grid into returning and certified-nonreturning boxes.

    ``returning`` over-approximates the nonwandering set at horizon
    ``horizon``; ``first_hit`` maps each returning box to the first step at
    which its enclosure met it again.
    """

    m: int
    horizon: int
    returning: frozenset
    certified: frozenset
    first_hit: dict

    def returning_mask(self) -> np.ndarray:
        mask = np.zeros((self.m, self.m), dtype=bool)
        for i, j in self.returning:
            mask[i, j] = True
        return mask

    def returning_domain(self) -> BoxDomain:
        return BoxDomain(self.m, self.returning)


def nonwandering_approx(f: SkewProduct, m: int, n_max: int) -> NonwanderingApprox:
    """Certify nonreturning boxes by iterating outer rectangle enclosures.

    All boxes are advanced together as rectangle arrays; a box is resolved
    (returning) at the first step where its image enclosure overlaps it,
    and the survivors at the horizon are the certified set.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if m < 1:
        raise ValueError("m must be >= 1")
    size = 1.0 / m
    ii, jj = np.divmod(np.arange(m * m), m)
    box_s = ii.astype(float) / m
    box_t = jj.astype(float) / m

    active = np.arange(m * m)
    s_lo = box_s.copy()
    t_lo = box_t.copy()
    s_w = np.full(m * m, size)
    t_w = np.full(m * m, size)

    first_hit: dict = {}
    for n in range(1, n_max + 1):
        s_lo, s_w, t_lo, t_w = f.rect_step(s_lo, s_w, t_lo, t_w)
        bs = box_s[active]
        bt = box_t[active]
        hit_s = ((bs - s_lo) % 1.0 <= s_w) | ((s_lo - bs) % 1.0 <= size)
        hit_t = ((bt - t_lo) % 1.0 <= t_w) | ((t_lo - bt) % 1.0 <= size)
        hit = hit_s & hit_t
        if np.any(hit):
            for b in active[hit]:
                first_hit[(int(b) // m, int(b) % m)] = n
            keep = ~hit
            active = active[keep]
            if active.size == 0:
                break
            s_lo, s_w = s_lo[keep], s_w[keep]
            t_lo, t_w = t_lo[keep], t_w[keep]

    certified = frozenset((int(b) // m, int(b) % m) for b in active)
    returning = frozenset(first_hit)
    return NonwanderingApprox(m, n_max, returning, certified, first_hit)


def near_mask(approx: NonwanderingApprox, radius: float) -> np.ndarray:
    """Boolean mask of boxes within ``radius`` of the returning set
    (circular dilation with torus wrap)."""
    m = approx.m
    mask = approx.returning_mask()
    if radius <= 0.0 or mask.all():
        return mask
    r = int(math.ceil(radius * m)) + 1
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    disc = (xx * xx + yy * yy) <= (radius * m + 1.0) ** 2
    padded = np.pad(mask, r, mode="wrap")
    out = ndimage.binary_dilation(padded, structure=disc)
    return out[r:-r, r:-r]


def _population_points(U: BoxDomain, population: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic sample points filling the cells of ``U``."""
    cells = sorted(U.cells)
    per_cell = max(1, int(math.ceil(math.sqrt(population / len(cells)))))
    offs = (np.arange(per_cell) + 0.5) / per_cell / U.m
    ss, tt = [], []
    for i, j in cells:
        base_s = i / U.m
        base_t = j / U.m
        for a in offs:
            for b in offs:
                ss.append(base_s + a)
                tt.append(base_t + b)
    return np.array(ss), np.array(tt)


def _cover_mask(f: SkewProduct, mask: np.ndarray, m: int) -> np.ndarray:
    """Outer box cover of the image of the cells marked in ``mask``."""
    ii, jj = np.nonzero(mask)
    size = 1.0 / m
    s_lo, s_w, t_lo, t_w = f.rect_step(ii / m, np.full(ii.size, size),
                                       jj / m, np.full(ii.size, size))
    rows, cols = cover_indices(m, s_lo, s_w, t_lo, t_w)
    out = np.zeros_like(mask)
    out[rows, cols] = True
    return out


def weak_transitivity_check(f: SkewProduct, U: BoxDomain, V: BoxDomain,
                            n_max: int, omega: Optional[NonwanderingApprox] = None,
                            population: int = 1024) -> int:
    """Least confirmed ``n <= n_max`` with ``f^n(U)`` meeting ``V``.

    Precondition: both domains intersect the returning-box set of ``omega``
    (computed at a default horizon when not supplied); the check targets
    open sets that meet the nonwandering set.  The outer box enclosure of
    ``U`` is iterated alongside a deterministic population of sample
    points; a step counts only when a sample orbit genuinely lands in
    ``V``.  Enclosure-only hits trigger one population refinement before
    the budget is declared exhausted.
    """
    if U.m != V.m:
        raise ValueError("domains must share one grid")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if omega is None:
        omega = nonwandering_approx(f, U.m, min(n_max, 2048))
    returning = omega.returning
    if not (U.cells & returning):
        raise ValueError("U does not meet the nonwandering over-approximation")
    if not (V.cells & returning):
        raise ValueError("V does not meet the nonwandering over-approximation")

    m = U.m
    v_mask = V.to_mask()
    enclosure_hits: list[int] = []

    for pop in (population, 4 * population):
        mask = U.to_mask()
        ss, tt = _population_points(U, pop)
        for n in range(1, n_max + 1):
            mask = _cover_mask(f, mask, m)
            ss, tt = f.unit_step_array(ss, tt)
            ci = np.minimum((ss * m).astype(int), m - 1)
            cj = np.minimum((tt * m).astype(int), m - 1)
            landed = v_mask[ci, cj]
            if np.any(landed):
                return n
            if (mask & v_mask).any():
                enclosure_hits.append(n)
        if not enclosure_hits:
            break
    raise BudgetError(
        f"no confirmed intersection within {n_max} steps "
        f"({len(enclosure_hits)} unconfirmed enclosure hits)",
        enclosure_hits=enclosure_hits[:16])
