"""Essentiality of box domains via deck-translation holonomy.

An open connected subset of the torus is inessential, simply essential or
doubly essential according to whether the image of its fundamental group
in ``Z^2`` has rank 0, 1 or 2.  For a box domain the image subgroup is the
holonomy group of its cell-adjacency graph: label every 4-neighbor edge
with the integer deck vector it crosses (zero away from the wrap, ``+-e1``
or ``+-e2`` across it), fix a spanning tree, and read off the fundamental
cycle holonomies.  The subgroup those generate is independent of the tree;
its rank decides the class.

Doubly essential domains always meet (two non-homotopic essential loops on
the torus have nonzero intersection number), and their complement lifts to
bounded components in the plane; the largest such diameter is the capture
threshold ``K``: any connected plane set of diameter beyond ``K`` cannot
fit in a complement component and therefore hits the lifted domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import ndimage

from .boxes import BoxDomain, cover_indices
from .skew import SkewProduct

__all__ = [
    "INESSENTIAL",
    "SIMPLY_ESSENTIAL",
    "DOUBLY_ESSENTIAL",
    "EssentialityResult",
    "classify_essentiality",
    "essential_intersection_check",
    "compute_capture_diameter",
    "forward_invariant_hull",
    "image_boxes",
    "lattice_basis",
    "random_doubly_essential",
]

INESSENTIAL = "inessential"
SIMPLY_ESSENTIAL = "simply-essential"
DOUBLY_ESSENTIAL = "doubly-essential"

_CLASS_BY_RANK = {0: INESSENTIAL, 1: SIMPLY_ESSENTIAL, 2: DOUBLY_ESSENTIAL}


@dataclass(frozen=True)
class EssentialityResult:
    """Classification of a box domain.

    ``basis`` generates the holonomy subgroup of the achieving component:
    empty for rank 0, one primitive vector for rank 1, a Hermite-reduced
    pair for rank 2.  ``component`` is the cell set of the component that
    achieves the class (the domain itself when connected).
    """

    klass: str
    rank: int
    basis: tuple[tuple[int, int], ...]
    component: frozenset


def _bezout(a: int, b: int) -> tuple[int, int, int]:
    """Extended gcd: returns ``(g, x, y)`` with ``a*x + b*y == g >= 0``."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def lattice_basis(vectors: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    """Hermite-style basis of the subgroup of ``Z^2`` generated by ``vectors``.

    Canonical output: ``[]`` for the trivial group, ``[(g1, b)]`` or
    ``[(0, g2)]`` for rank 1, ``[(g1, b), (0, g2)]`` with ``0 <= b < g2``
    for rank 2.
    """
    vs = sorted({(int(p), int(q)) for p, q in vectors} - {(0, 0)})
    if not vs:
        return []
    col1 = [v for v in vs if v[0] != 0]
    if not col1:
        g2 = 0
        for _, q in vs:
            g2 = math.gcd(g2, q)
        return [(0, g2)]
    v1 = col1[0]
    for w in col1[1:]:
        g, xc, yc = _bezout(v1[0], w[0])
        v1 = (g, xc * v1[1] + yc * w[1])
    g1 = v1[0]
    g2 = 0
    for p, q in vs:
        g2 = math.gcd(g2, q - (p // g1) * v1[1])
    if g2 == 0:
        return [v1]
    return [(g1, v1[1] % g2), (0, g2)]


def _primitive(v: tuple[int, int]) -> tuple[int, int]:
    g = math.gcd(abs(v[0]), abs(v[1]))
    p, q = v[0] // g, v[1] // g
    if p < 0 or (p == 0 and q < 0):
        p, q = -p, -q
    return p, q


def _component_result(cells: frozenset, m: int,
                      rng: Optional[np.random.Generator]) -> EssentialityResult:
    """Classify one connected cell set by spanning-tree holonomy."""
    order = sorted(cells)
    if rng is not None:
        order = [order[k] for k in rng.permutation(len(order))]
    root = order[0]
    potential = {root: (0, 0)}
    frontier = [root]
    dirs = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    while frontier:
        nxt = []
        for (i, j) in frontier:
            hi, hj = potential[(i, j)]
            local = dirs if rng is None else [dirs[k] for k in rng.permutation(4)]
            for di, dj in local:
                ni, nj = (i + di) % m, (j + dj) % m
                if (ni, nj) in cells and (ni, nj) not in potential:
                    # deck vector crossed by the step
                    dp = di if (i + di) in (-1, m) else 0
                    dq = dj if (j + dj) in (-1, m) else 0
                    potential[(ni, nj)] = (hi + dp, hj + dq)
                    nxt.append((ni, nj))
        frontier = nxt

    holonomies = set()
    for (i, j) in cells:
        hi, hj = potential[(i, j)]
        for di, dj in ((1, 0), (0, 1)):
            ni, nj = (i + di) % m, (j + dj) % m
            if (ni, nj) in cells:
                dp = di if i + di == m else 0
                dq = dj if j + dj == m else 0
                gi, gj = potential[(ni, nj)]
                hol = (hi + dp - gi, hj + dq - gj)
                if hol != (0, 0):
                    holonomies.add(hol)

    basis = lattice_basis(holonomies)
    rank = len(basis)
    if rank == 1:
        basis = [_primitive(basis[0])]
    return EssentialityResult(_CLASS_BY_RANK[rank], rank,
                              tuple(basis), cells)


def classify_essentiality(domain: BoxDomain,
                          tree_seed: Optional[int] = None) -> EssentialityResult:
    """Classify a box domain as inessential / simply / doubly essential.

    Disconnected domains are classified per component and the maximal class
    is returned with its achieving component.  ``tree_seed`` randomizes the
    spanning tree used for the holonomy computation; the result is
    invariant under that choice (the holonomy subgroup is tree-free), which
    the test suite exercises.
    """
    if not domain.cells:
        raise ValueError("cannot classify an empty domain")
    rng = None if tree_seed is None else np.random.default_rng(tree_seed)
    best: Optional[EssentialityResult] = None
    for comp in domain.components():
        res = _component_result(comp, domain.m, rng)
        if best is None or res.rank > best.rank:
            best = res
        if best.rank == 2:
            break
    assert best is not None
    return best


def _staircase_loop(m: int, rng: np.random.Generator, axis: int) -> set:
    """Cells of a closed staircase loop winding once along ``axis``.

    The cross coordinate random-walks inside a reflection band (it never
    wraps), so the loop class is exactly ``(1, 0)`` or ``(0, 1)``.
    """
    band = max(2, m // 4)
    j0 = int(rng.integers(m))
    lo, hi = j0 - band, j0 + band
    heights = [j0]
    j = j0
    for _ in range(m - 1):
        step = int(rng.integers(-1, 2))
        nj = j + step
        if nj < lo or nj > hi:
            nj = j - step
        heights.append(nj)
        j = nj
    cells = set()
    for i in range(m):
        a, b = heights[i], heights[(i + 1) % m]
        for h in range(min(a, b), max(a, b) + 1):
            cells.add((i, h % m) if axis == 0 else (h % m, i))
    return cells


def random_doubly_essential(m: int, rng: np.random.Generator) -> BoxDomain:
    """Union of one closed horizontal and one closed vertical staircase
    loop: holonomy contains both ``(1, 0)`` and ``(0, 1)``, so the result
    is doubly essential by construction."""
    cells = _staircase_loop(m, rng, 0) | _staircase_loop(m, rng, 1)
    return BoxDomain(m, frozenset(cells))


def essential_intersection_check(U: BoxDomain, V: BoxDomain) -> bool:
    """Whether two doubly essential domains share a cell.

    Both inputs must classify as doubly essential on the same grid; a
    ``False`` return would contradict the intersection-number argument for
    the discretization, so the invariant suite treats it as a failure.
    """
    if U.m != V.m:
        raise ValueError("domains must share one grid")
    for name, dom in (("first", U), ("second", V)):
        if classify_essentiality(dom).klass != DOUBLY_ESSENTIAL:
            raise ValueError(f"{name} domain is not doubly essential; "
                             "the check does not apply")
    return U.intersects(V)


def _cell_corner_diameter(cells: np.ndarray, m: int) -> float:
    """Euclidean diameter of a union of unit-grid cells, in units of 1/m.

    ``cells`` is an ``(n, 2)`` integer array of plane (not torus) cells.
    Works on the convex hull of the cell corners via a monotone chain, so
    degenerate (collinear) components are fine.
    """
    ii = cells[:, 0]
    jj = cells[:, 1]
    corners = np.unique(np.concatenate([
        np.stack([ii, jj], 1), np.stack([ii + 1, jj], 1),
        np.stack([ii, jj + 1], 1), np.stack([ii + 1, jj + 1], 1)]), axis=0)
    pts = [tuple(p) for p in corners.tolist()]
    pts.sort()
    if len(pts) <= 2:
        hull = pts
    else:
        def half(points):
            out = []
            for p in points:
                while len(out) >= 2 and (
                        (out[-1][0] - out[-2][0]) * (p[1] - out[-2][1])
                        - (out[-1][1] - out[-2][1]) * (p[0] - out[-2][0])) <= 0:
                    out.pop()
                out.append(p)
            return out
        hull = half(pts)[:-1] + half(pts[::-1])[:-1]
    best = 0.0
    for aidx in range(len(hull)):
        ax, ay = hull[aidx]
        for bx, by in hull[aidx + 1:]:
            d = (ax - bx) ** 2 + (ay - by) ** 2
            if d > best:
                best = d
    return math.sqrt(best) / m


def compute_capture_diameter(U: BoxDomain) -> float:
    """Capture threshold ``K`` of a doubly essential box domain.

    Lifts the complement to a 3x3 patch of fundamental domains, labels its
    8-connected components, and returns the largest Euclidean diameter of a
    complete component meeting the center copy.  Any connected plane set of
    diameter exceeding ``K`` cannot be contained in a single complement
    component, hence intersects the lift of ``U``.

    Raises ``ValueError`` when ``U`` is not doubly essential or when a
    complement component cannot be bounded within the patch (a periodic or
    boundary-touching component), mirroring that ``K`` is undefined without
    double essentiality.
    """
    if classify_essentiality(U).klass != DOUBLY_ESSENTIAL:
        raise ValueError("capture diameter requires a doubly essential domain")
    m = U.m
    comp_mask = ~U.to_mask()
    if not comp_mask.any():
        return 0.0
    big = np.tile(comp_mask, (3, 3))
    labels, nlab = ndimage.label(big, structure=np.ones((3, 3), dtype=bool))
    if nlab == 0:
        return 0.0

    for shift in ((m, 0), (0, m)):
        a = labels[shift[0]:, shift[1]:] if shift[0] else labels[:, m:]
        b = labels[:-m, :] if shift[0] else labels[:, :-m]
        overlap = (a == b) & (a > 0)
        if overlap.any():
            raise ValueError(
                "complement has an unbounded (periodic) component; the "
                "domain is not effectively doubly essential at this grid")

    center = np.unique(labels[m:2 * m, m:2 * m])
    center = set(int(v) for v in center if v > 0)
    border = np.concatenate([labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]])
    bad = center & set(int(v) for v in np.unique(border) if v > 0)
    if bad:
        raise ValueError(
            "a complement component meeting the center copy reaches the "
            "patch boundary; cannot certify its diameter on a 3x3 patch")

    best = 0.0
    for lab in sorted(center):
        cells = np.argwhere(labels == lab)
        best = max(best, _cell_corner_diameter(cells, m))
    return best


def image_boxes(f: SkewProduct, domain: BoxDomain) -> BoxDomain:
    """Outer box cover of the image of a box domain under ``f``."""
    m = domain.m
    s_lo, s_w, t_lo, t_w = domain.cell_rects()
    a, b, c, d = f.rect_step(s_lo, s_w, t_lo, t_w)
    rows, cols = cover_indices(m, a, b, c, d)
    return BoxDomain(m, frozenset(zip(rows.tolist(), cols.tolist())))


def forward_invariant_hull(f: SkewProduct, U0: BoxDomain, n_max: int) -> BoxDomain:
    """Box cover of the forward-image union ``f(U0) | f^2(U0) | ...``.

    Outer enclosures make the result an over-approximation of the true
    forward hull truncated at ``n_max`` steps.  Iteration stops early once
    the union is verified forward invariant (its own image cover adds no
    new cells), after which no later iterate can either.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    current = U0
    hull_cells = set(U0.cells)
    stalled = False
    for _ in range(n_max):
        current = image_boxes(f, current)
        new = current.cells - hull_cells
        hull_cells |= new
        if not new:
            if stalled:
                break
            full = image_boxes(f, BoxDomain(U0.m, frozenset(hull_cells)))
            if full.cells <= hull_cells:
                break
            stalled = True
        else:
            stalled = False
    return BoxDomain(U0.m, frozenset(hull_cells))
