"""Box domains: open subsets of the torus represented as grid cell sets.

An ``m x m`` grid splits the torus into cells ``[i/m, (i+1)/m] x
[j/m, (j+1)/m]``; a :class:`BoxDomain` is a set of such cells standing in
for the open union of their interiors.  Box domains are the common
currency of the topological and chain computations: essentiality is
decided on the cell adjacency graph, transition graphs have one node per
cell, and enclosures of map images are reduced to cell covers.

Serialization is a run-length encoding of the sorted linear cell indices
with an ``m count`` header; round-tripping is bit-exact since everything
is integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

__all__ = ["BoxDomain", "circ_gap", "cell_of_point", "cover_indices"]


def circ_gap(point: float, lo: float, width: float) -> float:
    """Circle distance from ``point`` to the arc ``[lo, lo + width]``."""
    g = (point - lo) % 1.0
    if g <= width:
        return 0.0
    return min(g - width, 1.0 - g)


def cell_of_point(m: int, z: tuple[float, float]) -> tuple[int, int]:
    """Grid cell containing the torus point ``z``."""
    s = z[0] % 1.0
    t = z[1] % 1.0
    return min(int(s * m), m - 1), min(int(t * m), m - 1)


def _expand_ranges(starts: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flatten integer ranges ``[starts_k, starts_k + counts_k)``.

    Returns the flattened values and the range id of each value.
    """
    total = int(counts.sum())
    rid = np.repeat(np.arange(len(counts)), counts)
    off = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    return starts[rid] + off, rid


def cover_indices(m: int, s_lo: np.ndarray, s_w: np.ndarray,
                  t_lo: np.ndarray, t_w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Grid cells meeting any of the given rectangles, as ``(rows, cols)``.

    Rectangles have ``s_lo, t_lo`` in ``[0, 1)`` and widths in ``[0, 1]``;
    the emitted index pairs may repeat across rectangles.
    """
    i0 = np.floor(s_lo * m).astype(np.int64)
    ni = np.minimum(np.floor((s_lo + s_w) * m).astype(np.int64) - i0, m - 1) + 1
    j0 = np.floor(t_lo * m).astype(np.int64)
    nj = np.minimum(np.floor((t_lo + t_w) * m).astype(np.int64) - j0, m - 1) + 1

    rows, rid = _expand_ranges(i0, ni)
    cols, rid2 = _expand_ranges(j0[rid], nj[rid])
    return rows[rid2] % m, cols % m


@dataclass(frozen=True)
class BoxDomain:
    """A set of grid cells on the torus at resolution ``m``."""

    m: int
    cells: frozenset

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("grid resolution must be positive")
        cells = frozenset((int(i), int(j)) for i, j in self.cells)
        object.__setattr__(self, "cells", cells)
        for i, j in cells:
            if not (0 <= i < self.m and 0 <= j < self.m):
                raise ValueError(f"cell ({i}, {j}) outside grid of size {self.m}")

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_cells(cls, m: int, cells: Iterable[tuple[int, int]]) -> "BoxDomain":
        return cls(m, frozenset(cells))

    @classmethod
    def full(cls, m: int) -> "BoxDomain":
        return cls(m, frozenset((i, j) for i in range(m) for j in range(m)))

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "BoxDomain":
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
            raise ValueError("mask must be a square 2-d array")
        ii, jj = np.nonzero(mask)
        return cls(mask.shape[0], frozenset(zip(ii.tolist(), jj.tolist())))

    @classmethod
    def ball(cls, m: int, center: tuple[float, float], radius: float) -> "BoxDomain":
        """Cells whose closed box meets the closed ball around ``center``."""
        s, t = center[0] % 1.0, center[1] % 1.0
        span = int(math.ceil(radius * m)) + 1
        ci, cj = cell_of_point(m, (s, t))
        cells = set()
        for di in range(-span, span + 1):
            i = (ci + di) % m
            gx = circ_gap(s, i / m, 1.0 / m)
            if gx > radius:
                continue
            for dj in range(-span, span + 1):
                j = (cj + dj) % m
                gy = circ_gap(t, j / m, 1.0 / m)
                if math.hypot(gx, gy) <= radius:
                    cells.add((i, j))
        return cls(m, frozenset(cells))

    @classmethod
    def band(cls, m: int, axis: int, lo: int, hi: int) -> "BoxDomain":
        """Annulus of grid columns (``axis=0``) or rows (``axis=1``) in
        ``lo <= index < hi``."""
        if axis == 0:
            cells = ((i, j) for i in range(lo, hi) for j in range(m))
        else:
            cells = ((i, j) for i in range(m) for j in range(lo, hi))
        return cls(m, frozenset(cells))

    # -- set structure -------------------------------------------------------

    def __len__(self) -> int:
        return len(self.cells)

    def __contains__(self, cell: tuple[int, int]) -> bool:
        return cell in self.cells

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self.cells))

    def union(self, other: "BoxDomain") -> "BoxDomain":
        self._check_grid(other)
        return BoxDomain(self.m, self.cells | other.cells)

    __or__ = union

    def intersection(self, other: "BoxDomain") -> "BoxDomain":
        self._check_grid(other)
        return BoxDomain(self.m, self.cells & other.cells)

    __and__ = intersection

    def intersects(self, other: "BoxDomain") -> bool:
        self._check_grid(other)
        small, large = sorted((self.cells, other.cells), key=len)
        return any(c in large for c in small)

    def complement(self) -> "BoxDomain":
        all_cells = ((i, j) for i in range(self.m) for j in range(self.m))
        return BoxDomain(self.m, frozenset(c for c in all_cells if c not in self.cells))

    def _check_grid(self, other: "BoxDomain") -> None:
        if self.m != other.m:
            raise ValueError(f"grid mismatch: {self.m} vs {other.m}")

    def to_mask(self) -> np.ndarray:
        mask = np.zeros((self.m, self.m), dtype=bool)
        for i, j in self.cells:
            mask[i, j] = True
        return mask

    def contains_point(self, z: tuple[float, float]) -> bool:
        return cell_of_point(self.m, z) in self.cells

    def translate(self, di: int, dj: int) -> "BoxDomain":
        m = self.m
        return BoxDomain(m, frozenset(((i + di) % m, (j + dj) % m)
                                      for i, j in self.cells))

    def refine(self) -> "BoxDomain":
        """Same set at doubled resolution: each cell splits into four."""
        cells = set()
        for i, j in self.cells:
            cells.update(((2 * i, 2 * j), (2 * i + 1, 2 * j),
                          (2 * i, 2 * j + 1), (2 * i + 1, 2 * j + 1)))
        return BoxDomain(2 * self.m, frozenset(cells))

    # -- geometry ------------------------------------------------------------

    def cell_rects(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Rectangles of all cells as ``(s_lo, s_w, t_lo, t_w)`` arrays,
        ordered like ``sorted(cells)``."""
        cells = sorted(self.cells)
        ii = np.array([c[0] for c in cells], dtype=float)
        jj = np.array([c[1] for c in cells], dtype=float)
        w = np.full(len(cells), 1.0 / self.m)
        return ii / self.m, w, jj / self.m, w.copy()

    def is_connected(self) -> bool:
        """4-neighbor connectivity on the torus."""
        if not self.cells:
            return False
        return len(self.components()) == 1

    def components(self) -> list[frozenset]:
        """4-neighbor connected components on the torus, deterministic order."""
        m = self.m
        remaining = set(self.cells)
        comps = []
        while remaining:
            seed = min(remaining)
            comp = {seed}
            remaining.discard(seed)
            frontier = [seed]
            while frontier:
                i, j = frontier.pop()
                for ni, nj in (((i + 1) % m, j), ((i - 1) % m, j),
                               (i, (j + 1) % m), (i, (j - 1) % m)):
                    if (ni, nj) in remaining:
                        remaining.discard((ni, nj))
                        comp.add((ni, nj))
                        frontier.append((ni, nj))
            comps.append(frozenset(comp))
        comps.sort(key=min)
        return comps

    # -- serialization -------------------------------------------------------

    def to_rle(self) -> str:
        """Run-length encoding of sorted linear indices, with header."""
        idx = sorted(i * self.m + j for i, j in self.cells)
        lines = [f"{self.m} {len(idx)}"]
        k = 0
        while k < len(idx):
            start = idx[k]
            run = 1
            while k + run < len(idx) and idx[k + run] == start + run:
                run += 1
            lines.append(f"{start} {run}")
            k += run
        return "\n".join(lines) + "\n"

    @classmethod
    def from_rle(cls, text: str) -> "BoxDomain":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty serialization")
        m_str, count_str = lines[0].split()
        m, count = int(m_str), int(count_str)
        cells = []
        for ln in lines[1:]:
            start_s, run_s = ln.split()
            start, run = int(start_s), int(run_s)
            for k in range(start, start + run):
                cells.append((k // m, k % m))
        if len(cells) != count:
            raise ValueError(f"cell count mismatch: header {count}, got {len(cells)}")
        return cls(m, frozenset(cells))
