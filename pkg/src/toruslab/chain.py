"""Box-to-box transition graphs for chain reachability.

The torus grid of ``m**2`` boxes carries a directed edge ``B -> B'``
whenever the target box comes within the fattening radius ``eps -
sqrt(2)/m`` of the outer enclosure of ``f(B)`` (Euclidean distance between
rectangles).  The two defining properties:

* soundness: a genuine orbit step never crosses a missing edge, since the
  image point lies in the enclosure and in its own box, at distance zero
  (this is why ``eps >= sqrt(2)/m`` is required: the fattening must absorb
  one box diameter);
* chain faithfulness: for translation-like enclosures a graph path turns
  into a valid ``eps``-pseudo-orbit, because consecutive boxes are within
  ``eps`` of the image of any point of their predecessor.

Graphs are stored as ``scipy.sparse`` CSR matrices, so breadth-first
search and strongly connected components run at C speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .boxes import BoxDomain
from .skew import ENCLOSURE_INFLATE, SkewProduct

__all__ = [
    "ChainReport",
    "TransitionGraph",
    "build_transition_graph",
    "chain_path",
    "chain_transitivity_report",
]

BoxLike = Union[BoxDomain, Iterable]


@dataclass
class TransitionGraph:
    """Directed box-transition relation at resolution ``m``.

    ``margin`` records the uniform inflation added to every enclosure so
    soundness claims are auditable; the fiber modulation ranges used by the
    builder are exact, so no sampled-continuity margin enters.
    """

    m: int
    epsilon: float
    mode: str
    matrix: sparse.csr_matrix
    margin: float

    _csc: Optional[sparse.csc_matrix] = None

    @property
    def n_nodes(self) -> int:
        return self.m * self.m

    @property
    def n_edges(self) -> int:
        return int(self.matrix.nnz)

    def box_id(self, cell: tuple[int, int]) -> int:
        return cell[0] * self.m + cell[1]

    def cell(self, box_id: int) -> tuple[int, int]:
        return divmod(int(box_id), self.m)

    def successors(self, box_id: int) -> np.ndarray:
        row = self.matrix.indptr[box_id], self.matrix.indptr[box_id + 1]
        return self.matrix.indices[row[0]:row[1]]

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.successors(a)

    def predecessors(self, box_id: int) -> np.ndarray:
        if self._csc is None:
            self._csc = self.matrix.tocsc()
        col = self._csc.indptr[box_id], self._csc.indptr[box_id + 1]
        return self._csc.indices[col[0]:col[1]]

    def edge_list(self) -> np.ndarray:
        coo = self.matrix.tocoo()
        return np.stack([coo.row, coo.col], axis=1)

    def save_edge_list(self, path) -> None:
        np.savetxt(path, self.edge_list(), fmt="%d",
                   header=f"m {self.m} epsilon {self.epsilon:.17g}")


def _candidate_axis(lo: float, hi: float, r: float, m: int):
    """Integer cells of the fattened interval ``[lo - r, hi + r]`` on the
    lift line, with their axis gaps to ``[lo, hi]``."""
    k_lo = math.floor((lo - r) * m)
    k_hi = math.floor((hi + r) * m)
    if k_hi - k_lo + 1 >= m:
        ks = np.arange(m)
        return ks, np.zeros(m)
    ks = np.arange(k_lo, k_hi + 1)
    gaps = np.maximum(0.0, np.maximum(ks / m - hi, lo - (ks + 1) / m))
    return ks, gaps


def build_transition_graph(f: SkewProduct, m: int, epsilon: float,
                           mode: str = "outer",
                           samples_per_box: int = 3) -> TransitionGraph:
    """Build the epsilon-transition graph of ``f`` on the ``m x m`` grid.

    ``outer`` mode covers the image of each box by a sound rectangle
    enclosure (exact corner bounds for both monotone coordinates plus the
    exact fiber modulation range); ``sampled`` mode replaces the enclosure
    with ``samples_per_box**2`` sample images per box and is not sound.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    diam = math.sqrt(2.0) / m
    if epsilon < diam - 1e-12:
        raise ValueError(
            f"epsilon {epsilon!r} below the box diameter {diam!r}: the "
            "fattening cannot absorb the discretization")
    if mode not in ("outer", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    r = max(0.0, epsilon - diam)

    rows_parts = []
    cols_parts = []
    grid = np.arange(m + 1) / m

    if mode == "outer":
        base_vals = f.base_lift.eval_array(grid)
        core_vals = f.fiber.core.eval_array(grid)
        amin, amax = f.fiber.angle_range_array(grid[:m], np.full(m, 1.0 / m))

        all_j = np.arange(m)
        for i in range(m):
            sa = float(base_vals[i]) - ENCLOSURE_INFLATE
            sb = float(base_vals[i + 1]) + ENCLOSURE_INFLATE
            kxs, gxs = _candidate_axis(sa, sb, r, m)
            ya = core_vals[:m] + amin[i] - ENCLOSURE_INFLATE
            yb = core_vals[1:] + amax[i] + ENCLOSURE_INFLATE

            ky_lo = np.floor((ya - r) * m).astype(np.int64)
            ky_hi = np.floor((yb + r) * m).astype(np.int64)
            cnt = np.minimum(ky_hi - ky_lo + 1, m)
            total = int(cnt.sum())
            jrep = np.repeat(all_j, cnt)
            offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
            kys = ky_lo[jrep] + offs
            gys = np.maximum(0.0, np.maximum(kys / m - yb[jrep],
                                             ya[jrep] - (kys + 1) / m))
            full_row = cnt[jrep] >= m
            gys[full_row] = 0.0

            ok = gys[:, None] ** 2 + gxs[None, :] ** 2 <= r * r + 1e-18
            pair_idx, kx_idx = np.nonzero(ok)
            rows_parts.append(i * m + jrep[pair_idx])
            cols_parts.append((kxs[kx_idx] % m) * m + (kys[pair_idx] % m))
    else:
        k = samples_per_box
        offs = (np.arange(k) + 0.5) / (k * m)
        ii, jj = np.divmod(np.arange(m * m), m)
        for a in offs:
            for c in offs:
                ss, tt = f.unit_step_array(ii / m + a, jj / m + c)
                k_lo_s = np.floor((ss - r) * m).astype(np.int64)
                k_hi_s = np.floor((ss + r) * m).astype(np.int64)
                k_lo_t = np.floor((tt - r) * m).astype(np.int64)
                k_hi_t = np.floor((tt + r) * m).astype(np.int64)
                for dsi in range(int((k_hi_s - k_lo_s).max()) + 1):
                    ki = k_lo_s + dsi
                    live_s = ki <= k_hi_s
                    gx = np.maximum(0.0, np.maximum(ki / m - ss, ss - (ki + 1) / m))
                    for dtj in range(int((k_hi_t - k_lo_t).max()) + 1):
                        kj = k_lo_t + dtj
                        live = live_s & (kj <= k_hi_t)
                        gy = np.maximum(0.0, np.maximum(kj / m - tt, tt - (kj + 1) / m))
                        ok = live & (gx * gx + gy * gy <= r * r + 1e-18)
                        if np.any(ok):
                            rows_parts.append(ii[ok] * m + jj[ok])
                            cols_parts.append((ki[ok] % m) * m + (kj[ok] % m))

    rows = np.concatenate(rows_parts) if rows_parts else np.empty(0, np.int64)
    cols = np.concatenate(cols_parts) if cols_parts else np.empty(0, np.int64)
    mat = sparse.coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                            shape=(m * m, m * m)).tocsr()
    mat.data[:] = 1
    return TransitionGraph(m, epsilon, mode, mat, ENCLOSURE_INFLATE)


def _box_ids(graph: TransitionGraph, boxes: BoxLike) -> list[int]:
    if isinstance(boxes, BoxDomain):
        if boxes.m != graph.m:
            raise ValueError("box domain grid does not match the graph")
        return sorted(graph.box_id(c) for c in boxes.cells)
    ids = []
    for b in boxes:
        if isinstance(b, tuple):
            ids.append(graph.box_id(b))
        else:
            ids.append(int(b))
    return sorted(set(ids))


def chain_path(graph: TransitionGraph, sources: BoxLike,
               targets: BoxLike) -> Optional[list[int]]:
    """Breadth-first box path (at least one edge) from a source box to a
    target box, or ``None`` when no such path exists."""
    src = _box_ids(graph, sources)
    dst = set(_box_ids(graph, targets))
    if not src or not dst:
        raise ValueError("sources and targets must be nonempty")

    for s in src:
        if s in dst and graph.has_edge(s, s):
            return [s, s]

    def reconstruct(start: int, goal: int, preds: np.ndarray) -> list[int]:
        path = [goal]
        while path[-1] != start:
            path.append(int(preds[path[-1]]))
        path.reverse()
        return path

    for s in src:
        order, preds = csgraph.breadth_first_order(
            graph.matrix, s, directed=True, return_predecessors=True)
        reached = set(int(v) for v in order)

        direct = sorted(d for d in dst if d != s and d in reached)
        if direct:
            return reconstruct(s, direct[0], preds)
        if s in dst:
            # a cycle through s: any reachable in-neighbor closes it
            loops = sorted(int(u) for u in graph.predecessors(s)
                           if int(u) in reached)
            if loops:
                return reconstruct(s, loops[0], preds) + [s]
    return None


@dataclass(frozen=True)
class ChainReport:
    """Sampled chain-connectivity summary of one transition graph."""

    m: int
    epsilon: float
    mode: str
    trials: int
    seed: int
    pairs: tuple
    fraction_connected: float
    max_path_length: int
    n_edges: int
    recurrent_boxes: int
    recurrent_single_scc: bool


def chain_transitivity_report(f: SkewProduct, m: int, epsilon: float,
                              trials: int, seed: int,
                              mode: str = "outer") -> ChainReport:
    """Sample random ordered box pairs and report the connected fraction.

    Also reports whether the chain-recurrent boxes (members of strongly
    connected components with at least one internal edge) form a single
    strongly connected component.
    """
    graph = build_transition_graph(f, m, epsilon, mode)
    rng = np.random.default_rng(seed)
    pairs = rng.integers(0, m * m, size=(trials, 2))

    results = []
    max_len = 0
    connected = 0
    for a, b in pairs:
        path = chain_path(graph, [int(a)], [int(b)])
        if path is None:
            results.append((int(a), int(b), False, None))
        else:
            connected += 1
            max_len = max(max_len, len(path) - 1)
            results.append((int(a), int(b), True, len(path) - 1))

    n_comp, labels = csgraph.connected_components(graph.matrix,
                                                  connection="strong")
    sizes = np.bincount(labels, minlength=n_comp)
    self_loop = graph.matrix.diagonal() > 0
    recurrent = (sizes[labels] > 1) | self_loop
    rec_labels = set(int(v) for v in np.unique(labels[recurrent]))
    return ChainReport(m, epsilon, mode, trials, int(seed), tuple(results),
                       connected / trials if trials else 1.0,
                       max_len, graph.n_edges, int(np.count_nonzero(recurrent)),
                       len(rec_labels) == 1 if rec_labels else False)
