"""Denjoy counterexamples: non-minimal circle homeomorphisms with irrational
rotation number.

Construction.  Fix an irrational ``alpha`` and a summable schedule of gap
lengths ``l_n = c0 * (|n| + 1)**(-p)`` with total ``L < 1``.  Blowing up the
point ``{n * alpha}`` of the rigid-rotation orbit into an interval of length
``l_n`` for every integer ``n`` produces a circle on which the rotation
induces a homeomorphism ``g``: it maps the inserted interval ``I_n``
affinely onto ``I_{n+1}`` and acts as the rotation on the remaining Cantor
set ``M`` of measure ``1 - L``.  The intervals are wandering, ``M`` is the
unique minimal set, and the rotation number of ``g`` is ``alpha``.

Truncation.  Only the ``2N + 1`` gaps with ``|n| <= N`` are enumerated; the
un-enumerated tail mass ``delta(N) = sum_{|n|>N} l_n`` (closed form via the
Hurwitz zeta function) is absorbed as a uniform evaluation-error budget and
is required to be below ``1e-8`` at construction.  The truncated map is an
exact homeomorphism except on the single boundary gap ``I_N``, whose image
interval (length ``< delta(N)``) overlaps the regular part; this defect is
orders of magnitude below every tolerance used by the test suite.

Floating-point consistency.  Gap positions are generated by *iterating* the
float map ``x -> frac(x + alpha)``, so the position of gap ``n + 1`` equals
bit-exactly the float sum used by the evaluation path; gap endpoints are
stored through the same arithmetic expression that evaluation uses.  As a
result gap endpoints map to gap endpoints exactly, and the monotonicity
defect of the evaluator is confined to windows of a few ulps around the
4001 gap endpoints (total measure ~1e-12).
"""

from __future__ import annotations

import math
import warnings
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import zeta

from .circle import CircleLift, QuadraticIrrational, near_rational, split_unit

__all__ = [
    "DenjoySpec",
    "DenjoyMap",
    "GapLocation",
    "build_denjoy",
    "gap_locate",
]

TAIL_LIMIT = 1e-8          # construction bound on the un-enumerated mass
_ATOM_SNAP = 1e-13         # backward-step snap radius, far below atom spacing


@dataclass(frozen=True)
class DenjoySpec:
    """Parameters of a truncated Denjoy construction.

    ``alpha`` is the prescribed rotation number as an exact quadratic
    irrational, ``gap_coefficient``/``gap_exponent`` define the schedule
    ``l_n = c0 * (|n| + 1)**(-p)``, and ``truncation`` is the largest
    enumerated gap index ``N``.
    """

    alpha: QuadraticIrrational
    gap_coefficient: float
    gap_exponent: float
    truncation: int

    @classmethod
    def with_total_gap_length(cls, alpha: QuadraticIrrational, total: float,
                              p: float = 4.0, N: int = 2000) -> "DenjoySpec":
        """Choose ``c0`` so that the full (untruncated) gap mass equals ``total``."""
        if not 0.0 < total < 1.0:
            raise ValueError("total gap length must lie in (0, 1)")
        if p <= 1.0:
            raise ValueError("gap exponent must exceed 1 for summability")
        c0 = total / (2.0 * float(zeta(p)) - 1.0)
        return cls(alpha, c0, p, N)

    @property
    def alpha_value(self) -> float:
        return self.alpha.value

    @property
    def total_gap_length(self) -> float:
        """Closed-form ``L = c0 * (2*zeta(p) - 1)``."""
        return self.gap_coefficient * (2.0 * float(zeta(self.gap_exponent)) - 1.0)

    @property
    def tail(self) -> float:
        """Closed-form tail ``delta(N) = 2*c0*zeta(p, N+2)``."""
        return 2.0 * self.gap_coefficient * float(
            zeta(self.gap_exponent, self.truncation + 2))

    def gap_length(self, n: int) -> float:
        return self.gap_coefficient * (abs(n) + 1.0) ** (-self.gap_exponent)

    def validate(self) -> None:
        if self.gap_coefficient <= 0.0:
            raise ValueError("gap coefficient must be positive")
        if self.gap_exponent <= 1.0:
            raise ValueError("gap exponent must exceed 1 for summability")
        if self.truncation < 1:
            raise ValueError("truncation must be a positive integer")
        if not self.alpha.is_irrational:
            raise ValueError("prescribed rotation number must be irrational")
        if self.total_gap_length >= 1.0:
            raise ValueError(
                f"total gap length {self.total_gap_length:.6f} must be < 1")
        if self.tail >= TAIL_LIMIT:
            raise ValueError(
                f"tail delta(N) = {self.tail:.3e} exceeds {TAIL_LIMIT:.0e}; "
                "increase the truncation")
        suspect = near_rational(self.alpha_value)
        if suspect is not None:
            warnings.warn(
                f"rotation number {self.alpha_value!r} is within 1e-10 of "
                f"{suspect[0]}/{suspect[1]}; the construction assumes an "
                "irrational value", stacklevel=2)


@dataclass(frozen=True)
class GapLocation:
    """Position of a circle point relative to the enumerated gap structure.

    ``kind`` is ``"gap"`` (strict interior of the enumerated gap with orbit
    index ``index``) or ``"cantor"`` (everything else, including gap
    endpoints, which belong to the minimal set).  For gap points,
    ``distance_to_minimal_set`` is the distance to the nearer endpoint; for
    Cantor points it is 0 with an ``uncertainty`` of ``delta(N)`` since the
    point may sit inside an un-enumerated tail gap.
    """

    kind: str
    index: Optional[int]
    distance_to_minimal_set: float
    uncertainty: float


class DenjoyMap:
    """A truncated Denjoy homeomorphism with its gap table.

    Built by :func:`build_denjoy`; immutable after construction.  The
    evaluation tables are exposed read-only: ``pos`` (atom positions of the
    collapsed rotation, sorted), ``lefts``/``rights``/``lens`` (gap
    endpoints in circle coordinates, same order), ``n_of_slot`` (orbit index
    per table slot).
    """

    def __init__(self, spec: DenjoySpec, alpha: float, pos: np.ndarray,
                 lens: np.ndarray, n_of_slot: np.ndarray):
        self.spec = spec
        self.alpha = alpha
        self.N = spec.truncation
        self.pos = pos
        self.lens = lens
        self.n_of_slot = n_of_slot

        gap_total = math.fsum(lens.tolist())
        self.gap_total = gap_total
        self.scale = 1.0 - gap_total
        self.tail = spec.tail
        self.minimal_set_tolerance = spec.tail

        cum = np.empty(len(lens) + 1)
        cum[0] = 0.0
        np.cumsum(lens, out=cum[1:])
        self.cum = cum
        # endpoint expressions shared verbatim with the evaluation path
        self.lefts = self.scale * pos + cum[:-1]
        self.rights = self.lefts + lens

        M = len(pos)
        slot_of = np.empty(M, dtype=np.int64)
        slot_of[n_of_slot + self.N] = np.arange(M)
        self._slot_of = slot_of
        nxt = np.full(M, -1, dtype=np.int64)
        prv = np.full(M, -1, dtype=np.int64)
        for k in range(M):
            n = int(n_of_slot[k])
            if n + 1 <= self.N:
                nxt[k] = slot_of[n + 1 + self.N]
            if n - 1 >= -self.N:
                prv[k] = slot_of[n - 1 + self.N]
        self.next_slot = nxt
        self.prev_slot = prv

        # strict upper clamp per Cantor stretch: just below the next atom
        nxt_atom = np.append(pos[1:], pos[0] + 1.0)
        self._clamp_hi = np.nextafter(nxt_atom, -np.inf)
        self._clamp_first = float(np.nextafter(pos[0], -np.inf))

        # integer carries of the atom step: the lift of a gap picks up +1
        # exactly when its atom's rotation step wraps past 1
        self.carry_fwd = (pos + alpha >= 1.0).astype(float)
        self.carry_bwd = -(pos - alpha < 0.0).astype(float)

        # image of the boundary gap I_N and preimage of I_{-N}: both are
        # un-enumerated tail gaps with closed-form length
        tail_len = spec.gap_length(self.N + 1)
        x_N = pos[slot_of[self.N + self.N]]
        w = x_N + alpha
        self._b_carry = 0.0
        if w >= 1.0:
            w -= 1.0
            self._b_carry = 1.0
        j = int(np.searchsorted(pos, w, side="right"))
        self._b_left = float(self.scale * w + cum[j])
        self._b_len = float(tail_len)
        x_mN = pos[slot_of[0]]
        w = x_mN - alpha
        self._c_carry = 0.0
        if w < 0.0:
            w += 1.0
            self._c_carry = -1.0
        j = int(np.searchsorted(pos, w, side="right"))
        self._c_left = float(self.scale * w + cum[j])
        self._c_len = float(tail_len)

        # python lists: stdlib bisect on lists is the fastest scalar path
        self._pos_l = pos.tolist()
        self._lefts_l = self.lefts.tolist()
        self._rights_l = self.rights.tolist()
        self._lens_l = lens.tolist()
        self._cum_l = cum.tolist()
        self._next_l = nxt.tolist()
        self._prev_l = prv.tolist()
        self._clamp_l = self._clamp_hi.tolist()
        self._cfwd_l = self.carry_fwd.tolist()
        self._cbwd_l = self.carry_bwd.tolist()

        self.lift = CircleLift(self._eval_unit, self._inverse_unit,
                               kind="denjoy", rho=alpha,
                               unit_eval_array=self._eval_unit_array)

    # -- table accessors ---------------------------------------------------

    @property
    def num_gaps(self) -> int:
        return len(self.pos)

    def slot_of_index(self, n: int) -> int:
        if not -self.N <= n <= self.N:
            raise IndexError(f"gap index {n} outside enumerated range +-{self.N}")
        return int(self._slot_of[n + self.N])

    def gap_interval(self, n: int) -> tuple[float, float]:
        """Closed interval ``[left, right]`` of the enumerated gap ``I_n``."""
        k = self.slot_of_index(n)
        return float(self.lefts[k]), float(self.rights[k])

    def gap_length(self, n: int) -> float:
        return float(self.lens[self.slot_of_index(n)])

    def gap_midpoint(self, n: int) -> float:
        left, right = self.gap_interval(n)
        return 0.5 * (left + right)

    # -- evaluation --------------------------------------------------------

    def _eval_unit(self, u: float) -> float:
        """Lift value at ``u`` in ``[0, 1)``; lands in ``[0, 2)``."""
        lefts = self._lefts_l
        i = bisect_right(lefts, u) - 1
        if i >= 0:
            right = self._rights_l[i]
            if u < right:  # enumerated gap, closed on the left
                du = u - lefts[i]
                ns = self._next_l[i]
                if ns >= 0:
                    return (lefts[ns] + du * (self._lens_l[ns] / self._lens_l[i])
                            + self._cfwd_l[i])
                return (self._b_left + du * (self._b_len / self._lens_l[i])
                        + self._b_carry)
            t = self._pos_l[i] + (u - right) / self.scale
            clamp = self._clamp_l[i]
            if t > clamp:
                t = clamp
        else:
            t = u / self.scale
            if t > self._clamp_first:
                t = self._clamp_first
        w = t + self.alpha
        carry = 0.0
        if w >= 1.0:
            w -= 1.0
            carry = 1.0
        j = bisect_right(self._pos_l, w)
        return self.scale * w + self._cum_l[j] + carry

    def _eval_unit_array(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        i = np.searchsorted(self.lefts, u, side="right") - 1
        i0 = np.maximum(i, 0)
        in_gap = (i >= 0) & (u < self.rights[i0])

        out = np.empty_like(u)

        # gap branch
        gi = i0[in_gap]
        du = u[in_gap] - self.lefts[gi]
        ns = self.next_slot[gi]
        interior = ns >= 0
        val = np.empty(gi.shape)
        val[interior] = (self.lefts[ns[interior]]
                         + du[interior] * (self.lens[ns[interior]] / self.lens[gi[interior]])
                         + self.carry_fwd[gi[interior]])
        val[~interior] = (self._b_left
                          + du[~interior] * (self._b_len / self.lens[gi[~interior]])
                          + self._b_carry)
        out[in_gap] = val

        # cantor branch
        cm = ~in_gap
        ic = i[cm]
        t = np.where(ic >= 0,
                     self.pos[np.maximum(ic, 0)] + (u[cm] - self.rights[np.maximum(ic, 0)]) / self.scale,
                     u[cm] / self.scale)
        clamp = np.where(ic >= 0, self._clamp_hi[np.maximum(ic, 0)], self._clamp_first)
        t = np.minimum(t, clamp)
        w = t + self.alpha
        carry = w >= 1.0
        w = np.where(carry, w - 1.0, w)
        j = np.searchsorted(self.pos, w, side="right")
        out[cm] = self.scale * w + self.cum[j] + carry
        return out

    def _inverse_unit(self, v: float) -> float:
        """Some ``x`` with ``eval(x) == v`` for ``v`` in ``[0, 1)``."""
        lefts = self._lefts_l
        i = bisect_right(lefts, v) - 1
        if i >= 0:
            right = self._rights_l[i]
            if v < right:  # image gap: pull back to the previous gap
                dv = v - lefts[i]
                ps = self._prev_l[i]
                if ps >= 0:
                    return (lefts[ps] + dv * (self._lens_l[ps] / self._lens_l[i])
                            + self._cbwd_l[i])
                return (self._c_left + dv * (self._c_len / self._lens_l[i])
                        + self._c_carry)
            w = self._pos_l[i] + (v - right) / self.scale
            clamp = self._clamp_l[i]
            if w > clamp:
                w = clamp
        else:
            w = v / self.scale
            if w > self._clamp_first:
                w = self._clamp_first
        t = w - self.alpha
        carry = 0.0
        if t < 0.0:
            t += 1.0
            carry = -1.0
        # one backward float step loses bit-exactness; snap onto atoms so
        # right endpoints invert onto right endpoints
        pos = self._pos_l
        j = bisect_left(pos, t)
        for jj in (j - 1, j):
            if 0 <= jj < len(pos) and abs(t - pos[jj]) <= _ATOM_SNAP:
                t = pos[jj]
                j = jj + 1  # count the atom: approach from above
                return self.scale * t + self._cum_l[j] + carry
        j = bisect_right(pos, t)
        return self.scale * t + self._cum_l[j] + carry

    # -- structure queries ---------------------------------------------------

    def gap_locate(self, t: float) -> GapLocation:
        """Classify ``t`` against the enumerated gaps.

        Gap *interiors* are classified as ``gap``; endpoints belong to the
        minimal set and are classified ``cantor``.
        """
        _, u = split_unit(t)
        i = bisect_right(self._lefts_l, u) - 1
        if i >= 0:
            left = self._lefts_l[i]
            right = self._rights_l[i]
            if left < u < right:
                return GapLocation("gap", int(self.n_of_slot[i]),
                                   min(u - left, right - u), 0.0)
        return GapLocation("cantor", None, 0.0, self.tail)

    def wandering_intervals(self) -> list[tuple[int, float, float]]:
        """Enumerated gaps as ``(orbit index, left, right)`` sorted by position."""
        return [(int(n), float(l), float(r))
                for n, l, r in zip(self.n_of_slot, self.lefts, self.rights)]


def build_denjoy(spec: DenjoySpec) -> DenjoyMap:
    """Construct the truncated Denjoy map described by ``spec``.

    Raises ``ValueError`` if the spec is invalid or if the placed gaps fail
    to be pairwise disjoint (which would signal a numeric failure, not a
    tuning issue).
    """
    spec.validate()
    N = spec.truncation
    alpha = spec.alpha_value

    # start the float orbit at {-N alpha} so every consecutive enumerated
    # pair is one forward float step: evaluation relies on this bit-exactness
    import mpmath

    with mpmath.workdps(60):
        start = float(mpmath.frac(-N * spec.alpha.mpf(60)))

    count = 2 * N + 1
    positions = np.empty(count)
    t = start
    for j in range(count):
        positions[j] = t
        t += alpha
        if t >= 1.0:
            t -= 1.0

    orbit_index = np.arange(-N, N + 1)
    lens_by_index = spec.gap_coefficient * (np.abs(orbit_index) + 1.0) ** (-spec.gap_exponent)

    order = np.argsort(positions, kind="stable")
    pos = positions[order]
    lens = lens_by_index[order]
    n_of_slot = orbit_index[order]

    if np.any(np.diff(pos) <= 0.0):
        raise ValueError("orbit positions collide; gap placement failed")

    dmap = DenjoyMap(spec, alpha, pos, lens, n_of_slot)

    if np.any(dmap.lefts[1:] <= dmap.rights[:-1]) or dmap.rights[-1] >= 1.0 + dmap.lefts[0]:
        raise ValueError("gaps overlap after placement; numeric failure")
    enumerated = float(np.sum(lens))
    target = spec.total_gap_length - spec.tail
    if abs(enumerated - target) > 1e-12:
        raise ValueError(
            f"enumerated gap mass {enumerated!r} disagrees with closed form "
            f"{target!r}")
    return dmap


def gap_locate(dmap: DenjoyMap, t: float) -> GapLocation:
    """Module-level alias for :meth:`DenjoyMap.gap_locate`."""
    return dmap.gap_locate(t)
