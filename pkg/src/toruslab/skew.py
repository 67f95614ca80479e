"""Torus skew products over circle maps and their rotation vectors.

The central object is ``f(s, t) = (g1(s), beta(s)(t))`` where ``g1`` is a
circle homeomorphism (here: a Denjoy map or a rigid rotation) and ``beta``
assigns to each base point ``s`` a fiber circle homeomorphism.  The fiber
families used here are rotated copies of a fixed core map ``g2``:

    beta(s) = R_{a(s)} o g2,     a(s) >= 0 continuous,

with ``a = 0`` on the minimal set of the base map, so that ``beta(s) = g2``
exactly on the base Cantor set and at gap endpoints.  The modulation angle
``a(s)`` is a sum of one smooth bump per enumerated base gap (amplitude
decaying with the gap index) plus finitely many narrow override bumps used
by return-forcing perturbations.

Because the lift of ``R_a o g2`` is ``g2 + a``, fiber evaluation costs one
core evaluation plus the modulation angle, and exact outer enclosures of
image rectangles reduce to range queries on the modulation.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .circle import CircleLift, compose_rotation, split_unit
from .denjoy import DenjoyMap
from .errors import BudgetError

__all__ = [
    "ConstantFiber",
    "FiberFamily",
    "Override",
    "RotationVectorEstimate",
    "SkewProduct",
    "build_example_fiber_family",
    "fiber_composition",
    "find_displacement_time",
    "gap_bump",
    "lift_distance",
    "product_map",
    "radial_bump",
    "rigid_translation",
    "rotation_vector",
    "skew_eval",
    "torus_dist",
]

ENCLOSURE_INFLATE = 1e-12  # absorbs last-bit rounding of enclosure corners


def gap_bump(u: float) -> float:
    """Smooth bump on ``[0, 1]``: peak 1 at ``u = 1/2``, flat zero contact
    at both endpoints."""
    if u <= 0.0 or u >= 1.0:
        return 0.0
    return math.exp(1.0 - 1.0 / (4.0 * u * (1.0 - u)))


def radial_bump(v: float) -> float:
    """Smooth bump on ``[-1, 1]``: peak 1 at ``v = 0``, zero outside."""
    if v <= -1.0 or v >= 1.0:
        return 0.0
    return math.exp(1.0 - 1.0 / (1.0 - v * v))


def _gap_bump_array(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    inside = (u > 0.0) & (u < 1.0)
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (4.0 * ui * (1.0 - ui)))
    return out


def _bump_range(theta: float, ua: float, ub: float) -> tuple[float, float]:
    """Exact range of ``theta * gap_bump`` over ``[ua, ub] \\subset [0, 1]``.

    The bump is unimodal with peak at 1/2, so the max sits at the point of
    ``[ua, ub]`` closest to 1/2 and the min at an endpoint.
    """
    peak = min(max(0.5, ua), ub)
    hi = theta * gap_bump(peak)
    lo = theta * min(gap_bump(ua), gap_bump(ub))
    return lo, hi


class _RangeMax:
    """Static sparse table answering max-over-slot-range queries in O(1)."""

    def __init__(self, values: np.ndarray):
        self.levels = [np.asarray(values, dtype=float)]
        n = len(values)
        k = 1
        while 2 * k <= n:
            prev = self.levels[-1]
            self.levels.append(np.maximum(prev[:-k], prev[k:]))
            k *= 2
        self.n = n

    def query_array(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """Max of values over ``[i, j)`` per element; empty ranges give 0."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        out = np.zeros(i.shape, dtype=float)
        m = j - i
        ok = m > 0
        if not np.any(ok):
            return out
        mi = m[ok]
        lev = (np.frexp(mi.astype(float))[1] - 1).astype(np.int64)
        ii = i[ok]
        jj = j[ok]
        res = np.empty(mi.shape)
        for k in np.unique(lev):
            half = 1 << int(k)
            sel = lev == k
            table = self.levels[int(k)]
            res[sel] = np.maximum(table[ii[sel]], table[jj[sel] - half])
        out[ok] = res
        return out


@dataclass(frozen=True)
class Override:
    """Pointwise fiber override: within ``radius`` of ``center`` the fiber
    map picks up an extra rotation, equal to ``angle`` exactly at the
    center and tapering smoothly to zero at the support boundary."""

    center: float
    radius: float
    angle: float

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ValueError("override radius must be positive")
        if self.angle < 0.0:
            raise ValueError("override angle must be nonnegative")


class ConstantFiber:
    """Fiber family with no base dependence: ``beta(s) = core`` for all s.

    Turns a skew product into a product map; used for rigid translations and
    products of two circle maps.
    """

    def __init__(self, core: CircleLift):
        self.core = core
        self.overrides: tuple[Override, ...] = ()

    def angle(self, s: float) -> float:
        return 0.0

    def angle_array(self, s: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(s, dtype=float))

    def angle_range_array(self, lo: np.ndarray, width: np.ndarray):
        z = np.zeros_like(np.asarray(lo, dtype=float))
        return z, z

    def lift_at(self, s: float) -> CircleLift:
        return self.core


class FiberFamily:
    """Continuous family ``s -> R_{a(s)} o g2`` over a Denjoy base map.

    ``a(s)`` vanishes on the complement of the enumerated base gaps; inside
    gap ``I_n`` it is ``theta_n * gap_bump(u)`` in the relative coordinate
    ``u``, with ``theta_n = amplitude * decay**|n|``, plus any override
    bumps.  Since ``theta_n -> 0`` as ``|n| -> infinity`` the family is
    uniformly continuous in ``s``, and every fiber map is a lift-monotone
    circle homeomorphism.
    """

    def __init__(self, base: DenjoyMap, core: CircleLift, amplitude: float,
                 decay: float, overrides: Sequence[Override] = ()):
        if amplitude < 0.0:
            raise ValueError("bump amplitude must be nonnegative")
        if not 0.0 < decay < 1.0:
            raise ValueError("decay must lie in (0, 1)")
        self.base = base
        self.core = core
        self.amplitude = amplitude
        self.decay = decay
        self.overrides = tuple(sorted(overrides, key=lambda o: o.center))
        self._check_overrides()

        if amplitude > 0.0:
            theta = amplitude * np.power(decay, np.abs(base.n_of_slot).astype(float))
        else:
            theta = np.zeros(base.num_gaps)
        self.theta_by_slot = theta
        self._theta_l = theta.tolist()

        # doubled tables cover unwrapped query intervals [lo, lo + w) with
        # lo in [0, 1) and w <= 1
        self._lefts2 = np.concatenate([base.lefts, base.lefts + 1.0])
        self._rights2 = np.concatenate([base.rights, base.rights + 1.0])
        self._lens2 = np.concatenate([base.lens, base.lens])
        self._peaks2 = self._lefts2 + 0.5 * self._lens2
        self._theta2 = np.concatenate([theta, theta])
        self._peak_max = _RangeMax(self._theta2)

        self._ov_centers = [o.center for o in self.overrides]
        self._ov_radii = [o.radius for o in self.overrides]
        self._ov_angles = [o.angle for o in self.overrides]
        if self.overrides:
            c = np.array(self._ov_centers)
            r = np.array(self._ov_radii)
            self._ov_lo2 = np.concatenate([c - r, c - r + 1.0])
            self._ov_hi2 = np.concatenate([c + r, c + r + 1.0])
            self._ov_ang2 = np.concatenate([self._ov_angles, self._ov_angles])
            self._ov_c2 = np.concatenate([c, c + 1.0])
            self._ov_r2 = np.concatenate([r, r])

    def _check_overrides(self) -> None:
        prev_hi = None
        for o in self.overrides:
            lo, hi = o.center - o.radius, o.center + o.radius
            if prev_hi is not None and lo <= prev_hi:
                raise ValueError("override supports overlap")
            prev_hi = hi
            la = self.base.gap_locate(lo)
            lb = self.base.gap_locate(hi)
            lc = self.base.gap_locate(o.center)
            if not (la.kind == lb.kind == lc.kind == "gap"
                    and la.index == lb.index == lc.index):
                raise ValueError(
                    "override support must sit strictly inside one enumerated "
                    "base gap (the fiber family must stay untouched on the "
                    "minimal set)")

    def with_overrides(self, overrides: Sequence[Override]) -> "FiberFamily":
        """New family with ``overrides`` appended to the existing table."""
        return FiberFamily(self.base, self.core, self.amplitude, self.decay,
                           tuple(self.overrides) + tuple(overrides))

    @property
    def sup_angle(self) -> float:
        extra = max(self._ov_angles, default=0.0)
        return float(self.theta_by_slot.max(initial=0.0)) + extra

    # -- pointwise ----------------------------------------------------------

    def angle(self, s: float) -> float:
        _, u = split_unit(s)
        base = self.base
        lefts = base._lefts_l
        a = 0.0
        i = bisect_right(lefts, u) - 1
        if i >= 0:
            left = lefts[i]
            right = base._rights_l[i]
            if left < u < right:
                th = self._theta_l[i]
                if th != 0.0:
                    a = th * gap_bump((u - left) / base._lens_l[i])
        centers = self._ov_centers
        if centers:
            j = bisect_right(centers, u)
            for jj in (j - 1, j):
                if 0 <= jj < len(centers):
                    v = (u - centers[jj]) / self._ov_radii[jj]
                    if -1.0 < v < 1.0:
                        a += self._ov_angles[jj] * radial_bump(v)
        return a

    def angle_array(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        u = s - np.floor(s)
        base = self.base
        i = np.searchsorted(base.lefts, u, side="right") - 1
        i0 = np.maximum(i, 0)
        in_gap = (i >= 0) & (u > base.lefts[i0]) & (u < base.rights[i0])
        a = np.zeros_like(u)
        gi = i0[in_gap]
        rel = (u[in_gap] - base.lefts[gi]) / base.lens[gi]
        a[in_gap] = self.theta_by_slot[gi] * _gap_bump_array(rel)
        if self.overrides:
            for o in self.overrides:
                v = (u - o.center) / o.radius
                mask = np.abs(v) < 1.0
                if np.any(mask):
                    vi = v[mask]
                    a[mask] += o.angle * np.exp(1.0 - 1.0 / (1.0 - vi * vi))
        return a

    def lift_at(self, s: float) -> CircleLift:
        """Lift of the fiber homeomorphism over base point ``s``."""
        return compose_rotation(self.core, self.angle(s))

    # -- interval ranges -----------------------------------------------------

    def angle_range_array(self, lo: np.ndarray, width: np.ndarray):
        """Outer bounds for the modulation angle over ``[lo, lo + width]``.

        ``lo`` must lie in ``[0, 1)`` and ``width`` in ``[0, 1]``.  The gap
        bumps are unimodal, so the range decomposes into a sparse-table max
        over fully swept bumps plus exact endpoint corrections; the result
        is an exact range for the bump part and an outer bound once override
        contributions are added.
        """
        lo = np.asarray(lo, dtype=float)
        hi = lo + np.asarray(width, dtype=float)

        i_lo = np.searchsorted(self._rights2, lo, side="right")
        i_hi = np.searchsorted(self._lefts2, hi, side="left")

        j_lo = np.searchsorted(self._peaks2, lo, side="left")
        j_hi = np.searchsorted(self._peaks2, hi, side="right")
        j_lo = np.maximum(j_lo, i_lo)
        j_hi = np.minimum(j_hi, i_hi)
        amax = self._peak_max.query_array(j_lo, j_hi)

        # partial coverage of the first and last intersected gap
        for edge in (i_lo, np.maximum(i_hi - 1, i_lo)):
            valid = (edge < i_hi) & (edge < len(self._lefts2))
            if not np.any(valid):
                continue
            k = edge[valid]
            th = self._theta2[k]
            ua = np.clip((lo[valid] - self._lefts2[k]) / self._lens2[k], 0.0, 1.0)
            ub = np.clip((hi[valid] - self._lefts2[k]) / self._lens2[k], 0.0, 1.0)
            peak = np.minimum(np.maximum(0.5, ua), ub)
            cand = th * _gap_bump_array(peak)
            upd = np.zeros_like(amax)
            upd[valid] = cand
            amax = np.maximum(amax, upd)

        amin = np.zeros_like(amax)
        single = (i_hi - i_lo == 1) & (i_lo < len(self._lefts2))
        if np.any(single):
            k = i_lo[single]
            covered = (self._lefts2[k] <= lo[single]) & (self._rights2[k] >= hi[single])
            ksel = np.where(single)[0][covered]
            if ksel.size:
                kk = i_lo[ksel]
                ua = (lo[ksel] - self._lefts2[kk]) / self._lens2[kk]
                ub = (hi[ksel] - self._lefts2[kk]) / self._lens2[kk]
                amin[ksel] = self._theta2[kk] * np.minimum(
                    _gap_bump_array(ua), _gap_bump_array(ub))

        if self.overrides:
            k_lo = np.searchsorted(self._ov_hi2, lo, side="right")
            k_hi = np.searchsorted(self._ov_lo2, hi, side="left")
            touched = np.where(k_hi > k_lo)[0]
            for q in touched:
                extra = 0.0
                for k in range(int(k_lo[q]), int(k_hi[q])):
                    c, r, ang = self._ov_c2[k], self._ov_r2[k], self._ov_ang2[k]
                    va = max((lo[q] - c) / r, -1.0)
                    vb = min((hi[q] - c) / r, 1.0)
                    vpeak = min(max(0.0, va), vb)
                    extra = max(extra, ang * radial_bump(vpeak))
                amax[q] += extra
        return amin, amax


def build_example_fiber_family(g1: DenjoyMap, g2: CircleLift,
                               amplitude: float, decay: float) -> FiberFamily:
    """Fiber family with bump amplitudes ``amplitude * decay**|n|`` over the
    enumerated gaps of ``g1`` and core map ``g2``."""
    return FiberFamily(g1, g2, amplitude, decay)


def lift_distance(a: CircleLift, b: CircleLift, samples: int = 64) -> float:
    """Sampled sup-distance between two lifts over one period."""
    grid = np.arange(samples) / samples
    return float(max(abs(a.eval(float(u)) - b.eval(float(u))) for u in grid))


def torus_dist(z: tuple[float, float], w: tuple[float, float]) -> float:
    """Euclidean distance on the torus (per-axis circle distances)."""
    ds = abs(z[0] - w[0]) % 1.0
    dt = abs(z[1] - w[1]) % 1.0
    return math.hypot(min(ds, 1.0 - ds), min(dt, 1.0 - dt))


class SkewProduct:
    """Skew product ``f(s, t) = (g1(s), beta(s)(t))`` on the torus.

    ``base`` is a :class:`DenjoyMap` or a :class:`CircleLift`; ``fiber`` is
    a :class:`FiberFamily` or :class:`ConstantFiber`.  The plane lift is
    ``F(x, y) = (G1(x), G2(y) + a(frac(x)))`` which is integer-equivariant
    by construction, and its first coordinate depends on ``x`` alone.
    """

    def __init__(self, base: Union[DenjoyMap, CircleLift], fiber):
        if isinstance(base, DenjoyMap):
            self.base_map: Optional[DenjoyMap] = base
            self.base_lift = base.lift
        elif isinstance(base, CircleLift):
            self.base_map = None
            self.base_lift = base
        else:
            raise TypeError("base must be a DenjoyMap or a CircleLift")
        self.fiber = fiber

    # -- pointwise dynamics --------------------------------------------------

    def unit_step(self, s: float, t: float) -> tuple[float, float, int, int]:
        """One step on ``[0,1)^2``; returns new point and integer windings."""
        t2 = self.fiber.core.unit_eval(t) + self.fiber.angle(s)
        s2 = self.base_lift.unit_eval(s)
        ks = math.floor(s2)
        s2 -= ks
        if s2 >= 1.0:
            s2 -= 1.0
            ks += 1
        kt = math.floor(t2)
        t2 -= kt
        if t2 >= 1.0:
            t2 -= 1.0
            kt += 1
        return s2, t2, ks, kt

    def eval(self, z: tuple[float, float]) -> tuple[float, float]:
        """Torus image of ``z``."""
        _, s = split_unit(z[0])
        _, t = split_unit(z[1])
        s2, t2, _, _ = self.unit_step(s, t)
        return s2, t2

    __call__ = eval

    def lift(self, z: tuple[float, float]) -> tuple[float, float]:
        """Plane lift ``F`` evaluated at ``z``."""
        x, y = z
        _, s = split_unit(x)
        return (self.base_lift.eval(x),
                self.fiber.core.eval(y) + self.fiber.angle(s))

    def inverse(self, z: tuple[float, float]) -> tuple[float, float]:
        """Torus preimage of ``z``; fiber inversion via the monotone core."""
        _, s = split_unit(z[0])
        _, t = split_unit(z[1])
        sp = self.base_lift.inverse_eval(s)
        _, sp = split_unit(sp)
        tp = self.fiber.core.inverse_eval(t - self.fiber.angle(sp))
        _, tp = split_unit(tp)
        return sp, tp

    def iterate(self, z: tuple[float, float], n: int) -> tuple[float, float]:
        """n-fold forward image on the torus (n >= 0)."""
        _, s = split_unit(z[0])
        _, t = split_unit(z[1])
        step = self.unit_step
        for _ in range(n):
            s, t, _, _ = step(s, t)
        return s, t

    def orbit(self, z: tuple[float, float], n: int) -> np.ndarray:
        """Torus points ``z, f(z), ..., f^n(z)`` as an ``(n+1, 2)`` array."""
        _, s = split_unit(z[0])
        _, t = split_unit(z[1])
        out = np.empty((n + 1, 2))
        out[0] = (s, t)
        step = self.unit_step
        for i in range(1, n + 1):
            s, t, _, _ = step(s, t)
            out[i] = (s, t)
        return out

    # -- vectorized dynamics ---------------------------------------------------

    def unit_step_array(self, s: np.ndarray, t: np.ndarray):
        """Vectorized :meth:`unit_step` without winding bookkeeping."""
        t2 = self.fiber.core.eval_array(t) + self.fiber.angle_array(s)
        s2 = self.base_lift.eval_array(s)
        s2 -= np.floor(s2)
        t2 -= np.floor(t2)
        s2[s2 >= 1.0] -= 1.0
        t2[t2 >= 1.0] -= 1.0
        return s2, t2

    def rect_step(self, s_lo: np.ndarray, s_w: np.ndarray,
                  t_lo: np.ndarray, t_w: np.ndarray):
        """Outer enclosure of the image of axis rectangles.

        Rectangles are ``[s_lo, s_lo + s_w] x [t_lo, t_lo + t_w]`` with
        ``s_lo, t_lo`` in ``[0, 1)`` and widths in ``[0, 1]``.  Both maps are
        lift-monotone, so corner evaluations bound the base exactly and the
        fiber needs only the modulation range; a fixed inflation absorbs
        last-bit rounding so the enclosure is sound.
        """
        ev_b = self.base_lift.eval_array
        a = ev_b(s_lo)
        b = ev_b(s_lo + s_w)
        amin, amax = self.fiber.angle_range_array(s_lo, s_w)
        ev_c = self.fiber.core.eval_array
        c = ev_c(t_lo)
        d = ev_c(t_lo + t_w)

        s_lo2 = a - ENCLOSURE_INFLATE
        s_w2 = np.minimum((b - a) + 2.0 * ENCLOSURE_INFLATE, 1.0)
        t_lo2 = c + amin - ENCLOSURE_INFLATE
        t_w2 = np.minimum((d - c) + (amax - amin) + 2.0 * ENCLOSURE_INFLATE, 1.0)

        s_lo2 -= np.floor(s_lo2)
        t_lo2 -= np.floor(t_lo2)
        s_lo2[s_lo2 >= 1.0] -= 1.0
        t_lo2[t_lo2 >= 1.0] -= 1.0
        return s_lo2, s_w2, t_lo2, t_w2


def product_map(base: Union[DenjoyMap, CircleLift], fiber_lift: CircleLift) -> SkewProduct:
    """Product system: base times a fixed fiber circle map."""
    return SkewProduct(base, ConstantFiber(fiber_lift))


def rigid_translation(a: float, b: float) -> SkewProduct:
    """Rigid torus translation by ``(a, b)`` as a degenerate skew product."""
    from .circle import rigid_lift

    return product_map(rigid_lift(a), rigid_lift(b))


def skew_eval(f: SkewProduct, z: tuple[float, float]) -> tuple[float, float]:
    """Torus image of ``z`` under ``f``."""
    return f.eval(z)


@dataclass(frozen=True)
class RotationVectorEstimate:
    """Finite-orbit rotation vector with its per-coordinate error bound.

    The bound ``2/n`` is the lift-displacement bound applied to each
    coordinate of the skew product.
    """

    vector: tuple[float, float]
    error_bound: float
    iterations: int
    start: tuple[float, float]


def rotation_vector(f: SkewProduct, z0: tuple[float, float],
                    n_iters: int) -> RotationVectorEstimate:
    """Estimate ``lim (F^n(z) - z) / n`` from ``n_iters`` lift steps."""
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    _, s = split_unit(z0[0])
    _, t = split_unit(z0[1])
    s0, t0 = s, t
    ws = wt = 0
    step = f.unit_step
    for _ in range(n_iters):
        s, t, ks, kt = step(s, t)
        ws += ks
        wt += kt
    vec = ((ws + (s - s0)) / n_iters, (wt + (t - t0)) / n_iters)
    return RotationVectorEstimate(vec, 2.0 / n_iters, n_iters, (s0, t0))


def fiber_composition(beta: FiberFamily, s0: float, n: int,
                      theta: float = 0.0) -> CircleLift:
    """Lift of the fiber composition over the base orbit of ``s0``.

    With ``s_k = g1^k(s0)`` this is the lift of

        R_theta o beta(s_{n-1}) o ... o R_theta o beta(s_0),

    i.e. an extra rotation by ``theta`` after every factor; ``theta = 0``
    gives the plain composition.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    base_c = beta.base.lift
    angles = np.empty(n)
    _, s = split_unit(s0)
    for k in range(n):
        angles[k] = beta.angle(s) + theta
        y = base_c.unit_eval(s)
        s = y - math.floor(y)
        if s >= 1.0:
            s -= 1.0
    core = beta.core
    cs = angles.tolist()

    def ev(u: float) -> float:
        v = u
        for c in cs:
            v = core.eval(v) + c
        return v

    def inv(v: float) -> float:
        x = v
        for c in reversed(cs):
            x = core.inverse_eval(x - c)
        return x

    return CircleLift(ev, inv, kind="rotated-composite")


def find_displacement_time(beta: FiberFamily, s0: float, t: float,
                           theta: float, cap: int = 10**6) -> int:
    """Least ``n`` such that the theta-kicked fiber composition has drifted
    one full turn ahead of the plain one at ``t``.

    Once the lift gap exceeds 1 it stays above 1 (monotone degree-one
    factors), so the returned time is a genuine threshold.  Raises
    :class:`BudgetError` when ``cap`` steps do not suffice, which signals
    that ``theta`` is too small for the budget.
    """
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    core_ev = beta.core.eval
    angle = beta.angle
    base_c = beta.base.lift
    _, s = split_unit(s0)
    u = v = float(t)
    for n in range(1, cap + 1):
        c = angle(s)
        u = core_ev(u) + c
        v = core_ev(v) + c + theta
        if v - u > 1.0:
            return n
        y = base_c.unit_eval(s)
        s = y - math.floor(y)
        if s >= 1.0:
            s -= 1.0
    raise BudgetError(
        f"displacement did not exceed one turn within {cap} steps "
        f"(theta={theta!r})", displacement=v - u, cap=cap)
