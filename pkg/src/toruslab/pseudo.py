"""Pseudo-orbits and the two-jump chain construction.

An ``eps``-pseudo-orbit is a torus point sequence ``z_0, ..., z_n`` with
``d(f(z_i), z_{i+1}) < eps`` at every step; a *jump* is a step whose error
exceeds the exact-orbit tolerance ``1e-9`` (double-precision recomputation
noise sits far below that).

For the maps built by this package, any two points can be joined by a
valid pseudo-orbit with at most two jumps, assembled from three genuine
orbit segments:

    x, ..., f^{n0-1}(x),  z, ..., f^n(z),  f^{-n0}(y), ..., y

where ``n0`` brings both ends near the nonwandering over-approximation and
the connector ``z`` is found by a refining grid search in the ball around
``f^{n0}(x)`` whose forward orbit enters the ball around ``f^{-n0}(y)``.
Budgets are explicit: failures are inconclusive and report the best
near-miss distance rather than asserting absence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BudgetError
from .circle import split_unit
from .omega import NonwanderingApprox, near_mask, nonwandering_approx
from .skew import SkewProduct, torus_dist

__all__ = [
    "TOL_TRUE",
    "ChainBudgets",
    "PseudoOrbit",
    "ValidationReport",
    "make_pseudo_orbit",
    "two_jump_pseudo_orbit",
    "validate_pseudo_orbit",
]

TOL_TRUE = 1e-9  # step errors above this count as jumps


@dataclass(frozen=True)
class PseudoOrbit:
    """A point sequence on the torus with its tolerance and jump set."""

    points: np.ndarray
    epsilon: float
    jumps: tuple[int, ...]

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("a pseudo-orbit needs at least two torus points")
        object.__setattr__(self, "points", pts)
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")

    @property
    def n_steps(self) -> int:
        return len(self.points) - 1

    def to_text(self) -> str:
        """Serialize: header (epsilon, n, jumps), one point per line, 17
        significant digits."""
        lines = [f"epsilon {self.epsilon:.17g}",
                 f"n {self.n_steps}",
                 "jumps " + " ".join(str(j) for j in self.jumps)]
        lines.extend(f"{s:.17g} {t:.17g}" for s, t in self.points)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PseudoOrbit":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if len(lines) < 3:
            raise ValueError("truncated pseudo-orbit serialization")
        eps = float(lines[0].split()[1])
        n = int(lines[1].split()[1])
        jump_fields = lines[2].split()[1:]
        jumps = tuple(int(v) for v in jump_fields)
        pts = np.array([[float(a) for a in ln.split()] for ln in lines[3:]])
        if len(pts) != n + 1:
            raise ValueError(f"point count mismatch: header {n + 1}, got {len(pts)}")
        return cls(pts, eps, jumps)


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    jump_count: int
    max_step_error: float


def _step_errors(f: SkewProduct, points: np.ndarray) -> np.ndarray:
    ss, tt = f.unit_step_array(points[:-1, 0], points[:-1, 1])
    ds = np.abs(ss - points[1:, 0]) % 1.0
    dt = np.abs(tt - points[1:, 1]) % 1.0
    return np.hypot(np.minimum(ds, 1.0 - ds), np.minimum(dt, 1.0 - dt))


def make_pseudo_orbit(f: SkewProduct, points: np.ndarray, epsilon: float) -> PseudoOrbit:
    """Wrap a point sequence, computing its jump set with fresh evaluations."""
    pts = np.asarray(points, dtype=float)
    err = _step_errors(f, pts)
    jumps = tuple(int(i) for i in np.nonzero(err > TOL_TRUE)[0])
    return PseudoOrbit(pts, epsilon, jumps)


def validate_pseudo_orbit(f: SkewProduct, po: PseudoOrbit) -> ValidationReport:
    """Recompute every step error; valid iff all are below ``po.epsilon``."""
    err = _step_errors(f, po.points)
    return ValidationReport(bool(np.all(err < po.epsilon)),
                            int(np.count_nonzero(err > TOL_TRUE)),
                            float(err.max()))


@dataclass(frozen=True)
class ChainBudgets:
    """Explicit budgets for the two-jump construction.

    ``omega_grid``/``omega_horizon`` size the nonwandering approximation,
    ``orbit_search`` caps the walk locating ``n0``, ``direct_horizon`` the
    scan for an exact connecting orbit.  The connector search runs in two
    phases: a base-line sweep (``connector_line`` points for up to
    ``connector_base_cap`` steps, at most ``connector_candidates`` fiber
    solves), then a fallback sweep of disc grids (``connector_levels``
    refinements, per-level orbit caps, ``total_steps`` overall).
    """

    omega_grid: int = 64
    omega_horizon: int = 2000
    orbit_search: int = 100_000
    direct_horizon: int = 4096
    connector_line: int = 4096
    connector_base_cap: int = 200_000
    connector_candidates: int = 256
    connector_levels: tuple[int, ...] = (8, 16, 32, 64)
    connector_orbit: int = 1_000_000
    total_steps: int = 20_000_000
    level_orbit_caps: tuple[int, ...] = (20_000, 50_000, 200_000, 1_000_000)


def _disc_grid(center: tuple[float, float], radius: float, g: int):
    offs = np.linspace(-radius, radius, g)
    du, dv = np.meshgrid(offs, offs, indexing="ij")
    keep = du * du + dv * dv < radius * radius
    su = (center[0] + du[keep]) % 1.0
    tv = (center[1] + dv[keep]) % 1.0
    return su, tv


def _connector_by_fiber_solve(f: SkewProduct, p_hat, q_hat, epsilon: float,
                              b: ChainBudgets):
    """Connector search exploiting the skew structure.

    Phase A sweeps a dense line of base coordinates through the connector
    ball and records the steps at which base orbits land near the target
    base coordinate.  Phase B works per base hit: the admissible fiber
    starts form a vertical chord of the connector ball, the fiber
    composition along the (fixed) base orbit is a monotone circle map, so
    the chord's image is an arc whose lift endpoints are two evaluations;
    when that arc overlaps the target fiber window, inverting the lift at
    a point of the overlap produces an exact candidate.  Every candidate is
    re-verified through the scalar path before being accepted.  Returns the
    middle orbit segment or ``None``.
    """
    radius = 0.98 * epsilon
    base = f.base_lift
    core = f.fiber.core
    angle = f.fiber.angle

    n_line = b.connector_line
    offsets = np.linspace(-radius, radius, n_line) * (1 - 1e-9)
    line = (p_hat[0] + offsets) % 1.0
    svals = line.copy()
    tried = 0
    for step in range(1, b.connector_base_cap + 1):
        svals = base.eval_array(svals)
        svals -= np.floor(svals)
        d = np.abs(svals - q_hat[0]) % 1.0
        d = np.minimum(d, 1.0 - d)
        hits = np.nonzero(d < 0.9 * radius)[0]
        for idx in hits[:8]:
            tried += 1
            if tried > b.connector_candidates:
                return None
            s0 = float(line[int(idx)])
            half = math.sqrt(max(0.0, radius * radius - offsets[int(idx)] ** 2))
            if half <= 0.0:
                continue
            # scalar base orbit with its modulation angles, and the landing
            # base distance along the scalar path
            angles = np.empty(step)
            s = s0
            for k in range(step):
                angles[k] = angle(s)
                ynext = base.unit_eval(s)
                s = ynext - math.floor(ynext)
                if s >= 1.0:
                    s -= 1.0
            d_land = abs(s - q_hat[0]) % 1.0
            d_land = min(d_land, 1.0 - d_land)
            if d_land >= 0.93 * epsilon:
                continue
            w = math.sqrt((0.95 * epsilon) ** 2 - d_land * d_land)

            # image arc of the fiber chord through the composition lift
            lo_in, hi_in = p_hat[1] - half, p_hat[1] + half
            a_val, b_val = lo_in, hi_in
            for k in range(step):
                a_val = core.eval(a_val) + angles[k]
                b_val = core.eval(b_val) + angles[k]
            # overlap the target window (q_hat[1] +- w, mod 1) with [A, B]
            kshift = math.floor(a_val - (q_hat[1] - w))
            target = None
            for kk in (kshift, kshift + 1, kshift + 2):
                win_lo = q_hat[1] - w + kk
                win_hi = q_hat[1] + w + kk
                olo, ohi = max(win_lo, a_val), min(win_hi, b_val)
                if olo <= ohi:
                    target = 0.5 * (olo + ohi)
                    break
            if target is None:
                continue
            v = target
            for k in range(step - 1, -1, -1):
                v = core.inverse_eval(v - angles[k])
            _, t0 = split_unit(v)
            cand = [(s0, t0)]
            zs, zt = s0, t0
            for _ in range(step - 1):
                zs, zt, _, _ = f.unit_step(zs, zt)
                cand.append((zs, zt))
            zs, zt, _, _ = f.unit_step(zs, zt)
            if (torus_dist((zs, zt), q_hat) < 0.97 * epsilon
                    and torus_dist((s0, t0), p_hat) < radius):
                return cand
    return None


def two_jump_pseudo_orbit(f: SkewProduct, x: tuple[float, float],
                          y: tuple[float, float], epsilon: float,
                          budgets: Optional[ChainBudgets] = None,
                          omega: Optional[NonwanderingApprox] = None) -> PseudoOrbit:
    """Valid ``epsilon``-pseudo-orbit from ``x`` to ``y`` with at most two
    jumps.

    Follows the three-segment construction described in the module
    docstring.  When the genuine orbit of ``x`` reaches ``y`` within the
    direct-scan horizon the plain orbit is returned (zero jumps).  The
    connector search iterates whole candidate grids in lockstep and picks
    the earliest hit, ties broken by sample order, so results are
    deterministic and independent of any parallel schedule.

    Raises :class:`BudgetError` (with ``near_miss`` diagnostics) when a
    budget is exhausted; that outcome is inconclusive by design.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    b = budgets or ChainBudgets()
    _, xs = split_unit(x[0])
    _, xt = split_unit(x[1])
    _, ys = split_unit(y[0])
    _, yt = split_unit(y[1])
    x0 = (xs, xt)
    y0 = (ys, yt)

    # direct scan: the plain orbit may already do it
    pts = [x0]
    s, t = x0
    for _ in range(b.direct_horizon):
        s, t, _, _ = f.unit_step(s, t)
        if torus_dist((s, t), y0) <= TOL_TRUE:
            pts.append(y0)
            return make_pseudo_orbit(f, np.array(pts), epsilon)
        pts.append((s, t))

    if omega is None:
        omega = nonwandering_approx(f, b.omega_grid, b.omega_horizon)
    near = near_mask(omega, epsilon / 2.0)
    m = omega.m

    def near_omega(p: tuple[float, float]) -> bool:
        return bool(near[min(int(p[0] * m), m - 1), min(int(p[1] * m), m - 1)])

    # walk both orbits to a common n0 with f^{n0+1}(x) and f^{-n0}(y) near
    # the returning set
    fwd = [x0]                      # fwd[k] = f^k(x)
    s, t = x0
    s, t, _, _ = f.unit_step(s, t)
    fwd.append((s, t))
    bwd = [y0]                      # bwd[k] = f^{-k}(y)
    q = y0
    n0 = None
    for n in range(1, b.orbit_search + 1):
        s, t, _, _ = f.unit_step(s, t)
        fwd.append((s, t))          # fwd[n + 1]
        q = f.inverse(q)
        bwd.append(q)               # bwd[n]
        if near_omega(fwd[n + 1]) and near_omega(q):
            n0 = n
            break
    if n0 is None:
        raise BudgetError(
            f"no n0 within {b.orbit_search} steps brings both orbits near "
            "the nonwandering approximation", near_miss=None)

    p_hat = fwd[n0]                 # connector ball center, f^{n0}(x)
    q_hat = bwd[n0]                 # target ball center, f^{-n0}(y)
    radius = 0.98 * epsilon

    def rebuild(z0: tuple[float, float], steps: int) -> list[tuple[float, float]]:
        out = [z0]
        zs, zt = z0
        for _ in range(steps - 1):
            zs, zt, _, _ = f.unit_step(zs, zt)
            out.append((zs, zt))
        return out

    best_miss = math.inf
    spent = 0
    mid: Optional[list[tuple[float, float]]] = None
    mid = _connector_by_fiber_solve(f, p_hat, q_hat, epsilon, b)
    for g, cap in zip(b.connector_levels, b.level_orbit_caps):
        if mid is not None:
            break
        su0, tv0 = _disc_grid(p_hat, radius, g)
        if su0.size == 0:
            continue
        su, tv = su0.copy(), tv0.copy()
        steps = min(cap, b.connector_orbit,
                    max(0, (b.total_steps - spent) // su0.size))
        for step in range(1, steps + 1):
            su, tv = f.unit_step_array(su, tv)
            ds = np.abs(su - q_hat[0]) % 1.0
            dt = np.abs(tv - q_hat[1]) % 1.0
            dist = np.hypot(np.minimum(ds, 1.0 - ds), np.minimum(dt, 1.0 - dt))
            dmin = float(dist.min())
            if dmin < best_miss:
                best_miss = dmin
            if dmin < radius:
                # re-run the winning candidate through the scalar path and
                # re-verify before accepting: the vectorized sweep may
                # differ in the last bits, which long orbits can amplify
                idx = int(np.argmin(dist))
                cand = rebuild((float(su0[idx]), float(tv0[idx])), step)
                zs, zt, _, _ = f.unit_step(*cand[-1])
                if torus_dist((zs, zt), q_hat) < 0.99 * epsilon:
                    mid = cand
                    spent += su0.size * step
                    break
        else:
            spent += su0.size * steps
        if mid is not None:
            break
        if spent >= b.total_steps:
            break
    if mid is None:
        raise BudgetError(
            f"connector search exhausted ({spent} orbit steps); best "
            f"near-miss distance {best_miss:.6g} against radius {radius:.6g}",
            near_miss=best_miss, steps_spent=spent)

    seq = np.concatenate([
        np.array(fwd[:n0]),          # x .. f^{n0-1}(x)
        np.array(mid),               # z .. f^n(z); f^{n+1}(z) lands near q_hat
        np.array(bwd[::-1]),         # f^{-n0}(y) .. y
    ])
    po = make_pseudo_orbit(f, seq, epsilon)
    if len(po.jumps) > 2:
        raise AssertionError(
            f"two-jump construction produced {len(po.jumps)} jumps")
    return po
