"""Return-forcing perturbations of fiber families.

Given the skew product ``f(s, t) = (g1(s), beta(s)(t))`` with ``beta = g2``
on the base minimal set, a point ``x = (s, t)`` with ``s`` in the minimal
set, and radii ``eps, delta > 0``, this module builds a fiber family
``beta'`` that is ``delta``-close to ``beta``, agrees with it on the
minimal set and on the forward orbit of one point ``a``, and forces an
iterate of ``f_{beta'}`` to bring the ball ``B(x, eps)`` back onto itself:

1. pick a subinterval ``(a, b)`` of an enumerated wandering interval of
   ``g1`` inside ``(s - eps, s + eps)``;
2. find the displacement time ``n0`` after which the theta-kicked fiber
   composition along the orbit of ``b`` has drifted a full turn ahead of
   the plain one (``theta = min(delta, 0.05)``);
3. take ``k > n0`` an enumerated time with ``g1^k((a, b))`` back inside
   the window, and override ``beta`` with ``R_theta o beta`` at the points
   ``b, g1(b), ..., g1^k(b)`` via narrow bumps supported inside the
   wandering intervals.

The segment ``gamma = (a, b) x {t}`` then stretches across a full fiber
turn by step ``k`` while its base stays in the window, so its image meets
every fiber window over the base window; :func:`verify_return` exhibits a
concrete witness by direct iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .circle import split_unit
from .denjoy import DenjoyMap
from .errors import BudgetError
from .skew import (FiberFamily, Override, SkewProduct, find_displacement_time,
                   torus_dist)

__all__ = [
    "ReturnCheck",
    "ReturnPerturbation",
    "build_return_perturbation",
    "verify_return",
]

MIN_OVERRIDE_RADIUS = 1e-9
DEFAULT_KICK = 0.05


@dataclass(frozen=True)
class ReturnPerturbation:
    """Output of :func:`build_return_perturbation`.

    ``beta_prime`` is the overridden fiber family, ``k`` the forced return
    time, ``gap_interval`` the chosen subinterval ``(a, b)`` of the host
    wandering interval; ``n0``, ``theta``, ``host_index`` and
    ``min_radius`` record the construction for diagnostics.
    """

    beta_prime: FiberFamily
    k: int
    gap_interval: tuple[float, float]
    host_index: int
    theta: float
    n0: int
    min_radius: float


def _window_offset(pos: np.ndarray, center: float) -> np.ndarray:
    """Signed circular offset of positions from ``center``, in [-1/2, 1/2)."""
    return (pos - center + 0.5) % 1.0 - 0.5


def _gaps_inside_window(base: DenjoyMap, center: float, eps: float) -> np.ndarray:
    """Slots of enumerated gaps contained in the open window around ``center``."""
    off = _window_offset(base.lefts, center)
    return np.where((off > -eps) & (off + base.lens < eps))[0]


def build_return_perturbation(beta: FiberFamily, x: tuple[float, float],
                              eps: float, delta: float,
                              displacement_cap: int = 10**6) -> ReturnPerturbation:
    """Construct the return-forcing perturbation ``beta'`` at ``x``.

    Raises ``ValueError`` when no enumerated wandering interval fits inside
    the window or when no safe override radius >= 1e-9 exists (both signal
    that the truncation is too coarse for the requested ``eps``), and
    :class:`BudgetError` when the displacement search exceeds its cap.
    """
    if eps <= 0.0 or delta <= 0.0:
        raise ValueError("eps and delta must be positive")
    base = beta.base
    _, s = split_unit(x[0])
    _, t = split_unit(x[1])
    if base.gap_locate(s).kind != "cantor":
        raise ValueError(
            "base coordinate of x must belong to the minimal set "
            "(gap endpoints and Cantor points)")

    slots = _gaps_inside_window(base, s, eps)
    if slots.size == 0:
        raise ValueError(
            "no enumerated wandering interval inside the window; "
            "increase the truncation of the base map")
    host = int(slots[np.argmax(base.lens[slots])])
    host_index = int(base.n_of_slot[host])
    left = float(base.lefts[host])
    length = float(base.lens[host])
    a = left + 0.25 * length
    b = left + 0.625 * length

    theta = min(delta, DEFAULT_KICK)
    n0 = find_displacement_time(beta, b, t, theta, cap=displacement_cap)

    k = None
    for cand in range(n0 + 1, base.N - host_index + 1):
        slot = base.slot_of_index(host_index + cand)
        off = float(_window_offset(base.lefts[slot:slot + 1], s)[0])
        if off > -eps and off + float(base.lens[slot]) < eps:
            k = cand
            break
    if k is None:
        raise ValueError(
            f"no enumerated return of the wandering interval past n0={n0} "
            "inside the window; increase the truncation")

    # override centers: the computed float orbit of b (affine on gaps, so it
    # stays at a fixed relative position); radii keep each bump inside its
    # gap, clear of the orbit of a and of the gap endpoints
    ev = base.lift.eval
    overrides = []
    min_radius = math.inf
    ai, bi = a, b
    for i in range(k + 1):
        slot = base.slot_of_index(host_index + i)
        gl = float(base.lefts[slot])
        gr = float(base.rights[slot])
        radius = 0.5 * min(abs(bi - ai), bi - gl, gr - bi)
        min_radius = min(min_radius, radius)
        if radius < MIN_OVERRIDE_RADIUS:
            raise ValueError(
                f"no safe override radius at orbit step {i}: {radius:.3e} < "
                f"{MIN_OVERRIDE_RADIUS:.0e}; the forced return time {k} drifts "
                "into gaps too short for a continuous perturbation")
        overrides.append(Override(bi, radius, theta))
        if i < k:
            ai = ev(ai) % 1.0
            bi = ev(bi) % 1.0

    beta_prime = beta.with_overrides(overrides)
    return ReturnPerturbation(beta_prime, k, (a, b), host_index, theta, n0,
                              min_radius)


@dataclass(frozen=True)
class ReturnCheck:
    """Result of :func:`verify_return`: a miss is a valid outcome."""

    hit: bool
    witness: Optional[tuple[float, float]]
    landing: Optional[tuple[float, float]]
    min_distance: float
    samples_used: int


def verify_return(f: SkewProduct, x: tuple[float, float], eps: float,
                  k: int, samples: int = 4096) -> ReturnCheck:
    """Check ``f^k(B(x, eps)) \\cap B(x, eps) != 0`` by direct iteration.

    Samples a deterministic set of points of the open ball, iterates every
    sample ``k`` steps, and reports the first sample (in sample order) whose
    image lands back in the ball, together with the smallest final distance
    observed.

    Half the budget goes to a dense sweep of the horizontal diameter
    ``(s - eps, s + eps) x {t}``: for skew products the base coordinate
    alone decides which fibers can return, so returning sets are thin
    vertical strips and the diameter line resolves them far better than a
    square grid of equal size.  The other half fills a disc grid.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    _, s = split_unit(x[0])
    _, t = split_unit(x[1])

    n_line = max(16, samples // 2)
    line_u = np.linspace(-eps, eps, n_line) * (1.0 - 1e-9)
    line_v = np.zeros(n_line)

    g = max(3, int(math.ceil(math.sqrt((samples - samples // 2) * 4.0 / math.pi))))
    if g % 2 == 0:
        g += 1  # odd grid keeps the central cross through x
    offs = np.linspace(-eps, eps, g) * (1.0 - 1e-9)
    du, dv = np.meshgrid(offs, offs, indexing="ij")
    keep = du * du + dv * dv < (eps * (1.0 - 1e-9)) ** 2

    du = np.concatenate([line_u, du[keep]])
    dv = np.concatenate([line_v, dv[keep]])
    su = (s + du) % 1.0
    tv = (t + dv) % 1.0
    start = np.stack([su, tv], axis=1)

    for _ in range(k):
        su, tv = f.unit_step_array(su, tv)

    ds = np.abs(su - s) % 1.0
    dt = np.abs(tv - t) % 1.0
    dist = np.hypot(np.minimum(ds, 1.0 - ds), np.minimum(dt, 1.0 - dt))
    hits = dist < eps
    if np.any(hits):
        idx = int(np.argmax(hits))
        witness = (float(start[idx, 0]), float(start[idx, 1]))
        landing = (float(su[idx]), float(tv[idx]))
        return ReturnCheck(True, witness, landing, float(dist.min()), len(start))
    return ReturnCheck(False, None, None, float(dist.min()), len(start))
