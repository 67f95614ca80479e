"""Circle homeomorphisms represented by their lifts to the real line.

A lift of an orientation-preserving circle homeomorphism is a strictly
increasing map ``G`` of the reals with ``G(x + 1) = G(x) + 1``.  Everything
in this package manipulates circle maps through such lifts: they compose
cleanly, their rotation numbers are limits of orbit displacements, and
monotonicity makes inversion a bisection problem.

Lifts are stored through their restriction to ``[0, 1)`` (``unit_eval``):
the full lift is reconstructed as ``G(k + u) = unit_eval(u) + k``, which
makes integer equivariance exact in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import BudgetError

__all__ = [
    "CircleLift",
    "QuadraticIrrational",
    "RotationEstimate",
    "GOLDEN_ROTATION",
    "SILVER_ROTATION",
    "rigid_lift",
    "compose_rotation",
    "lift_eval",
    "inverse_eval",
    "rotation_number",
    "continued_fraction",
    "near_rational",
    "rationally_independent",
]


def split_unit(x: float) -> tuple[int, float]:
    """Split a real into integer part and fractional part in ``[0, 1)``."""
    k = math.floor(x)
    u = x - k
    if u >= 1.0:  # rounding can push x - floor(x) to exactly 1.0
        u -= 1.0
        k += 1
    return k, u


@dataclass(frozen=True)
class CircleLift:
    """Strictly increasing degree-one lift of a circle homeomorphism.

    ``unit_eval`` evaluates the lift on ``[0, 1)``; ``unit_inverse`` takes
    ``v`` in ``[0, 1)`` and returns some real ``x`` with ``eval(x) == v``.
    ``kind`` tags the construction (``rigid``, ``denjoy`` or
    ``rotated-composite``), ``rho`` records the rotation number when it is
    known by construction.
    """

    unit_eval: Callable[[float], float]
    unit_inverse: Callable[[float], float]
    kind: str
    rho: Optional[float] = None
    unit_eval_array: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def eval(self, x: float) -> float:
        k, u = split_unit(x)
        return self.unit_eval(u) + k

    __call__ = eval

    def inverse_eval(self, y: float) -> float:
        k, v = split_unit(y)
        return self.unit_inverse(v) + k

    def eval_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        u = x - k
        high = u >= 1.0
        if np.any(high):
            u = np.where(high, u - 1.0, u)
            k = np.where(high, k + 1.0, k)
        if self.unit_eval_array is not None:
            return self.unit_eval_array(u) + k
        flat = u.ravel()
        out = np.fromiter((self.unit_eval(float(t)) for t in flat), dtype=float,
                          count=flat.size)
        return out.reshape(u.shape) + k


class RotationEstimate(NamedTuple):
    """Finite-orbit rotation number estimate with its a-priori error bound."""

    estimate: float
    error_bound: float


def rigid_lift(alpha: float) -> CircleLift:
    """Lift ``x -> x + alpha`` of the rigid rotation by ``alpha``."""
    a = float(alpha)

    def ev(u: float) -> float:
        return u + a

    def inv(v: float) -> float:
        return v - a

    def ev_arr(u: np.ndarray) -> np.ndarray:
        return u + a

    return CircleLift(ev, inv, kind="rigid", rho=a % 1.0, unit_eval_array=ev_arr)


def compose_rotation(lift: CircleLift, theta: float) -> CircleLift:
    """Post-compose a lift with the rotation by ``theta`` in ``[0, 1)``.

    The lift of ``R_theta o g`` is simply ``g + theta``, so monotonicity and
    equivariance are inherited.  ``theta == 0`` returns the input unchanged.
    """
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"theta must lie in [0, 1), got {theta!r}")
    if theta == 0.0:
        return lift
    if lift.kind == "rigid" and lift.rho is not None:
        return rigid_lift((lift.rho + theta) % 1.0)

    base_ev = lift.unit_eval
    base_arr = lift.unit_eval_array

    def ev(u: float) -> float:
        return base_ev(u) + theta

    def inv(v: float) -> float:
        return lift.inverse_eval(v - theta)

    ev_arr = None
    if base_arr is not None:
        def ev_arr(u: np.ndarray) -> np.ndarray:
            return base_arr(u) + theta

    return CircleLift(ev, inv, kind="rotated-composite", rho=None,
                      unit_eval_array=ev_arr)


def lift_eval(lift: CircleLift, x: float) -> float:
    """Evaluate the lift at ``x``; total on the reals and equivariant."""
    return lift.eval(x)


def inverse_eval(lift: CircleLift, y: float) -> float:
    """Return ``x`` with ``lift.eval(x) == y`` up to the inversion tolerance."""
    return lift.inverse_eval(y)


def bisection_inverse(eval_fn: Callable[[float], float], y: float,
                      tol: float = 1e-12, max_expand: int = 64,
                      max_iter: int = 256) -> float:
    """Invert a monotone lift by bracketing and bisection.

    Fallback for lifts without a structural inverse.  Raises
    :class:`BudgetError` if a bracket cannot be found or bisection fails to
    converge, which signals non-monotone data (a construction bug).
    """
    lo, hi = y - 1.0, y + 1.0
    n = 0
    while eval_fn(lo) > y:
        lo -= 1.0
        n += 1
        if n > max_expand:
            raise BudgetError("bisection bracket expansion exhausted (low side)")
    n = 0
    while eval_fn(hi) < y:
        hi += 1.0
        n += 1
        if n > max_expand:
            raise BudgetError("bisection bracket expansion exhausted (high side)")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol:
            return mid
        if eval_fn(mid) < y:
            lo = mid
        else:
            hi = mid
    raise BudgetError("bisection budget exhausted; lift data may be non-monotone")


def rotation_number(lift: CircleLift, n_iters: int, x0: float = 0.0) -> RotationEstimate:
    """Estimate the rotation number from ``n_iters`` orbit steps.

    Returns ``(G^n(x0) - x0) / n`` together with the bound ``1/n``: for any
    circle-homeomorphism lift the orbit displacement differs from ``n * rho``
    by less than 1.  The orbit is tracked as fractional part plus integer
    winding so precision does not degrade as the lift values grow.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    ev = lift.unit_eval
    floor = math.floor
    _, u = split_unit(x0)
    u0 = u
    winding = 0
    for _ in range(n_iters):
        y = ev(u)
        k = floor(y)
        u = y - k
        if u >= 1.0:
            u -= 1.0
            k += 1
        winding += k
    return RotationEstimate((winding + (u - u0)) / n_iters, 1.0 / n_iters)


# -- prescribed rotation numbers ------------------------------------------

@dataclass(frozen=True)
class QuadraticIrrational:
    """Quadratic irrational ``(a + b*sqrt(c)) / d`` stored symbolically.

    Rotation numbers of constructed maps are prescribed through this exact
    descriptor; the floating value is derived from a high-precision
    evaluation, so it is the correctly rounded double.
    """

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self) -> None:
        if self.d == 0:
            raise ValueError("denominator d must be nonzero")
        if self.c < 0:
            raise ValueError("radicand c must be nonnegative")

    def mpf(self, dps: int = 50):
        import mpmath

        with mpmath.workdps(dps):
            return (self.a + self.b * mpmath.sqrt(self.c)) / self.d

    @property
    def value(self) -> float:
        return float(self.mpf())

    @property
    def is_irrational(self) -> bool:
        if self.b == 0:
            return False
        r = math.isqrt(self.c)
        return r * r != self.c

    def squarefree_core(self) -> int:
        """Squarefree part of ``c`` (1 when ``c`` is a perfect square)."""
        n, core, f = self.c, 1, 2
        while f * f <= n:
            e = 0
            while n % f == 0:
                n //= f
                e += 1
            if e % 2:
                core *= f
            f += 1
        return core * n if n > 1 else core


GOLDEN_ROTATION = QuadraticIrrational(-1, 1, 5, 2)   # (sqrt(5) - 1) / 2
SILVER_ROTATION = QuadraticIrrational(-1, 1, 2, 1)   # sqrt(2) - 1


def rationally_independent(r1: QuadraticIrrational, r2: QuadraticIrrational) -> bool:
    """Whether ``(1, r1, r2)`` generate a rank-3 group over the rationals.

    Sufficient criterion: both numbers are irrational and their radicands
    have distinct squarefree cores, so ``1, sqrt(c1'), sqrt(c2')`` are
    linearly independent over the rationals.
    """
    if not (r1.is_irrational and r2.is_irrational):
        return False
    return r1.squarefree_core() != r2.squarefree_core()


def continued_fraction(x: float, max_terms: int = 24) -> list[int]:
    """Partial quotients of ``x``, stopping when the residual is float noise."""
    terms: list[int] = []
    y = float(x)
    for _ in range(max_terms):
        a = math.floor(y)
        terms.append(a)
        frac = y - a
        if frac < 1e-14:
            break
        y = 1.0 / frac
    return terms


def near_rational(x: float, q_cap: int = 10**4, tol: float = 1e-12) -> Optional[tuple[int, int]]:
    """Flag a float that is suspiciously close to a fraction with a small
    denominator.

    Walks the continued-fraction convergents of ``x`` and returns the first
    ``(p, q)`` with ``q <= q_cap`` and ``|x - p/q| < tol``, or ``None``.
    Convergents of a badly approximable irrational at denominator ``q`` miss
    it by roughly ``1/q**2 > tol`` for every ``q <= q_cap``, so genuine
    quadratic irrationals never trigger this; it is a heuristic, not a proof
    of irrationality.
    """
    p_prev, q_prev = 1, 0
    p_cur, q_cur = math.floor(x), 1
    y = x - math.floor(x)
    for _ in range(64):
        if q_cur > q_cap:
            return None
        if abs(x - p_cur / q_cur) < tol:
            return p_cur, q_cur
        if y < 1e-16:
            return None
        y = 1.0 / y
        a = math.floor(y)
        y -= a
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
    return None
