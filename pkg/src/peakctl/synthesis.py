"""Ingredients of the null-singular-null strategy.

For a model and an initial condition with f2 > 0 this module computes:

* ``x_h(y)``       -- unique abscissa with f2(x_h, y) = 0 at level y
* ``uncontrolled_arc`` -- the u = 0 trajectory up to its y-peak y0max
* ``x_bar``        -- abscissa where the uncontrolled arc first hits a level
* ``budget_L``     -- total control budget consumed when holding a level,
                      the line integral of -f2/Delta in x
* ``solve_ystar``  -- the level whose budget equals K (monotone bisection)

The budget curve is strictly decreasing in the level, which makes the
bisection unconditionally convergent.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NoBracket, NotInDPlus, OutOfRange, SingularDelta
from .integrate import DEFAULT_HORIZON, Trajectory, event_f2_zero, integrate
from .models import PlanarModel, State, delta
from .quadrature import adaptive_quad

F2_TOL = 1e-12
ARC_RTOL = 1e-12
ARC_ATOL = 1e-14
BRACKET_STEPS = 64


def x_h(model: PlanarModel, y: float, x_max: Optional[float] = None) -> float:
    """Abscissa of the f2 = 0 set at level ``y``.

    Scans for a sign change by geometric expansion from the domain's left
    edge, then hands the bracket to a bisection/secant hybrid.  Raises
    NoBracket when f2 keeps a constant sign over the scanned range, which
    signals that the uniqueness assumption fails at this level.
    """
    dom = model.domain
    if not math.isfinite(dom.xmin):
        raise NoBracket("domain has no finite left edge to scan from")
    if x_max is None:
        x_max = dom.xmax if math.isfinite(dom.xmax) else 10.0 * max(1.0, abs(y))
    width = x_max - dom.xmin
    if width <= 0:
        raise NoBracket("empty scan range")
    offsets = np.geomspace(1e-9 * width, width, BRACKET_STEPS)
    pts = dom.xmin + offsets

    def f(x: float) -> float:
        return model.f2(x, y)

    vals = [f(p) for p in pts]
    for (a, fa), (b, fb) in zip(zip(pts, vals), zip(pts[1:], vals[1:])):
        if fa == 0.0:
            return float(a)
        if fa * fb < 0.0:
            root = brentq(f, a, b, xtol=1e-13, rtol=8.9e-16)
            if abs(f(root)) > F2_TOL:
                root = brentq(f, max(a, root - 1e-9), min(b, root + 1e-9),
                              xtol=1e-15, rtol=8.9e-16)
            return float(root)
    raise NoBracket(
        f"f2(., {y}) has constant sign over [{pts[0]:.6g}, {pts[-1]:.6g}]")


def uncontrolled_arc(model: PlanarModel, s0: State,
                     horizon: float = DEFAULT_HORIZON,
                     rtol: float = ARC_RTOL,
                     atol: float = ARC_ATOL) -> tuple:
    """Integrate u = 0 from ``s0`` up to the f2 = 0 crossing.

    Returns (y0max, arc).  The arc keeps dense output so that x_bar can be
    recovered for any level by inverse lookup.  An initial condition already
    on f2 = 0 yields (y0, empty arc); f2 < 0 raises NotInDPlus.
    """
    f20 = model.f2(s0.x, s0.y)
    if f20 < -F2_TOL:
        raise NotInDPlus(f"f2(s0) = {f20:.3e} < 0")
    if f20 <= F2_TOL:
        return s0.y, Trajectory.empty(0.0, s0)
    arc = integrate(model, lambda s: 0.0, s0, horizon=horizon,
                    events=[event_f2_zero(model, terminal=True, direction=-1.0)],
                    rtol=rtol, atol=atol)
    return float(arc.y[-1]), arc


def x_bar(arc: Trajectory, ybar: float) -> float:
    """Abscissa where the arc's (increasing) y first equals ``ybar``."""
    if arc.t.size == 0:
        raise OutOfRange("empty arc")
    y0, ymax = float(arc.y[0]), float(arc.y[-1])
    tol = 1e-9 * max(1.0, abs(ymax))
    if not (y0 - tol <= ybar <= ymax + tol):
        raise OutOfRange(f"level {ybar} outside arc range [{y0}, {ymax}]")
    if ybar <= y0:
        return float(arc.x[0])
    if ybar >= ymax or arc.t.size == 1:
        return float(arc.x[-1])

    def g(t: float) -> float:
        return arc.state_at(t).y - ybar

    t_hit = brentq(g, float(arc.t[0]), float(arc.t[-1]),
                   xtol=1e-15, rtol=8.9e-16)
    return float(arc.state_at(t_hit).x)


def budget_L(model: PlanarModel, ybar: float, xh: float, xbar: float,
             rel_tol: float = 1e-10) -> float:
    """Budget spent holding level ``ybar``: integral of -f2/Delta over
    [x_h, x_bar].

    The integrand vanishes at x_h (f2 does); the open-interval rule never
    evaluates there, avoiding 0/0 when Delta degenerates to first order.
    """
    if xbar <= xh + 1e-14 * max(1.0, abs(xh)):
        return 0.0

    def integrand(x: float) -> float:
        f2 = model.f2(x, ybar)
        d = model.f2(x, ybar) * model.g1(x, ybar) - model.f1(x, ybar) * model.g2(x, ybar)
        scale = (abs(model.f2(x, ybar) * model.g1(x, ybar))
                 + abs(model.f1(x, ybar) * model.g2(x, ybar)))
        if abs(d) <= 1e-14 * max(1.0, scale):
            raise SingularDelta(f"Delta vanishes at x = {x}, y = {ybar}")
        return -f2 / d

    return adaptive_quad(integrand, xh, xbar, rel_tol=rel_tol)


def budget_curve(model: PlanarModel, arc: Trajectory,
                 levels: Sequence[float], s0_x: Optional[float] = None,
                 workers: Optional[int] = None) -> list:
    """Sample (level, budget) pairs; independent levels, optionally in
    parallel."""
    x_ref = s0_x if s0_x is not None else float(arc.x[0])

    def one(ybar: float) -> tuple:
        xh = x_h(model, ybar, x_max=x_ref)
        xb = x_bar(arc, ybar)
        return float(ybar), budget_L(model, ybar, xh, xb)

    if workers:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, levels))
    return [one(yb) for yb in levels]


@dataclass
class SynthesisReport:
    """Everything solve_ystar learned about one (model, s0, K) instance."""

    y0max: float
    ystar: float
    regime: str                  # interior | saturated | trivial
    K: float
    s0: State
    L_y0: float
    budget_curve: list = field(default_factory=list)   # [(ybar, L)]
    xbar_arc: list = field(default_factory=list)       # [(ybar, xbar)]
    arc: Optional[Trajectory] = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "y0max": self.y0max,
            "ystar": self.ystar,
            "regime": self.regime,
            "budget": self.K,
            "L_y0": self.L_y0,
            "s0": {"x": self.s0.x, "y": self.s0.y},
            "curve": [[yb, L] for yb, L in self.budget_curve],
        }


def solve_ystar(model: PlanarModel, s0: State, K: float,
                n_curve: int = 21,
                bisect_tol: float = 1e-9,
                max_iter: int = 60,
                horizon: float = DEFAULT_HORIZON) -> SynthesisReport:
    """Find the level whose holding budget equals K.

    Regimes: ``trivial`` when s0 is not in the f2 > 0 region (the strategy
    degenerates to u = 0), ``saturated`` when K exceeds the budget of
    holding y0 (any level down to y0 is affordable), ``interior`` otherwise.
    """
    if K < 0.0:
        raise ValueError("budget must be non-negative")
    if model.f2(s0.x, s0.y) <= F2_TOL:
        return SynthesisReport(y0max=s0.y, ystar=s0.y, regime="trivial",
                               K=K, s0=s0, L_y0=0.0)

    y0 = s0.y
    y0max, arc = uncontrolled_arc(model, s0, horizon=horizon)

    def L(ybar: float) -> float:
        xh = x_h(model, ybar, x_max=s0.x)
        return budget_L(model, ybar, xh, x_bar(arc, ybar))

    levels = np.linspace(y0, y0max, n_curve)
    curve = budget_curve(model, arc, levels, s0_x=s0.x)
    xbars = [(float(yb), x_bar(arc, float(yb))) for yb in levels]
    L_y0 = curve[0][1]

    if K > L_y0:
        ystar = y0
        regime = "saturated"
    elif K <= F2_TOL:
        ystar = y0max
        regime = "interior"
    else:
        regime = "interior"
        lo, hi = y0, y0max          # L(lo) >= K >= L(hi) = 0
        ystar = 0.5 * (lo + hi)
        for _ in range(max_iter):
            ystar = 0.5 * (lo + hi)
            val = L(ystar)
            if abs(val - K) < bisect_tol * max(1.0, K):
                break
            if val > K:
                lo = ystar
            else:
                hi = ystar
        else:
            val = L(ystar)
            if abs(val - K) > 1e-6 * max(1.0, K):
                raise OutOfRange(
                    f"bisection stalled: |L(ystar) - K| = {abs(val - K):.3e}")

    return SynthesisReport(y0max=y0max, ystar=float(ystar), regime=regime,
                           K=K, s0=s0, L_y0=L_y0, budget_curve=curve,
                           xbar_arc=xbars, arc=arc)
