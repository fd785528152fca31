"""The null-singular-null feedback and its closed-loop simulation.

The strategy has three phases: coast with u = 0 until y reaches the chosen
level, hold y constant with the singular control -f2/g2 until the f2 = 0
set is reached, then coast again.  The singular phase is enforced by
event-driven mode switching rather than by the raw feedback band: after the
level is hit, the integrator runs the reduced on-arc dynamics

    dx/dt = -Delta(x, ybar) / g2(x, ybar)

with y pinned to the level.  This removes the chattering a literal
implementation of the measure-zero condition y = ybar would cause.  The raw
feedback (with a thin band) remains available as a diagnostic policy.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DegenerateGradient, G2Zero, StiffnessError
from .integrate import (DEFAULT_HORIZON, DenseSegment, EventSpec, Trajectory,
                        event_f2_zero, event_y_crosses, integrate)
from .models import PlanarModel, State
from .synthesis import F2_TOL, SynthesisReport, solve_ystar, x_h


@dataclass(frozen=True)
class NSNPolicy:
    """Feedback holding the level ``ybar``; singular arc ends at
    ``xh_at_ybar``."""

    model: PlanarModel
    ybar: float
    xh_at_ybar: float
    band: float = 1e-9


def make_policy(model: PlanarModel, ybar: float,
                x_max: Optional[float] = None) -> NSNPolicy:
    return NSNPolicy(model=model, ybar=ybar,
                     xh_at_ybar=x_h(model, ybar, x_max=x_max))


def singular_control(model: PlanarModel, x: float, ybar: float) -> float:
    """The on-arc control k(x) = -f2(x, ybar) / g2(x, ybar), clamped to
    [0, 1]."""
    g2v = model.g2(x, ybar)
    if g2v == 0.0:
        raise G2Zero(f"g2({x}, {ybar}) = 0 on the singular arc")
    return min(1.0, max(0.0, -model.f2(x, ybar) / g2v))


def nsn_feedback(p: NSNPolicy, s: State) -> float:
    """Raw feedback: singular control inside the band around ybar while
    f2(x, ybar) > 0, null elsewhere."""
    p.model.require_in_domain(s)
    if abs(s.y - p.ybar) <= p.band and p.model.f2(s.x, p.ybar) > 0.0:
        return singular_control(p.model, s.x, p.ybar)
    return 0.0


def ridge_feedback(model: PlanarModel, s: State,
                   fd_step: float = 1e-6) -> float:
    """Control keeping a state on the f2 = 0 set: -(grad f2 . f)/(grad f2 . g).

    Gradients come from the model's exact partials when present, otherwise
    central differences with a coordinate-scaled step.
    """
    x, y = s.x, s.y
    if abs(model.f2(x, y)) > 1e-8:
        raise ValueError(f"state is not on the f2 = 0 set: f2 = {model.f2(x, y):.3e}")
    if model.f2_grad is not None:
        dfx, dfy = model.f2_grad(x, y)
    else:
        hx = fd_step * max(1.0, abs(x))
        hy = fd_step * max(1.0, abs(y))
        dfx = (model.f2(x + hx, y) - model.f2(x - hx, y)) / (2.0 * hx)
        dfy = (model.f2(x, y + hy) - model.f2(x, y - hy)) / (2.0 * hy)
    nf = dfx * model.f1(x, y) + dfy * model.f2(x, y)
    ng = dfx * model.g1(x, y) + dfy * model.g2(x, y)
    scale = abs(dfx) * (abs(model.g1(x, y)) + abs(model.f1(x, y))) + abs(dfy)
    if abs(ng) <= 1e-12 * max(1.0, scale):
        raise DegenerateGradient(f"grad(f2).g = {ng:.3e} at ({x}, {y})")
    u = -nf / ng
    clamped = min(1.0, max(0.0, u))
    if abs(u - clamped) > 1e-6:
        warnings.warn(f"ridge control {u:.6f} clamped to [0, 1] at ({x}, {y})",
                      stacklevel=2)
    return clamped


@dataclass
class NSNResult:
    """Outcome of a closed-loop run: trajectory, achieved peak, spent budget
    and the phase boundaries (null1 -> singular -> null2)."""

    trajectory: Trajectory
    peak: float
    spent: float
    phases: list                     # [(name, t_start, t_end)]
    report: SynthesisReport
    safety_exit: bool = False        # budget ran out before the f2 = 0 set
    diagnostics: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "peak": self.peak,
            "spent": self.spent,
            "ystar": self.report.ystar,
            "y0max": self.report.y0max,
            "regime": self.report.regime,
            "budget": self.report.K,
            "phases": [{"phase": n, "t_start": a, "t_end": b}
                       for n, a, b in self.phases],
            "safety_exit": self.safety_exit,
            "diagnostics": list(self.diagnostics),
            "terminal": self.trajectory.terminal,
        }


def _integrate_singular(model: PlanarModel, ybar: float, x0: float,
                        t0: float, spent0: float, K: float, horizon: float,
                        rtol: float, atol: float) -> Trajectory:
    """Reduced on-arc dynamics with y pinned to ``ybar``; budget integrated
    alongside.  Stops at f2 = 0 (normal exit) or at the budget (safety)."""

    def k(x: float) -> float:
        return singular_control(model, x, ybar)

    def rhs(t, z):
        x = z[0]
        g2v = model.g2(x, ybar)
        d = model.f2(x, ybar) * model.g1(x, ybar) - model.f1(x, ybar) * g2v
        return [-d / g2v, k(x)]

    def ev_d0(t, z):
        return model.f2(z[0], ybar)
    ev_d0.terminal = True
    ev_d0.direction = -1.0

    def ev_budget(t, z):
        return z[1] - K
    ev_budget.terminal = True
    ev_budget.direction = 1.0

    sol = solve_ivp(rhs, (t0, horizon), [x0, spent0], method="RK45",
                    rtol=rtol, atol=atol, events=[ev_d0, ev_budget],
                    dense_output=True)
    if sol.status == -1:
        raise StiffnessError(sol.message)

    dense = sol.sol
    t_end = float(sol.t[-1])

    def state_fn(t):
        z = dense(t)
        return float(z[0]), ybar, float(z[1])

    def control_fn(t):
        return k(float(dense(t)[0]))

    events = []
    terminal = None
    if sol.t_events[0].size:
        events.append((float(sol.t_events[0][0]), "hit_D0"))
        terminal = "hit_D0"
    if sol.t_events[1].size:
        events.append((float(sol.t_events[1][0]), "budget_exhausted"))
        if terminal is None:
            terminal = "budget_exhausted"
    if sol.status == 0 and terminal is None:
        terminal = "horizon"
        events.append((t_end, "horizon"))
    events.sort(key=lambda e: e[0])

    xs = sol.y[0]
    return Trajectory(
        t=sol.t.copy(),
        x=xs.copy(),
        y=np.full_like(sol.t, ybar),
        u=np.array([k(x) for x in xs]),
        spent=sol.y[1].copy(),
        events=events,
        terminal=terminal,
        segments=[DenseSegment(t0, t_end, state_fn, control_fn)],
    )


def simulate_nsn(model: PlanarModel, s0: State, K: float,
                 horizon: float = DEFAULT_HORIZON,
                 rtol: float = 1e-10, atol: float = 1e-12,
                 report: Optional[SynthesisReport] = None) -> NSNResult:
    """Synthesize the optimal level for budget ``K`` and run the closed loop.

    The budget safety event stays armed even though, in theory, the budget
    runs out exactly on the f2 = 0 set: numerical drift must fail loudly.
    """
    if report is None:
        report = solve_ystar(model, s0, K, horizon=horizon)
    ybar = report.ystar
    diagnostics: list = []
    phases: list = []

    t = 0.0
    s = s0
    spent = 0.0
    traj = Trajectory.empty(0.0, s0)
    singular_happened = False
    safety_exit = False

    in_dplus = model.f2(s0.x, s0.y) > F2_TOL
    if report.regime != "trivial" and in_dplus:
        # null1: coast up to the level (skipped when already there)
        if ybar > s0.y + 1e-14 * max(1.0, abs(ybar)):
            null1 = integrate(
                model, lambda st: 0.0, s, horizon=horizon,
                events=[event_y_crosses(ybar, terminal=True, direction=1.0),
                        event_f2_zero(model, terminal=True, direction=-1.0)],
                rtol=rtol, atol=atol, t0=t, spent0=spent)
            traj = traj.append(null1)
            phases.append(("null1", t, float(null1.t[-1])))
            t = float(null1.t[-1])
            s = State(float(null1.x[-1]), float(null1.y[-1]))
            reached_level = null1.terminal == "hit_ybar"
        else:
            phases.append(("null1", t, t))
            reached_level = True

        if reached_level and model.f2(s.x, ybar) > F2_TOL:
            sing = _integrate_singular(model, ybar, s.x, t, spent, K,
                                       horizon, rtol, atol)
            traj = traj.append(sing)
            phases.append(("singular", t, float(sing.t[-1])))
            t = float(sing.t[-1])
            s = State(float(sing.x[-1]), ybar)
            spent = float(sing.spent[-1])
            singular_happened = True
            if sing.terminal == "budget_exhausted":
                safety_exit = True
                diagnostics.append(
                    "budget exhausted before reaching the f2 = 0 set")
            elif sing.terminal == "horizon":
                diagnostics.append("horizon truncated the singular phase")
        else:
            phases.append(("singular", t, t))
    else:
        phases.append(("null1", t, t))
        phases.append(("singular", t, t))

    # null2: coast to the horizon; a level re-approach is an
    # assumption-violation diagnostic, never a singular re-entry.  The coast
    # stops once y decays to the domain boundary at machine precision (some
    # models turn 0/0 there).
    if t < horizon:
        null2_events = [EventSpec("left_domain",
                                  lambda tt, x, y, sp: y - 1e-9,
                                  terminal=True, direction=-1.0)]
        if singular_happened:
            null2_events.append(event_y_crosses(ybar, terminal=False))
        null2 = integrate(
            model, lambda st: 0.0, s, horizon=horizon,
            events=null2_events,
            rtol=rtol, atol=atol, t0=t, spent0=spent)
        if singular_happened and any(
                k == "hit_ybar" and tt > t + 1e-9 for tt, k in null2.events):
            diagnostics.append("trajectory re-approached the singular level "
                               "after leaving it")
        null2.events = [e for e in null2.events if e[1] != "hit_ybar"]
        traj = traj.append(null2)
        phases.append(("null2", t, float(null2.t[-1])))
    else:
        phases.append(("null2", t, t))

    peak = traj.peak_y
    if singular_happened:
        peak = max(peak, ybar)
        post = phases[-1]
        mask = traj.t >= post[1]
        if mask.any() and float(np.max(traj.y[mask])) > ybar + 1e-6:
            diagnostics.append(
                f"post-singular peak {float(np.max(traj.y[mask])):.9f} "
                f"exceeds the level {ybar:.9f}")

    return NSNResult(trajectory=traj, peak=float(peak), spent=float(spent),
                     phases=phases, report=report, safety_exit=safety_exit,
                     diagnostics=diagnostics)
