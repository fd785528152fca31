"""Closed-loop / open-loop integration with event detection.

Wraps scipy's embedded Runge-Kutta 5(4) pair (Dormand-Prince, PI step
control, dense output).  The cumulative control budget is integrated as an
augmented third state so that spent/time consistency holds exactly at event
times.  Events located by the solver are re-polished on the dense output so
that the event function is below 1e-10 in magnitude at the reported time.
"""

from __future__ import annotations

import bisect
import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import DomainError, StiffnessError
from .models import PlanarModel, State

EVENT_VALUE_TOL = 1e-10
DEFAULT_HORIZON = 1.0e4


@dataclass(frozen=True)
class EventSpec:
    """An event function of (t, x, y, spent); fires on a zero crossing."""

    kind: str
    fn: Callable[[float, float, float, float], float]
    terminal: bool = True
    direction: float = 0.0


def event_y_crosses(level: float, *, terminal: bool = True,
                    direction: float = 0.0) -> EventSpec:
    """Fires when y crosses ``level``."""
    return EventSpec("hit_ybar", lambda t, x, y, s: y - level,
                     terminal=terminal, direction=direction)


def event_f2_zero(model: PlanarModel, *, terminal: bool = True,
                  direction: float = 0.0) -> EventSpec:
    """Fires on the f2 = 0 switching set."""
    return EventSpec("hit_D0", lambda t, x, y, s: model.f2(x, y),
                     terminal=terminal, direction=direction)


def event_budget(budget: float, *, terminal: bool = True) -> EventSpec:
    """Fires when the cumulative spent control reaches ``budget``."""
    return EventSpec("budget_exhausted", lambda t, x, y, s: s - budget,
                     terminal=terminal, direction=1.0)


def event_leaves_domain(model: PlanarModel, *, terminal: bool = True) -> EventSpec:
    """Fires when the domain margin hits zero."""
    return EventSpec("left_domain",
                     lambda t, x, y, s: model.domain.margin(x, y),
                     terminal=terminal, direction=-1.0)


@dataclass(frozen=True)
class DenseSegment:
    """Dense-output piece of a trajectory on [t0, t1]."""

    t0: float
    t1: float
    state_fn: Callable[[float], tuple]      # t -> (x, y, spent)
    control_fn: Callable[[float], float]    # t -> u


@dataclass
class Trajectory:
    """Time-stamped samples of a run, with located events.

    ``events`` holds (t, kind) pairs with kind in {hit_ybar, hit_D0,
    budget_exhausted, left_domain, horizon}; ``terminal`` names the event
    that stopped the integration (or "horizon").
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    spent: np.ndarray
    events: list = field(default_factory=list)
    terminal: Optional[str] = None
    segments: list = field(default_factory=list, repr=False)

    @property
    def peak_y(self) -> float:
        return float(np.max(self.y)) if self.y.size else math.nan

    @property
    def total_spent(self) -> float:
        return float(self.spent[-1]) if self.spent.size else 0.0

    def _segment_at(self, t: float) -> DenseSegment:
        if not self.segments:
            raise ValueError("trajectory carries no dense output")
        i = bisect.bisect_right([s.t0 for s in self.segments], t) - 1
        i = min(max(i, 0), len(self.segments) - 1)
        return self.segments[i]

    def state_at(self, t: float) -> State:
        x, y, _ = self._segment_at(t).state_fn(t)
        return State(float(x), float(y))

    def spent_at(self, t: float) -> float:
        return float(self._segment_at(t).state_fn(t)[2])

    def control_at(self, t: float) -> float:
        return float(self._segment_at(t).control_fn(t))

    def append(self, other: "Trajectory") -> "Trajectory":
        """Concatenate a later piece (its first sample repeats our last)."""
        drop = 1 if (self.t.size and other.t.size
                     and math.isclose(other.t[0], self.t[-1])) else 0
        return Trajectory(
            t=np.concatenate([self.t, other.t[drop:]]),
            x=np.concatenate([self.x, other.x[drop:]]),
            y=np.concatenate([self.y, other.y[drop:]]),
            u=np.concatenate([self.u, other.u[drop:]]),
            spent=np.concatenate([self.spent, other.spent[drop:]]),
            events=self.events + other.events,
            terminal=other.terminal,
            segments=self.segments + other.segments,
        )

    @staticmethod
    def empty(t0: float, s0: State, u0: float = 0.0,
              spent0: float = 0.0) -> "Trajectory":
        return Trajectory(
            t=np.array([t0]), x=np.array([s0.x]), y=np.array([s0.y]),
            u=np.array([u0]), spent=np.array([spent0]),
        )

    def to_csv(self, path, header_comment: Optional[str] = None) -> None:
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "u", "spent"])
            for row in zip(self.t, self.x, self.y, self.u, self.spent):
                w.writerow([repr(float(v)) for v in row])

    def events_json(self, path, extra: Optional[dict] = None) -> None:
        doc = {"events": [{"t": t, "kind": k} for t, k in self.events],
               "terminal": self.terminal}
        if extra:
            doc.update(extra)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)


def _polish_event(g: Callable[[float], float], t_star: float,
                  t_lo: float, t_hi: float) -> float:
    """Refine an event time on the dense output until |g| < EVENT_VALUE_TOL."""
    if abs(g(t_star)) < EVENT_VALUE_TOL:
        return t_star
    # widen a bracket around the solver's estimate
    h = max(1e-14, 1e-9 * max(1.0, abs(t_star)))
    while h < (t_hi - t_lo):
        a = max(t_lo, t_star - h)
        b = min(t_hi, t_star + h)
        if g(a) * g(b) <= 0.0:
            root = brentq(g, a, b, xtol=1e-15, rtol=8.9e-16)
            return float(root)
        h *= 4.0
    return t_star


def integrate(model: PlanarModel,
              policy: Callable[[State], float],
              s0: State,
              horizon: float = DEFAULT_HORIZON,
              events: Sequence[EventSpec] = (),
              rtol: float = 1e-10,
              atol: float = 1e-12,
              t0: float = 0.0,
              spent0: float = 0.0,
              max_step: float = math.inf) -> Trajectory:
    """Integrate the closed loop from ``s0`` until the first terminal event
    or the horizon.

    The policy is sampled pointwise and clamped to [0, 1].  A domain exit
    without a declared left_domain event raises DomainError.
    """
    if horizon <= t0:
        raise ValueError("horizon must exceed the start time")
    model.require_in_domain(s0)

    def control(x: float, y: float) -> float:
        return min(1.0, max(0.0, policy(State(x, y))))

    def rhs(t, z):
        x, y, _ = z
        u = control(x, y)
        return [model.f1(x, y) + model.g1(x, y) * u,
                model.f2(x, y) + model.g2(x, y) * u,
                u]

    wrapped = []
    for spec in events:
        def ev(t, z, _fn=spec.fn):
            return _fn(t, z[0], z[1], z[2])
        ev.terminal = spec.terminal
        ev.direction = spec.direction
        wrapped.append(ev)

    sol = solve_ivp(rhs, (t0, horizon), [s0.x, s0.y, spent0],
                    method="RK45", rtol=rtol, atol=atol,
                    events=wrapped or None, dense_output=True,
                    max_step=max_step)
    if sol.status == -1:
        raise StiffnessError(sol.message)

    dense = sol.sol

    def state_fn(t):
        z = dense(t)
        return float(z[0]), float(z[1]), float(z[2])

    def control_fn(t):
        z = dense(t)
        return control(float(z[0]), float(z[1]))

    located = []
    terminal_kind = None
    t_end = sol.t[-1]
    for spec, te in zip(events, sol.t_events if events else []):
        for t_star in te:
            def g(t, _fn=spec.fn):
                x, y, s = state_fn(t)
                return _fn(t, x, y, s)
            t_ref = _polish_event(g, float(t_star), t0, t_end)
            located.append((t_ref, spec.kind))
            if spec.terminal and math.isclose(t_star, t_end, rel_tol=1e-12,
                                              abs_tol=1e-12):
                terminal_kind = spec.kind
    located.sort(key=lambda e: e[0])

    if sol.status == 0 and terminal_kind is None:
        terminal_kind = "horizon"
        located.append((t_end, "horizon"))

    ts = sol.t
    xs, ys, spents = sol.y[0], sol.y[1], sol.y[2]
    us = np.array([control(xi, yi) for xi, yi in zip(xs, ys)])

    for xi, yi in zip(xs, ys):
        if not model.domain.contains(xi, yi):
            if not any(s.kind == "left_domain" for s in events):
                raise DomainError(
                    f"trajectory left the domain at ({xi}, {yi}) "
                    "without a declared left_domain event")

    return Trajectory(
        t=ts.copy(), x=xs.copy(), y=ys.copy(), u=us, spent=spents.copy(),
        events=located, terminal=terminal_kind,
        segments=[DenseSegment(t0, float(t_end), state_fn, control_fn)],
    )


def integrate_piecewise(model: PlanarModel,
                        pieces: Iterable[tuple],
                        s0: State,
                        events: Sequence[EventSpec] = (),
                        rtol: float = 1e-10,
                        atol: float = 1e-12,
                        t0: float = 0.0,
                        spent0: float = 0.0) -> Trajectory:
    """Integrate a piecewise-constant open-loop control.

    ``pieces`` is an iterable of (t_end, u_level); each segment is integrated
    separately and restarted at its switch point (no discontinuity
    smoothing).  Stops early at the first terminal event.
    """
    traj = Trajectory.empty(t0, s0, spent0=spent0)
    t_cur, s_cur, spent_cur = t0, s0, spent0
    for t_end, level in pieces:
        if t_end <= t_cur:
            continue
        seg = integrate(model, lambda s, _u=level: _u, s_cur,
                        horizon=t_end, events=events, rtol=rtol, atol=atol,
                        t0=t_cur, spent0=spent_cur)
        traj = traj.append(seg)
        t_cur = float(seg.t[-1])
        s_cur = State(float(seg.x[-1]), float(seg.y[-1]))
        spent_cur = float(seg.spent[-1])
        if seg.terminal not in (None, "horizon"):
            return traj
    # interior horizon events are bookkeeping only
    traj.events = [e for e in traj.events if e[1] != "horizon"]
    traj.terminal = None
    return traj
