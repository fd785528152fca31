import math

import numpy as np
import pytest

from peakctl import (Domain, DomainError, State, Trajectory, event_budget,
                     event_leaves_domain, event_y_crosses, integrate,
                     integrate_piecewise)
from peakctl.models import PlanarModel


def decay_model():
    """dx/dt = -x, dy/dt = -y, control dead (g = 0): exact exponentials."""
    return PlanarModel(
        name="decay",
        f1=lambda x, y: -x, f2=lambda x, y: -y,
        g1=lambda x, y: 0.0, g2=lambda x, y: 0.0,
        domain=Domain(),
    )


def drift_model():
    """dx/dt = -1 on x > 0: leaves the domain in finite time."""
    return PlanarModel(
        name="drift",
        f1=lambda x, y: -1.0, f2=lambda x, y: 0.0,
        g1=lambda x, y: 0.0, g2=lambda x, y: 0.0,
        domain=Domain(xmin=0.0),
    )


class TestIntegrate:
    def test_exponential_decay_accuracy(self):
        tr = integrate(decay_model(), lambda s: 0.0, State(1.0, 2.0),
                       horizon=3.0)
        assert tr.terminal == "horizon"
        assert tr.x[-1] == pytest.approx(math.exp(-3.0), rel=1e-8)
        assert tr.y[-1] == pytest.approx(2.0 * math.exp(-3.0), rel=1e-8)

    def test_dense_output_between_samples(self):
        tr = integrate(decay_model(), lambda s: 0.0, State(1.0, 1.0),
                       horizon=2.0)
        s = tr.state_at(0.7)
        assert s.x == pytest.approx(math.exp(-0.7), rel=1e-8)
        assert s.y == pytest.approx(math.exp(-0.7), rel=1e-8)

    def test_level_crossing_event_time(self):
        # y(t) = 2 e^{-t} crosses 1 at t = ln 2
        tr = integrate(decay_model(), lambda s: 0.0, State(1.0, 2.0),
                       horizon=5.0,
                       events=[event_y_crosses(1.0, direction=-1.0)])
        assert tr.terminal == "hit_ybar"
        (t_ev, kind), = tr.events
        assert kind == "hit_ybar"
        assert t_ev == pytest.approx(math.log(2.0), abs=1e-9)
        # the event is polished on the dense output
        assert abs(tr.state_at(t_ev).y - 1.0) < 1e-9

    def test_budget_accumulates_as_third_state(self):
        tr = integrate(decay_model(), lambda s: 0.3, State(1.0, 1.0),
                       horizon=2.0)
        assert tr.total_spent == pytest.approx(0.6, abs=1e-10)
        assert tr.spent_at(1.0) == pytest.approx(0.3, abs=1e-10)

    def test_budget_event(self):
        tr = integrate(decay_model(), lambda s: 0.5, State(1.0, 1.0),
                       horizon=10.0, events=[event_budget(1.0)])
        assert tr.terminal == "budget_exhausted"
        assert tr.t[-1] == pytest.approx(2.0, abs=1e-9)

    def test_policy_clamped_to_admissible_range(self):
        tr = integrate(decay_model(), lambda s: 7.0, State(1.0, 1.0),
                       horizon=1.0)
        assert tr.total_spent == pytest.approx(1.0, abs=1e-10)
        assert np.all(tr.u <= 1.0)

    def test_undeclared_domain_exit_raises(self):
        with pytest.raises(DomainError):
            integrate(drift_model(), lambda s: 0.0, State(0.5, 1.0),
                      horizon=2.0)

    def test_declared_domain_exit_terminates(self):
        m = drift_model()
        tr = integrate(m, lambda s: 0.0, State(0.5, 1.0), horizon=2.0,
                       events=[event_leaves_domain(m)])
        assert tr.terminal == "left_domain"
        assert tr.t[-1] == pytest.approx(0.5, abs=1e-9)

    def test_start_outside_domain_rejected(self):
        with pytest.raises(DomainError):
            integrate(drift_model(), lambda s: 0.0, State(-1.0, 0.0))

    def test_horizon_must_follow_start(self):
        with pytest.raises(ValueError):
            integrate(decay_model(), lambda s: 0.0, State(1.0, 1.0),
                      horizon=1.0, t0=2.0)


class TestTrajectory:
    def test_append_drops_duplicated_joint(self):
        m = decay_model()
        a = integrate(m, lambda s: 0.0, State(1.0, 1.0), horizon=1.0)
        s_end = State(float(a.x[-1]), float(a.y[-1]))
        b = integrate(m, lambda s: 0.0, s_end, horizon=2.0, t0=1.0,
                      spent0=a.total_spent)
        ab = a.append(b)
        assert np.all(np.diff(ab.t) > 0)
        assert ab.terminal == "horizon"
        assert ab.state_at(1.5).x == pytest.approx(math.exp(-1.5), rel=1e-8)

    def test_peak_of_empty_start(self):
        tr = Trajectory.empty(0.0, State(2.0, 3.0))
        assert tr.peak_y == 3.0
        assert tr.total_spent == 0.0

    def test_csv_roundtrip(self, tmp_path):
        tr = integrate(decay_model(), lambda s: 0.0, State(1.0, 2.0),
                       horizon=1.0)
        p = tmp_path / "traj.csv"
        tr.to_csv(p, header_comment="hello")
        lines = p.read_text().splitlines()
        assert lines[0] == "# hello"
        assert lines[1] == "t,x,y,u,spent"
        data = np.loadtxt(p, delimiter=",", skiprows=2)
        assert data.shape[0] == tr.t.size
        np.testing.assert_allclose(data[:, 2], tr.y, rtol=1e-15)

    def test_events_json(self, tmp_path):
        import json
        tr = integrate(decay_model(), lambda s: 0.0, State(1.0, 2.0),
                       horizon=5.0,
                       events=[event_y_crosses(1.0, direction=-1.0)])
        p = tmp_path / "events.json"
        tr.events_json(p, extra={"note": 1})
        doc = json.loads(p.read_text())
        assert doc["terminal"] == "hit_ybar"
        assert doc["events"][0]["kind"] == "hit_ybar"
        assert doc["note"] == 1


def test_piecewise_budget_sum():
    # u = 1 on [0, 1), u = 0.25 on [1, 3): spent = 1 + 0.5
    tr = integrate_piecewise(decay_model(), [(1.0, 1.0), (3.0, 0.25)],
                             State(1.0, 1.0))
    assert tr.t[-1] == pytest.approx(3.0)
    assert tr.total_spent == pytest.approx(1.5, abs=1e-9)


def test_piecewise_stops_at_terminal_event():
    tr = integrate_piecewise(decay_model(), [(1.0, 1.0), (5.0, 1.0)],
                             State(1.0, 1.0),
                             events=[event_budget(1.5)])
    assert tr.terminal == "budget_exhausted"
    assert tr.t[-1] == pytest.approx(1.5, abs=1e-9)
