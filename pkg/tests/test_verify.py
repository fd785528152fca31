import numpy as np
import pytest

from peakctl import (EmptyRegion, State, builtin, check_assumption2,
                     check_assumption3, check_assumption4, check_green,
                     check_hypotheses5, green_flux, oracle_compare)
from peakctl.verify import (COUNTEREXAMPLES, CheckReport, ConditionResult,
                            counterexample)
from conftest import BOXES

GRID = 40        # coarse grid for unit tests; acceptance uses 200


class TestReportMechanics:
    def test_status_aggregation(self):
        rep = CheckReport("demo", {})
        rep.conditions.append(ConditionResult("a", "pass"))
        assert rep.status == "pass"
        rep.conditions.append(ConditionResult("b", "skipped"))
        assert rep.status == "inconclusive"
        rep.conditions.append(ConditionResult("c", "fail"))
        assert rep.status == "fail"

    def test_condition_lookup(self):
        rep = CheckReport("demo", {})
        rep.conditions.append(ConditionResult("a.b", "pass"))
        assert rep.condition("a.b").status == "pass"
        with pytest.raises(KeyError):
            rep.condition("missing")

    def test_json_shape(self):
        import json
        rep = CheckReport("demo", {"n_grid": 3})
        rep.conditions.append(ConditionResult("a", "fail", witness=(1.0, 2.0),
                                              value=-0.5))
        doc = json.loads(json.dumps(rep.to_json()))
        assert doc["status"] == "fail"
        assert doc["conditions"][0]["witness"] == [1.0, 2.0]


class TestBuiltinsPass:
    def test_assumption2(self, instance):
        name, model, _, _ = instance
        assert check_assumption2(model, BOXES[name], GRID).status == "pass"

    def test_assumption3(self, instance):
        name, model, _, _ = instance
        assert check_assumption3(model, BOXES[name], GRID).status == "pass"

    def test_assumption4(self, instance):
        name, model, _, _ = instance
        box = BOXES[name]
        assert check_assumption4(model, (box[2], box[3]),
                                 GRID).status == "pass"

    def test_green(self, instance):
        name, model, _, _ = instance
        assert check_green(model, BOXES[name], GRID).status == "pass"

    def test_hypotheses5(self, instance):
        name, model, _, _ = instance
        if model.kolmogorov is None:
            pytest.skip("direct-form model")
        assert check_hypotheses5(model.kolmogorov, BOXES[name],
                                 GRID).status == "pass"


class TestGreenFlux:
    def test_matches_exact_form_example1(self, example1):
        for (x, y) in [(0.5, 0.5), (1.5, 2.0), (2.5, 1.0)]:
            assert green_flux(example1, State(x, y)) == pytest.approx(
                example1.flux_exact(x, y), rel=1e-5)

    def test_matches_exact_form_sir(self, sir):
        for (x, y) in [(0.4, 0.2), (0.7, 0.1)]:
            assert green_flux(sir, State(x, y)) == pytest.approx(
                sir.flux_exact(x, y), rel=1e-4)


class TestCounterexamples:
    def test_registry_complete(self):
        assert set(COUNTEREXAMPLES) == {"g2_zero", "flux_flipped", "phi3_dec"}
        with pytest.raises(ValueError):
            counterexample("nope")

    def test_g2_zero_fails_sign_conditions(self):
        m = counterexample("g2_zero")
        rep = check_assumption2(m, (0.0, 1.0, 0.01, 1.0), GRID)
        assert rep.status == "fail"
        c = rep.condition("a2.iv.f2_plus_g2_neg")
        assert c.status == "fail" and c.witness is not None

    def test_flux_flipped_fails_monotonicity_and_green(self):
        m = counterexample("flux_flipped")
        box = (0.0, 3.0, 0.05, 3.0)
        rep3 = check_assumption3(m, box, GRID)
        assert rep3.condition("a3.ratio_inc_y").status == "fail"
        repg = check_green(m, box, GRID)
        c = repg.condition("green.flux_pos")
        assert c.status == "fail" and c.value < 0.0

    def test_phi3_dec_fails_rate_shape(self):
        m = counterexample("phi3_dec")
        rep = check_hypotheses5(m.kolmogorov, (0.01, 1.0, 0.05, 1.0), GRID)
        assert rep.status == "fail"
        c = rep.condition("h5.ii.phi3_inc_x")
        assert c.status == "fail" and c.witness is not None

    def test_witness_reproduces_violation(self):
        m = counterexample("flux_flipped")
        rep = check_green(m, (0.0, 3.0, 0.05, 3.0), GRID)
        c = rep.condition("green.flux_pos")
        # the stored grid point re-evaluates to the recorded value
        v = rep.evaluators["green.flux_pos"](*c.witness)
        assert v == pytest.approx(c.value, rel=1e-12)
        assert v < 0.0


class TestEmptyRegions:
    def test_empty_dplus_raises(self):
        m = builtin("monod", {"m": 1.2})
        with pytest.raises(EmptyRegion):
            check_assumption2(m, (0.01, 5.0, 0.05, 3.0), GRID)

    def test_infeasible_rates_fail_hypotheses(self):
        m = builtin("monod", {"m": 1.2})
        rep = check_hypotheses5(m.kolmogorov, (0.01, 5.0, 0.05, 3.0), GRID)
        assert rep.status == "fail"


class TestShortcutDetector:
    def test_sir_matches(self, sir):
        rep = check_hypotheses5(sir.kolmogorov, BOXES["sir"], GRID)
        assert rep.extras["corollary9"] is True

    def test_all_builtin_rate_models_match(self, monod, contois):
        # phi4 - phi3 equals the mortality rate for both growth laws
        for model, box in ((monod, BOXES["monod"]),
                           (contois, BOXES["contois"])):
            rep = check_hypotheses5(model.kolmogorov, box, GRID)
            assert rep.extras["corollary9"] is True

    def test_varying_gap_is_not_detected(self):
        from peakctl.models import KolmogorovForm
        k = KolmogorovForm(phi1=lambda x, y: y, phi2=lambda x, y: y,
                           phi3=lambda x, y: x - 1.0,
                           phi4=lambda x, y: x * x)
        rep = check_hypotheses5(k, (0.01, 2.0, 0.05, 1.0), GRID)
        assert rep.extras["corollary9"] is False


class TestOracle:
    def test_deterministic_for_fixed_seed(self, example1):
        kw = dict(n_samples=12, n_pieces=4, seed=7, horizon=60.0)
        a = oracle_compare(example1, State(2.0, 2.0), 0.1, **kw)
        b = oracle_compare(example1, State(2.0, 2.0), 0.1, **kw)
        assert a.to_json() == b.to_json()

    def test_serial_and_parallel_agree(self, example1):
        kw = dict(n_samples=12, n_pieces=4, seed=7, horizon=60.0)
        a = oracle_compare(example1, State(2.0, 2.0), 0.1, **kw)
        b = oracle_compare(example1, State(2.0, 2.0), 0.1, workers=4, **kw)
        assert a.to_json() == b.to_json()

    def test_injected_strategy_is_never_beaten(self, example1):
        rep = oracle_compare(example1, State(2.0, 2.0), 0.1,
                             n_samples=30, n_pieces=6, seed=11, horizon=60.0)
        assert rep.margin >= 0.0
        assert rep.best_alternative_peak == pytest.approx(rep.nsn_peak)
        assert rep.top[0].get("nsn") is True

    def test_samples_respect_the_budget(self, example1):
        rep = oracle_compare(example1, State(2.0, 2.0), 0.1,
                             n_samples=20, n_pieces=5, seed=3, horizon=60.0,
                             include_nsn=False)
        for r in rep.top:
            assert r["spent"] <= 0.1 * (1.0 + 1e-6) + 1e-9

    def test_argument_validation(self, example1):
        with pytest.raises(ValueError):
            oracle_compare(example1, State(2.0, 2.0), 0.1, n_samples=0,
                           n_pieces=4, seed=1)
