import json
import math

import numpy as np
import pytest

from egl import initial_state, scenario_from_dict
from egl.errors import SolverError
from egl.numerics import adaptive_simpson
from egl.surplus import (figure1_report, marginal_surplus_at, meroi,
                         scarcity_premium, solve_energy_side)

from conftest import cd1_doc, random_energy_doc, scarce_scenario


def solve_doc(doc, **kw):
    scenario = scenario_from_dict(doc)
    return scenario, solve_energy_side(scenario, initial_state(scenario), **kw)


class TestMarginalSurplusAt:
    def test_interior_gap(self, cd1):
        state = initial_state(cd1)
        good = state.energy_goods["e0"]
        # gamma(Q) = 2Q so the gap at Q = 2.5 is 10 - 5
        assert marginal_surplus_at(good, 2.5, state) == pytest.approx(5.0)

    def test_zero_at_unconstrained_optimum(self, cd1):
        state = initial_state(cd1)
        good = state.energy_goods["e0"]
        assert marginal_surplus_at(good, 5.0, state) == pytest.approx(0.0)

    def test_negative_past_intersection(self, cd1):
        state = initial_state(cd1)
        good = state.energy_goods["e0"]
        assert marginal_surplus_at(good, 6.0, state) == pytest.approx(-2.0)


class TestScarcityPremium:
    def test_zero_share_means_zero_premium(self, cd1):
        state = initial_state(cd1)
        good = state.energy_goods["e0"]
        assert scarcity_premium(good, 3.3, 0.0, state) == 0.0

    def test_square_cost_at_half(self, cd1):
        state = initial_state(cd1)
        good = state.energy_goods["e0"]
        # employment x(Q) = Q**2, so g'(2.5) = 2Q = 5; (0.5/0.5) * 5 = 5
        assert scarcity_premium(good, 2.5, 0.5, state) == pytest.approx(5.0)

    def test_square_cost_at_one(self, cd1):
        state = initial_state(cd1)
        good = state.energy_goods["e0"]
        assert scarcity_premium(good, 1.0, 0.5, state) == pytest.approx(2.0)

    def test_share_of_one_rejected(self, cd1):
        state = initial_state(cd1)
        good = state.energy_goods["e0"]
        with pytest.raises(ValueError):
            scarcity_premium(good, 1.0, 1.0, state)


class TestReferenceSolve:
    def test_abundant_interior_optimum(self, cd1):
        sol = solve_energy_side(cd1)
        assert sol.phi == 0.0
        assert sol.outputs["e0"] == pytest.approx(5.0, rel=1e-9)
        assert sol.gross_expenditure == pytest.approx(25.0, rel=1e-9)
        assert sol.gross_income == pytest.approx(50.0, rel=1e-9)
        assert sol.usable_surplus == pytest.approx(25.0, rel=1e-9)
        assert sol.meroi["e0"] == pytest.approx(1.0, rel=1e-9)
        assert sol.marginal_surplus["e0"] == pytest.approx(0.0, abs=1e-8)

    def test_forced_share_diagnostic(self, cd1):
        # 10 - 2Q = 2Q at phi = 0.5, so Q = 2.5 and E = 25 - 6.25
        sol = solve_energy_side(cd1, force_phi=0.5)
        assert sol.phi_forced
        assert sol.outputs["e0"] == pytest.approx(2.5, rel=1e-9)
        assert sol.usable_surplus == pytest.approx(18.75, rel=1e-9)
        assert sol.gamma["e0"] == pytest.approx(5.0, rel=1e-9)

    def test_zero_endowment_infeasible(self):
        doc = cd1_doc()
        doc["prime_movers"][0]["endowment"] = 0.0
        scenario = scenario_from_dict(doc)
        with pytest.raises(SolverError) as err:
            solve_energy_side(scenario)
        assert err.value.kind == "infeasible"

    def test_null_solution_when_content_below_curve(self):
        doc = cd1_doc()
        doc["energy_goods"][0]["technology"] = {
            "kind": "fixed_proportions", "requirements": {"m0": 1.0},
            "curvature": {"c0": 12.0}}          # gamma(0) = 12 > delta = 10
        _, sol = solve_doc(doc)
        assert sol.null
        assert sol.outputs["e0"] == 0.0
        assert sol.usable_surplus == 0.0
        assert sol.meroi["e0"] is None

    def test_scarce_fixed_point_closed_form(self, cd1_scarce):
        # with endowment 1: E = U forces 10Q = 1, so Q* = 0.1,
        # phi* = 1 - 2 * endowment / delta**2 = 0.98, E* = 0.99
        sol = solve_energy_side(cd1_scarce)
        assert sol.outputs["e0"] == pytest.approx(0.1, rel=1e-6)
        assert sol.phi == pytest.approx(0.98, abs=1e-7)
        assert sol.usable_surplus == pytest.approx(0.99, rel=1e-6)
        assert abs(sol.slack_residual) <= 1e-8 * max(1.0, sol.usable_surplus)

    def test_scarce_family_closed_form(self):
        for endow in (0.5, 2.0, 10.0):
            sol = solve_energy_side(scarce_scenario(endow))
            assert sol.outputs["e0"] == pytest.approx(endow / 10.0, rel=1e-6)
            assert sol.phi == pytest.approx(1.0 - 2.0 * endow / 100.0,
                                            abs=1e-6)

    def test_downward_dip_usability_rescue(self):
        # steep initial economies of scale: content minus marginal curve
        # minus premium jumps from the endowment cap straight to zero as
        # the scarcity share rises, so no share balances usability.  The
        # solver then imposes surplus = leftover capacity directly, which
        # pins content * Q = eps * endowment independently of the curve.
        doc = cd1_doc()
        doc["prime_movers"][0]["endowment"] = 1.0
        doc["energy_goods"][0]["technology"] = {
            "kind": "fixed_proportions", "requirements": {"m0": 1.0},
            "curvature": {"c0": 0.5, "c1": 4.0, "tau": 2.0, "c2": 0.4,
                          "q_s": 4.0, "rho": 2.0}}
        _, sol = solve_doc(doc)
        assert sol.outputs["e0"] == pytest.approx(0.1, rel=1e-9)
        assert sol.binding_constraints["e0"] == "usability"
        h_01 = 0.5 * 0.1 + 4.0 * 2.0 * (1.0 - math.exp(-0.05)) \
            + 0.4 * (4.0 / 3.0) * (0.1 / 4.0) ** 3
        assert sol.usable_surplus == pytest.approx(1.0 - h_01, rel=1e-9)
        assert sol.usable_capacity == pytest.approx(sol.usable_surplus,
                                                    rel=1e-6)

    def test_shutdown_when_dip_gain_is_negative(self):
        # at a high premium weight the marginal gain is negative early,
        # positive through the requirement dip, and negative again; when
        # the integrated gain at the crossing is still negative the good
        # shuts down instead of producing through the dip
        from egl.surplus import _Problem
        doc = cd1_doc()
        doc["prime_movers"][0]["endowment"] = 1e6
        doc["energy_goods"][0]["technology"] = {
            "kind": "fixed_proportions", "requirements": {"m0": 1.0},
            "curvature": {"c0": 0.5, "c1": 4.0, "tau": 2.0, "c2": 0.4,
                          "q_s": 4.0, "rho": 2.0}}
        scenario = scenario_from_dict(doc)
        state = initial_state(scenario)
        problem = _Problem(scenario, state)
        good = state.energy_goods["e0"]
        # weight 6.67 clears the dip (profile bottoms at about 1.43 near
        # q = 4.4) but the early losses dominate the hump
        q, tag = problem.good_output(good, 5.67)
        assert q == 0.0
        # at zero weight the interior crossing survives: h'(q) = 10
        q0, _ = problem.good_output(good, 0.0)
        assert q0 > 15.0
        assert marginal_surplus_at(good, q0, state) == pytest.approx(
            0.0, abs=1e-7)

    def test_meroi_values(self, cd1):
        state = initial_state(cd1)
        good = state.energy_goods["e0"]
        sol = solve_energy_side(cd1)
        assert meroi(good, sol) == pytest.approx(1.0, rel=1e-9)
        forced = solve_energy_side(cd1, force_phi=0.5)
        assert meroi(good, forced) == pytest.approx(2.0, rel=1e-9)
        assert 1.0 + forced.marginal_surplus["e0"] / forced.gamma["e0"] \
            == pytest.approx(2.0, rel=1e-12)

    def test_shared_mover_rationing(self):
        # two identical goods on one mover with stock 8: unconstrained each
        # wants Q = 5 (employment 25 apiece), so the shared endowment is
        # rationed proportionally: 2 * (s Q_cap)**2 = 8 gives Q = 2 each
        doc = cd1_doc()
        doc["prime_movers"][0]["endowment"] = 8.0
        doc["energy_goods"].append(json.loads(json.dumps(
            doc["energy_goods"][0])))
        doc["energy_goods"][1]["id"] = "e1"
        scenario, sol = solve_doc(doc, force_phi=0.0)
        assert sol.outputs["e0"] == pytest.approx(2.0, rel=1e-9)
        assert sol.outputs["e1"] == pytest.approx(2.0, rel=1e-9)
        assert sol.binding_constraints["e0"] == "endowment:m0"
        total = sol.employment["e0"]["m0"] + sol.employment["e1"]["m0"]
        assert total == pytest.approx(8.0, rel=1e-9)

    def test_shared_mover_usability_fixed_point(self):
        # same economy, full solve: the usability balance 2(10Q - Q**2) =
        # eps (8 - 2 Q**2) pins Q = 0.4 per good
        doc = cd1_doc()
        doc["prime_movers"][0]["endowment"] = 8.0
        doc["energy_goods"].append(json.loads(json.dumps(
            doc["energy_goods"][0])))
        doc["energy_goods"][1]["id"] = "e1"
        _, sol = solve_doc(doc)
        assert sol.outputs["e0"] == pytest.approx(0.4, rel=1e-6)
        assert sol.outputs["e1"] == pytest.approx(0.4, rel=1e-6)
        assert abs(sol.slack_residual) <= 1e-7 * max(1.0,
                                                     sol.usable_surplus)

    def test_determinism_bit_identical(self, cd1_scarce):
        a = solve_energy_side(cd1_scarce)
        b = solve_energy_side(cd1_scarce)
        assert a.outputs == b.outputs
        assert a.phi == b.phi
        assert a.usable_surplus == b.usable_surplus
        assert a.employment == b.employment


class TestSolutionInvariants:
    @staticmethod
    def check(scenario, sol):
        state = initial_state(scenario)
        # surplus equals income minus expenditure, exactly as computed
        assert sol.usable_surplus == sol.gross_income - sol.gross_expenditure
        assert sol.usable_surplus >= -1e-12
        # phi_l = phi/(1-phi) * eps exactly
        for mid, mover in state.movers.items():
            expected = sol.phi / (1.0 - sol.phi) * mover.direct_energy
            assert sol.mover_surplus[mid] == expected
        # complementary slackness on usability
        if not sol.phi_forced:
            scale = max(1.0, sol.usable_surplus)
            if sol.phi == 0.0:
                assert sol.slack_residual <= 1e-8 * scale
            else:
                assert abs(sol.slack_residual) <= 1e-7 * scale
        # marginal-EROI identity at positive output
        for gid, value in sol.meroi.items():
            if value is None:
                continue
            alpha = sol.marginal_surplus[gid]
            assert value == pytest.approx(1.0 + alpha / sol.gamma[gid],
                                          rel=1e-9)

    def test_reference_scenarios(self, cd1, cd1_scarce):
        self.check(cd1, solve_energy_side(cd1))
        self.check(cd1_scarce, solve_energy_side(cd1_scarce))

    def test_random_family(self):
        rng = np.random.default_rng(2024)
        for trial in range(60):
            doc = random_energy_doc(rng, scarce=trial % 2 == 0)
            scenario, sol = solve_doc(doc)
            self.check(scenario, sol)
            # interior first-order condition residuals
            for gid, resid in sol.foc_good_residuals.items():
                if gid not in sol.binding_constraints:
                    assert resid < 1e-6
            for key, resid in sol.foc_mover_residuals.items():
                assert resid < 1e-6

    def test_surplus_matches_quadrature_of_gap(self, cd1_scarce):
        scenario = cd1_scarce
        state = initial_state(scenario)
        sol = solve_energy_side(scenario)
        total = 0.0
        for gid, good in state.energy_goods.items():
            total += adaptive_simpson(
                lambda q, g=good: marginal_surplus_at(g, q, state),
                0.0, sol.outputs[gid], tol=1e-12)
        assert total == pytest.approx(sol.usable_surplus, rel=1e-6)

    def test_output_rises_with_energy_content(self):
        # interior regime: d(Q*)/d(delta) = 1 / gamma'(Q*) > 0
        rng = np.random.default_rng(77)
        for _ in range(200):
            doc = random_energy_doc(rng, scarce=False)
            _, base = solve_doc(doc)
            bumped = json.loads(json.dumps(doc))
            bumped["energy_goods"][0]["energy_content"] *= 1.01
            _, more = solve_doc(bumped)
            assert more.outputs["e0"] >= base.outputs["e0"] - 1e-12
            assert more.outputs["e0"] > base.outputs["e0"] * (1.0 - 1e-9)


class TestGridOracle:
    @staticmethod
    def brute_force(doc, q_points=100_000, phi_points=1_000):
        """Exhaustive scan over the output grid and the scarcity share grid.

        Independent of the solver: first-order crossings are located by
        sign change on the grid, surpluses by trapezoid sums, and the
        usability fixed point by a sign change of the capacity residual.
        """
        scenario = scenario_from_dict(doc)
        state = initial_state(scenario)
        good = state.energy_goods["e0"]
        mover = state.movers["m0"]
        delta = good.energy_content
        endow = state.stocks["m0"]

        from egl.embodied import (input_requirements, marginal_embodied,
                                  marginal_requirements)
        q_hi = 1.2 * (delta / 2.0)   # past the unconstrained optimum at 5
        qs = np.linspace(0.0, q_hi, q_points)
        gamma = np.array([marginal_embodied(good.technology, state.movers, q)
                          for q in qs])
        gprime = np.array(
            [marginal_requirements(good.technology, state.movers,
                                   q)["m0"] for q in qs])
        employ = np.array(
            [input_requirements(good.technology, state.movers, q)["m0"]
             for q in qs])
        surplus = np.concatenate(
            [[0.0], np.cumsum((delta - gamma[1:]) * np.diff(qs)
                              + 0.5 * np.diff(delta - gamma) * np.diff(qs))])

        cap_idx = int(np.searchsorted(employ, endow))

        def q_index(phi):
            c = phi / (1.0 - phi)
            resid = delta - gamma - c * gprime * mover.direct_energy
            sign_change = np.nonzero(resid <= 0.0)[0]
            idx = sign_change[0] if sign_change.size else q_points - 1
            return min(idx, cap_idx)

        def rho(phi):
            idx = q_index(phi)
            used = employ[idx]
            capacity = mover.direct_energy * max(endow - used, 0.0)
            return surplus[idx] - capacity, idx

        phis = np.linspace(0.0, 1.0, phi_points, endpoint=False)
        rho0, idx0 = rho(0.0)
        if rho0 <= 0.0:
            return 0.0, phis[1], qs[idx0], qs[min(idx0 + 1, q_points - 1)]
        prev = 0.0
        for phi in phis[1:]:
            value, idx = rho(phi)
            if value <= 0.0:
                lo_idx = q_index(phi)
                hi_idx = q_index(prev)
                return prev, phi, qs[max(lo_idx - 1, 0)], \
                    qs[min(hi_idx + 1, q_points - 1)]
            prev = phi
        raise AssertionError("no usability crossing on the grid")

    def test_scarce_instance_bracketed(self):
        from conftest import scarce_doc
        doc = scarce_doc(1.0)
        scenario = scenario_from_dict(doc)
        sol = solve_energy_side(scenario)
        phi_lo, phi_hi, q_lo, q_hi = self.brute_force(
            doc, q_points=20_000, phi_points=400)
        cell_phi = 1.0 / 400
        cell_q = (1.2 * 5.0) / 20_000
        assert phi_lo - cell_phi <= sol.phi <= phi_hi + cell_phi
        assert q_lo - cell_q <= sol.outputs["e0"] <= q_hi + cell_q


class TestFigure1:
    def test_reference_markers(self, cd1):
        sol = solve_energy_side(cd1)
        data = figure1_report(cd1, None, "e0", sol)
        assert data.markers["Q_star"] == pytest.approx(5.0, rel=1e-9)
        assert data.markers["gamma"] == pytest.approx(10.0, rel=1e-9)
        assert data.markers["G"] == pytest.approx(25.0, rel=1e-9)
        assert data.markers["E_good"] == pytest.approx(25.0, rel=1e-9)

    def test_null_solution_empty_markers(self):
        doc = cd1_doc()
        doc["energy_goods"][0]["technology"] = {
            "kind": "fixed_proportions", "requirements": {"m0": 1.0},
            "curvature": {"c0": 12.0}}
        scenario, sol = solve_doc(doc)
        data = figure1_report(scenario, None, "e0", sol)
        assert data.markers == {}
        assert len(data.quantities) == len(data.meec) > 0

    def test_saturation_from_endowment(self):
        # direct energy of x(Q) = Q**2 exhausts eps * 9 at Q = 3
        doc = cd1_doc()
        doc["prime_movers"][0]["endowment"] = 9.0
        scenario, sol = solve_doc(doc)
        data = figure1_report(scenario, None, "e0", sol)
        assert data.saturation_quantity == pytest.approx(3.0, rel=1e-9)
